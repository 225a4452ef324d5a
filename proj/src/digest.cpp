#include "msdensity/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>

#include "msdensity/text.hpp"

namespace msd {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
    EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr);
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Sha256& Sha256::update(std::string_view bytes) {
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size());
    return *this;
}

Sha256& Sha256::update(std::span<const double> values) {
    for (double v : values) update(v);
    return *this;
}

// Doubles are hashed via their little-endian bit pattern so digests do not
// depend on host byte order.
Sha256& Sha256::update(double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof bits);
    return update(static_cast<unsigned long long>(bits));
}

Sha256& Sha256::update(unsigned long long value) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(value >> (8 * i));
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), b.data(), b.size());
    return *this;
}

std::string Sha256::finish() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), md.data(), &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(std::string_view bytes) { return Sha256().update(bytes).finish(); }

std::string file_digest(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace msd
