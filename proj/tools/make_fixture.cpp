// Writes a seeded synthetic corpus: make-fixture <dir> [seed]
#include <cstdlib>
#include <iostream>

#include "msdensity/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make-fixture <dir> [seed]\n";
        return 1;
    }
    msd::SyntheticConfig config;
    if (argc > 2) config.seed = std::strtoull(argv[2], nullptr, 10);
    try {
        msd::make_synthetic_corpus(config).write(argv[1]);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
