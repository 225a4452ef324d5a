#pragma once

#include <filesystem>
#include <string>

#include "msdensity/mixture_models.hpp"

namespace msd::test {

inline DensityCorrelation pure_corr(const std::string& id, double a, double b, double t_min = 500.0,
                                    double t_max = 1500.0) {
    DensityCorrelation c;
    c.system_id = id;
    c.component_ids = {id};
    c.mole_fractions = {1.0};
    c.coeff_a = a;
    c.coeff_b = b;
    c.t_min = t_min;
    c.t_max = t_max;
    c.source_tag = "test";
    return c;
}

inline ComponentProperties component(const std::string& id, double molar_mass, double a, double b = 0.0,
                                     double t_min = 500.0, double t_max = 1500.0) {
    return {id, molar_mass, pure_corr(id, a, b, t_min, t_max)};
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::path(MSD_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace msd::test
