#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "tinyunet/tensor.hpp"

namespace tinyunet::scene {

struct RadarConfig {
    std::vector<double> frequencies_ghz = {4, 5, 6, 7, 8, 9, 10, 11, 12};  // nadir incidence

    void validate() const;
};

struct SceneConfig {
    int height = 32, width = 32;
    double wind_min_mps = 2.0, wind_max_mps = 8.0;
    double oil_rel_permittivity = 3.0;
    double oil_loss_tangent = 0.0;  // dielectric loss of the oil layer, eps = eps_r (1 - j tan_delta)
    double water_temp_c = 20.0;
    double salinity_ppt = 35.0;
    double rms_height_coeff = 2e-4;  // m of rms surface height per (m/s) of wind
    double slick_damping = 0.25;     // fraction of wind roughness remaining over oil (capillary-wave damping)
    double noise_std = 0.005;        // relative multiplicative noise
    std::uint64_t seed = 0;

    void validate() const;
};

// Single-relaxation Debye surrogate for sea water permittivity with an ionic
// conductivity term. Convention: loss on the positive imaginary part. The
// coefficients are surrogate values, not fitted to any measurement campaign.
std::complex<double> water_permittivity(double freq_ghz, double temp_c = 20.0, double salinity_ppt = 35.0);

// Two-interface thin-film power reflectance at normal incidence:
// r = (r12 + r23 e^{-2j beta d}) / (1 + r12 r23 e^{-2j beta d}), beta = 2 pi f sqrt(eps_oil) / c.
double layered_reflectance(double thickness_mm, double freq_ghz, std::complex<double> oil_eps,
                           std::complex<double> water_eps);

// Coherent specular attenuation exp(-(2 k sigma)^2), sigma = coeff * wind.
double roughness_attenuation(double wind_mps, double freq_ghz, double coeff);

// Noise-free per-class channel signature (class 0 = clean water).
std::vector<double> class_signature(int thickness_class, const SceneConfig& cfg, const RadarConfig& radar);

struct Scene {
    Tensor cube;      // (1, channels, h, w) reflectance
    ClassMap labels;  // (1, h, w)
    double wind_mps = 0.0;
};

Scene generate_scene(const SceneConfig& cfg, const RadarConfig& radar, std::uint64_t seed);

struct SceneSet {
    std::vector<Tensor> cubes;
    std::vector<ClassMap> labels;
    std::vector<double> winds;
    std::vector<std::uint64_t> seeds;
    SceneConfig scene_cfg;
    RadarConfig radar_cfg;

    std::size_t count() const { return cubes.size(); }
};

// Deterministic disjoint train/validation split in the ~10:1 proportion
// (504:51). Per-scene seeds derive from (master_seed, scene index).
std::pair<SceneSet, SceneSet> generate_set(int count, const SceneConfig& cfg, const RadarConfig& radar,
                                           std::uint64_t master_seed);

std::uint64_t scene_seed(std::uint64_t master_seed, int scene_index);

}  // namespace tinyunet::scene
