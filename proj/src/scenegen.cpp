#include "tinyunet/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tinyunet::scene {

namespace {
constexpr double kC = 299792458.0;       // m/s
constexpr double kEps0 = 8.8541878128e-12;  // F/m
constexpr int kThicknessClasses = 11;
}  // namespace

void RadarConfig::validate() const {
    if (frequencies_ghz.size() != 9) fail_config("radar config must have exactly 9 frequency channels");
    for (std::size_t i = 1; i < frequencies_ghz.size(); ++i) {
        if (frequencies_ghz[i] <= frequencies_ghz[i - 1]) fail_config("frequencies must be strictly increasing");
    }
}

void SceneConfig::validate() const {
    if (height < 1 || width < 1) fail_config("scene grid must be positive");
    if (wind_min_mps < 2.0 - 1e-9 || wind_max_mps > 8.0 + 1e-9 || wind_min_mps > wind_max_mps) {
        fail_config("wind speed range must lie within [2, 8] m/s");
    }
    if (noise_std < 0.0) fail_config("noise_std must be >= 0");
    if (rms_height_coeff < 0.0) fail_config("rms_height_coeff must be >= 0");
    if (slick_damping < 0.0 || slick_damping > 1.0) fail_config("slick_damping must be in [0, 1]");
    if (oil_loss_tangent < 0.0) fail_config("oil_loss_tangent must be >= 0");
}

std::complex<double> water_permittivity(double freq_ghz, double temp_c, double salinity_ppt) {
    // Surrogate Debye coefficients; trend-correct over 4-12 GHz.
    const double eps_s = (87.9 - 0.40 * temp_c) * (1.0 - 0.0027 * salinity_ppt);
    const double eps_inf = 4.9;
    const double tau = (17.67 - 0.61 * temp_c + 0.0089 * temp_c * temp_c) * 1e-12;  // s
    const double sigma = 0.13 * salinity_ppt * (1.0 + 0.02 * (temp_c - 25.0));      // S/m
    const double omega = 2.0 * M_PI * freq_ghz * 1e9;
    const double wt = omega * tau;
    const double denom = 1.0 + wt * wt;
    const double re = eps_inf + (eps_s - eps_inf) / denom;
    const double im = (eps_s - eps_inf) * wt / denom + sigma / (omega * kEps0);
    return {re, im};
}

double layered_reflectance(double thickness_mm, double freq_ghz, std::complex<double> oil_eps,
                           std::complex<double> water_eps) {
    if (thickness_mm < 0.0) fail_config("thickness must be >= 0");
    const std::complex<double> n1 = 1.0;
    const std::complex<double> n2 = std::sqrt(oil_eps);
    const std::complex<double> n3 = std::sqrt(water_eps);
    const std::complex<double> r12 = (n1 - n2) / (n1 + n2);
    const std::complex<double> r23 = (n2 - n3) / (n2 + n3);
    const double f = freq_ghz * 1e9;
    const std::complex<double> beta = 2.0 * M_PI * f * n2 / kC;
    const std::complex<double> phase = std::exp(std::complex<double>(0.0, -2.0) * beta * (thickness_mm * 1e-3));
    const std::complex<double> r = (r12 + r23 * phase) / (1.0 + r12 * r23 * phase);
    return std::norm(r);
}

double roughness_attenuation(double wind_mps, double freq_ghz, double coeff) {
    const double k = 2.0 * M_PI * freq_ghz * 1e9 / kC;
    const double sigma = coeff * wind_mps;
    const double a = 2.0 * k * sigma;
    return std::exp(-a * a);
}

std::vector<double> class_signature(int thickness_class, const SceneConfig& cfg, const RadarConfig& radar) {
    if (thickness_class < 0 || thickness_class >= kThicknessClasses) fail_config("thickness class out of range");
    std::vector<double> sig;
    sig.reserve(radar.frequencies_ghz.size());
    // Convention: exp(-2j beta d) with beta = 2 pi f n2 / c decays when
    // Im(n2) < 0, hence the negative imaginary part for a lossy layer.
    const std::complex<double> oil_eps(cfg.oil_rel_permittivity,
                                       -cfg.oil_rel_permittivity * cfg.oil_loss_tangent);
    for (double f : radar.frequencies_ghz) {
        const std::complex<double> water_eps = water_permittivity(f, cfg.water_temp_c, cfg.salinity_ppt);
        // Class 0 is clean water: the d=0 limit of the slab collapses to the
        // bare air-water interface.
        sig.push_back(layered_reflectance(static_cast<double>(thickness_class), f, oil_eps, water_eps));
    }
    return sig;
}

namespace {

void check_signatures_distinct(const SceneConfig& cfg, const RadarConfig& radar) {
    std::vector<std::vector<double>> sigs;
    for (int k = 0; k < kThicknessClasses; ++k) sigs.push_back(class_signature(k, cfg, radar));
    for (int a = 0; a < kThicknessClasses; ++a) {
        for (int b = a + 1; b < kThicknessClasses; ++b) {
            double max_diff = 0.0;
            for (std::size_t ch = 0; ch < sigs[a].size(); ++ch) {
                max_diff = std::max(max_diff, std::abs(sigs[a][ch] - sigs[b][ch]));
            }
            if (max_diff < 1e-4) {
                fail_numeric("degenerate surrogate: classes " + std::to_string(a) + " and " + std::to_string(b) +
                             " have indistinguishable signatures");
            }
        }
    }
}

struct Bump {
    double cx, cy, sx, sy, theta, amp_mm;
};

double bump_thickness(const Bump& b, double x, double y) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    const double ct = std::cos(b.theta), st = std::sin(b.theta);
    const double u = ct * dx + st * dy;
    const double v = -st * dx + ct * dy;
    const double q = (u * u) / (2.0 * b.sx * b.sx) + (v * v) / (2.0 * b.sy * b.sy);
    return b.amp_mm * std::exp(-q);
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t master_seed, int scene_index) {
    // splitmix64 over (master, index)
    std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(scene_index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Scene generate_scene(const SceneConfig& cfg, const RadarConfig& radar, std::uint64_t seed) {
    cfg.validate();
    radar.validate();
    check_signatures_distinct(cfg, radar);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int h = cfg.height, w = cfg.width;
    const double wind = cfg.wind_min_mps + unit(rng) * (cfg.wind_max_mps - cfg.wind_min_mps);

    std::uniform_int_distribution<int> bump_count_dist(1, 2);
    const int bump_count = bump_count_dist(rng);
    std::vector<Bump> bumps;
    for (int i = 0; i < bump_count; ++i) {
        Bump b;
        b.cx = unit(rng) * w;
        b.cy = unit(rng) * h;
        b.sx = (0.10 + 0.25 * unit(rng)) * w;
        b.sy = (0.10 + 0.25 * unit(rng)) * h;
        b.theta = unit(rng) * M_PI;
        b.amp_mm = 0.7 + 0.3 * unit(rng);  // unit-scale shape field
        bumps.push_back(b);
    }

    // Smooth shape field; pixels above the footprint threshold become slick.
    std::vector<double> field(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double t = 0.0;
            for (const Bump& b : bumps) t = std::max(t, bump_thickness(b, x + 0.5, y + 0.5));
            field[static_cast<std::size_t>(y) * w + x] = t;
        }
    }

    // Threshold the field into concentric thickness bands at its own
    // 1/11-quantiles: class 0 (clean water) is the lowest band, farthest from
    // the bump centers, and every class gets an equal pixel area. Equal areas
    // keep the cross-entropy gradient balanced across classes, which the
    // short training budget needs; a fixed-mm threshold would shrink the
    // thick-core bands to a handful of pixels.
    ClassMap labels(1, h, w);
    std::vector<std::size_t> order(field.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return field[a] < field[b] || (field[a] == field[b] && a < b); });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const int cls = std::min<int>(10, static_cast<int>(rank * 11 / order.size()));
        labels.data[order[rank]] = static_cast<std::uint8_t>(cls);
    }

    const int channels = static_cast<int>(radar.frequencies_ghz.size());
    std::vector<std::vector<double>> sigs;
    for (int k = 0; k < kThicknessClasses; ++k) sigs.push_back(class_signature(k, cfg, radar));
    // Oil damps wind-driven capillary waves, so slick pixels keep most of
    // their coherent return while clean water loses it with wind and
    // frequency. This is the classic radar slick-detection contrast and it
    // is what makes the water/thin-slick boundary crisp: the thin-film term
    // alone barely separates 0 mm from 1 mm.
    std::vector<double> atten_water(channels), atten_oil(channels);
    for (int ch = 0; ch < channels; ++ch) {
        atten_water[ch] = roughness_attenuation(wind, radar.frequencies_ghz[ch], cfg.rms_height_coeff);
        atten_oil[ch] =
            roughness_attenuation(wind, radar.frequencies_ghz[ch], cfg.rms_height_coeff * cfg.slick_damping);
    }

    std::normal_distribution<double> noise(0.0, 1.0);
    Tensor cube(1, channels, h, w);
    for (int ch = 0; ch < channels; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int cls = labels.at(0, y, x);
                double v = sigs[cls][ch] * (cls == 0 ? atten_water[ch] : atten_oil[ch]);
                if (cfg.noise_std > 0.0) v *= 1.0 + cfg.noise_std * noise(rng);
                cube.at(0, ch, y, x) = static_cast<float>(v);
            }
        }
    }
    if (!cube.all_finite()) fail_numeric("scene generation produced non-finite reflectance");

    Scene s;
    s.cube = std::move(cube);
    s.labels = std::move(labels);
    s.wind_mps = wind;
    return s;
}

std::pair<SceneSet, SceneSet> generate_set(int count, const SceneConfig& cfg, const RadarConfig& radar,
                                           std::uint64_t master_seed) {
    if (count < 2) fail_config("scene set needs at least 2 scenes");
    const int train_count = static_cast<int>(static_cast<std::int64_t>(count) * 504 / 555);
    SceneSet train, val;
    train.scene_cfg = val.scene_cfg = cfg;
    train.radar_cfg = val.radar_cfg = radar;
    for (int i = 0; i < count; ++i) {
        const std::uint64_t seed = scene_seed(master_seed, i);
        Scene s = generate_scene(cfg, radar, seed);
        SceneSet& dst = i < train_count ? train : val;
        dst.cubes.push_back(std::move(s.cube));
        dst.labels.push_back(std::move(s.labels));
        dst.winds.push_back(s.wind_mps);
        dst.seeds.push_back(seed);
    }
    return {std::move(train), std::move(val)};
}

}  // namespace tinyunet::scene
