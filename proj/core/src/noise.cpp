#include "crossdiff/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace crossdiff {

namespace {

constexpr uint32_t k_philox_m0 = 0xD2511F53u;
constexpr uint32_t k_philox_m1 = 0xCD9E8D57u;
constexpr uint32_t k_weyl_0 = 0x9E3779B9u;  // golden-ratio Weyl increments
constexpr uint32_t k_weyl_1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& c, std::array<uint32_t, 2>& key) {
    const uint64_t p0 = static_cast<uint64_t>(k_philox_m0) * c[0];
    const uint64_t p1 = static_cast<uint64_t>(k_philox_m1) * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    key[0] += k_weyl_0;
    key[1] += k_weyl_1;
}

/// Inverse standard normal CDF (Wichura's PPND16 rational approximation,
/// accurate to ~1e-16 over (0,1)). Pure arithmetic, hence bitwise
/// reproducible for a given libm.
double inverse_normal_cdf(double p) {
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    if (!(r > 0.0)) throw std::domain_error("inverse_normal_cdf: p outside (0,1)");
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -v : v;
}

}  // namespace

std::array<uint32_t, 4> Philox4x32::block(const std::array<uint32_t, 4>& counter,
                                          const std::array<uint32_t, 2>& key) {
    std::array<uint32_t, 4> c = counter;
    std::array<uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) philox_round(c, k);
    return c;
}

namespace {

std::array<uint32_t, 4> lane_block(uint64_t seed, uint32_t component, uint64_t step) {
    const std::array<uint32_t, 4> counter = {
        static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32), component, 0u};
    const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                         static_cast<uint32_t>(seed >> 32)};
    return Philox4x32::block(counter, key);
}

// Map 53 high bits to the open interval (0,1), centered on the lattice.
double bits_to_unit(uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

double normal_draw(uint64_t seed, uint32_t component, uint64_t step) {
    const auto block = lane_block(seed, component, step);
    const uint64_t bits = (static_cast<uint64_t>(block[0]) << 32) | block[1];
    return inverse_normal_cdf(bits_to_unit(bits));
}

double uniform_draw(uint64_t seed, uint32_t component, uint64_t step) {
    const auto block = lane_block(seed, component, step);
    const uint64_t bits = (static_cast<uint64_t>(block[2]) << 32) | block[3];
    return bits_to_unit(bits);
}

uint64_t derive_path_seed(uint64_t master_seed, uint64_t path_id) {
    uint64_t z = master_seed + (path_id + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Vec WienerPath::increment(int k) const { return increment(k, k + 1); }

Vec WienerPath::increment(int a, int b) const {
    if (a < 0 || a > b || b > static_cast<int>(values.size()) - 1)
        throw std::out_of_range("WienerPath::increment: node index out of range");
    Vec d(static_cast<size_t>(components));
    for (int i = 0; i < components; ++i) d[i] = values[b][i] - values[a][i];
    return d;
}

WienerPath sample_path(uint64_t seed, double horizon, int levels, int components) {
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_path: horizon must be positive");
    if (levels < 0 || levels > 40) throw std::invalid_argument("sample_path: bad level count");
    if (components < 1) throw std::invalid_argument("sample_path: need >= 1 components");

    WienerPath path;
    path.horizon = horizon;
    path.levels = levels;
    path.components = components;
    path.seed = seed;
    const int m = 1 << levels;
    path.eta = horizon / static_cast<double>(m);
    const double root_eta = std::sqrt(path.eta);

    path.values.assign(static_cast<size_t>(m) + 1, Vec(static_cast<size_t>(components), 0.0));
    for (int k = 0; k < m; ++k)
        for (int c = 0; c < components; ++c)
            path.values[k + 1][c] =
                path.values[k][c] +
                root_eta * normal_draw(seed, static_cast<uint32_t>(c), static_cast<uint64_t>(k));
    return path;
}

WienerPath coarsen(const WienerPath& path, int coarsen_levels) {
    if (coarsen_levels < 0 || coarsen_levels > path.levels)
        throw std::invalid_argument("coarsen: level reduction out of range");
    if (coarsen_levels == 0) return path;
    const int stride = 1 << coarsen_levels;
    WienerPath out;
    out.horizon = path.horizon;
    out.levels = path.levels - coarsen_levels;
    out.components = path.components;
    out.seed = path.seed;
    out.eta = path.eta * static_cast<double>(stride);
    const int m = (static_cast<int>(path.values.size()) - 1) / stride;
    out.values.reserve(static_cast<size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) out.values.push_back(path.values[static_cast<size_t>(k) * stride]);
    return out;
}

Vec wong_zakai_slope(const WienerPath& path, double t) {
    if (t < 0.0 || t > path.horizon)
        throw std::out_of_range("wong_zakai_slope: time outside [0, T]");
    int k = static_cast<int>(std::floor(t / path.eta));
    if (k > path.intervals() - 1) k = path.intervals() - 1;
    return wong_zakai_slope_at(path, k);
}

Vec wong_zakai_slope_at(const WienerPath& path, int interval) {
    if (interval < 0 || interval >= path.intervals())
        throw std::out_of_range("wong_zakai_slope_at: interval out of range");
    Vec s = path.increment(interval);
    for (double& v : s) v /= path.eta;
    return s;
}

}  // namespace crossdiff
