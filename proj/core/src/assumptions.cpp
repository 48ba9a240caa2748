#include "crossdiff/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "crossdiff/noise.hpp"

namespace crossdiff {

namespace {

// Stream tags so the different checks draw from disjoint lanes of the
// same user-facing seed.
enum StreamTag : uint64_t {
    k_stream_points = 1,
    k_stream_faces = 2,
    k_stream_directions = 3,
    k_stream_pairs = 4,
    k_stream_shrink = 5,
};

Vec exp_fractions(uint64_t seed, uint64_t index, int count) {
    Vec e(static_cast<size_t>(count));
    double sum = 0.0;
    for (int c = 0; c < count; ++c) {
        const double u = uniform_draw(seed, static_cast<uint32_t>(c), index);
        e[c] = -std::log(u);
        sum += e[c];
    }
    for (double& v : e) v /= sum;
    return e;
}

}  // namespace

Vec sample_simplex_point(uint64_t seed, uint64_t index, int n) {
    const Vec f = exp_fractions(derive_path_seed(seed, k_stream_points), index, n + 1);
    return Vec(f.begin(), f.begin() + n);
}

Vec sample_near_face(uint64_t seed, uint64_t index, int n, int face_index, double distance) {
    if (face_index < 0 || face_index > n)
        throw std::invalid_argument("sample_near_face: face index out of range");
    if (!(distance > 0.0 && distance < 1.0))
        throw std::invalid_argument("sample_near_face: distance must lie in (0,1)");
    Vec f = exp_fractions(derive_path_seed(seed, k_stream_faces), index, n + 1);
    const double rest = 1.0 - f[face_index];
    const double scale = (1.0 - distance) / rest;
    for (int c = 0; c <= n; ++c) f[c] = (c == face_index) ? distance : f[c] * scale;
    return Vec(f.begin(), f.begin() + n);
}

std::vector<Vec> direction_set(uint64_t seed, int n, int random_count) {
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i) {
        Vec z(static_cast<size_t>(n), 0.0);
        z[i] = 1.0;
        dirs.push_back(z);
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            Vec z(static_cast<size_t>(n), 0.0);
            z[i] = 1.0;
            z[j] = -1.0;
            dirs.push_back(z);
        }
    const uint64_t s = derive_path_seed(seed, k_stream_directions);
    for (int k = 0; k < random_count; ++k) {
        Vec z(static_cast<size_t>(n));
        double norm = 0.0;
        for (int c = 0; c < n; ++c) {
            z[c] = normal_draw(s, static_cast<uint32_t>(c), static_cast<uint64_t>(k));
            norm += z[c] * z[c];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (double& v : z) v /= norm;
        dirs.push_back(z);
    }
    return dirs;
}

LipschitzCheck check_lipschitz_diffusion(const ModelSpec& model, int sample_count, uint64_t seed) {
    LipschitzCheck out;
    const uint64_t s = derive_path_seed(seed, k_stream_pairs);
    const int n = model.n;
    for (int k = 0; k < sample_count; ++k) {
        const Vec u = sample_simplex_point(s, 2 * static_cast<uint64_t>(k), n);
        const Vec v = sample_simplex_point(s, 2 * static_cast<uint64_t>(k) + 1, n);

        auto consider = [&](const Vec& a, const Vec& b) {
            Vec d(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
            const double dist = norm2(d);
            if (dist < 1e-14) return;
            const Matrix da = diffusion_matrix(model, a) - diffusion_matrix(model, b);
            const double q = frobenius_norm(da) / dist;
            if (q > out.constant) {
                out.constant = q;
                out.witness_u = a;
                out.witness_v = b;
            }
        };
        consider(u, v);
        // Short segment toward v: samples the local difference quotient.
        Vec w(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) w[i] = u[i] + 1e-3 * (v[i] - u[i]);
        consider(u, w);
    }
    out.pass = std::isfinite(out.constant) && out.constant >= 0.0;
    return out;
}

namespace {

/// Interior + boundary-refined sample pool shared by the quadratic-form
/// checks. Strata sit at fixed distances from each face of the closed
/// simplex, cycling through faces.
std::vector<Vec> quadratic_sample_pool(const ModelSpec& model, int sample_count, uint64_t seed) {
    const int n = model.n;
    std::vector<Vec> pool;
    pool.reserve(static_cast<size_t>(sample_count));
    const int strata = sample_count / 4;  // a quarter of the budget near faces
    const double distances[] = {1e-2, 1e-4, 1e-6};
    int k = 0;
    for (; k < strata; ++k) {
        const double d = distances[k % 3];
        const int face = (k / 3) % (n + 1);
        pool.push_back(sample_near_face(seed, static_cast<uint64_t>(k), n, face, d));
    }
    for (; k < sample_count; ++k)
        pool.push_back(sample_simplex_point(seed, static_cast<uint64_t>(k), n));
    return pool;
}

}  // namespace

CoercivityCheck check_coercivity(const ModelSpec& model, int sample_count, uint64_t seed) {
    CoercivityCheck out;
    out.exponent_m = model.m;
    if (model.known_constants) {
        out.c_h_declared = model.known_constants->c_h;
        out.c_h_reference = model.known_constants->c_h_reference;
    }
    const auto pool = quadratic_sample_pool(model, sample_count, seed);
    const auto dirs = direction_set(seed, model.n);
    const double two_m = 2.0 * model.m;

    double best = std::numeric_limits<double>::infinity();
    for (const Vec& u : pool) {
        const Matrix form = matmul(entropy_hess(model, u), diffusion_matrix(model, u));
        for (const Vec& z : dirs) {
            double denom = 0.0;
            for (int i = 0; i < model.n; ++i) denom += z[i] * z[i] / std::pow(u[i], two_m);
            const double ratio = quad_form(z, form, z) / denom;
            if (ratio < best) {
                best = ratio;
                out.witness_u = u;
                out.witness_z = z;
            }
        }
    }
    out.c_h_empirical = best;
    out.pass = std::isfinite(best) && best > 0.0;
    return out;
}

NoiseInteractionCheck check_noise_entropy_interaction(const ModelSpec& model, int sample_count,
                                                      uint64_t seed) {
    NoiseInteractionCheck out;
    out.level_distances = {1e-2, 1e-4, 1e-6};
    const uint64_t s = derive_path_seed(seed, k_stream_shrink);
    const int n = model.n;
    const int per_level = std::max(sample_count / 3, 1);

    for (double margin : out.level_distances) {
        double sup = 0.0;
        for (int k = 0; k < per_level; ++k) {
            // Affine pull toward the barycenter: every fraction of the
            // (n+1)-vector stays >= margin, so the margin is the interior
            // distance of the stratum.
            Vec f = exp_fractions(s, static_cast<uint64_t>(k), n + 1);
            Vec u(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i)
                u[i] = margin + (1.0 - margin * (n + 1)) * f[i];

            const Vec grad = entropy_grad(model, u);
            const Matrix hess = entropy_hess(model, u);
            const Matrix sig = noise_coeff(model, u);
            const Vec corr = ito_correction(model, u);

            double term1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double col = 0.0;
                for (int i = 0; i < n; ++i) col += grad[i] * sig(i, j);
                term1 = std::max(term1, std::abs(col));
            }
            double term2 = 0.0;
            for (int i = 0; i < n; ++i) term2 += corr[i] * grad[i];
            term2 = std::abs(term2);
            double term3 = 0.0;
            for (int k2 = 0; k2 < n; ++k2)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) term3 += sig(i, k2) * hess(i, j) * sig(j, k2);
            term3 = std::abs(term3);

            const double total = term1 + term2 + term3;
            if (total > sup) {
                sup = total;
                if (total > out.c_h_bound) out.witness_u = u;
            }
        }
        out.level_sups.push_back(sup);
        out.c_h_bound = std::max(out.c_h_bound, sup);
    }

    // Levels shrink by two decades each; cap growth at 10x per decade.
    out.growth_per_decade = 0.0;
    for (size_t k = 0; k + 1 < out.level_sups.size(); ++k) {
        if (out.level_sups[k] <= 0.0) continue;
        const double g = std::sqrt(out.level_sups[k + 1] / out.level_sups[k]);
        out.growth_per_decade = std::max(out.growth_per_decade, g);
    }
    out.pass = std::isfinite(out.c_h_bound) && out.growth_per_decade <= 10.0;
    return out;
}

RegularizationCheck check_regularization_decay(const ModelSpec& model, int sample_count,
                                               uint64_t seed, double c_h_hint) {
    RegularizationCheck out;
    out.deltas = {1e-1, 1e-2, 1e-3};
    out.closed_form = static_cast<bool>(model.correction_matrix);
    const auto pool = quadratic_sample_pool(model, sample_count, seed);
    const auto dirs = direction_set(seed, model.n);
    const double two_m = 2.0 * model.m;

    for (double delta : out.deltas) {
        double sup = 0.0;
        for (const Vec& u : pool) {
            if (out.closed_form) {
                sup = std::max(sup, max_abs(correction_matrix(model, u, delta)));
            } else {
                // Coercivity defect of the shifted form, minimized over the
                // direction set: how much of the bound the shift destroys.
                const Vec ud = regularize(u, delta);
                const Matrix form = matmul(entropy_hess(model, ud), diffusion_matrix(model, u));
                double worst = 0.0;
                for (const Vec& z : dirs) {
                    double denom = 0.0;
                    double zz = 0.0;
                    for (int i = 0; i < model.n; ++i) {
                        denom += z[i] * z[i] / std::pow(ud[i], two_m);
                        zz += z[i] * z[i];
                    }
                    const double defect = quad_form(z, form, z) - c_h_hint * denom;
                    if (defect < 0.0) worst = std::max(worst, -defect / zz);
                }
                sup = std::max(sup, worst);
            }
        }
        out.sup_norms.push_back(sup);
    }

    bool finite = true;
    bool non_increasing = true;
    for (size_t k = 0; k < out.sup_norms.size(); ++k) {
        if (!std::isfinite(out.sup_norms[k])) finite = false;
        if (k > 0 && out.sup_norms[k] > out.sup_norms[k - 1]) non_increasing = false;
    }
    const bool vanishing_trend =
        out.sup_norms.front() == 0.0 || out.sup_norms.back() < out.sup_norms.front();
    out.pass = finite && non_increasing && vanishing_trend;
    return out;
}

AssumptionReport certify(const ModelSpec& model, int sample_count, uint64_t seed) {
    AssumptionReport report;
    report.model = model.name;
    report.n = model.n;
    report.sample_count = sample_count;
    report.seed = seed;
    report.lipschitz = check_lipschitz_diffusion(model, sample_count, seed);
    report.coercivity = check_coercivity(model, sample_count, seed);
    report.noise_interaction = check_noise_entropy_interaction(model, sample_count, seed);
    const double hint = report.coercivity.pass ? report.coercivity.c_h_empirical : 0.0;
    report.regularization = check_regularization_decay(model, sample_count, seed, hint);
    report.pass = report.lipschitz.pass && report.coercivity.pass &&
                  report.noise_interaction.pass && report.regularization.pass;
    return report;
}

void write_assumption_json(std::ostream& out, const AssumptionReport& report,
                           const std::string& config_hash) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = report.seed;
    j["model"] = report.model;
    j["n"] = report.n;
    j["sample_count"] = report.sample_count;
    j["pass"] = report.pass;

    j["lipschitz"]["constant"] = report.lipschitz.constant;
    j["lipschitz"]["pass"] = report.lipschitz.pass;
    j["lipschitz"]["witness_u"] = report.lipschitz.witness_u;
    j["lipschitz"]["witness_v"] = report.lipschitz.witness_v;

    j["coercivity"]["c_h_empirical"] = report.coercivity.c_h_empirical;
    j["coercivity"]["m"] = report.coercivity.exponent_m;
    j["coercivity"]["pass"] = report.coercivity.pass;
    j["coercivity"]["witness_u"] = report.coercivity.witness_u;
    j["coercivity"]["witness_z"] = report.coercivity.witness_z;
    if (report.coercivity.c_h_declared)
        j["coercivity"]["c_h_declared"] = *report.coercivity.c_h_declared;
    if (report.coercivity.c_h_reference)
        j["coercivity"]["c_h_reference"] = *report.coercivity.c_h_reference;

    j["noise_interaction"]["c_h_bound"] = report.noise_interaction.c_h_bound;
    j["noise_interaction"]["level_distances"] = report.noise_interaction.level_distances;
    j["noise_interaction"]["level_sups"] = report.noise_interaction.level_sups;
    j["noise_interaction"]["growth_per_decade"] = report.noise_interaction.growth_per_decade;
    j["noise_interaction"]["pass"] = report.noise_interaction.pass;
    j["noise_interaction"]["witness_u"] = report.noise_interaction.witness_u;

    j["regularization"]["deltas"] = report.regularization.deltas;
    j["regularization"]["sup_norms"] = report.regularization.sup_norms;
    j["regularization"]["closed_form"] = report.regularization.closed_form;
    j["regularization"]["pass"] = report.regularization.pass;

    out << j.dump(2) << '\n';
}

void write_assumption_csv(std::ostream& out, const AssumptionReport& report,
                          const std::string& config_hash) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "# config_hash=" << config_hash << " seed=" << report.seed << '\n';
    out << "delta,sup_correction_norm\n";
    for (size_t k = 0; k < report.regularization.deltas.size(); ++k)
        out << fmt(report.regularization.deltas[k]) << ','
            << fmt(report.regularization.sup_norms[k]) << '\n';
}

}  // namespace crossdiff
