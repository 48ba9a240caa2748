#include "crossdiff/model.hpp"

#include <algorithm>
#include <cmath>

namespace crossdiff {

namespace {

constexpr double k_interior_floor = 0.0;  // interior checks are strict (> 0)

void check_dim(const ModelSpec& model, std::span<const double> u, const char* who) {
    if (static_cast<int>(u.size()) != model.n)
        throw std::invalid_argument(std::string(who) + ": state dimension mismatch");
}

Vec clamped(std::span<const double> u) {
    if (in_closed_simplex(u)) return Vec(u.begin(), u.end());
    return project_to_simplex(u);
}

void require_interior(std::span<const double> u, const char* who) {
    double s = 0.0;
    for (double v : u) {
        if (!(v > k_interior_floor))
            throw std::domain_error(std::string(who) + ": state not strictly interior");
        s += v;
    }
    if (!(s < 1.0))
        throw std::domain_error(std::string(who) + ": passive fraction not positive");
}

/// x (log x - 1) + 1 extended by its limit 1 at x = 0.
double entropy_term(double x) {
    if (x <= 0.0) return 1.0;
    return x * (std::log(x) - 1.0) + 1.0;
}

double boltzmann_entropy(std::span<const double> u) {
    const Vec v = clamped(u);
    double h = 0.0;
    double s = 0.0;
    for (double x : v) {
        h += entropy_term(x);
        s += x;
    }
    h += entropy_term(std::max(1.0 - s, 0.0));
    return h;
}

Vec boltzmann_grad(std::span<const double> u) {
    require_interior(u, "entropy_grad");
    const double sol = solvent_fraction(u);
    Vec w(u.size());
    for (size_t i = 0; i < u.size(); ++i) w[i] = std::log(u[i] / sol);
    return w;
}

Matrix boltzmann_hess(std::span<const double> u) {
    require_interior(u, "entropy_hess");
    const int n = static_cast<int>(u.size());
    const double inv_sol = 1.0 / solvent_fraction(u);
    Matrix h(n, n, inv_sol);
    for (int i = 0; i < n; ++i) h(i, i) += 1.0 / u[i];
    return h;
}

// Inverse of w_i = log(u_i / u_{n+1}): a softmax against the implicit zero
// logit of the passive fraction. Shift by the max logit so large |w| cannot
// overflow; the result is always strictly inside the open simplex up to
// floating-point underflow of individual components.
Vec boltzmann_inverse(std::span<const double> w) {
    double m = 0.0;  // include the implicit 0 logit
    for (double v : w) m = std::max(m, v);
    double denom = std::exp(-m);
    Vec e(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        e[i] = std::exp(w[i] - m);
        denom += e[i];
    }
    Vec u(w.size());
    for (size_t i = 0; i < w.size(); ++i) u[i] = e[i] / denom;
    return u;
}

/// Diagonal multiplicative noise sigma_ii = u_i * solvent, shared by the
/// built-in models; vanishes on the whole simplex boundary.
Matrix diagonal_noise(std::span<const double> u) {
    const int n = static_cast<int>(u.size());
    const double sol = solvent_fraction(u);
    Matrix s(n, n);
    for (int i = 0; i < n; ++i) s(i, i) = u[i] * sol;
    return s;
}

Tensor3 diagonal_noise_jacobian(std::span<const double> u) {
    const int n = static_cast<int>(u.size());
    const double sol = solvent_fraction(u);
    Tensor3 j(n, n, n);
    // d(u_i * sol)/du_k = sol * [i == k] - u_i
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            j(i, i, k) = (i == k ? sol : 0.0) - u[i];
    return j;
}

void install_diagonal_noise(ModelSpec& model) {
    model.noise = [](std::span<const double> u) { return diagonal_noise(u); };
    model.noise_jacobian = [](std::span<const double> u) { return diagonal_noise_jacobian(u); };
}

}  // namespace

void install_boltzmann_entropy(ModelSpec& model) {
    model.entropy = boltzmann_entropy;
    model.entropy_grad = boltzmann_grad;
    model.entropy_hess = boltzmann_hess;
    model.inv_entropy_grad = boltzmann_inverse;
}

Matrix diffusion_matrix(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "diffusion_matrix");
    const Vec v = clamped(u);
    return model.diffusion(v);
}

double entropy_value(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "entropy_value");
    const Vec v = clamped(u);
    return model.entropy(v);
}

Vec entropy_grad(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "entropy_grad");
    return model.entropy_grad(u);
}

Matrix entropy_hess(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "entropy_hess");
    return model.entropy_hess(u);
}

Vec inv_entropy_grad(const ModelSpec& model, std::span<const double> w) {
    check_dim(model, w, "inv_entropy_grad");
    return model.inv_entropy_grad(w);
}

Matrix noise_coeff(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "noise_coeff");
    const Vec v = clamped(u);
    return model.noise(v);
}

Tensor3 noise_jacobian(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "noise_jacobian");
    const Vec v = clamped(u);
    return model.noise_jacobian(v);
}

Vec ito_correction(const ModelSpec& model, std::span<const double> u) {
    check_dim(model, u, "ito_correction");
    const Vec v = clamped(u);
    const Matrix sig = model.noise(v);
    const Tensor3 dsig = model.noise_jacobian(v);
    const int n = model.n;
    Vec t(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) s += sig(k, j) * dsig(i, j, k);
        t[i] = s;
    }
    return t;
}

Matrix correction_matrix(const ModelSpec& model, std::span<const double> u, double delta) {
    check_dim(model, u, "correction_matrix");
    if (!model.correction_matrix)
        throw std::logic_error("correction_matrix: model provides no closed form");
    if (delta < 0.0)
        throw std::invalid_argument("correction_matrix: delta must be >= 0");
    const Vec v = clamped(u);
    return model.correction_matrix(v, delta);
}

ModelSpec scale_noise(const ModelSpec& model, double amplitude) {
    ModelSpec out = model;
    const auto base_noise = model.noise;
    const auto base_jac = model.noise_jacobian;
    out.noise = [base_noise, amplitude](std::span<const double> u) {
        return amplitude * base_noise(u);
    };
    out.noise_jacobian = [base_jac, amplitude](std::span<const double> u) {
        Tensor3 j = base_jac(u);
        for (int i = 0; i < j.dim0(); ++i)
            for (int jj = 0; jj < j.dim1(); ++jj)
                for (int k = 0; k < j.dim2(); ++k) j(i, jj, k) *= amplitude;
        return j;
    };
    if (out.known_constants && out.known_constants->noise_derivative_bound)
        *out.known_constants->noise_derivative_bound *= std::abs(amplitude);
    return out;
}

// ---------------------------------------------------------------------------
// Maxwell-Stefan three-species mixture
// ---------------------------------------------------------------------------

ModelSpec make_maxwell_stefan(double d0, double d1, double d2) {
    if (!(d0 > 0.0 && d1 > 0.0 && d2 > 0.0))
        throw std::invalid_argument("make_maxwell_stefan: diffusivities must be positive");

    ModelSpec model;
    model.name = "maxwell-stefan-3";
    model.n = 2;
    model.m = 0.5;
    install_boltzmann_entropy(model);
    install_diagonal_noise(model);

    auto denom = [d0, d1, d2](double u1, double u2, double sol) {
        return d0 * d1 * u1 + d0 * d2 * u2 + d1 * d2 * sol;
    };

    model.diffusion = [d0, d1, d2, denom](std::span<const double> u) {
        const double u1 = u[0], u2 = u[1];
        const double sol = 1.0 - u1 - u2;
        const double a = denom(u1, u2, sol);
        Matrix m(2, 2);
        m(0, 0) = (d2 + (d0 - d2) * u1) / a;
        m(0, 1) = (d0 - d1) * u1 / a;
        m(1, 0) = (d0 - d2) * u2 / a;
        m(1, 1) = (d1 + (d0 - d1) * u2) / a;
        return m;
    };

    // Exact split of z^T h''([u]_delta) A(u) z into its coercive part
    //   (d2 z1^2/[u1]_d + d1 z2^2/[u2]_d + d0 (z1+z2)^2/[sol]_d) / a(u)
    // and the remainder below, built from ratios u_i/[u_i]_delta that tend
    // to 1 as delta -> 0 at interior points.
    model.correction_matrix = [d0, d1, d2, denom](std::span<const double> u, double delta) {
        const double u1 = u[0], u2 = u[1];
        const double sol = 1.0 - u1 - u2;
        const double a = denom(u1, u2, sol);
        const double r1 = regularized_ratio(u1, delta, 2);
        const double r2 = regularized_ratio(u2, delta, 2);
        const double rs = 1.0 + delta;  // sol / (sol/(1+delta)), independent of sol
        Matrix r(2, 2);
        r(0, 0) = (d0 - d2) * (r1 - rs) / a;
        r(0, 1) = (d0 - d1) * (r1 - rs) / a;
        r(1, 0) = (d0 - d2) * (r2 - rs) / a;
        r(1, 1) = (d0 - d1) * (r2 - rs) / a;
        return r;
    };

    KnownConstants kc;
    kc.m = 0.5;
    const double max_pair = std::max({d0 * d1, d0 * d2, d1 * d2});
    // Valid bound: z^T h'' A z >= (d2 z1^2/u1 + d1 z2^2/u2)/a and
    // a(u) <= max_pair on the simplex, so c_h = min(d1,d2)/max_pair works.
    kc.c_h = std::min(d1, d2) / max_pair;
    kc.c_h_reference = std::min({d0 * d1, d0 * d2, d1 * d2});
    kc.noise_derivative_bound = 1.0;
    model.known_constants = kc;
    return model;
}

// ---------------------------------------------------------------------------
// Biofilm-type model, n species
// ---------------------------------------------------------------------------

ModelSpec make_biofilm(int n) {
    if (n < 1) throw std::invalid_argument("make_biofilm: n must be >= 1");

    ModelSpec model;
    model.name = "biofilm-" + std::to_string(n);
    model.n = n;
    model.m = 0.5;
    install_boltzmann_entropy(model);
    install_diagonal_noise(model);

    model.diffusion = [n](std::span<const double> u) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = (i == j ? 1.0 : 0.0) - u[i];
        return m;
    };

    // z^T h''([u]_d) A(u) z = sum_i z_i^2/[u_i]_d + z^T R z with
    // R_ij = sol/[sol]_d - u_i/[u_i]_d, exactly.
    model.correction_matrix = [n](std::span<const double> u, double delta) {
        const double rs = 1.0 + delta;
        Matrix r(n, n);
        for (int i = 0; i < n; ++i) {
            const double ri = regularized_ratio(u[i], delta, n);
            for (int j = 0; j < n; ++j) r(i, j) = rs - ri;
        }
        return r;
    };

    KnownConstants kc;
    kc.m = 0.5;
    kc.c_h = 1.0;
    kc.noise_derivative_bound = 1.0;
    model.known_constants = kc;
    return model;
}

// ---------------------------------------------------------------------------
// Test fixtures
// ---------------------------------------------------------------------------

ModelSpec make_constant_diffusion(int n, const Matrix& a) {
    if (a.rows() != n || a.cols() != n)
        throw std::invalid_argument("make_constant_diffusion: matrix shape mismatch");
    ModelSpec model;
    model.name = "constant-" + std::to_string(n);
    model.n = n;
    model.m = 0.5;
    install_boltzmann_entropy(model);
    model.diffusion = [a](std::span<const double>) { return a; };
    model.noise = [n](std::span<const double>) { return Matrix(n, n); };
    model.noise_jacobian = [n](std::span<const double>) { return Tensor3(n, n, n); };
    return model;
}

ModelSpec make_negated_diffusion(int n) {
    ModelSpec model = make_biofilm(n);
    model.name = "negated-a-" + std::to_string(n);
    const auto base = model.diffusion;
    model.diffusion = [base](std::span<const double> u) { return -1.0 * base(u); };
    model.correction_matrix = nullptr;
    model.known_constants.reset();
    return model;
}

ModelSpec make_builtin(const std::string& name,
                       const std::function<double(const std::string&)>& param) {
    auto get_or = [&param](const std::string& key, double fallback) {
        const double v = param(key);
        return std::isnan(v) ? fallback : v;
    };
    if (name == "maxwell-stefan-3") {
        return make_maxwell_stefan(get_or("d0", 1.0), get_or("d1", 2.0), get_or("d2", 3.0));
    }
    if (name == "biofilm-n") {
        return make_biofilm(static_cast<int>(get_or("n", 2.0)));
    }
    if (name == "negated-a-n") {
        return make_negated_diffusion(static_cast<int>(get_or("n", 2.0)));
    }
    throw std::invalid_argument("unknown model name: " + name);
}

}  // namespace crossdiff
