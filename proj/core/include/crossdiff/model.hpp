#pragma once

/// @file model.hpp
/// Model algebra for volume-filling cross-diffusion systems: the diffusion
/// matrix A(u), the mixing entropy h with its gradient/Hessian/inverse
/// gradient, the multiplicative noise coefficient sigma(u) with its
/// u-derivatives, and the interior-shift correction matrix used by the
/// structure certificates.
///
/// States u live on the closed simplex {u_i >= 0, sum(u) <= 1}; the passive
/// volume fraction is 1 - sum(u). Coefficient evaluations (A, sigma, h)
/// clamp their argument to the closed simplex via Euclidean projection so
/// that explicit schemes may leave the admissible set without tripping
/// domain errors; the derivative maps h' and h'' require strictly interior
/// arguments and throw std::domain_error otherwise.

#include <functional>
#include <optional>
#include <string>

#include "crossdiff/linalg.hpp"
#include "crossdiff/simplex.hpp"

namespace crossdiff {

/// Constants attached to a model when they are known analytically.
struct KnownConstants {
    /// Exponent in the dissipation lower bound   z^T h''(u) A(u) z >= c_h sum_i z_i^2 / u_i^(2m).
    double m = 0.5;
    /// A coercivity constant for which the bound above provably holds.
    double c_h = 0.0;
    /// The textbook constant min over species pairs of d_i d_j for the
    /// three-species mixture; recorded for comparison because its scaling
    /// does not match the normalization of the bound above (see the
    /// assumption checker, which estimates the valid constant empirically).
    std::optional<double> c_h_reference;
    /// Bound on |d sigma_ij / d u_k| over the simplex.
    std::optional<double> noise_derivative_bound;
};

/// A cross-diffusion model as a bundle of callables. All maps take the
/// n-vector of active species; the passive fraction is implied.
struct ModelSpec {
    std::string name;
    int n = 0;         ///< number of active species (state dimension)
    double m = 0.5;    ///< dissipation exponent, in [0, 1)

    std::function<Matrix(std::span<const double>)> diffusion;          ///< A(u), n x n
    std::function<double(std::span<const double>)> entropy;            ///< h(u)
    std::function<Vec(std::span<const double>)> entropy_grad;          ///< h'(u), interior only
    std::function<Matrix(std::span<const double>)> entropy_hess;       ///< h''(u), interior only
    std::function<Vec(std::span<const double>)> inv_entropy_grad;      ///< (h')^{-1}(w), all of R^n
    std::function<Matrix(std::span<const double>)> noise;              ///< sigma(u), n x n
    std::function<Tensor3(std::span<const double>)> noise_jacobian;    ///< d sigma_ij / d u_k
    /// Closed-form correction matrix R_delta(u) satisfying
    ///   z^T h''([u]_delta) A(u) z - (coercive part in [u]_delta) = z^T R_delta(u) z;
    /// optional, present for the built-in models.
    std::function<Matrix(std::span<const double>, double)> correction_matrix;

    std::optional<KnownConstants> known_constants;
};

// ---------------------------------------------------------------------------
// Wrapped evaluation (clamping / domain checks); prefer these over calling
// the raw callables so the argument policy stays in one place.
// ---------------------------------------------------------------------------

Matrix diffusion_matrix(const ModelSpec& model, std::span<const double> u);
double entropy_value(const ModelSpec& model, std::span<const double> u);
Vec entropy_grad(const ModelSpec& model, std::span<const double> u);
Matrix entropy_hess(const ModelSpec& model, std::span<const double> u);
Vec inv_entropy_grad(const ModelSpec& model, std::span<const double> w);
Matrix noise_coeff(const ModelSpec& model, std::span<const double> u);
Tensor3 noise_jacobian(const ModelSpec& model, std::span<const double> u);

/// Drift correction T_i(u) = sum_{k,j} sigma_kj(u) * d sigma_ij / d u_k (u),
/// evaluated by the generic triple sum over the model's noise callables.
Vec ito_correction(const ModelSpec& model, std::span<const double> u);

/// R_delta(u) via the model's closed form; throws std::logic_error when the
/// model does not provide one.
Matrix correction_matrix(const ModelSpec& model, std::span<const double> u, double delta);

/// Multiply the noise coefficient (and consistently its derivatives) by a
/// scalar amplitude. Leaves all other algebra untouched.
ModelSpec scale_noise(const ModelSpec& model, double amplitude);

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

/// Three-species Maxwell-Stefan mixture (two active species + passive
/// fraction) with pairwise diffusivities d0, d1, d2 and diagonal
/// multiplicative noise sigma_ii = u_i * (1 - u_1 - u_2).
ModelSpec make_maxwell_stefan(double d0, double d1, double d2);

/// n-species biofilm-type model A_ij(u) = delta_ij - u_i with the same
/// diagonal multiplicative noise. Its structure certificate is exact:
/// z^T h''(u) A(u) z = sum_i z_i^2 / u_i.
ModelSpec make_biofilm(int n);

/// Constant-diffusion test model with Boltzmann entropy and zero noise;
/// used for manufactured solutions and as a fixture for negative tests.
ModelSpec make_constant_diffusion(int n, const Matrix& a);

/// Deliberately broken fixture: the biofilm model with A negated, so every
/// coercivity certificate must fail. Exposed through the CLI for
/// exercising failure paths end to end.
ModelSpec make_negated_diffusion(int n);

/// Look up a built-in by its registry name ("maxwell-stefan-3",
/// "biofilm-n", "negated-a-n"); parameters are read from the provided
/// getter (returns NaN when a key is absent).
ModelSpec make_builtin(const std::string& name,
                       const std::function<double(const std::string&)>& param);

// ---------------------------------------------------------------------------
// Entropy bundle (shared by the built-ins and available for custom models)
// ---------------------------------------------------------------------------

/// Install the mixing-entropy callables
///   h(u) = sum_{i=1}^{n+1} (u_i (log u_i - 1) + 1),  u_{n+1} = 1 - sum(u)
/// on a model: entropy, entropy_grad (w_i = log(u_i/u_{n+1})), entropy_hess
/// (1/u_i on the diagonal plus 1/u_{n+1} everywhere), and the globally
/// defined inverse w -> u (a numerically safe softmax).
void install_boltzmann_entropy(ModelSpec& model);

}  // namespace crossdiff
