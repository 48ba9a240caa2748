#pragma once

/// @file assumptions.hpp
/// Empirical certification of the structural hypotheses a model must
/// satisfy for the entropy scheme's guarantees to apply: Lipschitz
/// diffusion, dissipation coercivity, bounded noise-entropy interaction,
/// and decay of the interior-shift correction. Every check samples the
/// simplex deterministically (counter-based draws keyed by an explicit
/// seed) and reports the estimated constants together with worst-case
/// witness points.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crossdiff/model.hpp"

namespace crossdiff {

/// Deterministic sample of the open simplex: normalized unit-rate
/// exponentials (a flat Dirichlet draw over the n+1 fractions, first n
/// returned). index selects the point, seed the stream.
Vec sample_simplex_point(uint64_t seed, uint64_t index, int n);

/// Like sample_simplex_point, but with the coordinate face_index of the
/// full (n+1)-vector pinned to the given distance and the rest rescaled:
/// stresses the boundary at a controlled offset. face_index may equal n
/// (the passive fraction's face, where the species sum approaches 1).
Vec sample_near_face(uint64_t seed, uint64_t index, int n, int face_index, double distance);

/// Direction set for quadratic-form checks: all canonical basis vectors,
/// all pairwise difference patterns e_i - e_j, and random_count random unit
/// vectors.
std::vector<Vec> direction_set(uint64_t seed, int n, int random_count = 64);

struct LipschitzCheck {
    double constant = 0.0;      ///< max difference quotient found
    bool pass = false;          ///< finite estimate
    Vec witness_u, witness_v;   ///< pair achieving the max
};

struct CoercivityCheck {
    double c_h_empirical = 0.0;  ///< min over samples/directions of the form ratio
    double exponent_m = 0.5;
    bool pass = false;           ///< strictly positive minimum
    Vec witness_u, witness_z;
    /// Model-declared constants for comparison, when present.
    std::optional<double> c_h_declared;
    std::optional<double> c_h_reference;
};

struct NoiseInteractionCheck {
    double c_h_bound = 0.0;      ///< sup over all levels of the three-term sum
    Vec level_distances;         ///< interior margins of the shrink levels
    Vec level_sups;              ///< sup of the sum at each level
    double growth_per_decade = 0.0;
    bool pass = false;           ///< finite and growth <= 10x per decade
    Vec witness_u;
};

struct RegularizationCheck {
    Vec deltas;
    Vec sup_norms;               ///< sup over samples of max|R_delta(u)|
    bool closed_form = true;     ///< false when the coercivity-defect fallback ran
    bool pass = false;           ///< finite, non-increasing, vanishing trend
};

struct AssumptionReport {
    std::string model;
    int n = 0;
    int sample_count = 0;
    uint64_t seed = 0;
    LipschitzCheck lipschitz;
    CoercivityCheck coercivity;
    NoiseInteractionCheck noise_interaction;
    RegularizationCheck regularization;
    bool pass = false;
};

/// Max over sampled pairs (independent and short-segment) of
/// ||A(u) - A(v)||_F / ||u - v||_2.
LipschitzCheck check_lipschitz_diffusion(const ModelSpec& model, int sample_count, uint64_t seed);

/// Min over samples (interior + boundary strata) and directions of
///   z^T h''(u) A(u) z / sum_i z_i^2 / u_i^(2m).
CoercivityCheck check_coercivity(const ModelSpec& model, int sample_count, uint64_t seed);

/// Sup over samples at shrinking interior margins {1e-2, 1e-4, 1e-6} of
///   max_j |sum_i h'_i sigma_ij| + |sum_i T_i h'_i| + |trace(sigma^T h'' sigma)|.
NoiseInteractionCheck check_noise_entropy_interaction(const ModelSpec& model, int sample_count,
                                                      uint64_t seed);

/// Decay table of sup ||R_delta||_max over delta in {1e-1, 1e-2, 1e-3}.
/// Falls back to the coercivity-defect surrogate
///   max(0, -min_z [z^T h''([u]_d) A(u) z - c_h sum z_i^2/[u_i]_d^(2m)])
/// when the model has no closed-form correction matrix; c_h_hint supplies
/// the constant for that fallback.
RegularizationCheck check_regularization_decay(const ModelSpec& model, int sample_count,
                                               uint64_t seed, double c_h_hint);

/// Run all four checks with a shared sample budget.
AssumptionReport certify(const ModelSpec& model, int sample_count, uint64_t seed);

void write_assumption_json(std::ostream& out, const AssumptionReport& report,
                           const std::string& config_hash);
/// CSV of the regularization decay table: delta, sup_norm rows.
void write_assumption_csv(std::ostream& out, const AssumptionReport& report,
                          const std::string& config_hash);

}  // namespace crossdiff
