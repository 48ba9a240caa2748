#pragma once

/// @file simplex.hpp
/// Geometry of the volume-filling state space: vectors u in R^n with
/// u_i >= 0 and sum_i u_i <= 1. The remaining volume fraction
/// 1 - sum_i u_i plays the role of an (n+1)-th component.

#include <span>

#include "crossdiff/linalg.hpp"

namespace crossdiff {

/// Volume fraction left for the passive component: 1 - sum(u).
double solvent_fraction(std::span<const double> u);

/// True when u_i >= -tol for all i and sum(u) <= 1 + tol.
bool in_closed_simplex(std::span<const double> u, double tol = 0.0);

/// How far u sits outside the closed simplex:
///   max(0, max_i(-u_i), sum(u) - 1).
/// Exactly zero for admissible states.
double simplex_violation(std::span<const double> u);

/// Euclidean projection onto {u : u_i >= 0, sum(u) <= 1}.
Vec project_to_simplex(std::span<const double> u);

/// Interior shift (u_i + delta/n) / (1 + delta) applied componentwise;
/// pushes every species component at least delta/(n(1+delta)) away from
/// zero while keeping the state admissible. Throws std::invalid_argument
/// for delta <= 0 or when u lies outside the closed simplex beyond tol.
Vec regularize(std::span<const double> u, double delta);

/// Ratio u_i / [u_i]_delta of a component against its regularized value,
/// with the 0/0 limit at delta = 0 taken as 1. n is the species count of
/// the full vector (the shift spreads delta across n components).
double regularized_ratio(double ui, double delta, int n);

}  // namespace crossdiff
