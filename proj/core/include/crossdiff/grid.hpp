#pragma once

/// @file grid.hpp
/// One-dimensional nodal grid with zero-flux boundaries, nodal fields for
/// concentrations and dual (entropy) variables, the divergence-form
/// diffusion operator, and quadrature helpers.
///
/// Nodes sit at x_j = j*dx, j = 0..N-1, dx = length/(N-1). Quadrature is
/// trapezoidal: weight dx/2 at the two boundary nodes, dx inside. The
/// diffusion operator is conservative by construction: its lumped integral
/// telescopes to the (zero) boundary fluxes.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crossdiff/linalg.hpp"
#include "crossdiff/model.hpp"

namespace crossdiff {

struct Grid1D {
    int nodes = 2;
    double length = 1.0;

    Grid1D() = default;
    Grid1D(int n, double len);

    double dx() const { return length / static_cast<double>(nodes - 1); }
    double x(int j) const { return dx() * static_cast<double>(j); }
    /// Trapezoid (lumped-mass) weight of node j.
    double weight(int j) const {
        return (j == 0 || j == nodes - 1) ? 0.5 * dx() : dx();
    }
};

/// Nodal field with n components per node, stored node-major so a node's
/// component block is contiguous.
class Field {
public:
    Field() = default;
    Field(int components, int nodes, double fill = 0.0)
        : n_(components), nodes_(nodes),
          data_(static_cast<size_t>(components) * nodes, fill) {}

    int components() const { return n_; }
    int nodes() const { return nodes_; }

    double& at(int comp, int node) { return data_[static_cast<size_t>(node) * n_ + comp]; }
    double at(int comp, int node) const { return data_[static_cast<size_t>(node) * n_ + comp]; }

    std::span<double> node(int j) { return {data_.data() + static_cast<size_t>(j) * n_, static_cast<size_t>(n_)}; }
    std::span<const double> node(int j) const {
        return {data_.data() + static_cast<size_t>(j) * n_, static_cast<size_t>(n_)};
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

private:
    int n_ = 0;
    int nodes_ = 0;
    std::vector<double> data_;
};

using ConcentrationField = Field;
using EntropyField = Field;

/// Apply the divergence-form diffusion operator: per node,
///   out_j = (F_{j+1/2} - F_{j-1/2}) / weight_j,
/// with face flux F_{j+1/2} = Abar * (u_{j+1} - u_j) / dx and zero flux on
/// both boundary faces. Abar is the arithmetic (default) or entrywise
/// harmonic average of A at the adjacent nodes. For smooth data with
/// compatible (zero-derivative) boundary values the result is a
/// second-order approximation of div(A(u) grad u).
enum class FaceAverage { Arithmetic, Harmonic };
Field divergence_form_flux(const ModelSpec& model, const Grid1D& grid, const Field& u,
                           FaceAverage avg = FaceAverage::Arithmetic);

/// Trapezoidal integral of a scalar nodal function.
double integrate(std::span<const double> values, const Grid1D& grid);

/// Trapezoidal integral of the entropy density h(u(x)).
double integrate_entropy(const ModelSpec& model, const Grid1D& grid, const Field& u);

/// Per-species trapezoidal masses.
Vec species_mass(const Grid1D& grid, const Field& u);

/// Discrete dissipation functional
///   sum_i sum_faces (u_i(x_{j+1})^(1-m) - u_i(x_j)^(1-m))^2 / dx,
/// the grid analogue of the integral of |grad u^(1-m)|^2. Negative nodal
/// values are clamped to zero before the fractional power.
double dissipation_seminorm(const Grid1D& grid, const Field& u, double m);

/// Largest simplex violation over all nodes.
double max_simplex_violation(const Field& u);

/// Pointwise conversion between dual and primal variables.
ConcentrationField to_concentration(const ModelSpec& model, const EntropyField& w);
EntropyField to_entropy_variables(const ModelSpec& model, const ConcentrationField& u);

// ---------------------------------------------------------------------------
// Initial profiles
// ---------------------------------------------------------------------------

enum class Profile { Barycenter, Step, SmoothBump };

Profile profile_from_name(const std::string& name);

/// Nodal initial data. Barycenter: u_i = 1/(n+1) everywhere. Step: species
/// 1 dominant (0.9) on the left half, the mirrored vector on the right.
/// SmoothBump: barycenter plus an alternating-sign cosine perturbation with
/// zero slope at both walls.
ConcentrationField make_profile(Profile profile, int n, const Grid1D& grid);

// ---------------------------------------------------------------------------
// Snapshot serialization: long-format CSV with columns t, x, u_1..u_n.
// ---------------------------------------------------------------------------

void write_snapshot_csv(std::ostream& out, const Grid1D& grid, const Field& u, double t);

/// Read nodal data written by write_snapshot_csv (a single time block) or a
/// bare initial-data table with columns x, u_1..u_n. Node positions must
/// match the grid to 1e-9 * dx.
ConcentrationField read_snapshot_csv(std::istream& in, int n, const Grid1D& grid);

}  // namespace crossdiff
