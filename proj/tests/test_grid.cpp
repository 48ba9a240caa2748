// Grid, quadrature, divergence-form operator, profiles, snapshot CSV.

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"

#include "doctest.h"

namespace {

using namespace crossdiff;

double rel_diff(double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("grid geometry and trapezoid weights") {
    Grid1D grid(5, 2.0);
    CHECK(grid.dx() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(grid.x(0) == 0.0);
    CHECK(grid.x(4) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(grid.weight(0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(grid.weight(2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(grid.weight(4) == doctest::Approx(0.25).epsilon(1e-15));

    double total = 0.0;
    for (int j = 0; j < grid.nodes; ++j) total += grid.weight(j);
    CHECK(total == doctest::Approx(grid.length).epsilon(1e-15));

    CHECK_THROWS_AS(Grid1D(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid1D(4, -1.0), std::invalid_argument);
}

TEST_CASE("trapezoid integration is exact on affine data") {
    Grid1D grid(9, 1.0);
    std::vector<double> ones(grid.nodes, 1.0);
    CHECK(integrate(ones, grid) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> linear(grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) linear[j] = grid.x(j);
    CHECK(integrate(linear, grid) == doctest::Approx(0.5).epsilon(1e-14));

    // x^2 on [0,1]: second-order error, tight at N = 101.
    Grid1D fine(101, 1.0);
    std::vector<double> quad(fine.nodes);
    for (int j = 0; j < fine.nodes; ++j) quad[j] = fine.x(j) * fine.x(j);
    CHECK(std::abs(integrate(quad, fine) - 1.0 / 3.0) < 1e-4);
}

TEST_CASE("constant fields produce exactly zero flux divergence") {
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(17, 1.0);
    Field u(2, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        u.at(0, j) = 0.3;
        u.at(1, j) = 0.45;
    }
    for (FaceAverage avg : {FaceAverage::Arithmetic, FaceAverage::Harmonic}) {
        Field out = divergence_form_flux(model, grid, u, avg);
        for (int j = 0; j < grid.nodes; ++j) {
            CHECK(out.at(0, j) == 0.0);
            CHECK(out.at(1, j) == 0.0);
        }
    }
}

TEST_CASE("lumped integral of the divergence operator telescopes to zero") {
    // Zero-flux boundaries make sum_j weight_j * out_j vanish identically
    // (conservation), independent of the nodal data.
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(33, 1.7);
    std::mt19937_64 rng(0x9a7dull);
    std::uniform_real_distribution<double> unif(0.05, 0.4);
    for (int rep = 0; rep < 5; ++rep) {
        Field u(2, grid.nodes);
        for (int j = 0; j < grid.nodes; ++j) {
            u.at(0, j) = unif(rng);
            u.at(1, j) = unif(rng);
        }
        Field out = divergence_form_flux(model, grid, u);
        for (int i = 0; i < 2; ++i) {
            double sum = 0.0;
            double scale = 0.0;
            for (int j = 0; j < grid.nodes; ++j) {
                sum += grid.weight(j) * out.at(i, j);
                scale += grid.weight(j) * std::abs(out.at(i, j));
            }
            CHECK(std::abs(sum) <= 1e-13 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("divergence operator converges at second order on a cosine") {
    // Scalar constant-diffusion model: div(grad u) with u = 0.2 + 0.1 cos(pi x / L)
    // has the analytic image -0.1 (pi/L)^2 cos(pi x / L); the odd derivatives
    // vanish at the walls, so the one-sided boundary stencil stays O(dx^2).
    Matrix eye = Matrix::identity(1);
    ModelSpec model = make_constant_diffusion(1, eye);
    const double length = 1.0;
    const double k = std::numbers::pi / length;

    auto max_error = [&](int nodes) {
        Grid1D grid(nodes, length);
        Field u(1, grid.nodes);
        for (int j = 0; j < grid.nodes; ++j) u.at(0, j) = 0.2 + 0.1 * std::cos(k * grid.x(j));
        Field out = divergence_form_flux(model, grid, u);
        double err = 0.0;
        for (int j = 0; j < grid.nodes; ++j) {
            const double exact = -0.1 * k * k * std::cos(k * grid.x(j));
            err = std::max(err, std::abs(out.at(0, j) - exact));
        }
        return err;
    };

    const double coarse = max_error(33);
    const double fine = max_error(65);
    CHECK(fine < coarse);
    CHECK(coarse / fine >= 3.5);  // ratio 4 for a clean second-order scheme
}

TEST_CASE("summation-by-parts identity against the face fluxes") {
    // sum_j weight_j out_j phi_j == -sum_faces Abar (u_{j+1}-u_j)(phi_{j+1}-phi_j)/dx
    // for every smooth test vector phi; both sides are computed independently.
    ModelSpec model = make_biofilm(2);
    Grid1D grid(21, 1.3);
    Field u(2, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        const double s = grid.x(j) / grid.length;
        u.at(0, j) = 0.25 + 0.1 * std::sin(2.0 * s);
        u.at(1, j) = 0.3 - 0.08 * s * s;
    }
    Field phi(2, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        const double s = grid.x(j);
        phi.at(0, j) = std::cos(s);
        phi.at(1, j) = 1.0 + 0.5 * s;
    }

    Field out = divergence_form_flux(model, grid, u);
    double lhs = 0.0;
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < 2; ++i) lhs += grid.weight(j) * out.at(i, j) * phi.at(i, j);

    double rhs = 0.0;
    for (int j = 0; j + 1 < grid.nodes; ++j) {
        Matrix left = diffusion_matrix(model, u.node(j));
        Matrix right = diffusion_matrix(model, u.node(j + 1));
        Matrix mid = 0.5 * (left + right);
        Vec du(2), dphi(2);
        for (int i = 0; i < 2; ++i) {
            du[i] = u.at(i, j + 1) - u.at(i, j);
            dphi[i] = phi.at(i, j + 1) - phi.at(i, j);
        }
        Vec flux = matvec(mid, du);
        for (int i = 0; i < 2; ++i) rhs -= flux[i] * dphi[i] / grid.dx();
    }

    CHECK(rel_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("dissipation seminorm on a two-node ramp") {
    // One face, values 0 and 1, m = 1/2: (1^{1/2} - 0^{1/2})^2 / dx = 1/dx,
    // dx = 1 here, summed over both species carrying the same ramp.
    Grid1D grid(2, 1.0);
    Field u(1, grid.nodes);
    u.at(0, 0) = 0.0;
    u.at(0, 1) = 1.0;
    CHECK(dissipation_seminorm(grid, u, 0.5) == doctest::Approx(1.0).epsilon(1e-14));

    // Negative values clamp to zero before the fractional power.
    u.at(0, 0) = -0.3;
    CHECK(dissipation_seminorm(grid, u, 0.5) == doctest::Approx(1.0).epsilon(1e-14));

    // Constant field has zero seminorm.
    u.at(0, 0) = 0.4;
    u.at(0, 1) = 0.4;
    CHECK(dissipation_seminorm(grid, u, 0.5) == 0.0);
}

TEST_CASE("max simplex violation over nodes") {
    Field u(2, 3);
    u.at(0, 0) = 0.3;
    u.at(1, 0) = 0.3;  // admissible
    u.at(0, 1) = -0.05;
    u.at(1, 1) = 0.2;  // negative part 0.05
    u.at(0, 2) = 0.7;
    u.at(1, 2) = 0.5;  // sum excess 0.2
    CHECK(max_simplex_violation(u) == doctest::Approx(0.2).epsilon(1e-14));

    u.at(0, 2) = 0.1;
    u.at(1, 2) = 0.1;
    CHECK(max_simplex_violation(u) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("primal/dual field conversion round trip") {
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(11, 1.0);
    ConcentrationField u = make_profile(Profile::SmoothBump, 2, grid);
    EntropyField w = to_entropy_variables(model, u);
    ConcentrationField back = to_concentration(model, w);
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(back.at(i, j) - u.at(i, j)) < 1e-12);
}

TEST_CASE("initial profiles") {
    Grid1D grid(9, 1.0);

    ConcentrationField bary = make_profile(Profile::Barycenter, 3, grid);
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < 3; ++i)
            CHECK(bary.at(i, j) == doctest::Approx(0.25).epsilon(1e-15));

    ConcentrationField step = make_profile(Profile::Step, 2, grid);
    CHECK(step.at(0, 0) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(step.at(1, 0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(step.at(0, grid.nodes - 1) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(step.at(1, grid.nodes - 1) == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(max_simplex_violation(step) == 0.0);

    ConcentrationField bump = make_profile(Profile::SmoothBump, 2, grid);
    CHECK(max_simplex_violation(bump) == 0.0);
    // Alternating-sign cosine perturbation around the barycenter at the walls.
    const double base = 1.0 / 3.0;
    CHECK(bump.at(0, 0) == doctest::Approx(base * 1.25).epsilon(1e-12));
    CHECK(bump.at(1, 0) == doctest::Approx(base * 0.75).epsilon(1e-12));
    CHECK(bump.at(0, grid.nodes - 1) == doctest::Approx(base * 0.75).epsilon(1e-12));
    CHECK(bump.at(1, grid.nodes - 1) == doctest::Approx(base * 1.25).epsilon(1e-12));

    CHECK(profile_from_name("barycenter") == Profile::Barycenter);
    CHECK(profile_from_name("step") == Profile::Step);
    CHECK(profile_from_name("smooth-bump") == Profile::SmoothBump);
    CHECK_THROWS_AS(profile_from_name("mystery"), std::invalid_argument);
}

TEST_CASE("species masses match component-wise integrals") {
    Grid1D grid(17, 2.0);
    ConcentrationField u = make_profile(Profile::Step, 2, grid);
    Vec mass = species_mass(grid, u);
    for (int i = 0; i < 2; ++i) {
        std::vector<double> comp(grid.nodes);
        for (int j = 0; j < grid.nodes; ++j) comp[j] = u.at(i, j);
        CHECK(mass[i] == doctest::Approx(integrate(comp, grid)).epsilon(1e-14));
    }
}

TEST_CASE("entropy integral at the barycenter") {
    // h(barycenter) = (n+1)(1/(n+1))(log(1/(n+1)) - 1) + (n+1) = n + 1 - ... ;
    // for n = 2 the nodal density is 2 - log 3, constant, so the integral is
    // length * (2 - log 3).
    ModelSpec model = make_biofilm(2);
    Grid1D grid(13, 1.5);
    ConcentrationField u = make_profile(Profile::Barycenter, 2, grid);
    const double expected = grid.length * (2.0 - std::log(3.0));
    CHECK(integrate_entropy(model, grid, u) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("snapshot CSV round trip and bare-table input") {
    Grid1D grid(7, 1.0);
    ConcentrationField u = make_profile(Profile::SmoothBump, 2, grid);

    std::stringstream io;
    write_snapshot_csv(io, grid, u, 0.25);
    ConcentrationField back = read_snapshot_csv(io, 2, grid);
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < 2; ++i)
            CHECK(std::abs(back.at(i, j) - u.at(i, j)) < 1e-12);

    // Bare x,u table without the time column.
    std::stringstream bare;
    bare << "x,u_1\n";
    Grid1D small(3, 1.0);
    bare << "0,0.25\n0.5,0.5\n1,0.125\n";
    ConcentrationField scalar = read_snapshot_csv(bare, 1, small);
    CHECK(scalar.at(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(scalar.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scalar.at(0, 2) == doctest::Approx(0.125).epsilon(1e-15));

    // Node positions that do not match the grid are rejected.
    std::stringstream wrong;
    wrong << "x,u_1\n0,0.25\n0.4,0.5\n1,0.125\n";
    CHECK_THROWS_AS(read_snapshot_csv(wrong, 1, small), std::runtime_error);
}

TEST_CASE("harmonic face average differs from arithmetic but stays conservative") {
    ModelSpec model = make_biofilm(2);
    Grid1D grid(15, 1.0);
    ConcentrationField u = make_profile(Profile::Step, 2, grid);
    Field arith = divergence_form_flux(model, grid, u, FaceAverage::Arithmetic);
    Field harm = divergence_form_flux(model, grid, u, FaceAverage::Harmonic);

    double diff = 0.0;
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < 2; ++i) diff = std::max(diff, std::abs(arith.at(i, j) - harm.at(i, j)));
    CHECK(diff > 0.0);

    for (int i = 0; i < 2; ++i) {
        double sum = 0.0;
        for (int j = 0; j < grid.nodes; ++j) sum += grid.weight(j) * harm.at(i, j);
        CHECK(std::abs(sum) <= 1e-12);
    }
}
