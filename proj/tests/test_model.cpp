#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "crossdiff/model.hpp"
#include "crossdiff/noise.hpp"
#include "crossdiff/simplex.hpp"

using namespace crossdiff;

namespace {

constexpr uint64_t kSampleSeed = 0x5eedu;

/// Random point in the open simplex with every component (and the passive
/// fraction) at least `margin` away from zero: a normalized exponential
/// sample pulled toward the barycenter.
Vec interior_point(int n, uint64_t stream, double margin = 0.02) {
    Vec e(static_cast<size_t>(n) + 1);
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        e[static_cast<size_t>(i)] =
            -std::log(uniform_draw(kSampleSeed, static_cast<uint32_t>(i), stream));
        sum += e[static_cast<size_t>(i)];
    }
    Vec u(static_cast<size_t>(n));
    const double pull = margin * static_cast<double>(n + 1);
    for (int i = 0; i < n; ++i)
        u[static_cast<size_t>(i)] = (1.0 - pull) * e[static_cast<size_t>(i)] / sum + margin;
    return u;
}

Vec random_direction(int n, uint64_t stream) {
    Vec z(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        z[static_cast<size_t>(i)] =
            2.0 * uniform_draw(kSampleSeed ^ 0xd1ceu, static_cast<uint32_t>(i), stream) - 1.0;
    return z;
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("simplex geometry basics") {
    Vec u{0.2, 0.3};
    CHECK(solvent_fraction(u) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(in_closed_simplex(u));
    CHECK(simplex_violation(u) == 0.0);

    Vec bad{-0.1, 0.3};
    CHECK(!in_closed_simplex(bad));
    CHECK(simplex_violation(bad) == doctest::Approx(0.1));
    Vec over{0.8, 0.9};
    CHECK(simplex_violation(over) == doctest::Approx(0.7));

    Vec p = project_to_simplex(bad);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.3));
    Vec q = project_to_simplex(over);
    CHECK(simplex_violation(q) <= 1e-15);
    // Projection of an interior point is the identity.
    Vec r = project_to_simplex(u);
    CHECK(r[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(r[1] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("interior shift: frozen value and admissibility") {
    // (0 + 0.1/2) / 1.1 = 1/22
    Vec v = regularize(Vec{0.0, 0.0}, 0.1);
    CHECK(v[0] == doctest::Approx(1.0 / 22.0).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(1.0 / 22.0).epsilon(1e-15));

    // Vertex stays admissible and gains an interior passive fraction.
    Vec w = regularize(Vec{1.0, 0.0}, 0.01);
    CHECK(simplex_violation(w) == 0.0);
    CHECK(solvent_fraction(w) > 0.0);

    CHECK_THROWS_AS((void)regularize(Vec{0.5, 0.2}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)regularize(Vec{1.5, 0.2}, 0.1), std::invalid_argument);

    // Ratio u/[u]_delta: frozen value and the delta = 0 limit.
    CHECK(regularized_ratio(0.2, 0.1, 2) == doctest::Approx(0.88).epsilon(1e-15));
    CHECK(regularized_ratio(0.0, 0.1, 2) == 0.0);
    CHECK(regularized_ratio(0.3, 0.0, 2) == 1.0);
}

TEST_CASE("three-species mixture: frozen diffusion matrix") {
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);
    CHECK(ms.n == 2);
    Matrix a = diffusion_matrix(ms, Vec{0.25, 0.25});
    // denominator a(u) = 1*2*0.25 + 1*3*0.25 + 2*3*0.5 = 4.25
    CHECK(a(0, 0) == doctest::Approx(10.0 / 17.0).epsilon(1e-14));
    CHECK(a(0, 1) == doctest::Approx(-1.0 / 17.0).epsilon(1e-14));
    CHECK(a(1, 0) == doctest::Approx(-2.0 / 17.0).epsilon(1e-14));
    CHECK(a(1, 1) == doctest::Approx(7.0 / 17.0).epsilon(1e-14));

    // Equal diffusivities collapse to scalar diffusion 1/d.
    ModelSpec eq = make_maxwell_stefan(2.0, 2.0, 2.0);
    Matrix ae = diffusion_matrix(eq, Vec{0.1, 0.37});
    CHECK(ae(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ae(0, 1) == doctest::Approx(0.0));
    CHECK(ae(1, 0) == doctest::Approx(0.0));
    CHECK(ae(1, 1) == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS((void)make_maxwell_stefan(0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("mixing entropy: frozen values, gradient, Hessian") {
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);

    // Barycenter of the full 3-simplex is the minimum: 2 - log 3.
    const double third = 1.0 / 3.0;
    CHECK(entropy_value(ms, Vec{third, third}) ==
          doctest::Approx(2.0 - std::log(3.0)).epsilon(1e-14));
    // Vertices carry entropy 2 (two components at the x log x limit 0 -> 1).
    CHECK(entropy_value(ms, Vec{1.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(entropy_value(ms, Vec{0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-14));

    Vec g = entropy_grad(ms, Vec{0.5, 0.25});
    CHECK(g[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(0.0));

    Matrix h = entropy_hess(ms, Vec{third, third});
    CHECK(h(0, 0) == doctest::Approx(6.0).epsilon(1e-13));
    CHECK(h(0, 1) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(h(1, 0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(h(1, 1) == doctest::Approx(6.0).epsilon(1e-13));

    CHECK_THROWS_AS((void)entropy_grad(ms, Vec{0.0, 0.5}), std::domain_error);
    CHECK_THROWS_AS((void)entropy_hess(ms, Vec{0.5, 0.5}), std::domain_error);
}

TEST_CASE("entropy gradient and Hessian match finite differences") {
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);
    const double fd = 1e-6;
    for (uint64_t s = 0; s < 40; ++s) {
        Vec u = interior_point(2, s, 0.05);
        Vec g = entropy_grad(ms, u);
        Matrix h = entropy_hess(ms, u);
        for (int k = 0; k < 2; ++k) {
            Vec up = u, um = u;
            up[static_cast<size_t>(k)] += fd;
            um[static_cast<size_t>(k)] -= fd;
            const double gfd =
                (entropy_value(ms, up) - entropy_value(ms, um)) / (2.0 * fd);
            CHECK(rel_diff(g[static_cast<size_t>(k)], gfd) < 1e-5);
            Vec gp = entropy_grad(ms, up);
            Vec gm = entropy_grad(ms, um);
            for (int i = 0; i < 2; ++i) {
                const double hfd =
                    (gp[static_cast<size_t>(i)] - gm[static_cast<size_t>(i)]) / (2.0 * fd);
                CHECK(rel_diff(h(i, k), hfd) < 1e-5);
            }
        }
    }
}

TEST_CASE("dual-variable inverse: frozen points and round trips") {
    ModelSpec ms = make_biofilm(2);

    // w = (log 2, 0) has logits (2, 1, 1)/4 against the implicit passive 0.
    Vec u = inv_entropy_grad(ms, Vec{std::log(2.0), 0.0});
    CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(u[1] == doctest::Approx(0.25).epsilon(1e-14));

    // Large equal duals saturate toward the edge without overflow.
    Vec sat = inv_entropy_grad(ms, Vec{50.0, 50.0});
    CHECK(std::abs(sat[0] - 0.5) < 1e-10);
    CHECK(std::abs(sat[1] - 0.5) < 1e-10);
    CHECK(simplex_violation(sat) == 0.0);

    // Extreme negative duals underflow gracefully to an admissible state.
    Vec tiny = inv_entropy_grad(ms, Vec{-746.0, -746.0});
    CHECK(std::isfinite(tiny[0]));
    CHECK(tiny[0] >= 0.0);
    CHECK(simplex_violation(tiny) == 0.0);

    // u -> w -> u and w -> u -> w round trips.
    for (uint64_t s = 0; s < 40; ++s) {
        Vec uu = interior_point(2, 100 + s, 0.01);
        Vec w = entropy_grad(ms, uu);
        Vec back = inv_entropy_grad(ms, w);
        CHECK(std::abs(back[0] - uu[0]) < 1e-12);
        CHECK(std::abs(back[1] - uu[1]) < 1e-12);

        Vec ww{8.0 * (uniform_draw(kSampleSeed, 7, s) - 0.5),
               8.0 * (uniform_draw(kSampleSeed, 8, s) - 0.5)};
        Vec uw = inv_entropy_grad(ms, ww);
        Vec wback = entropy_grad(ms, uw);
        CHECK(std::abs(wback[0] - ww[0]) < 1e-10);
        CHECK(std::abs(wback[1] - ww[1]) < 1e-10);
    }
}

TEST_CASE("multiplicative noise: frozen coefficient and drift correction") {
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);

    Matrix sig = noise_coeff(ms, Vec{0.25, 0.25});
    CHECK(sig(0, 0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(sig(1, 1) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(sig(0, 1) == 0.0);
    CHECK(sig(1, 0) == 0.0);

    // With sigma_ii = u_i * s the correction is T_i = u_i s (s - u_i):
    // only the k = j = i term of the triple sum survives a diagonal sigma.
    Vec t = ito_correction(ms, Vec{0.1, 0.1});
    CHECK(t[0] == doctest::Approx(0.1 * 0.8 * 0.7).epsilon(1e-14));
    CHECK(t[1] == doctest::Approx(0.056).epsilon(1e-14));
    Vec t2 = ito_correction(ms, Vec{0.25, 0.25});
    CHECK(t2[0] == doctest::Approx(0.03125).epsilon(1e-14));

    // Noise vanishes on the boundary faces u_i = 0 and sum(u) = 1.
    Matrix edge = noise_coeff(ms, Vec{0.0, 0.4});
    CHECK(edge(0, 0) == 0.0);
    Matrix full = noise_coeff(ms, Vec{0.6, 0.4});
    CHECK(std::abs(full(1, 1)) < 1e-15);
}

TEST_CASE("noise Jacobian and correction match finite differences") {
    for (int n : {2, 3}) {
        ModelSpec model = n == 2 ? make_maxwell_stefan(1.0, 2.0, 3.0) : make_biofilm(3);
        const double fd = 1e-6;
        for (uint64_t s = 0; s < 30; ++s) {
            Vec u = interior_point(n, 200 + s, 0.05);
            Tensor3 jac = noise_jacobian(model, u);
            Vec t = ito_correction(model, u);
            Matrix sig = noise_coeff(model, u);

            Vec t_fd(static_cast<size_t>(n), 0.0);
            for (int k = 0; k < n; ++k) {
                Vec up = u, um = u;
                up[static_cast<size_t>(k)] += fd;
                um[static_cast<size_t>(k)] -= fd;
                Matrix sp = noise_coeff(model, up);
                Matrix sm = noise_coeff(model, um);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double dfd = (sp(i, j) - sm(i, j)) / (2.0 * fd);
                        CHECK(rel_diff(jac(i, j, k), dfd) < 1e-6);
                        t_fd[static_cast<size_t>(i)] += sig(k, j) * dfd;
                    }
            }
            for (int i = 0; i < n; ++i)
                CHECK(rel_diff(t[static_cast<size_t>(i)], t_fd[static_cast<size_t>(i)]) < 1e-6);
        }
    }
}

TEST_CASE("noise amplitude scaling") {
    ModelSpec base = make_biofilm(2);
    ModelSpec scaled = scale_noise(base, 0.25);
    Vec u{0.3, 0.2};
    Matrix s0 = noise_coeff(base, u);
    Matrix s1 = noise_coeff(scaled, u);
    CHECK(s1(0, 0) == doctest::Approx(0.25 * s0(0, 0)).epsilon(1e-15));
    // The correction is quadratic in the amplitude.
    Vec t0 = ito_correction(base, u);
    Vec t1 = ito_correction(scaled, u);
    CHECK(t1[0] == doctest::Approx(0.0625 * t0[0]).epsilon(1e-13));
    CHECK(scaled.known_constants->noise_derivative_bound.value() ==
          doctest::Approx(0.25).epsilon(1e-15));
    // Zero amplitude kills the noise entirely.
    ModelSpec off = scale_noise(base, 0.0);
    CHECK(max_abs(noise_coeff(off, u)) == 0.0);
}

TEST_CASE("biofilm model: frozen matrix and exact quadratic identity") {
    ModelSpec bf = make_biofilm(2);
    Matrix a = diffusion_matrix(bf, Vec{0.3, 0.2});
    CHECK(a(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(a(0, 1) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(a(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

    // z^T h''(u) A(u) z = sum_i z_i^2 / u_i, exactly (h''A = diag(1/u_i)).
    for (int n : {2, 3, 5}) {
        ModelSpec model = make_biofilm(n);
        for (uint64_t s = 0; s < 60; ++s) {
            Vec u = interior_point(n, 300 + s, 0.03);
            Vec z = random_direction(n, 300 + s);
            const double lhs = quad_form(z, matmul(entropy_hess(model, u), diffusion_matrix(model, u)), z);
            double rhs = 0.0;
            for (int i = 0; i < n; ++i)
                rhs += z[static_cast<size_t>(i)] * z[static_cast<size_t>(i)] /
                       u[static_cast<size_t>(i)];
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("three-species mixture: exact dissipation identity") {
    // z^T h'' A z = (d2 z1^2/u1 + d1 z2^2/u2 + d0 (z1+z2)^2/u3) / a(u)
    const double triples[][3] = {{1.0, 2.0, 3.0}, {0.5, 0.5, 0.5}, {3.0, 1.0, 0.2}};
    for (const auto& d : triples) {
        ModelSpec ms = make_maxwell_stefan(d[0], d[1], d[2]);
        for (uint64_t s = 0; s < 60; ++s) {
            Vec u = interior_point(2, 400 + s, 0.03);
            Vec z = random_direction(2, 400 + s);
            const double sol = solvent_fraction(u);
            const double a = d[0] * d[1] * u[0] + d[0] * d[2] * u[1] + d[1] * d[2] * sol;
            const double lhs = quad_form(z, matmul(entropy_hess(ms, u), diffusion_matrix(ms, u)), z);
            const double rhs = (d[2] * z[0] * z[0] / u[0] + d[1] * z[1] * z[1] / u[1] +
                                d[0] * (z[0] + z[1]) * (z[0] + z[1]) / sol) /
                               a;
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("shifted decomposition is exact for both built-ins") {
    // z^T h''([u]_d) A(u) z  ==  coercive part in [u]_d  +  z^T R_d(u) z
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);
    ModelSpec bf = make_biofilm(3);
    const double deltas[] = {0.3, 1e-2, 1e-5};

    for (double delta : deltas) {
        for (uint64_t s = 0; s < 40; ++s) {
            {  // mixture
                Vec u = interior_point(2, 500 + s, 0.02);
                Vec z = random_direction(2, 500 + s);
                Vec v = regularize(u, delta);
                const double vsol = solvent_fraction(v);
                const double sol = solvent_fraction(u);
                const double a = 1.0 * 2.0 * u[0] + 1.0 * 3.0 * u[1] + 2.0 * 3.0 * sol;
                const double lhs =
                    quad_form(z, matmul(entropy_hess(ms, v), diffusion_matrix(ms, u)), z);
                const double coercive = (3.0 * z[0] * z[0] / v[0] + 2.0 * z[1] * z[1] / v[1] +
                                         1.0 * (z[0] + z[1]) * (z[0] + z[1]) / vsol) /
                                        a;
                const double rem = quad_form(z, correction_matrix(ms, u, delta), z);
                CHECK(std::abs(lhs - (coercive + rem)) <= 1e-12 * std::max(1.0, std::abs(lhs)));
            }
            {  // biofilm
                Vec u = interior_point(3, 600 + s, 0.02);
                Vec z = random_direction(3, 600 + s);
                Vec v = regularize(u, delta);
                const double lhs =
                    quad_form(z, matmul(entropy_hess(bf, v), diffusion_matrix(bf, u)), z);
                double coercive = 0.0;
                for (int i = 0; i < 3; ++i)
                    coercive += z[static_cast<size_t>(i)] * z[static_cast<size_t>(i)] /
                                v[static_cast<size_t>(i)];
                const double rem = quad_form(z, correction_matrix(bf, u, delta), z);
                CHECK(std::abs(lhs - (coercive + rem)) <= 1e-12 * std::max(1.0, std::abs(lhs)));
            }
        }
    }

    // The remainder vanishes identically at delta = 0.
    CHECK(max_abs(correction_matrix(bf, Vec{0.2, 0.3, 0.1}, 0.0)) == 0.0);
    CHECK(max_abs(correction_matrix(ms, Vec{0.2, 0.3}, 0.0)) <= 1e-15);
}

TEST_CASE("remainder sup-norm decays monotonically in delta") {
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);
    ModelSpec bf = make_biofilm(2);
    const double deltas[] = {1e-1, 1e-2, 1e-3, 1e-4};
    for (const ModelSpec* model : {&ms, &bf}) {
        double prev = -1.0;
        for (double delta : deltas) {
            double sup = 0.0;
            for (uint64_t s = 0; s < 50; ++s) {
                Vec u = interior_point(2, 700 + s, 1e-4);
                sup = std::max(sup, max_abs(correction_matrix(*model, u, delta)));
            }
            if (prev >= 0.0) CHECK(sup < prev);
            prev = sup;
        }
    }
}

TEST_CASE("declared coercivity constant is attained nowhere below") {
    // Mixture: z^T h'' A z >= c_h * sum z_i^2 / u_i with
    // c_h = min(d1,d2)/max pair; check non-negativity of the gap on a
    // broad sample including near-face points.
    ModelSpec ms = make_maxwell_stefan(1.0, 2.0, 3.0);
    const KnownConstants kc = ms.known_constants.value();
    CHECK(kc.c_h == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(kc.c_h_reference.value() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(kc.m == 0.5);

    for (uint64_t s = 0; s < 200; ++s) {
        const double margin = (s % 2 == 0) ? 1e-6 : 0.02;
        Vec u = interior_point(2, 800 + s, margin);
        Vec z = random_direction(2, 800 + s);
        const double lhs = quad_form(z, matmul(entropy_hess(ms, u), diffusion_matrix(ms, u)), z);
        const double weighted = z[0] * z[0] / u[0] + z[1] * z[1] / u[1];
        CHECK(lhs - kc.c_h * weighted >= -1e-10 * weighted);
    }

    CHECK(make_biofilm(4).known_constants->c_h == 1.0);
}

TEST_CASE("builtin registry") {
    auto none = [](const std::string&) { return std::nan(""); };
    CHECK(make_builtin("maxwell-stefan-3", none).name == "maxwell-stefan-3");
    CHECK(make_builtin("biofilm-n", none).n == 2);
    CHECK(make_builtin("negated-a-n", none).name == "negated-a-2");

    auto params = [](const std::string& key) {
        if (key == "n") return 4.0;
        if (key == "d0") return 2.0;
        return std::nan("");
    };
    CHECK(make_builtin("biofilm-n", params).n == 4);
    ModelSpec ms = make_builtin("maxwell-stefan-3", params);
    // d = (2, 2, 3): equal d0 = d1 kills the (0,1) coupling entry.
    CHECK(diffusion_matrix(ms, Vec{0.2, 0.2})(0, 1) == 0.0);
    CHECK_THROWS_AS((void)make_builtin("no-such-model", none), std::invalid_argument);

    // The broken fixture really is broken: negative quadratic form.
    ModelSpec neg = make_negated_diffusion(2);
    Vec u{0.3, 0.3};
    Vec z{1.0, 0.0};
    CHECK(quad_form(z, matmul(entropy_hess(neg, u), diffusion_matrix(neg, u)), z) < 0.0);
    CHECK(!neg.known_constants.has_value());
    CHECK_THROWS_AS((void)correction_matrix(neg, u, 0.1), std::logic_error);
}

TEST_CASE("coefficient evaluation clamps, derivative maps do not") {
    ModelSpec bf = make_biofilm(2);
    // Slightly outside states are projected before evaluation.
    Vec out{-0.05, 0.55};
    Matrix a = diffusion_matrix(bf, out);
    CHECK(a(0, 0) == doctest::Approx(1.0).epsilon(1e-12));  // u1 clamps to 0
    Matrix sig = noise_coeff(bf, out);
    CHECK(sig(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(entropy_value(bf, Vec{1.4, -0.2})));
}
