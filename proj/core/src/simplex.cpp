#include "crossdiff/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crossdiff {

double solvent_fraction(std::span<const double> u) {
    double s = 0.0;
    for (double v : u) s += v;
    return 1.0 - s;
}

bool in_closed_simplex(std::span<const double> u, double tol) {
    double s = 0.0;
    for (double v : u) {
        if (v < -tol) return false;
        s += v;
    }
    return s <= 1.0 + tol;
}

double simplex_violation(std::span<const double> u) {
    double worst = 0.0;
    double s = 0.0;
    for (double v : u) {
        worst = std::max(worst, -v);
        s += v;
    }
    return std::max(worst, s - 1.0);
}

Vec project_to_simplex(std::span<const double> u) {
    Vec clipped(u.size());
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        clipped[i] = std::max(u[i], 0.0);
        s += clipped[i];
    }
    if (s <= 1.0) return clipped;

    // The sum constraint is active: project onto {v >= 0, sum(v) = 1}
    // with the standard sort-and-threshold rule v_i = max(u_i - theta, 0).
    Vec sorted(u.begin(), u.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    int active = 0;
    for (size_t k = 0; k < sorted.size(); ++k) {
        cum += sorted[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (t < sorted[k]) {
            theta = t;
            active = static_cast<int>(k + 1);
        }
    }
    (void)active;
    Vec out(u.size());
    for (size_t i = 0; i < u.size(); ++i) out[i] = std::max(u[i] - theta, 0.0);
    return out;
}

Vec regularize(std::span<const double> u, double delta) {
    if (!(delta > 0.0))
        throw std::invalid_argument("regularize: delta must be positive");
    if (!in_closed_simplex(u, 1e-12))
        throw std::invalid_argument("regularize: state outside the closed simplex");
    const double n = static_cast<double>(u.size());
    Vec out(u.size());
    for (size_t i = 0; i < u.size(); ++i)
        out[i] = (u[i] + delta / n) / (1.0 + delta);
    return out;
}

double regularized_ratio(double ui, double delta, int n) {
    if (delta == 0.0) return 1.0;
    return ui * (1.0 + delta) / (ui + delta / static_cast<double>(n));
}

}  // namespace crossdiff
