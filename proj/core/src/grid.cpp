#include "crossdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace crossdiff {

Grid1D::Grid1D(int n, double len) : nodes(n), length(len) {
    if (n < 2) throw std::invalid_argument("Grid1D: need at least two nodes");
    if (!(len > 0.0)) throw std::invalid_argument("Grid1D: length must be positive");
}

Field divergence_form_flux(const ModelSpec& model, const Grid1D& grid, const Field& u,
                           FaceAverage avg) {
    if (u.components() != model.n)
        throw std::invalid_argument("divergence_form_flux: component count mismatch");
    if (u.nodes() != grid.nodes)
        throw std::invalid_argument("divergence_form_flux: node count mismatch");

    const int n = model.n;
    const int nx = grid.nodes;
    const double dx = grid.dx();

    Field out(n, nx, 0.0);
    Vec flux_prev(static_cast<size_t>(n), 0.0);  // zero boundary face
    Matrix a_left = diffusion_matrix(model, u.node(0));

    for (int j = 0; j < nx - 1; ++j) {
        const Matrix a_right = diffusion_matrix(model, u.node(j + 1));
        Matrix a_face(n, n);
        if (avg == FaceAverage::Arithmetic) {
            a_face = 0.5 * (a_left + a_right);
        } else {
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) {
                    const double p = a_left(r, c), q = a_right(r, c);
                    a_face(r, c) = (p + q != 0.0) ? 2.0 * p * q / (p + q) : 0.0;
                }
        }
        Vec du(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) du[i] = (u.at(i, j + 1) - u.at(i, j)) / dx;
        const Vec flux = matvec(a_face, du);

        const double inv_w = 1.0 / grid.weight(j);
        for (int i = 0; i < n; ++i) out.at(i, j) = (flux[i] - flux_prev[i]) * inv_w;
        flux_prev = flux;
        a_left = a_right;
    }
    const double inv_w = 1.0 / grid.weight(nx - 1);
    for (int i = 0; i < n; ++i) out.at(i, nx - 1) = (0.0 - flux_prev[i]) * inv_w;
    return out;
}

double integrate(std::span<const double> values, const Grid1D& grid) {
    if (static_cast<int>(values.size()) != grid.nodes)
        throw std::invalid_argument("integrate: node count mismatch");
    double s = 0.0;
    for (int j = 0; j < grid.nodes; ++j) s += grid.weight(j) * values[j];
    return s;
}

double integrate_entropy(const ModelSpec& model, const Grid1D& grid, const Field& u) {
    double s = 0.0;
    for (int j = 0; j < grid.nodes; ++j)
        s += grid.weight(j) * entropy_value(model, u.node(j));
    return s;
}

Vec species_mass(const Grid1D& grid, const Field& u) {
    Vec mass(static_cast<size_t>(u.components()), 0.0);
    for (int j = 0; j < grid.nodes; ++j) {
        const double w = grid.weight(j);
        for (int i = 0; i < u.components(); ++i) mass[i] += w * u.at(i, j);
    }
    return mass;
}

double dissipation_seminorm(const Grid1D& grid, const Field& u, double m) {
    if (!(m >= 0.0 && m < 1.0))
        throw std::invalid_argument("dissipation_seminorm: m must lie in [0,1)");
    const double p = 1.0 - m;
    const double dx = grid.dx();
    double s = 0.0;
    for (int i = 0; i < u.components(); ++i) {
        double prev = std::pow(std::max(u.at(i, 0), 0.0), p);
        for (int j = 1; j < u.nodes(); ++j) {
            const double cur = std::pow(std::max(u.at(i, j), 0.0), p);
            const double d = cur - prev;
            s += d * d / dx;
            prev = cur;
        }
    }
    return s;
}

double max_simplex_violation(const Field& u) {
    double worst = 0.0;
    for (int j = 0; j < u.nodes(); ++j)
        worst = std::max(worst, simplex_violation(u.node(j)));
    return worst;
}

ConcentrationField to_concentration(const ModelSpec& model, const EntropyField& w) {
    ConcentrationField u(w.components(), w.nodes());
    for (int j = 0; j < w.nodes(); ++j) {
        const Vec uj = inv_entropy_grad(model, w.node(j));
        std::copy(uj.begin(), uj.end(), u.node(j).begin());
    }
    return u;
}

EntropyField to_entropy_variables(const ModelSpec& model, const ConcentrationField& u) {
    EntropyField w(u.components(), u.nodes());
    for (int j = 0; j < u.nodes(); ++j) {
        const Vec wj = entropy_grad(model, u.node(j));
        std::copy(wj.begin(), wj.end(), w.node(j).begin());
    }
    return w;
}

Profile profile_from_name(const std::string& name) {
    if (name == "barycenter") return Profile::Barycenter;
    if (name == "step") return Profile::Step;
    if (name == "smooth-bump") return Profile::SmoothBump;
    throw std::invalid_argument("unknown initial profile: " + name);
}

ConcentrationField make_profile(Profile profile, int n, const Grid1D& grid) {
    ConcentrationField u(n, grid.nodes);
    const double bary = 1.0 / static_cast<double>(n + 1);
    switch (profile) {
        case Profile::Barycenter:
            for (int j = 0; j < grid.nodes; ++j)
                for (int i = 0; i < n; ++i) u.at(i, j) = bary;
            break;
        case Profile::Step: {
            Vec left(static_cast<size_t>(n));
            if (n == 1) {
                left[0] = 0.9;
            } else {
                left[0] = 0.9;
                for (int i = 1; i < n; ++i) left[i] = 0.05 / static_cast<double>(n - 1);
            }
            Vec right(left.rbegin(), left.rend());
            if (n == 1) right[0] = 0.05;
            for (int j = 0; j < grid.nodes; ++j) {
                const bool is_left = grid.x(j) < 0.5 * grid.length;
                for (int i = 0; i < n; ++i) u.at(i, j) = is_left ? left[i] : right[i];
            }
            break;
        }
        case Profile::SmoothBump:
            // bary * (1 + 0.25 * (+/-) cos(pi x / L)); signs alternate so the
            // perturbation nearly cancels in the sum and the state stays
            // well inside the simplex. Zero slope at both walls.
            for (int j = 0; j < grid.nodes; ++j) {
                const double c = std::cos(M_PI * grid.x(j) / grid.length);
                for (int i = 0; i < n; ++i) {
                    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
                    u.at(i, j) = bary * (1.0 + 0.25 * sign * c);
                }
            }
            break;
    }
    return u;
}

void write_snapshot_csv(std::ostream& out, const Grid1D& grid, const Field& u, double t) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (int j = 0; j < grid.nodes; ++j) {
        out << fmt(t) << ',' << fmt(grid.x(j));
        for (int i = 0; i < u.components(); ++i) out << ',' << fmt(u.at(i, j));
        out << '\n';
    }
}

ConcentrationField read_snapshot_csv(std::istream& in, int n, const Grid1D& grid) {
    ConcentrationField u(n, grid.nodes);
    std::vector<bool> seen(static_cast<size_t>(grid.nodes), false);
    std::string line;
    int filled = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        // Skip a header row of column names.
        if (line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        // Accept t,x,u... (n+2 columns) or x,u... (n+1 columns).
        size_t xcol;
        if (static_cast<int>(cells.size()) == n + 2) xcol = 1;
        else if (static_cast<int>(cells.size()) == n + 1) xcol = 0;
        else throw std::runtime_error("snapshot csv: unexpected column count");
        const double x = cells[xcol];
        const double jr = x / grid.dx();
        const int j = static_cast<int>(std::lround(jr));
        if (j < 0 || j >= grid.nodes || std::abs(jr - j) > 1e-9)
            throw std::runtime_error("snapshot csv: node position off-grid");
        for (int i = 0; i < n; ++i) u.at(i, j) = cells[xcol + 1 + i];
        if (!seen[j]) { seen[j] = true; ++filled; }
    }
    if (filled != grid.nodes)
        throw std::runtime_error("snapshot csv: missing nodes for the requested grid");
    return u;
}

}  // namespace crossdiff
