#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace pellip {

/// Uniform tensor grid in 1 or 2 dimensions. Node (i, j) has index i + nx*j.
struct Grid {
    int dim = 1;
    std::array<int, 2> n{3, 1};
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    static Grid line(int nodes, double a = 0.0, double b = 1.0) {
        Grid g;
        g.dim = 1;
        g.n = {nodes, 1};
        g.lo = {a, 0.0};
        g.hi = {b, 0.0};
        g.validate();
        return g;
    }

    static Grid square(int nodes, double a = 0.0, double b = 1.0) { return rect(nodes, nodes, a, b, a, b); }

    static Grid rect(int nx, int ny, double x0, double x1, double y0, double y1) {
        Grid g;
        g.dim = 2;
        g.n = {nx, ny};
        g.lo = {x0, y0};
        g.hi = {x1, y1};
        g.validate();
        return g;
    }

    void validate() const {
        if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dimension must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (n[a] < 3) throw std::invalid_argument("grid: need at least 3 nodes per axis");
            if (!(hi[a] > lo[a])) throw std::invalid_argument("grid: empty extent");
        }
    }

    double h(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
    int nodes() const { return dim == 1 ? n[0] : n[0] * n[1]; }
    int cells() const { return dim == 1 ? n[0] - 1 : (n[0] - 1) * (n[1] - 1); }
    double cell_volume() const { return dim == 1 ? h(0) : h(0) * h(1); }
    int index(int i, int j = 0) const { return i + n[0] * j; }

    std::array<int, 2> ij(int idx) const { return {idx % n[0], idx / n[0]}; }

    std::array<double, 2> coord(int idx) const {
        const auto [i, j] = ij(idx);
        return {lo[0] + i * h(0), dim == 2 ? lo[1] + j * h(1) : 0.0};
    }

    /// Cell c has lower-left node (ci, cj).
    std::array<int, 2> cell_ij(int c) const {
        const int cx = n[0] - 1;
        return {c % cx, c / cx};
    }

    std::array<double, 2> cell_center(int c) const {
        const auto [ci, cj] = cell_ij(c);
        return {lo[0] + (ci + 0.5) * h(0), dim == 2 ? lo[1] + (cj + 0.5) * h(1) : 0.0};
    }

    bool on_boundary(int idx) const {
        const auto [i, j] = ij(idx);
        if (i == 0 || i == n[0] - 1) return true;
        return dim == 2 && (j == 0 || j == n[1] - 1);
    }

    double distance(int a, int b) const {
        const auto x = coord(a), y = coord(b);
        return std::hypot(x[0] - y[0], x[1] - y[1]);
    }
};

/// Dirichlet node mask. Empty mask: Neumann; full boundary: Dirichlet; otherwise mixed.
struct BoundaryCondition {
    std::vector<bool> dirichlet;

    static BoundaryCondition neumann(const Grid& g) { return {std::vector<bool>(g.nodes(), false)}; }

    static BoundaryCondition full_dirichlet(const Grid& g) {
        BoundaryCondition bc{std::vector<bool>(g.nodes(), false)};
        for (int k = 0; k < g.nodes(); ++k) bc.dirichlet[k] = g.on_boundary(k);
        return bc;
    }

    /// Dirichlet on the x = lo edge only (a single end point in 1D).
    static BoundaryCondition mixed_left_edge(const Grid& g) {
        BoundaryCondition bc{std::vector<bool>(g.nodes(), false)};
        for (int k = 0; k < g.nodes(); ++k) bc.dirichlet[k] = g.ij(k)[0] == 0;
        return bc;
    }

    bool valid_for(const Grid& g) const {
        if (static_cast<int>(dirichlet.size()) != g.nodes()) return false;
        for (int k = 0; k < g.nodes(); ++k)
            if (dirichlet[k] && !g.on_boundary(k)) return false;
        return true;
    }

    bool any() const {
        for (bool b : dirichlet)
            if (b) return true;
        return false;
    }

    /// Free (non-Dirichlet) node indices in increasing order.
    std::vector<int> free_nodes() const {
        std::vector<int> f;
        for (int k = 0; k < static_cast<int>(dirichlet.size()); ++k)
            if (!dirichlet[k]) f.push_back(k);
        return f;
    }
};

}  // namespace pellip
