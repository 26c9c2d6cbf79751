#pragma once

#include <array>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sdmk/errors.hpp"
#include "sdmk/refinement.hpp"
#include "sdmk/sparse.hpp"

namespace sdmk {

/// Piecewise-constant field on the coarse cells (transport density).
struct P0Field {
    std::vector<double> values;
};

/// Continuous piecewise-linear field on the fine vertices (potential).
struct P1Field {
    std::vector<double> values;
};

/// In-plane gradients of the three barycentric coordinates of a flat triangle.
/// Gradient k equals n x e_k / (2 area), where e_k is the edge opposite corner k
/// traversed in the triangle's orientation.
inline std::array<Vec3, 3> local_p1_gradients(const std::array<Vec3, 3>& p) {
    const Vec3 n = cross(p[1] - p[0], p[2] - p[0]);
    const double twice_area = norm(n);
    if (!(0.5 * twice_area >= kDegenerateArea)) throw DegenerateCellError("degenerate triangle");
    const Vec3 unit = (1.0 / twice_area) * n;
    const double s = 1.0 / twice_area;
    return {s * cross(unit, p[2] - p[1]), s * cross(unit, p[0] - p[2]), s * cross(unit, p[1] - p[0])};
}

/// Element matrix mu * area * <g_i, g_j> of one flat triangle.
inline std::array<std::array<double, 3>, 3> local_stiffness(const std::array<Vec3, 3>& p, double mu) {
    const auto g = local_p1_gradients(p);
    const double area = triangle_area(p[0], p[1], p[2]);
    std::array<std::array<double, 3>, 3> k{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = mu * area * dot(g[i], g[j]);
    return k;
}

/// Per-cell geometry of a nested pair, precomputed once: child gradients and
/// areas, coarse areas, vertex weights and the stiffness sparsity pattern.
class GradientCache {
public:
    explicit GradientCache(const NestedMeshPair& pair) : pair_(&pair) {
        const auto& fine = pair.fine;
        const auto nf = fine.num_cells();
        grads_.resize(nf);
        fine_area_.resize(nf);
        for (Index t = 0; t < nf; ++t) {
            const auto p = fine.corners(t);
            try {
                grads_[t] = local_p1_gradients(p);
            } catch (const DegenerateCellError&) {
                throw DegenerateCellError("fine cell " + std::to_string(t) + " is degenerate");
            }
            fine_area_[t] = triangle_area(p[0], p[1], p[2]);
        }

        coarse_area_.assign(pair.coarse.num_cells(), 0.0);
        for (Index r = 0; r < pair.children.size(); ++r)
            for (Index t : pair.children[r]) coarse_area_[r] += fine_area_[t];

        weights_.assign(fine.num_vertices(), 0.0);
        for (Index t = 0; t < nf; ++t)
            for (Index v : fine.triangles()[t]) weights_[v] += fine_area_[t] / 3.0;

        build_pattern();
    }

    const NestedMeshPair& pair() const { return *pair_; }
    std::size_t num_fine_vertices() const { return weights_.size(); }
    std::size_t num_fine_cells() const { return grads_.size(); }
    std::size_t num_coarse_cells() const { return coarse_area_.size(); }

    const std::array<Vec3, 3>& gradients(Index fine_cell) const { return grads_[fine_cell]; }
    double fine_area(Index fine_cell) const { return fine_area_[fine_cell]; }
    double coarse_area(Index coarse_cell) const { return coarse_area_[coarse_cell]; }
    std::span<const double> coarse_areas() const { return coarse_area_; }
    std::span<const double> fine_areas() const { return fine_area_; }

    /// w_i = integral of the fine hat function i.
    std::span<const double> weights() const { return weights_; }

    /// Constant gradient of u on a fine cell.
    Vec3 gradient(std::span<const double> u, Index fine_cell) const {
        const auto& t = pair_->fine.triangles()[fine_cell];
        const auto& g = grads_[fine_cell];
        return u[t[0]] * g[0] + u[t[1]] * g[1] + u[t[2]] * g[2];
    }

    const SparseSymMatrix& pattern() const { return pattern_; }
    const std::array<std::size_t, 9>& slots(Index fine_cell) const { return slots_[fine_cell]; }

private:
    void build_pattern() {
        const auto& fine = pair_->fine;
        const auto n = fine.num_vertices();
        std::vector<std::vector<std::size_t>> adj(n);
        for (Index v = 0; v < n; ++v) adj[v].push_back(v);
        for (const auto& e : fine.edges()) {
            adj[e.vertices[0]].push_back(e.vertices[1]);
            adj[e.vertices[1]].push_back(e.vertices[0]);
        }
        std::vector<std::size_t> rp{0};
        std::vector<std::size_t> cols;
        for (auto& row : adj) {
            std::sort(row.begin(), row.end());
            row.erase(std::unique(row.begin(), row.end()), row.end());
            cols.insert(cols.end(), row.begin(), row.end());
            rp.push_back(cols.size());
        }
        std::vector<double> vals(cols.size(), 0.0);
        pattern_ = SparseSymMatrix(n, std::move(rp), std::move(cols), std::move(vals));

        slots_.resize(fine.num_cells());
        for (Index t = 0; t < fine.num_cells(); ++t) {
            const auto& tri = fine.triangles()[t];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) slots_[t][3 * i + j] = pattern_.find(tri[i], tri[j]);
        }
    }

    const NestedMeshPair* pair_;
    std::vector<std::array<Vec3, 3>> grads_;
    std::vector<double> fine_area_;
    std::vector<double> coarse_area_;
    std::vector<double> weights_;
    SparseSymMatrix pattern_;
    std::vector<std::array<std::size_t, 9>> slots_;
};

/// A_ij = sum over fine cells T of mu(parent(T)) area(T) <g_i, g_j>, written
/// into `out` (which takes the cached pattern).
inline void assemble_stiffness(const GradientCache& cache, const P0Field& mu, SparseSymMatrix& out) {
    const auto& pair = cache.pair();
    if (mu.values.size() != cache.num_coarse_cells())
        throw std::invalid_argument("density size does not match the coarse mesh");
    for (Index r = 0; r < mu.values.size(); ++r)
        if (!(mu.values[r] >= 0.0))
            throw DomainError("negative or non-finite density on coarse cell " + std::to_string(r));

    if (out.size() != cache.pattern().size() || out.nnz() != cache.pattern().nnz()) out = cache.pattern();
    auto vals = out.values();
    std::fill(vals.begin(), vals.end(), 0.0);
    for (Index t = 0; t < cache.num_fine_cells(); ++t) {
        const double coef = mu.values[pair.parent[t]] * cache.fine_area(t);
        const auto& g = cache.gradients(t);
        const auto& slot = cache.slots(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) vals[slot[3 * i + j]] += coef * dot(g[i], g[j]);
    }
}

inline SparseSymMatrix assemble_stiffness(const GradientCache& cache, const P0Field& mu) {
    SparseSymMatrix a;
    assemble_stiffness(cache, mu, a);
    return a;
}

/// Load vector of a fine-cell-constant source, then shifted along the vertex
/// weights so that its entries sum to zero (compatibility with the constant
/// kernel of the stiffness matrix).
inline std::vector<double> assemble_rhs(const GradientCache& cache, std::span<const double> fine_source) {
    const auto& fine = cache.pair().fine;
    if (fine_source.size() != fine.num_cells())
        throw std::invalid_argument("source size does not match the fine mesh");
    std::vector<double> b(fine.num_vertices(), 0.0);
    for (Index t = 0; t < fine.num_cells(); ++t) {
        if (fine_source[t] == 0.0) continue;
        const double share = fine_source[t] * cache.fine_area(t) / 3.0;
        for (Index v : fine.triangles()[t]) b[v] += share;
    }
    const auto w = cache.weights();
    const double shift = std::accumulate(b.begin(), b.end(), 0.0) / std::accumulate(w.begin(), w.end(), 0.0);
    for (Index i = 0; i < b.size(); ++i) b[i] -= shift * w[i];
    return b;
}

/// Arithmetic mean of the four child gradients of coarse cell r.
inline Vec3 cell_gradient(const GradientCache& cache, std::span<const double> u, Index r) {
    Vec3 g{};
    for (Index t : cache.pair().children[r]) g += cache.gradient(u, t);
    return 0.25 * g;
}

inline Vec3 cell_gradient(const GradientCache& cache, const P1Field& u, Index r) {
    return cell_gradient(cache, std::span<const double>(u.values), r);
}

/// Discrete energy-plus-mass functional
///   1/2 sum_T mu(parent T) area(T) |grad u|_T|^2 + 1/2 sum_r mu_r area_r.
inline double lyapunov(const GradientCache& cache, const P0Field& mu, const P1Field& u) {
    const auto& pair = cache.pair();
    double energy = 0.0;
    for (Index t = 0; t < cache.num_fine_cells(); ++t) {
        const Vec3 g = cache.gradient(u.values, t);
        energy += mu.values[pair.parent[t]] * cache.fine_area(t) * dot(g, g);
    }
    double mass = 0.0;
    for (Index r = 0; r < cache.num_coarse_cells(); ++r) mass += mu.values[r] * cache.coarse_area(r);
    return 0.5 * energy + 0.5 * mass;
}

}  // namespace sdmk
