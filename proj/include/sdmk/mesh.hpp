#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sdmk/errors.hpp"
#include "sdmk/geometry.hpp"

namespace sdmk {

using Index = std::size_t;
using Triangle = std::array<Index, 3>;

inline constexpr double kDegenerateArea = 1e-14;

/// Undirected edge {lo, hi} with lo < hi and the cells that reference it.
struct Edge {
    std::array<Index, 2> vertices;
    std::vector<Index> cells;
};

/// Closed triangulated surface in R^3. Edges are derived on construction and
/// ordered lexicographically by their sorted vertex pair.
class SurfaceMesh {
public:
    SurfaceMesh() = default;

    SurfaceMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        build_edges();
    }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Edge indices of cell c, in the order (v0,v1), (v1,v2), (v2,v0).
    const std::array<Index, 3>& cell_edges(Index c) const { return cell_edges_[c]; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return triangles_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    std::array<Vec3, 3> corners(Index c) const {
        const auto& t = triangles_[c];
        return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
    }

    long euler_characteristic() const {
        return static_cast<long>(num_vertices()) - static_cast<long>(num_edges()) +
               static_cast<long>(num_cells());
    }

private:
    void build_edges() {
        const auto nv = vertices_.size();
        std::vector<std::tuple<Index, Index, Index, int>> half;  // lo, hi, cell, local edge
        half.reserve(3 * triangles_.size());
        for (Index c = 0; c < triangles_.size(); ++c) {
            const auto& t = triangles_[c];
            for (int k = 0; k < 3; ++k) {
                const Index a = t[k];
                const Index b = t[(k + 1) % 3];
                if (a >= nv || b >= nv)
                    throw std::invalid_argument("triangle " + std::to_string(c) +
                                                " references a missing vertex");
                half.emplace_back(std::min(a, b), std::max(a, b), c, k);
            }
        }
        std::sort(half.begin(), half.end());
        cell_edges_.assign(triangles_.size(), {0, 0, 0});
        for (std::size_t i = 0; i < half.size(); ++i) {
            const auto& [lo, hi, c, k] = half[i];
            if (edges_.empty() || edges_.back().vertices != std::array<Index, 2>{lo, hi})
                edges_.push_back(Edge{{lo, hi}, {}});
            edges_.back().cells.push_back(c);
            cell_edges_[c][static_cast<std::size_t>(k)] = edges_.size() - 1;
        }
    }

    std::vector<Vec3> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
    std::vector<std::array<Index, 3>> cell_edges_;
};

struct Violation {
    std::string kind;
    std::vector<Index> indices;
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

/// Checks the closed-surface invariants. An empty report means the mesh is a
/// consistently oriented, non-degenerate, closed genus-0 triangulation.
inline std::vector<Violation> validate(const SurfaceMesh& mesh) {
    std::vector<Violation> report;
    const auto& tris = mesh.triangles();

    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const auto& edge = mesh.edges()[e];
        if (edge.cells.size() == 1) {
            report.push_back({"boundary edge", {edge.vertices[0], edge.vertices[1]}});
        } else if (edge.cells.size() > 2) {
            report.push_back({"non-manifold edge", {edge.vertices[0], edge.vertices[1]}});
        } else {
            // Each cell traverses the edge in some direction; closed oriented
            // surfaces traverse it once each way.
            auto forward = [&](Index c) {
                const auto& t = tris[c];
                for (int k = 0; k < 3; ++k)
                    if (t[k] == edge.vertices[0] && t[(k + 1) % 3] == edge.vertices[1]) return true;
                return false;
            };
            if (forward(edge.cells[0]) == forward(edge.cells[1]))
                report.push_back({"orientation mismatch", {edge.cells[0], edge.cells[1]}});
        }
    }

    for (Index c = 0; c < tris.size(); ++c) {
        const auto& t = tris[c];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            report.push_back({"repeated vertex", {c}});
            continue;
        }
        const auto p = mesh.corners(c);
        if (triangle_area(p[0], p[1], p[2]) <= kDegenerateArea)
            report.push_back({"degenerate triangle", {c}});
    }

    if (mesh.euler_characteristic() != 2)
        report.push_back({"euler characteristic", {}});
    return report;
}

struct TriangleGeometry {
    double area = 0.0;
    Vec3 unit_normal{};
    Mat3 projection_tensor{};
    double h = 0.0;  // longest edge
    double inradius = 0.0;
    Vec3 barycenter{};
};

inline TriangleGeometry triangle_geometry(const std::array<Vec3, 3>& p) {
    const Vec3 n = cross(p[1] - p[0], p[2] - p[0]);
    const double twice_area = norm(n);
    if (!(0.5 * twice_area >= kDegenerateArea))
        throw DegenerateCellError("degenerate triangle: area " + std::to_string(0.5 * twice_area));

    TriangleGeometry g;
    g.area = 0.5 * twice_area;
    g.unit_normal = (1.0 / twice_area) * n;
    g.projection_tensor = tangent_projector(g.unit_normal);
    const double l0 = norm(p[1] - p[0]);
    const double l1 = norm(p[2] - p[1]);
    const double l2 = norm(p[0] - p[2]);
    g.h = std::max({l0, l1, l2});
    g.inradius = 2.0 * g.area / (l0 + l1 + l2);
    g.barycenter = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
    return g;
}

inline TriangleGeometry triangle_geometry(const SurfaceMesh& mesh, Index cell) {
    if (cell >= mesh.num_cells()) throw std::out_of_range("cell index out of range");
    try {
        return triangle_geometry(mesh.corners(cell));
    } catch (const DegenerateCellError& e) {
        throw DegenerateCellError("cell " + std::to_string(cell) + ": " + e.what());
    }
}

struct MeshQuality {
    double h = 0.0;
    double inradius_min = 0.0;
    double shape_regularity = 0.0;  // min over cells of inradius / h_K
};

inline MeshQuality mesh_quality(const SurfaceMesh& mesh) {
    MeshQuality q;
    q.inradius_min = std::numeric_limits<double>::infinity();
    q.shape_regularity = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto g = triangle_geometry(mesh, c);
        q.h = std::max(q.h, g.h);
        q.inradius_min = std::min(q.inradius_min, g.inradius);
        q.shape_regularity = std::min(q.shape_regularity, g.inradius / g.h);
    }
    return q;
}

inline double total_area(const SurfaceMesh& mesh) {
    double a = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto p = mesh.corners(c);
        a += triangle_area(p[0], p[1], p[2]);
    }
    return a;
}

}  // namespace sdmk
