#pragma once

#include <array>
#include <vector>

#include "sdmk/mesh.hpp"

namespace sdmk {

enum class Projection { none, unit_sphere_radial };

/// Where a vertex of a refined mesh came from: a parent vertex or the
/// midpoint of a parent edge.
struct VertexOrigin {
    enum class Kind { vertex, edge_midpoint } kind;
    Index index;
};

struct RefinedMesh {
    SurfaceMesh mesh;
    std::vector<std::array<Index, 4>> children;  // parent cell -> child cells
    std::vector<VertexOrigin> vertex_origin;
};

/// Uniform 1-to-4 midpoint refinement. Parent vertices keep their indices;
/// the midpoint of parent edge e becomes vertex V + e. Children of cell c are
/// 4c..4c+3, ordered corner-0, corner-1, corner-2, center.
inline RefinedMesh refine(const SurfaceMesh& mesh, Projection projection = Projection::none) {
    const auto nv = mesh.num_vertices();
    std::vector<Vec3> verts = mesh.vertices();
    verts.reserve(nv + mesh.num_edges());
    std::vector<VertexOrigin> origin;
    origin.reserve(nv + mesh.num_edges());
    for (Index v = 0; v < nv; ++v) origin.push_back({VertexOrigin::Kind::vertex, v});

    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const auto& ev = mesh.edges()[e].vertices;
        Vec3 m = midpoint(mesh.vertices()[ev[0]], mesh.vertices()[ev[1]]);
        if (projection == Projection::unit_sphere_radial) {
            const double len = norm(m);
            if (!(len > 0.0))
                throw ProjectionError("edge " + std::to_string(e) + " midpoint lies at the origin");
            m = (1.0 / len) * m;
        }
        verts.push_back(m);
        origin.push_back({VertexOrigin::Kind::edge_midpoint, e});
    }

    std::vector<Triangle> tris;
    tris.reserve(4 * mesh.num_cells());
    std::vector<std::array<Index, 4>> children;
    children.reserve(mesh.num_cells());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto& t = mesh.triangles()[c];
        const auto& ce = mesh.cell_edges(c);
        const Index m01 = nv + ce[0];
        const Index m12 = nv + ce[1];
        const Index m20 = nv + ce[2];
        const Index first = tris.size();
        tris.push_back({t[0], m01, m20});
        tris.push_back({m01, t[1], m12});
        tris.push_back({m20, m12, t[2]});
        tris.push_back({m01, m12, m20});
        children.push_back({first, first + 1, first + 2, first + 3});
    }
    return {SurfaceMesh(std::move(verts), std::move(tris)), std::move(children), std::move(origin)};
}

/// Coarse mesh carrying the density together with its in-plane refinement
/// carrying the potential.
struct NestedMeshPair {
    SurfaceMesh coarse;
    SurfaceMesh fine;
    std::vector<std::array<Index, 4>> children;
    std::vector<Index> parent;  // fine cell -> coarse cell
    std::vector<VertexOrigin> fine_vertex_origin;
};

inline NestedMeshPair build_nested_pair(const SurfaceMesh& coarse) {
    auto refined = refine(coarse, Projection::none);
    std::vector<Index> parent(refined.mesh.num_cells());
    for (Index c = 0; c < refined.children.size(); ++c)
        for (Index child : refined.children[c]) parent[child] = c;
    return {coarse, std::move(refined.mesh), std::move(refined.children), std::move(parent),
            std::move(refined.vertex_origin)};
}

}  // namespace sdmk
