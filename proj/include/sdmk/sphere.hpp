#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sdmk/errors.hpp"
#include "sdmk/refinement.hpp"

// Unit-sphere benchmark: a unit mass on the band pi/6 < r < pi/3 of the
// quarter sector 0 < phi < pi/2 is moved rigidly to the band
// 2pi/3 < r < 5pi/6, with r the geodesic distance from the north pole.
namespace sdmk::sphere {

using std::numbers::pi;

struct PolarPoint {
    double r = 0.0;    // colatitude in [0, pi]
    double phi = 0.0;  // longitude in [0, 2pi); 0 at the poles
    bool pole = false;
};

struct TestCaseSpec {
    std::array<double, 4> band_radii{pi / 6, pi / 3, 2 * pi / 3, 5 * pi / 6};
    std::array<double, 2> sector{0.0, pi / 2};
    double density_value = 1.0;
};

inline constexpr TestCaseSpec kTestCase{};

/// Latitude-longitude triangulation with pole fans. Latitude circles sit at
/// r = j*pi/n_r and meridians at phi = 2*pi*i/n_phi, so the support
/// boundaries are unions of mesh edges.
inline SurfaceMesh sphere_aligned_mesh(int n_r = 12, int n_phi = 16) {
    if (n_r < 12 || n_r % 12 != 0)
        throw ConfigError("n_r must be a positive multiple of 12, got " + std::to_string(n_r));
    if (n_phi < 4 || n_phi % 4 != 0)
        throw ConfigError("n_phi must be a positive multiple of 4, got " + std::to_string(n_phi));

    const auto rings = static_cast<Index>(n_r - 1);
    const auto per_ring = static_cast<Index>(n_phi);
    std::vector<Vec3> verts;
    verts.reserve(2 + rings * per_ring);
    verts.push_back({0.0, 0.0, 1.0});
    for (Index j = 1; j <= rings; ++j) {
        const double r = pi * static_cast<double>(j) / n_r;
        for (Index i = 0; i < per_ring; ++i) {
            const double phi = 2 * pi * static_cast<double>(i) / n_phi;
            verts.push_back({std::sin(r) * std::cos(phi), std::sin(r) * std::sin(phi), std::cos(r)});
        }
    }
    verts.push_back({0.0, 0.0, -1.0});
    const Index south = verts.size() - 1;

    auto ring = [&](Index j, Index i) { return 1 + (j - 1) * per_ring + i % per_ring; };

    std::vector<Triangle> tris;
    for (Index i = 0; i < per_ring; ++i) tris.push_back({0, ring(1, i), ring(1, i + 1)});
    for (Index j = 1; j < rings; ++j) {
        for (Index i = 0; i < per_ring; ++i) {
            const Index a = ring(j, i), b = ring(j, i + 1);
            const Index c = ring(j + 1, i + 1), d = ring(j + 1, i);
            tris.push_back({a, d, c});
            tris.push_back({a, c, b});
        }
    }
    for (Index i = 0; i < per_ring; ++i) tris.push_back({south, ring(rings, i + 1), ring(rings, i)});
    return SurfaceMesh(std::move(verts), std::move(tris));
}

/// Base mesh refined `level` times with radial projection onto the sphere.
inline SurfaceMesh sphere_level_mesh(int level, int n_r = 12, int n_phi = 16) {
    auto mesh = sphere_aligned_mesh(n_r, n_phi);
    for (int k = 0; k < level; ++k) mesh = refine(mesh, Projection::unit_sphere_radial).mesh;
    return mesh;
}

inline PolarPoint to_polar(const Vec3& x) {
    const double len = norm(x);
    if (!(len > 0.0)) throw DomainError("to_polar: zero vector");
    const Vec3 u = (1.0 / len) * x;
    PolarPoint p;
    p.r = std::acos(std::clamp(u[2], -1.0, 1.0));
    if (std::sin(p.r) < 1e-12) {
        p.pole = true;
        return p;
    }
    p.phi = std::atan2(u[1], u[0]);
    if (p.phi < 0.0) p.phi += 2 * pi;
    if (p.phi >= 2 * pi) p.phi = 0.0;
    return p;
}

inline Vec3 from_polar(double r, double phi) {
    return {std::sin(r) * std::cos(phi), std::sin(r) * std::sin(phi), std::cos(r)};
}

/// f+ - f-; boundary points return 0.
inline double source_density(const PolarPoint& p) {
    const auto& b = kTestCase.band_radii;
    if (p.pole || !(p.phi > kTestCase.sector[0] && p.phi < kTestCase.sector[1])) return 0.0;
    if (p.r > b[0] && p.r < b[1]) return kTestCase.density_value;
    if (p.r > b[2] && p.r < b[3]) return -kTestCase.density_value;
    return 0.0;
}

namespace detail {
inline bool in_transport_sector(const PolarPoint& p) {
    const auto& b = kTestCase.band_radii;
    return !p.pole && p.phi >= kTestCase.sector[0] && p.phi <= kTestCase.sector[1] &&
           p.r >= b[0] && p.r <= b[3];
}
}  // namespace detail

/// Exact transport density. The sector is taken closed so meridian points
/// carry the one-sided limit; the value vanishes on the outer band circles.
inline double exact_tdens(const PolarPoint& p) {
    if (!detail::in_transport_sector(p)) return 0.0;
    const double c6 = std::cos(pi / 6);
    const double s = std::sin(p.r);
    if (p.r < pi / 3) return (c6 - std::cos(p.r)) / s;
    if (p.r <= 2 * pi / 3) return (c6 - std::cos(pi / 3)) / s;
    return (c6 + std::cos(p.r)) / s;
}

inline double exact_potential(const PolarPoint& p) { return -p.r; }

/// Unit tangent along the meridian in the direction of increasing r.
inline Vec3 meridian_direction(const PolarPoint& p) {
    return {std::cos(p.r) * std::cos(p.phi), std::cos(p.r) * std::sin(p.phi), -std::sin(p.r)};
}

inline Vec3 exact_velocity(const Vec3& x) {
    const auto p = to_polar(x);
    const double mu = exact_tdens(p);
    if (mu == 0.0) return {0.0, 0.0, 0.0};
    return mu * meridian_direction(p);
}

inline constexpr double exact_w1() { return 0.876739625901484; }

inline double source_mass() { return (pi / 2) * (std::cos(pi / 6) - std::cos(pi / 3)); }

/// f+ - f- per fine cell, classified by the polar coordinates of the barycenter.
inline std::vector<double> classify_source(const SurfaceMesh& mesh) {
    std::vector<double> s(mesh.num_cells());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto p = mesh.corners(c);
        s[c] = source_density(to_polar((1.0 / 3.0) * (p[0] + p[1] + p[2])));
    }
    return s;
}

}  // namespace sdmk::sphere
