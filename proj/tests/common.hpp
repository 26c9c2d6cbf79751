#pragma once

#include <cmath>
#include <random>

#include "sdmk/mesh.hpp"
#include "sdmk/sphere.hpp"

namespace sdmk::testing {

/// Regular tetrahedron with unit edges, outward orientation.
inline SurfaceMesh regular_tetrahedron() {
    const double s = 1.0 / std::sqrt(8.0);
    std::vector<Vec3> v{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
    std::vector<Triangle> t{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    return SurfaceMesh(std::move(v), std::move(t));
}

/// Octahedron inscribed in the unit sphere, outward orientation.
inline SurfaceMesh unit_octahedron() {
    std::vector<Vec3> v{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<Triangle> t{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
                            {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
    return SurfaceMesh(std::move(v), std::move(t));
}

/// Rotation about the axis (1, 2, 2)/3 by 0.7 rad (Rodrigues).
inline Mat3 fixed_rotation() {
    const Vec3 k{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
    const double c = std::cos(0.7), s = std::sin(0.7);
    Mat3 r{};
    const Mat3 kx{{{0, -k[2], k[1]}, {k[2], 0, -k[0]}, {-k[1], k[0], 0}}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double kk = 0.0;
            for (int m = 0; m < 3; ++m) kk += kx[i][m] * kx[m][j];
            r[i][j] = (i == j ? 1.0 : 0.0) + s * kx[i][j] + (1 - c) * kk;
        }
    return r;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
struct GaussRule {
    std::vector<double> x, w;
};

inline GaussRule gauss_legendre(int n) {
    GaussRule g{std::vector<double>(n), std::vector<double>(n)};
    for (int i = 0; i < n; ++i) {
        double z = std::cos(sphere::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        g.x[i] = z;
        g.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return g;
}

// Composite product rule for the integral of f(r, phi) sin(r) over a box.
template <class F>
inline double integrate_box(F f, double r0, double r1, double p0, double p1, int panels, const GaussRule& g) {
    double sum = 0.0;
    const double hr = (r1 - r0) / panels, hp = (p1 - p0) / panels;
    for (int a = 0; a < panels; ++a)
        for (int b = 0; b < panels; ++b)
            for (std::size_t i = 0; i < g.x.size(); ++i)
                for (std::size_t j = 0; j < g.x.size(); ++j) {
                    const double r = r0 + hr * (a + 0.5 * (g.x[i] + 1.0));
                    const double p = p0 + hp * (b + 0.5 * (g.x[j] + 1.0));
                    sum += 0.25 * hr * hp * g.w[i] * g.w[j] * f(r, p) * std::sin(r);
                }
    return sum;
}

// Integral of the exact transport density over the sphere.
inline double quadrature_w1(int panels) {
    const auto g = gauss_legendre(10);
    auto mu = [](double r, double phi) { return sphere::exact_tdens(sphere::PolarPoint{r, phi, false}); };
    // Split at the branch boundaries so each box integrand is smooth.
    const double cuts[] = {sphere::pi / 6, sphere::pi / 3, 2 * sphere::pi / 3, 5 * sphere::pi / 6};
    double total = 0.0;
    for (int k = 0; k < 3; ++k) total += integrate_box(mu, cuts[k], cuts[k + 1], 0.0, sphere::pi / 2, panels, g);
    return total;
}

}  // namespace sdmk::testing
