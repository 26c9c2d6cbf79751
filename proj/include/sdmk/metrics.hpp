#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdmk/errors.hpp"
#include "sdmk/mesh.hpp"
#include "sdmk/sphere.hpp"

namespace sdmk {

struct ErrorRecord {
    int level = 0;
    double h = 0.0;
    double err_bp = 0.0;
    double err_w1 = 0.0;
    double var_final = 0.0;
    std::size_t steps = 0;
    double wall_time = 0.0;
    double w1_estimate = 0.0;
    bool converged = false;
};

struct RateEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
    std::size_t points_used = 0;
    std::vector<std::size_t> excluded;  // indices of records with err <= 0
};

using VelocityOracle = std::function<Vec3(const Vec3&)>;

/// Relative L1 Beckmann error. The numerator is the midpoint rule on the flat
/// cells with the exact field sampled at the radially projected barycenter.
inline double err_bp(const SurfaceMesh& coarse, std::span<const Vec3> v_h, const VelocityOracle& exact,
                     double exact_l1_norm = sphere::exact_w1()) {
    if (v_h.size() != coarse.num_cells()) throw std::invalid_argument("velocity size mismatch");
    double num = 0.0;
    for (Index r = 0; r < coarse.num_cells(); ++r) {
        const auto p = coarse.corners(r);
        const Vec3 bary = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
        const Vec3 on_sphere = (1.0 / norm(bary)) * bary;
        num += triangle_area(p[0], p[1], p[2]) * norm(v_h[r] - exact(on_sphere));
    }
    return num / exact_l1_norm;
}

inline double err_w1(double w1_estimate, double exact = sphere::exact_w1()) {
    return std::abs(w1_estimate - exact) / exact;
}

/// Least-squares slope of log(err) against log(h).
inline RateEstimate convergence_rate(std::span<const double> h, std::span<const double> err) {
    if (h.size() != err.size()) throw std::invalid_argument("convergence_rate: size mismatch");
    RateEstimate est;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(err[i] > 0.0) || !(h[i] > 0.0)) {
            est.excluded.push_back(i);
            continue;
        }
        x.push_back(std::log(h[i]));
        y.push_back(std::log(err[i]));
    }
    const auto n = x.size();
    if (n < 2) throw DomainError("convergence_rate needs at least two positive errors");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DomainError("convergence_rate needs distinct mesh sizes");
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (est.intercept + est.slope * x[i]);
        rss += e * e;
    }
    est.residual = std::sqrt(rss);
    est.points_used = n;
    return est;
}

}  // namespace sdmk
