#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCore>

#include "sdmk/errors.hpp"
#include "sdmk/sparse.hpp"

namespace sdmk {

namespace detail {
inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }
}  // namespace detail

template <class P>
concept Preconditioner = requires(const P& p, std::span<const double> r, std::span<double> z) {
    { p.apply(r, z) };
};

struct IdentityPreconditioner {
    void apply(std::span<const double> r, std::span<double> z) const {
        std::copy(r.begin(), r.end(), z.begin());
    }
};

class DiagonalPreconditioner {
public:
    explicit DiagonalPreconditioner(const SparseSymMatrix& a) : inv_diag_(a.size(), 1.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a(i, i);
            if (d > 0.0) inv_diag_[i] = 1.0 / d;
        }
    }
    void apply(std::span<const double> r, std::span<double> z) const {
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
    }

private:
    std::vector<double> inv_diag_;
};

/// Zero-fill incomplete Cholesky factor L (L L^T ~ A + shift diag(A)), stored
/// row-wise with the lower pattern of A; the diagonal is the last entry of
/// each row.
class IC0Factor {
public:
    IC0Factor() = default;

    std::size_t size() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    double shift() const { return shift_; }
    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> cols() const { return cols_; }
    std::span<const double> values() const { return values_; }

    double operator()(std::size_t i, std::size_t j) const {
        for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (cols_[k] == j) return values_[k];
        return 0.0;
    }

    /// z = (L L^T)^{-1} r.
    void apply(std::span<const double> r, std::span<double> z) const {
        const auto n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = r[i];
            const auto last = row_ptr_[i + 1] - 1;
            for (auto k = row_ptr_[i]; k < last; ++k) s -= values_[k] * z[cols_[k]];
            z[i] = s / values_[last];
        }
        for (std::size_t i = n; i-- > 0;) {
            const auto last = row_ptr_[i + 1] - 1;
            z[i] /= values_[last];
            const double zi = z[i];
            for (auto k = row_ptr_[i]; k < last; ++k) z[cols_[k]] -= values_[k] * zi;
        }
    }

private:
    friend IC0Factor ic0_factorize(const SparseSymMatrix& a, double shift);
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> cols_;
    std::vector<double> values_;
    double shift_ = 0.0;
};

namespace detail {
// Relative pivot threshold standing in for "non-positive" in floating point.
inline constexpr double kPivotTolerance = 1e-14;

inline bool try_ic0(const SparseSymMatrix& a, double shift, std::vector<std::size_t>& rp,
                    std::vector<std::size_t>& cols, std::vector<double>& vals) {
    const auto n = a.size();
    rp.assign(1, 0);
    cols.clear();
    vals.clear();
    const auto arp = a.row_ptr();
    const auto acol = a.cols();
    const auto aval = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        bool has_diag = false;
        for (auto k = arp[i]; k < arp[i + 1] && acol[k] <= i; ++k) {
            cols.push_back(acol[k]);
            vals.push_back(aval[k]);
            has_diag = has_diag || acol[k] == i;
        }
        if (!has_diag) return false;
        rp.push_back(cols.size());
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto begin = rp[i];
        const auto diag = rp[i + 1] - 1;
        for (auto k = begin; k < diag; ++k) {
            const auto j = cols[k];
            // s = sum over m < j of L(i,m) L(j,m), a merge of two sorted rows.
            double s = 0.0;
            auto p = begin;
            auto q = rp[j];
            const auto qend = rp[j + 1] - 1;
            while (p < k && q < qend) {
                if (cols[p] == cols[q]) {
                    s += vals[p] * vals[q];
                    ++p;
                    ++q;
                } else if (cols[p] < cols[q]) {
                    ++p;
                } else {
                    ++q;
                }
            }
            vals[k] = (vals[k] - s) / vals[qend];
        }
        const double a_ii = vals[diag] * (1.0 + shift);
        double pivot = a_ii;
        for (auto k = begin; k < diag; ++k) pivot -= vals[k] * vals[k];
        if (!(pivot > kPivotTolerance * a_ii) || !std::isfinite(pivot)) return false;
        vals[diag] = std::sqrt(pivot);
    }
    return true;
}
}  // namespace detail

/// IC(0) of A + shift diag(A). On pivot breakdown the shift is raised to
/// max(2 shift, 1e-8) and the factorization retried, up to a shift of 1.
inline IC0Factor ic0_factorize(const SparseSymMatrix& a, double shift = 0.0) {
    if (shift < 0.0) throw std::invalid_argument("IC(0) shift must be non-negative");
    IC0Factor f;
    for (;;) {
        if (detail::try_ic0(a, shift, f.row_ptr_, f.cols_, f.values_)) {
            f.shift_ = shift;
            return f;
        }
        if (shift >= 1.0)
            throw FactorizationError("IC(0) breakdown persists at diagonal shift 1");
        shift = std::min(1.0, std::max(2.0 * shift, 1e-8));
    }
}

/// Complete sparse Cholesky factorization of A + shift diag(A) (CHOLMOD,
/// supernodal). Robust where IC(0) is not: operators whose coefficients span
/// many decades. `refactor` reuses the ordering and symbolic analysis. A
/// failed factorization is retried with the shift raised tenfold (at least
/// to 1e-10), up to 1.
class CholeskyPreconditioner {
public:
    explicit CholeskyPreconditioner(const SparseSymMatrix& a, double shift = 1e-10)
        : factor_(std::make_shared<Factor>()), nnz_(a.nnz()) {
        const auto n = static_cast<Eigen::Index>(a.size());
        const auto rp = a.row_ptr();
        const auto cols = a.cols();
        std::vector<Eigen::Triplet<double>> lower;
        std::vector<std::size_t> rows;
        lower.reserve(a.nnz() / 2 + a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (auto k = rp[i]; k < rp[i + 1] && cols[k] <= i; ++k) {
                lower.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k]), 0.0);
                source_.push_back(k);
                rows.push_back(i);
            }
        lower_ = Eigen::SparseMatrix<double>(n, n);
        lower_.setFromTriplets(lower.begin(), lower.end());
        lower_.makeCompressed();

        // Position of each lower entry of A inside the column-major storage.
        const auto* outer = lower_.outerIndexPtr();
        const auto* inner = lower_.innerIndexPtr();
        for (std::size_t m = 0; m < source_.size(); ++m) {
            const auto j = static_cast<Eigen::Index>(cols[source_[m]]);
            const auto i = static_cast<int>(rows[m]);
            slot_.push_back(static_cast<std::size_t>(
                std::lower_bound(inner + outer[j], inner + outer[j + 1], i) - inner));
            diag_.push_back(rows[m] == cols[source_[m]]);
        }
        factor_->analyzePattern(lower_);
        factorize(a, shift);
    }

    double shift() const { return shift_; }

    /// New values on the same sparsity pattern; the ordering is kept.
    void refactor(const SparseSymMatrix& a, double shift = 1e-10) {
        if (a.nnz() != nnz_) throw std::invalid_argument("refactor: sparsity pattern changed");
        factorize(a, shift);
    }

    void apply(std::span<const double> r, std::span<double> z) const {
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
        Eigen::Map<Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
        zv = factor_->solve(rv);
    }

private:
    using Factor = Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>;

    void factorize(const SparseSymMatrix& a, double shift) {
        const auto vals = a.values();
        double* dst = lower_.valuePtr();
        for (;;) {
            for (std::size_t m = 0; m < source_.size(); ++m)
                dst[slot_[m]] = diag_[m] ? vals[source_[m]] * (1.0 + shift) : vals[source_[m]];
            factor_->factorize(lower_);
            if (factor_->info() == Eigen::Success) {
                shift_ = shift;
                return;
            }
            if (shift >= 1.0) throw FactorizationError("Cholesky breakdown persists at diagonal shift 1");
            shift = std::min(1.0, std::max(10.0 * shift, 1e-10));
        }
    }

    std::shared_ptr<Factor> factor_;
    std::size_t nnz_ = 0;
    Eigen::SparseMatrix<double> lower_;
    std::vector<std::size_t> source_;  // entry of A feeding each lower entry
    std::vector<std::size_t> slot_;
    std::vector<bool> diag_;
    double shift_ = 0.0;
};

/// Constant-kernel handling for singular Neumann-type systems. The kernel of
/// the operator is span{1}; solutions are normalized to w^T u = 0 with
/// vertex weights w > 0.
class DeflationSpace {
public:
    explicit DeflationSpace(std::vector<double> weights) : w_(std::move(weights)) {
        if (w_.empty()) throw std::invalid_argument("empty deflation weights");
        for (double v : w_)
            if (!(v > 0.0)) throw std::invalid_argument("deflation weights must be positive");
        sum_w_ = std::accumulate(w_.begin(), w_.end(), 0.0);
    }

    std::span<const double> weights() const { return w_; }

    /// u <- u - (w^T u / w^T 1) 1, so that w^T u = 0.
    void remove_kernel(std::span<double> u) const {
        const double c = detail::dot(w_, u) / sum_w_;
        for (auto& x : u) x -= c;
    }

    /// Orthogonal projection onto 1^perp, the range of the operator.
    static void project_range(std::span<double> r) {
        const double c = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
        for (auto& x : r) x -= c;
    }

private:
    std::vector<double> w_;
    double sum_w_ = 0.0;
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool preconditioner_rebuilt = false;
};

struct SolveOptions {
    double tol = 1e-10;
    std::size_t maxit = 0;  // 0 selects 10 sqrt(n)
};

struct SolveResult {
    std::vector<double> u;
    SolveReport report;
};

inline std::size_t default_maxit(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(n))));
}

/// Preconditioned CG. With a deflation space, the right-hand side, residuals
/// and preconditioned directions are kept free of the constant kernel and the
/// returned solution satisfies w^T u = 0. Without one, plain PCG.
template <Preconditioner P>
SolveResult pcg_solve(const SparseSymMatrix& a, std::span<const double> b_in, const P& precond,
                      const DeflationSpace* deflation, SolveOptions opts = {},
                      std::span<const double> initial = {}) {
    const auto n = a.size();
    if (b_in.size() != n) throw std::invalid_argument("right-hand side size mismatch");
    const auto maxit = opts.maxit ? opts.maxit : default_maxit(n);

    std::vector<double> b(b_in.begin(), b_in.end());
    if (deflation) {
        double l1 = 0.0;
        for (double x : b) l1 += std::abs(x);
        if (std::abs(std::accumulate(b.begin(), b.end(), 0.0)) > 1e-10 * l1)
            DeflationSpace::project_range(b);
    }

    SolveResult out;
    out.u.assign(n, 0.0);
    if (!initial.empty()) std::copy(initial.begin(), initial.end(), out.u.begin());
    if (deflation) deflation->remove_kernel(out.u);

    const double bnorm = detail::norm2(b);
    if (bnorm == 0.0) {
        std::fill(out.u.begin(), out.u.end(), 0.0);
        out.report.converged = true;
        return out;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    auto true_residual = [&] {
        a.multiply(out.u, q);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
        if (deflation) DeflationSpace::project_range(r);
        return detail::norm2(r) / bnorm;
    };

    double rel = true_residual();
    std::size_t it = 0;
    while (rel > opts.tol && it < maxit) {
        // (Re)start from the current true residual.
        precond.apply(r, z);
        if (deflation) deflation->remove_kernel(z);
        p = z;
        double rz = detail::dot(r, z);
        while (it < maxit) {
            a.multiply(p, q);
            const double pq = detail::dot(p, q);
            if (!(pq > 0.0)) break;
            const double alpha = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                out.u[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            ++it;
            if (detail::norm2(r) / bnorm <= opts.tol) break;
            precond.apply(r, z);
            if (deflation) deflation->remove_kernel(z);
            const double rz_new = detail::dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        const double prev = rel;
        rel = true_residual();
        if (rel > opts.tol && !(rel < prev)) break;  // stagnation
    }

    if (deflation) deflation->remove_kernel(out.u);
    out.report.iterations = it;
    out.report.relative_residual = rel;
    out.report.converged = rel <= opts.tol;
    return out;
}

enum class PreconditionerAction { keep, rebuild };

/// Reuse policy for a preconditioner built from an earlier operator: rebuild
/// once the iteration count exceeds 1.5x the count observed right after the
/// last rebuild, or every 50 time steps.
class PreconditionerPolicy {
public:
    static constexpr double growth_limit = 1.5;
    static constexpr std::size_t period = 50;

    /// Records the solve performed right after a rebuild.
    void record_rebuild(std::size_t iterations) {
        iters_at_rebuild_ = iterations;
        last_iters_ = iterations;
        steps_since_rebuild_ = 1;
    }

    void record_solve(std::size_t iterations) {
        last_iters_ = iterations;
        ++steps_since_rebuild_;
    }

    PreconditionerAction decide() const {
        if (steps_since_rebuild_ >= period) return PreconditionerAction::rebuild;
        if (static_cast<double>(last_iters_) > growth_limit * static_cast<double>(iters_at_rebuild_))
            return PreconditionerAction::rebuild;
        return PreconditionerAction::keep;
    }

    std::size_t iterations_at_rebuild() const { return iters_at_rebuild_; }
    std::size_t steps_since_rebuild() const { return steps_since_rebuild_; }

private:
    std::size_t iters_at_rebuild_ = 0;
    std::size_t last_iters_ = 0;
    std::size_t steps_since_rebuild_ = 0;
};

}  // namespace sdmk
