#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sdmk/fem.hpp"
#include "sdmk/solver.hpp"

namespace sdmk {

/// Preconditioner used for the elliptic solves. `automatic` starts with IC(0)
/// and switches to a complete Cholesky factor for the rest of the run the first
/// time a solve fails with a freshly built IC(0) factor.
enum class PreconditionerKind { ic0, cholesky, automatic };

struct DmkConfig {
    std::optional<std::vector<double>> mu0;  // uniform 1 when empty
    double eta = 0.5;
    double dt_max = 1.0;
    double tau_t = 1e-5;
    std::size_t k_max = 5000;
    double lin_tol = 1e-10;
    std::size_t lin_maxit = 0;  // 0 selects 10 sqrt(n)
    PreconditionerKind preconditioner = PreconditionerKind::automatic;

    void check(std::size_t num_coarse_cells) const {
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
        if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
        if (!(tau_t > 0.0)) throw ConfigError("tau_t must be positive");
        if (!(lin_tol > 0.0)) throw ConfigError("lin_tol must be positive");
        if (mu0) {
            if (mu0->size() != num_coarse_cells) throw ConfigError("mu0 size does not match the mesh");
            for (double m : *mu0)
                if (!(m > 0.0)) throw ConfigError("mu0 must be positive everywhere");
        }
    }
};

struct DmkState {
    P0Field mu;
    P1Field u;
    double t = 0.0;
    std::size_t k = 0;
    std::vector<double> d;  // diagonal of the dynamics matrix
    double last_var = 0.0;
    std::vector<double> lyapunov_history;
};

struct StepRecord {
    std::size_t k = 0;  // 1-based index of the step just taken
    double t = 0.0;     // time after the step
    double dt = 0.0;
    double var = 0.0;
    double lyapunov = 0.0;  // functional at the pre-step pair (mu^k, u^k)
    SolveReport solve;
};

struct DmkResult {
    P0Field mu_star;
    P1Field u_star;
    std::vector<Vec3> v_star;
    double w1_estimate = 0.0;
    double t_star = 0.0;
    bool converged = false;
    std::vector<StepRecord> logs;
    std::vector<double> lyapunov_history;
    std::vector<double> d_star;  // dynamics diagonal at (mu_star, u_star)
    std::string diagnostic;
};

/// D_rr = (1/|K_r|) sum over children T of |T| |grad u|_T| - 1.
inline std::vector<double> dynamics_diagonal(const GradientCache& cache, std::span<const double> u) {
    const auto& pair = cache.pair();
    std::vector<double> d(cache.num_coarse_cells());
    for (Index r = 0; r < d.size(); ++r) {
        double s = 0.0;
        for (Index t : pair.children[r]) s += cache.fine_area(t) * norm(cache.gradient(u, t));
        d[r] = s / cache.coarse_area(r) - 1.0;
    }
    return d;
}

/// Explicit step bounded by eta / max|D_rr|, which keeps 1 + dt D_rr >= 1 - eta.
inline double choose_dt(std::span<const double> d, const DmkConfig& config) {
    double m = 0.0;
    for (double x : d) m = std::max(m, std::abs(x));
    if (m == 0.0) return config.dt_max;
    return std::min(config.dt_max, config.eta / m);
}

/// Relative L1 variation of the density per unit time.
inline double var_metric(std::span<const double> mu_new, std::span<const double> mu_old, double dt,
                         std::span<const double> areas) {
    if (!(dt > 0.0)) throw DomainError("var_metric: time step must be positive");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t r = 0; r < mu_old.size(); ++r) {
        num += std::abs(mu_new[r] - mu_old[r]) * areas[r];
        den += std::abs(mu_old[r]) * areas[r];
    }
    if (!(den > 0.0)) throw DomainError("var_metric: previous density has zero mass");
    return num / (dt * den);
}

/// v_r = -mu_r times the mean child gradient of u (the Beckmann flux).
inline std::vector<Vec3> reconstruct_velocity(const GradientCache& cache, const P0Field& mu,
                                              const P1Field& u) {
    std::vector<Vec3> v(cache.num_coarse_cells());
    for (Index r = 0; r < v.size(); ++r) {
        if (mu.values[r] == 0.0) continue;
        v[r] = (-mu.values[r]) * cell_gradient(cache, u, r);
    }
    return v;
}

/// Forward-Euler time stepping of the coupled elliptic/ODE system. Owns the
/// preconditioner state that is reused across steps.
class DmkSolver {
public:
    DmkSolver(const GradientCache& cache, std::vector<double> b, DmkConfig config)
        : cache_(&cache),
          b_(std::move(b)),
          config_(std::move(config)),
          deflation_(std::vector<double>(cache.weights().begin(), cache.weights().end())) {
        if (b_.size() != cache.num_fine_vertices())
            throw std::invalid_argument("right-hand side size does not match the fine mesh");
        config_.check(cache.num_coarse_cells());
    }

    const DmkConfig& config() const { return config_; }
    bool escalated() const { return escalated_; }

    DmkState initial_state() const {
        DmkState s;
        s.mu.values = config_.mu0 ? *config_.mu0 : std::vector<double>(cache_->num_coarse_cells(), 1.0);
        s.u.values.assign(cache_->num_fine_vertices(), 0.0);
        return s;
    }

    /// Elliptic solve for u on the current density, from a zero initial guess.
    /// Warm starts carry stale values on cells where mu has collapsed and stall CG.
    SolveReport solve_potential(DmkState& state) {
        assemble_stiffness(*cache_, state.mu, matrix_);
        bool rebuilt = false;
        if (std::holds_alternative<std::monostate>(precond_) ||
            policy_.decide() == PreconditionerAction::rebuild) {
            rebuild_preconditioner();
            rebuilt = true;
        }
        // A stale factor gets a bounded attempt: past the cap the policy would
        // rebuild on the next step anyway.
        auto result = rebuilt ? solve_with_current()
                              : solve_with_current(std::max<std::size_t>(
                                    20, 4 * policy_.iterations_at_rebuild()));
        if (!result.report.converged && !rebuilt) {
            rebuild_preconditioner();
            rebuilt = true;
            result = solve_with_current();
        }
        if (!result.report.converged && config_.preconditioner == PreconditionerKind::automatic &&
            !escalated_) {
            escalated_ = true;
            rebuild_preconditioner();
            result = solve_with_current();
        }
        if (rebuilt)
            policy_.record_rebuild(result.report.iterations);
        else
            policy_.record_solve(result.report.iterations);
        result.report.preconditioner_rebuilt = rebuilt;
        state.u.values = std::move(result.u);
        return result.report;
    }

    /// One time step: solve on mu^k, compute D(u^k) and dt_k, update mu.
    StepRecord step(DmkState& state) {
        StepRecord rec;
        rec.solve = solve_potential(state);
        if (!rec.solve.converged) {
            rec.k = state.k;
            rec.t = state.t;
            return rec;
        }
        state.d = dynamics_diagonal(*cache_, state.u.values);
        const double dt = choose_dt(state.d, config_);
        const double lyap = lyapunov(*cache_, state.mu, state.u);
        state.lyapunov_history.push_back(lyap);

        std::vector<double> mu_new(state.mu.values.size());
        for (Index r = 0; r < mu_new.size(); ++r)
            mu_new[r] = state.mu.values[r] * (1.0 + dt * state.d[r]);
        state.last_var = var_metric(mu_new, state.mu.values, dt, cache_->coarse_areas());
        state.mu.values = std::move(mu_new);
        state.t += dt;
        ++state.k;

        rec.k = state.k;
        rec.t = state.t;
        rec.dt = dt;
        rec.var = state.last_var;
        rec.lyapunov = lyap;
        return rec;
    }

    DmkResult run() {
        DmkState state = initial_state();
        DmkResult res;
        while (state.k < config_.k_max) {
            auto rec = step(state);
            if (!rec.solve.converged) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3e", rec.solve.relative_residual);
                res.diagnostic = "linear solve did not converge at step " + std::to_string(state.k + 1) +
                                 " (relative residual " + buf + ")";
                res.logs.push_back(rec);
                break;
            }
            res.logs.push_back(rec);
            if (rec.var < config_.tau_t) {
                res.converged = true;
                break;
            }
        }
        if (res.converged || res.diagnostic.empty()) {
            // Pair the final density with its own potential.
            const auto report = solve_potential(state);
            if (report.converged) {
                state.lyapunov_history.push_back(lyapunov(*cache_, state.mu, state.u));
            } else {
                res.converged = false;
                res.diagnostic = "final linear solve did not converge";
            }
        }
        if (!res.converged && res.diagnostic.empty())
            res.diagnostic = "time stepping reached k_max = " + std::to_string(config_.k_max);

        res.d_star = dynamics_diagonal(*cache_, state.u.values);
        res.v_star = reconstruct_velocity(*cache_, state.mu, state.u);
        res.w1_estimate = lyapunov(*cache_, state.mu, state.u);
        res.t_star = state.t;
        res.lyapunov_history = std::move(state.lyapunov_history);
        res.mu_star = std::move(state.mu);
        res.u_star = std::move(state.u);
        return res;
    }

private:
    void rebuild_preconditioner() {
        if (escalated_ || config_.preconditioner == PreconditionerKind::cholesky) {
            if (auto* c = std::get_if<CholeskyPreconditioner>(&precond_))
                c->refactor(matrix_);
            else
                precond_ = CholeskyPreconditioner(matrix_);
            return;
        }
        try {
            precond_ = ic0_factorize(matrix_);
        } catch (const FactorizationError&) {
            if (config_.preconditioner == PreconditionerKind::automatic) {
                escalated_ = true;
                precond_ = CholeskyPreconditioner(matrix_);
            } else {
                precond_ = DiagonalPreconditioner(matrix_);
            }
        }
    }

    SolveResult solve_with_current(std::size_t cap = 0) const {
        SolveOptions opts{config_.lin_tol, config_.lin_maxit};
        if (cap) opts.maxit = std::min(opts.maxit ? opts.maxit : default_maxit(b_.size()), cap);
        return std::visit(
            [&](const auto& p) -> SolveResult {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, std::monostate>)
                    return pcg_solve(matrix_, b_, IdentityPreconditioner{}, &deflation_, opts);
                else
                    return pcg_solve(matrix_, b_, p, &deflation_, opts);
            },
            precond_);
    }

    const GradientCache* cache_;
    std::vector<double> b_;
    DmkConfig config_;
    DeflationSpace deflation_;
    SparseSymMatrix matrix_;
    std::variant<std::monostate, IC0Factor, DiagonalPreconditioner, CholeskyPreconditioner> precond_;
    PreconditionerPolicy policy_;
    bool escalated_ = false;
};

inline DmkResult run(const GradientCache& cache, std::vector<double> b, DmkConfig config) {
    return DmkSolver(cache, std::move(b), std::move(config)).run();
}

}  // namespace sdmk
