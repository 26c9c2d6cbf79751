#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "sdmk/dmk.hpp"
#include "sdmk/metrics.hpp"
#include "sdmk/sphere.hpp"
#include "sdmk/vtk.hpp"

// Sphere benchmark commands behind the command-line tool. Exit status 0 on
// success, 1 for configuration or I/O errors, 2 when a run does not reach
// the stopping tolerance (partial outputs are still written).
namespace sdmk::driver {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kMaxLevel = 3;

struct RunConfig {
    std::string command = "run";  // run | convergence | export-exact
    int level = 0;
    int n_r = 12;
    int n_phi = 16;
    DmkConfig dmk;
    std::string output_dir = ".";

    void check() const {
        if (command != "run" && command != "convergence" && command != "export-exact")
            throw ConfigError("command: unknown command '" + command + "'");
        if (level < 0 || level > kMaxLevel)
            throw ConfigError("level: must lie in [0, 3], got " + std::to_string(level));
        if (n_r < 12 || n_r % 12 != 0) throw ConfigError("n_r: must be a positive multiple of 12");
        if (n_phi < 4 || n_phi % 4 != 0) throw ConfigError("n_phi: must be a positive multiple of 4");
        if (!(dmk.eta > 0.0 && dmk.eta < 1.0)) throw ConfigError("eta: must lie in (0, 1)");
        if (!(dmk.dt_max > 0.0)) throw ConfigError("dt_max: must be positive");
        if (!(dmk.tau_t > 0.0)) throw ConfigError("tau_t: must be positive");
        if (dmk.k_max == 0) throw ConfigError("k_max: must be positive");
        if (!(dmk.lin_tol > 0.0)) throw ConfigError("lin_tol: must be positive");
        if (output_dir.empty()) throw ConfigError("out: output directory is empty");
    }
};

/// Everything one sphere run produces.
struct LevelRun {
    SurfaceMesh coarse;
    NestedMeshPair pair;
    std::vector<double> fine_source;
    DmkResult result;
    ErrorRecord record;
};

namespace detail {

inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw Error("cannot open " + p.string() + " for writing");
    return out;
}

inline void ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec || !std::filesystem::is_directory(p)) throw Error("cannot create directory " + p.string());
}

}  // namespace detail

inline constexpr const char* kStepsHeader = "k,t,dt,var,lyapunov,lin_iters,lin_residual,rebuilt";
inline constexpr const char* kSummaryHeader =
    "level,h,err_bp,err_w1,var_final,steps,wall_time,w1_estimate,converged";
inline constexpr const char* kRatesHeader = "level,h,err_bp,err_w1,steps,wall_time";

inline void write_steps(std::ostream& os, const std::vector<StepRecord>& logs) {
    os << kStepsHeader << '\n';
    for (const auto& s : logs)
        os << s.k << ',' << detail::num(s.t) << ',' << detail::num(s.dt) << ',' << detail::num(s.var) << ','
           << detail::num(s.lyapunov) << ',' << s.solve.iterations << ','
           << detail::num(s.solve.relative_residual) << ',' << (s.solve.preconditioner_rebuilt ? 1 : 0) << '\n';
}

inline void write_summary(std::ostream& os, const std::vector<ErrorRecord>& records) {
    os << kSummaryHeader << '\n';
    for (const auto& r : records)
        os << r.level << ',' << detail::num(r.h) << ',' << detail::num(r.err_bp) << ',' << detail::num(r.err_w1)
           << ',' << detail::num(r.var_final) << ',' << r.steps << ',' << detail::num(r.wall_time) << ','
           << detail::num(r.w1_estimate) << ',' << (r.converged ? 1 : 0) << '\n';
}

/// Rates table; the trailing comment line carries both fitted slopes (or
/// "nan" when fewer than two levels are available).
inline void write_rates(std::ostream& os, const std::vector<ErrorRecord>& records) {
    os << kRatesHeader << '\n';
    std::vector<double> h, eb, ew;
    for (const auto& r : records) {
        os << r.level << ',' << detail::num(r.h) << ',' << detail::num(r.err_bp) << ',' << detail::num(r.err_w1)
           << ',' << r.steps << ',' << detail::num(r.wall_time) << '\n';
        h.push_back(r.h);
        eb.push_back(r.err_bp);
        ew.push_back(r.err_w1);
    }
    auto slope = [&](const std::vector<double>& e) -> std::string {
        try {
            return detail::num(convergence_rate(h, e).slope);
        } catch (const DomainError&) {
            return "nan";
        }
    };
    os << "# slope_err_bp=" << slope(eb) << " slope_err_w1=" << slope(ew) << '\n';
}

/// Level-L benchmark: mesh, nested pair, source, DMK run and error record.
inline LevelRun run_level(int level, const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelRun out{sphere::sphere_level_mesh(level, cfg.n_r, cfg.n_phi), {}, {}, {}, {}};
    out.pair = build_nested_pair(out.coarse);
    GradientCache cache(out.pair);
    out.fine_source = sphere::classify_source(out.pair.fine);
    out.result = run(cache, assemble_rhs(cache, out.fine_source), cfg.dmk);
    const auto t1 = std::chrono::steady_clock::now();

    auto& rec = out.record;
    rec.level = level;
    rec.h = mesh_quality(out.coarse).h;
    rec.err_bp = err_bp(out.coarse, out.result.v_star, sphere::exact_velocity);
    rec.err_w1 = err_w1(out.result.w1_estimate);
    rec.var_final = out.result.logs.empty() ? 0.0 : out.result.logs.back().var;
    rec.steps = out.result.logs.size();
    rec.wall_time = std::chrono::duration<double>(t1 - t0).count();
    rec.w1_estimate = out.result.w1_estimate;
    rec.converged = out.result.converged;
    return out;
}

/// Fine-mesh fields of a finished run: density, source and velocity per fine
/// cell (copied from the parent), potential per fine vertex.
inline vtk::Attributes result_attributes(const LevelRun& run) {
    const auto& pair = run.pair;
    vtk::Attributes a;
    vtk::ScalarField mu{"mu", std::vector<double>(pair.fine.num_cells())};
    vtk::VectorField v{"velocity", std::vector<Vec3>(pair.fine.num_cells())};
    for (Index t = 0; t < pair.fine.num_cells(); ++t) {
        mu.values[t] = run.result.mu_star.values[pair.parent[t]];
        v.values[t] = run.result.v_star[pair.parent[t]];
    }
    a.cell_scalars.push_back(std::move(mu));
    a.cell_scalars.push_back({"source", run.fine_source});
    a.cell_vectors.push_back(std::move(v));
    a.point_scalars.push_back({"potential", run.result.u_star.values});
    return a;
}

inline vtk::Attributes exact_attributes(const SurfaceMesh& mesh) {
    vtk::Attributes a;
    vtk::ScalarField mu{"mu_exact", std::vector<double>(mesh.num_cells())};
    vtk::VectorField v{"velocity_exact", std::vector<Vec3>(mesh.num_cells())};
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto p = mesh.corners(c);
        const Vec3 b = (1.0 / 3.0) * (p[0] + p[1] + p[2]);
        const Vec3 x = (1.0 / norm(b)) * b;
        mu.values[c] = sphere::exact_tdens(sphere::to_polar(x));
        v.values[c] = sphere::exact_velocity(x);
    }
    vtk::ScalarField u{"potential_exact", std::vector<double>(mesh.num_vertices())};
    for (Index i = 0; i < mesh.num_vertices(); ++i) u.values[i] = sphere::exact_potential(sphere::to_polar(mesh.vertices()[i]));
    a.cell_scalars.push_back(std::move(mu));
    a.cell_vectors.push_back(std::move(v));
    a.point_scalars.push_back(std::move(u));
    return a;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
    cfg.check();
    const std::filesystem::path dir(cfg.output_dir);
    detail::ensure_dir(dir);
    const auto run = run_level(cfg.level, cfg);
    {
        auto os = detail::open_out(dir / "steps.csv");
        write_steps(os, run.result.logs);
    }
    {
        auto os = detail::open_out(dir / "summary.csv");
        write_summary(os, {run.record});
    }
    vtk::write_file((dir / "result.vtk").string(), run.pair.fine, result_attributes(run),
                    "dmk level " + std::to_string(cfg.level));
    log << "level " << cfg.level << ": steps " << run.record.steps << ", W1 " << detail::num(run.record.w1_estimate)
        << ", err_w1 " << run.record.err_w1 << ", err_bp " << run.record.err_bp << '\n';
    if (!run.result.converged) {
        log << "not converged: " << run.result.diagnostic << '\n';
        return kExitNotConverged;
    }
    return kExitOk;
}

/// Levels 0..3 in order; per-level step logs go to level_<L>/steps.csv.
/// `inspect`, when given, sees each finished level before it is discarded.
inline int cmd_convergence(const RunConfig& cfg, std::ostream& log,
                           const std::function<void(const LevelRun&)>& inspect = {}) {
    cfg.check();
    const std::filesystem::path dir(cfg.output_dir);
    detail::ensure_dir(dir);
    std::vector<ErrorRecord> records;
    bool all_converged = true;
    for (int level = 0; level <= kMaxLevel; ++level) {
        const auto run = run_level(level, cfg);
        const auto sub = dir / ("level_" + std::to_string(level));
        detail::ensure_dir(sub);
        auto os = detail::open_out(sub / "steps.csv");
        write_steps(os, run.result.logs);
        records.push_back(run.record);
        all_converged = all_converged && run.result.converged;
        log << "level " << level << ": h " << run.record.h << ", steps " << run.record.steps << ", err_bp "
            << run.record.err_bp << ", err_w1 " << run.record.err_w1 << ", " << run.record.wall_time << " s\n";
        if (!run.result.converged) log << "  not converged: " << run.result.diagnostic << '\n';
        auto rates = detail::open_out(dir / "rates.csv");
        write_rates(rates, records);
        if (inspect) inspect(run);
    }
    return all_converged ? kExitOk : kExitNotConverged;
}

inline int cmd_export_exact(const RunConfig& cfg, std::ostream& log) {
    cfg.check();
    const std::filesystem::path dir(cfg.output_dir);
    detail::ensure_dir(dir);
    const auto mesh = sphere::sphere_level_mesh(cfg.level, cfg.n_r, cfg.n_phi);
    vtk::write_file((dir / "exact.vtk").string(), mesh, exact_attributes(mesh),
                    "exact sphere solution level " + std::to_string(cfg.level));
    log << "wrote " << (dir / "exact.vtk").string() << '\n';
    return kExitOk;
}

/// Runs the configured command; configuration and I/O failures map to 1.
inline int dispatch(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        if (cfg.command == "convergence") return cmd_convergence(cfg, log);
        if (cfg.command == "export-exact") return cmd_export_exact(cfg, log);
        return cmd_run(cfg, log);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace sdmk::driver
