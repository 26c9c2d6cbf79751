// Command-line front end for the sphere benchmark.
//
//   sdmk_cli run --level 1 --out results/
//   sdmk_cli convergence --out sweep/
//   sdmk_cli export-exact --level 2 --out exact/
//
// A flat key=value file can be given with --config; command-line flags
// override its entries.

#include <iostream>

#include "CLI11.hpp"
#include "sdmk/driver.hpp"

int main(int argc, char** argv) {
    sdmk::driver::RunConfig cfg;
    CLI::App app{"L1 optimal transport on the sphere by dynamic Monge-Kantorovich"};
    app.set_config("--config", "", "key=value configuration file");
    app.add_option("command", cfg.command, "run | convergence | export-exact")
        ->check(CLI::IsMember({"run", "convergence", "export-exact"}));
    app.add_option("--level", cfg.level, "mesh level in [0, 3]");
    app.add_option("--n-r", cfg.n_r, "latitude subdivisions of the base mesh (multiple of 12)");
    app.add_option("--n-phi", cfg.n_phi, "longitude subdivisions of the base mesh (multiple of 4)");
    app.add_option("--tau-t", cfg.dmk.tau_t, "stopping tolerance on var(mu)");
    app.add_option("--eta", cfg.dmk.eta, "explicit step safety factor in (0, 1)");
    app.add_option("--dt-max", cfg.dmk.dt_max, "upper bound on the time step");
    app.add_option("--k-max", cfg.dmk.k_max, "maximum number of time steps");
    app.add_option("--lin-tol", cfg.dmk.lin_tol, "relative residual tolerance of the linear solver");
    app.add_option("--out", cfg.output_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sdmk::driver::kExitConfig;
    }
    return sdmk::driver::dispatch(cfg, std::cout, std::cerr);
}
