#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "singsl/cli.hpp"

using singsl::cli::RunConfig;

namespace {

void add_common(CLI::App& app, RunConfig& cfg) {
    app.add_option("--epsilon", cfg.epsilon, "epsilon in (0,1); f = 2 eps x / (1 + x r(x))")->capture_default_str();
    app.add_option("--r", cfg.r, "coefficients of x, x^3, x^5, ... in r")->delimiter(',');
    app.add_option("--out", cfg.out, "output directory")->capture_default_str();
    app.add_option("--nodes", cfg.nodes, "Nystrom nodes for sv-decay")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed for randomised checks")->capture_default_str();
    app.add_option("--jobs", cfg.jobs, "worker threads for grid commands")->capture_default_str();
    app.add_flag("--export-profile", cfg.export_profile, "write sampled eigenfunctions / pseudo-modes");
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Spectra, pseudo-modes and resolvent norms of (f u')' + u' with periodic ends"};
    app.set_config("--config", "", "TOML key/value config file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();
    add_common(app, cfg);
    std::string save_config;
    app.add_option("--save-config", save_config, "write the explicitly set options here (defaults stay implicit)");

    auto* spc = app.add_subcommand("spectrum", "eigenvalues on the positive imaginary axis");
    spc->add_option("--s-max", cfg.s_max, "scan Im E up to this value")->capture_default_str();
    spc->add_option("--count", cfg.count, "maximum number of eigenvalues")->capture_default_str();
    spc->add_option("--samples", cfg.profile_samples, "points per exported eigenfunction")->capture_default_str();

    auto* pm = app.add_subcommand("pseudomode", "pseudo-modes on a (|lambda|, theta) grid");
    pm->add_option("--lambda", cfg.lambdas, "|lambda| values")->delimiter(',');
    pm->add_option("--theta", cfg.thetas, "theta values (lambda = |lambda| e^{i(pi/2+theta)})")->delimiter(',');
    pm->add_option("--delta", cfg.delta, "sector margin: delta <= theta <= pi/4 - delta")->capture_default_str();

    auto* rg = app.add_subcommand("resolvent-grid", "resolvent norm on a rectangle of E values");
    rg->add_option("--re-min", cfg.re_min)->capture_default_str();
    rg->add_option("--re-max", cfg.re_max)->capture_default_str();
    rg->add_option("--im-min", cfg.im_min)->capture_default_str();
    rg->add_option("--im-max", cfg.im_max)->capture_default_str();
    rg->add_option("--n-re", cfg.n_re)->capture_default_str();
    rg->add_option("--n-im", cfg.n_im)->capture_default_str();
    rg->add_option("--n-basis", cfg.n_basis, "quadrature nodes per norm estimate")->capture_default_str();
    rg->add_option("--mask-frac", cfg.mask_frac, "mask radius as a fraction of the local eigenvalue spacing")
        ->capture_default_str();
    rg->add_option("--levels", cfg.levels, "log10 levels for the level-line fit")->delimiter(',');

    auto* sv = app.add_subcommand("sv-decay", "singular values of the E = 0 inverse");
    auto* bc = app.add_subcommand("bessel-check", "Bessel identity suite");
    bc->add_option("--samples", cfg.samples, "random arguments per order and identity")->capture_default_str();
    for (auto* s : {spc, pm, rg, sv, bc}) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : singsl::cli::kConfigError;
    }
    if (!save_config.empty()) {
        std::ofstream f(save_config);
        f << app.config_to_str(false, false);
    }

    try {
        if (spc->parsed()) return singsl::cli::cmd_spectrum(cfg, std::cerr);
        if (pm->parsed()) return singsl::cli::cmd_pseudomode(cfg, std::cerr);
        if (rg->parsed()) return singsl::cli::cmd_resolvent_grid(cfg, std::cerr);
        if (sv->parsed()) return singsl::cli::cmd_sv_decay(cfg, std::cerr);
        if (bc->parsed()) return singsl::cli::cmd_bessel_check(cfg, std::cerr);
    } catch (const singsl::cli::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return singsl::cli::kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return singsl::cli::kConfigError;
}
