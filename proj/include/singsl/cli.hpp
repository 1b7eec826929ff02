#pragma once

// Command implementations behind tools/singsl_cli.  Each command reads a
// RunConfig, writes its tables into cfg.out and returns a process exit code.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "singsl/singsl.hpp"

namespace singsl::cli {

enum ExitCode : int { kOk = 0, kInvariantFailure = 2, kConfigError = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double epsilon = 0.25;
    std::vector<double> r;
    std::string out = ".";
    int nodes = 1024;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    bool export_profile = false;

    // spectrum
    double s_max = 400.0;
    int count = 10;
    int profile_samples = 401;

    // pseudomode
    std::vector<double> lambdas{30.0, 50.0, 80.0, 120.0};
    std::vector<double> thetas{std::numbers::pi / 16, std::numbers::pi / 8, 3 * std::numbers::pi / 16};
    double delta = 0.01;

    // resolvent-grid
    double re_min = 100.0, re_max = 1600.0, im_min = 0.0, im_max = 640.0;
    int n_re = 64, n_im = 64;
    int n_basis = 256;
    double mask_frac = 1e-2;
    std::vector<double> levels{2.0, 4.0};
    double symmetry_tol = 0.02;

    // bessel-check
    int samples = 100;
};

/// 17 significant digits, fixed scientific form.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline TransformedProblem make_problem(const RunConfig& cfg) {
    try {
        return TransformedProblem(build_field(cfg.epsilon, cfg.r));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out);
    return std::filesystem::path(cfg.out) / name;
}

inline void write_file(const RunConfig& cfg, const std::string& name, const std::string& text) {
    std::ofstream f(out_path(cfg, name), std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out_path(cfg, name).string());
    f << text;
}

inline void write_json(const RunConfig& cfg, const std::string& name, const nlohmann::json& j) {
    write_file(cfg, name, j.dump(2) + "\n");
}

inline std::string profile_csv(const GridFunction& g) {
    std::ostringstream os;
    os << "x,Re u,Im u,|u|\n";
    for (std::size_t i = 0; i < g.size(); ++i)
        os << fmt(g.x[i]) << ',' << fmt(g.values[i].real()) << ',' << fmt(g.values[i].imag()) << ','
           << fmt(std::abs(g.values[i])) << '\n';
    return os.str();
}

// NaN-safe number for JSON
inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

inline int cmd_spectrum(const RunConfig& cfg, std::ostream& log) {
    if (cfg.count < 1 || !(cfg.s_max > 0.0)) throw ConfigError("spectrum: need count >= 1 and s_max > 0");
    const TransformedProblem tp = make_problem(cfg);
    const auto recs = find_eigenvalues(tp, cfg.s_max, cfg.count);
    std::ostringstream os;
    os << "index,Re E,Im E,mismatch_residual,imag_purity\n";
    os << 0 << ',' << fmt(0.0) << ',' << fmt(0.0) << ',' << fmt(0.0) << ',' << fmt(0.0) << '\n';
    bool ok = true;
    for (std::size_t k = 0; k < recs.size(); ++k) {
        const auto& r = recs[k];
        os << k + 1 << ',' << fmt(r.E.real()) << ',' << fmt(r.E.imag()) << ',' << fmt(r.mismatch_residual) << ','
           << fmt(r.imag_purity) << '\n';
        if (!r.accepted) {
            ok = false;
            log << "eigenvalue " << k + 1 << " failed the purity/mirror check: purity " << r.imag_purity
                << ", mirror residual " << r.mirror_residual << "\n";
        }
        if (r.near_singular) log << "eigenvalue " << k + 1 << ": near-singular polish (possible multiple root)\n";
        if (cfg.export_profile) {
            const GridFunction g = export_eigenfunction(tp, r, cfg.profile_samples);
            detail::write_file(cfg, "eigenfunction_" + std::to_string(k + 1) + ".csv", detail::profile_csv(g));
        }
    }
    detail::write_file(cfg, "spectrum.csv", os.str());
    log << recs.size() << " nonzero eigenvalues with Im E in (0, " << cfg.s_max << "]\n";
    return ok ? kOk : kInvariantFailure;
}

inline int cmd_pseudomode(const RunConfig& cfg, std::ostream& log) {
    const double pi = std::numbers::pi;
    for (double th : cfg.thetas)
        if (th < cfg.delta || th > pi / 4 - cfg.delta)
            throw ConfigError("pseudomode: theta = " + std::to_string(th) + " outside [delta, pi/4 - delta]");
    for (double lm : cfg.lambdas)
        if (!(lm >= 2.0)) throw ConfigError("pseudomode: |lambda| must be >= 2");
    const TransformedProblem tp = make_problem(cfg);
    const bool linear = tp.field().is_linear();
    const double m = tp.m();

    struct Job {
        double lm, th;
    };
    std::vector<Job> jobs;
    for (double lm : cfg.lambdas)
        for (double th : cfg.thetas) jobs.push_back({lm, th});
    PseudomodeOptions po;
    po.keep_samples = cfg.export_profile;
    const auto pms = parallel_map(jobs.size(), cfg.jobs,
                                  [&](std::size_t i) { return build_pseudomode_polar(tp, jobs[i].lm, jobs[i].th, po); });

    double logC = 0.0;  // calibrated C_f for non-linear f
    if (!linear) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pms.size(); ++i)
            best = std::max(best, pms[i].log_ratio() - log_bound_rhs_general(tp, jobs[i].lm, jobs[i].th, 1.0));
        logC = best;
    }
    const double l10 = std::log(10.0);
    std::ostringstream os;
    os << "|λ|,θ,Re E,Im E,log10 norm_u,log10 norm_residual,log10 ratio,log10 bound_rhs,log10 resolvent_lower\n";
    int violations = 0;
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < pms.size(); ++i) {
        const Pseudomode& pm = pms[i];
        const double lb = linear ? pm.log_bound_rhs : logC + log_bound_rhs_general(tp, jobs[i].lm, jobs[i].th, 1.0);
        os << fmt(jobs[i].lm) << ',' << fmt(jobs[i].th) << ',' << fmt(pm.point.E.real()) << ',' << fmt(pm.point.E.imag())
           << ',' << fmt(pm.log_norm_u / l10) << ',' << fmt(pm.log_norm_residual / l10) << ','
           << fmt(pm.log_ratio() / l10) << ',' << fmt(lb / l10) << ',' << fmt(pm.log_resolvent_lower() / l10) << '\n';
        if (linear) {
            const bool b = pm.log_ratio() <= pm.log_bound_rhs;
            const bool s2 = pm.log_norm_u >= log_step2_lower(m, jobs[i].lm, jobs[i].th);
            const bool s3 = pm.norm_residual() <= step3_upper(m, jobs[i].lm);
            if (!(b && s2 && s3)) {
                ++violations;
                log << "bound violated at |lambda| = " << jobs[i].lm << ", theta = " << jobs[i].th << "\n";
            }
        }
        fx.push_back(std::sqrt(std::abs(pm.point.E)) * std::abs(std::sin(pm.point.alpha / 2)));
        fy.push_back(pm.log_resolvent_lower());
        if (cfg.export_profile)
            detail::write_file(cfg, "profile_" + std::to_string(i) + ".csv", detail::profile_csv(pm.u));
    }
    detail::write_file(cfg, "pseudomode.csv", os.str());

    nlohmann::json j;
    j["linear_f"] = linear;
    j["points"] = pms.size();
    j["violations"] = violations;
    j["tau_half"] = tp.eval_tau(0.5);
    j["C_f"] = linear ? nlohmann::json(nullptr) : nlohmann::json(std::exp(logC));
    if (fx.size() >= 3) {
        const auto f = singsl::detail::fit_line(fx, fy);
        j["fitted_rate"] = detail::num(f.slope);
        j["fitted_rate_r2"] = detail::num(f.r2);
        j["rate_floor"] = std::sqrt(cfg.epsilon) / 4.0;
        j["rate_at_least_floor"] = f.slope >= std::sqrt(cfg.epsilon) / 4.0;
    }
    detail::write_json(cfg, "pseudomode_summary.json", j);
    return violations == 0 ? kOk : kInvariantFailure;
}

inline int cmd_resolvent_grid(const RunConfig& cfg, std::ostream& log) {
    if (cfg.n_re < 1 || cfg.n_im < 1 || cfg.n_basis < 32) throw ConfigError("resolvent-grid: bad grid size");
    if (!(cfg.re_min <= cfg.re_max && cfg.im_min <= cfg.im_max)) throw ConfigError("resolvent-grid: empty range");
    const TransformedProblem tp = make_problem(cfg);
    const double smax = std::max(std::abs(cfg.im_min), std::abs(cfg.im_max)) + 1.0;
    const auto recs = find_eigenvalues(tp, smax, 1000);
    std::vector<double> s;
    for (const auto& r : recs) s.push_back(r.E.imag());
    const MaskSet masks = build_masks(s, cfg.mask_frac);
    ResolventOptions ro;
    ro.n_basis = cfg.n_basis;
    const PseudospectrumTable t = pseudospectrum_grid(tp, {cfg.re_min, cfg.re_max}, {cfg.im_min, cfg.im_max}, cfg.n_re,
                                                      cfg.n_im, masks, ro, cfg.jobs);
    std::ostringstream os;
    os << "Re E,Im E,log10 norm_estimate,converged,masked\n";
    int unconverged = 0;
    for (const auto& p : t.points) {
        const double l = p.masked ? std::numeric_limits<double>::quiet_NaN() : std::log10(p.norm_estimate);
        os << fmt(p.E.real()) << ',' << fmt(p.E.imag()) << ',' << (p.masked ? std::string("nan") : fmt(l)) << ','
           << (p.converged ? 1 : 0) << ',' << (p.masked ? 1 : 0) << '\n';
        if (!p.masked && !p.converged) ++unconverged;
    }
    detail::write_file(cfg, "resolvent_grid.csv", os.str());

    nlohmann::json j;
    j["eigenvalues_masked"] = s.size();
    j["unconverged_points"] = unconverged;
    int code = kOk;
    const double sym = symmetry_defect(t);
    j["symmetry_defect"] = detail::num(sym);
    if (std::isfinite(sym)) {
        j["symmetry_pass"] = sym <= cfg.symmetry_tol;
        if (sym > cfg.symmetry_tol) {
            log << "symmetry check failed: defect " << sym << "\n";
            code = kInvariantFailure;
        }
    }
    nlohmann::json lv = nlohmann::json::array();
    for (double level : cfg.levels) {
        const LevelLine L = level_line(t, level);
        lv.push_back({{"level_log10", level},
                      {"crossings", L.re.size()},
                      {"exponent", detail::num(L.exponent)},
                      {"r2", detail::num(L.r2)}});
    }
    j["level_lines"] = lv;
    detail::write_json(cfg, "resolvent_grid_summary.json", j);
    if (unconverged > 0) log << unconverged << " grid points did not converge under node doubling\n";
    return code;
}

inline int cmd_sv_decay(const RunConfig& cfg, std::ostream& log) {
    if (cfg.nodes < 128) throw ConfigError("sv-decay: need at least 128 nodes");
    const TransformedProblem tp = make_problem(cfg);
    const SvDecay d = singular_value_decay(tp, cfg.nodes);
    std::ostringstream os;
    os << "n,σ_n\n";
    for (std::size_t k = 0; k < d.sigma.size(); ++k) os << k + 1 << ',' << fmt(d.sigma[k]) << '\n';
    detail::write_file(cfg, "sv_decay.csv", os.str());
    nlohmann::json j;
    j["nodes"] = d.sigma.size();
    j["n_converged"] = d.n_converged;
    j["fit_from"] = d.fit_from;
    j["fit_to"] = d.fit_to;
    j["slope"] = d.slope;
    j["slope_stderr"] = d.slope_stderr;
    j["slope_ci95"] = {d.slope - 1.96 * d.slope_stderr, d.slope + 1.96 * d.slope_stderr};
    j["sigma_1"] = d.sigma.front();
    j["resolution_warning"] = d.resolution_warning;
    j["slope_threshold"] = -1.3;
    j["pass"] = d.slope <= -1.3;
    detail::write_json(cfg, "sv_decay.json", j);
    if (d.resolution_warning) log << "warning: only " << d.n_converged << " singular values are grid-converged\n";
    return d.slope <= -1.3 ? kOk : kInvariantFailure;
}

inline int cmd_bessel_check(const RunConfig& cfg, std::ostream& log) {
    if (cfg.samples < 1) throw ConfigError("bessel-check: need samples >= 1");
    const auto checks = bessel_identity_suite(cfg.seed, cfg.samples);
    nlohmann::json j;
    j["seed"] = cfg.seed;
    bool all = true;
    for (const auto& c : checks) {
        j["checks"].push_back({{"name", c.name},
                               {"samples", c.samples},
                               {"max_error", c.max_error},
                               {"tolerance", c.tolerance},
                               {"passed", c.passed}});
        all = all && c.passed;
        if (!c.passed) log << c.name << " failed: " << c.max_error << " > " << c.tolerance << "\n";
    }
    j["all_passed"] = all;
    detail::write_json(cfg, "bessel_check.json", j);
    return all ? kOk : kInvariantFailure;
}

}  // namespace singsl::cli
