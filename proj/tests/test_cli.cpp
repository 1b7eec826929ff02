#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "singsl/cli.hpp"
#include "support.hpp"

using namespace singsl::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path p = fs::temp_directory_path() / (std::string("singsl_cli_") + info->test_suite_name() + "_" +
                                                    info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> v;
    std::ifstream f(p);
    for (std::string s; std::getline(f, s);) v.push_back(s);
    return v;
}

std::vector<double> fields(const std::string& line) {
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string s; std::getline(ss, s, ',');) v.push_back(s == "nan" ? std::nan("") : std::stod(s));
    return v;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int run(const std::string& args) {
    const int rc = std::system((std::string(SINGSL_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

RunConfig base(const fs::path& dir) {
    RunConfig c;
    c.out = dir.string();
    return c;
}

}  // namespace

TEST(Format, SeventeenSignificantDigits) {
    EXPECT_EQ(fmt(0.0), "0.0000000000000000e+00");
    EXPECT_EQ(fmt(-1.5), "-1.5000000000000000e+00");
    EXPECT_EQ(std::stod(fmt(std::numbers::pi)), std::numbers::pi);
}

TEST(Spectrum, TableLayout) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.count = 3;
    std::ostringstream log;
    ASSERT_EQ(cmd_spectrum(c, log), kOk) << log.str();
    const auto L = lines(d / "spectrum.csv");
    ASSERT_EQ(L.size(), 5u);
    EXPECT_EQ(L[0], "index,Re E,Im E,mismatch_residual,imag_purity");
    EXPECT_EQ(fields(L[1]), (std::vector<double>{0, 0, 0, 0, 0}));
    const auto r1 = fields(L[2]);
    EXPECT_EQ(r1[0], 1.0);
    EXPECT_LE(std::abs(r1[2] - oracle::first_imaginary_eigenvalue(2.0)), 1e-9 * r1[2]);
    for (std::size_t k = 2; k < L.size(); ++k) EXPECT_LE(fields(L[k])[4], 1e-8);
}

TEST(Spectrum, Deterministic) {
    const fs::path d = scratch();
    RunConfig a = base(d / "a"), b = base(d / "b");
    a.count = b.count = 4;
    a.r = b.r = {1.0};
    std::ostringstream log;
    ASSERT_EQ(cmd_spectrum(a, log), kOk);
    ASSERT_EQ(cmd_spectrum(b, log), kOk);
    EXPECT_EQ(slurp(d / "a" / "spectrum.csv"), slurp(d / "b" / "spectrum.csv"));
}

TEST(Spectrum, ExportedProfiles) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.count = 2;
    c.export_profile = true;
    c.profile_samples = 51;
    std::ostringstream log;
    ASSERT_EQ(cmd_spectrum(c, log), kOk);
    for (int k : {1, 2}) {
        const auto L = lines(d / ("eigenfunction_" + std::to_string(k) + ".csv"));
        ASSERT_EQ(L.size(), 52u);
        EXPECT_EQ(L[0], "x,Re u,Im u,|u|");
        double mx = 0.0;
        for (std::size_t i = 1; i < L.size(); ++i) {
            const auto f = fields(L[i]);
            EXPECT_NEAR(f[3], std::hypot(f[1], f[2]), 1e-15);
            mx = std::max(mx, f[3]);
        }
        EXPECT_NEAR(mx, 1.0, 1e-15);
        EXPECT_EQ(fields(L[1])[0], -1.0);
        EXPECT_EQ(fields(L.back())[0], 1.0);
    }
}

TEST(Spectrum, RejectsBadConfig) {
    const fs::path d = scratch();
    std::ostringstream log;
    RunConfig c = base(d);
    c.count = 0;
    EXPECT_THROW((void)cmd_spectrum(c, log), ConfigError);
    c = base(d);
    c.epsilon = 1.5;
    EXPECT_THROW((void)cmd_spectrum(c, log), ConfigError);
}

TEST(Pseudomode, TableAndSummary) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.lambdas = {30.0, 80.0};
    c.thetas = {std::numbers::pi / 16, std::numbers::pi / 8};
    std::ostringstream log;
    ASSERT_EQ(cmd_pseudomode(c, log), kOk) << log.str();
    const auto L = lines(d / "pseudomode.csv");
    ASSERT_EQ(L.size(), 5u);
    EXPECT_EQ(L[0],
              "|λ|,θ,Re E,Im E,log10 norm_u,log10 norm_residual,log10 ratio,log10 bound_rhs,log10 resolvent_lower");
    for (std::size_t i = 1; i < L.size(); ++i) {
        const auto f = fields(L[i]);
        ASSERT_EQ(f.size(), 9u);
        EXPECT_NEAR(f[6], f[5] - f[4], 1e-12);
        EXPECT_NEAR(f[8], -f[6], 1e-12);
        EXPECT_LE(f[6], f[7]);
        // lambda^2 = -8 E
        const std::complex<double> lam = std::polar(f[0], std::numbers::pi / 2 + f[1]);
        EXPECT_LE(std::abs(lam * lam + 8.0 * std::complex<double>(f[2], f[3])), 1e-9 * f[0] * f[0]);
    }
    const auto j = read_json(d / "pseudomode_summary.json");
    EXPECT_EQ(j["violations"], 0);
    EXPECT_TRUE(j["linear_f"].get<bool>());
    EXPECT_TRUE(j["C_f"].is_null());
    EXPECT_NEAR(j["tau_half"].get<double>(), std::numbers::sqrt2 / 2, 1e-10);
    EXPECT_TRUE(j["rate_at_least_floor"].get<bool>());
}

TEST(Pseudomode, CubicCalibratesConstant) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.r = {1.0};
    c.lambdas = {30.0, 50.0};
    c.thetas = {std::numbers::pi / 8};
    c.export_profile = true;
    std::ostringstream log;
    ASSERT_EQ(cmd_pseudomode(c, log), kOk);
    const auto j = read_json(d / "pseudomode_summary.json");
    EXPECT_FALSE(j["linear_f"].get<bool>());
    EXPECT_GT(j["C_f"].get<double>(), 0.0);
    // calibrated over the same points, so every ratio sits at or below the bound
    const auto L = lines(d / "pseudomode.csv");
    for (std::size_t i = 1; i < L.size(); ++i) EXPECT_LE(fields(L[i])[6], fields(L[i])[7] + 1e-12);
    EXPECT_EQ(lines(d / "profile_0.csv")[0], "x,Re u,Im u,|u|");
    EXPECT_TRUE(fs::exists(d / "profile_1.csv"));
}

TEST(Pseudomode, RejectsThetaOutsideSector) {
    const fs::path d = scratch();
    std::ostringstream log;
    RunConfig c = base(d);
    c.thetas = {std::numbers::pi / 4};
    EXPECT_THROW((void)cmd_pseudomode(c, log), ConfigError);
    c.thetas = {0.005};
    EXPECT_THROW((void)cmd_pseudomode(c, log), ConfigError);
    c = base(d);
    c.lambdas = {1.0};
    EXPECT_THROW((void)cmd_pseudomode(c, log), ConfigError);
}

TEST(ResolventGrid, TableAndSummary) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.re_min = 100.0;
    c.re_max = 300.0;
    c.im_min = 0.0;
    c.im_max = 100.0;
    c.n_re = 3;
    c.n_im = 2;
    c.n_basis = 64;
    std::ostringstream log;
    ASSERT_EQ(cmd_resolvent_grid(c, log), kOk) << log.str();
    const auto L = lines(d / "resolvent_grid.csv");
    ASSERT_EQ(L.size(), 7u);
    EXPECT_EQ(L[0], "Re E,Im E,log10 norm_estimate,converged,masked");
    // row-major in Im E
    EXPECT_EQ(fields(L[1])[0], 100.0);
    EXPECT_EQ(fields(L[2])[0], 200.0);
    EXPECT_EQ(fields(L[4])[1], 100.0);
    for (std::size_t i = 1; i < L.size(); ++i) {
        const auto f = fields(L[i]);
        EXPECT_EQ(f[4], 0.0);
        EXPECT_GT(f[2], -3.0);
    }
    const auto j = read_json(d / "resolvent_grid_summary.json");
    EXPECT_TRUE(j["symmetry_defect"].is_null());
    EXPECT_EQ(j["level_lines"].size(), 2u);
    EXPECT_GE(j["eigenvalues_masked"].get<int>(), 1);
}

TEST(ResolventGrid, MirrorGridReportsSymmetry) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.re_min = c.im_min = -30.0;
    c.re_max = c.im_max = 30.0;
    c.n_re = c.n_im = 4;
    c.n_basis = 64;
    std::ostringstream log;
    ASSERT_EQ(cmd_resolvent_grid(c, log), kOk) << log.str();
    const auto j = read_json(d / "resolvent_grid_summary.json");
    ASSERT_TRUE(j["symmetry_defect"].is_number());
    EXPECT_LE(j["symmetry_defect"].get<double>(), 0.02);
    EXPECT_TRUE(j["symmetry_pass"].get<bool>());
}

TEST(ResolventGrid, RejectsBadGrid) {
    const fs::path d = scratch();
    std::ostringstream log;
    RunConfig c = base(d);
    c.n_basis = 16;
    EXPECT_THROW((void)cmd_resolvent_grid(c, log), ConfigError);
    c = base(d);
    c.re_min = 10.0;
    c.re_max = 0.0;
    EXPECT_THROW((void)cmd_resolvent_grid(c, log), ConfigError);
}

TEST(SvDecay, TableAndSummary) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.nodes = 256;
    std::ostringstream log;
    ASSERT_EQ(cmd_sv_decay(c, log), kOk) << log.str();
    const auto L = lines(d / "sv_decay.csv");
    ASSERT_EQ(L.size(), 257u);
    EXPECT_EQ(L[0], "n,σ_n");
    for (std::size_t i = 2; i < L.size(); ++i) EXPECT_LE(fields(L[i])[1], fields(L[i - 1])[1]);
    const auto j = read_json(d / "sv_decay.json");
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_LE(j["slope"].get<double>(), -1.3);
    EXPECT_EQ(j["sigma_1"].get<double>(), fields(L[1])[1]);
    c.nodes = 100;
    EXPECT_THROW((void)cmd_sv_decay(c, log), ConfigError);
}

TEST(BesselCheck, Report) {
    const fs::path d = scratch();
    RunConfig c = base(d);
    c.samples = 20;
    c.seed = 7;
    std::ostringstream log;
    ASSERT_EQ(cmd_bessel_check(c, log), kOk) << log.str();
    const auto j = read_json(d / "bessel_check.json");
    EXPECT_TRUE(j["all_passed"].get<bool>());
    EXPECT_EQ(j["seed"], 7);
    std::set<std::string> names;
    for (const auto& ch : j["checks"]) {
        names.insert(ch["name"].get<std::string>());
        EXPECT_TRUE(ch["passed"].get<bool>()) << ch.dump();
    }
    for (const char* n : {"conjugation", "rotation", "growth_bound"}) EXPECT_TRUE(names.count(n)) << n;
    const std::string first = slurp(d / "bessel_check.json");
    ASSERT_EQ(cmd_bessel_check(c, log), kOk);
    EXPECT_EQ(slurp(d / "bessel_check.json"), first);
}

TEST(Binary, ExitCodes) {
    const fs::path d = scratch();
    const std::string out = " --out " + d.string();
    EXPECT_EQ(run("bessel-check --samples 5" + out), 0);
    EXPECT_EQ(run("--epsilon 2 spectrum --count 1" + out), kConfigError);
    EXPECT_EQ(run("spectrum --count 1 --epsilon 0" + out), kConfigError);
    EXPECT_EQ(run("no-such-command" + out), kConfigError);
    EXPECT_EQ(run(out), kConfigError);
    EXPECT_EQ(run("pseudomode --theta 0.9" + out), kConfigError);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Binary, WritesSpectrum) {
    const fs::path d = scratch();
    ASSERT_EQ(run("spectrum --count 2 --r 1 --out " + d.string()), 0);
    const auto L = lines(d / "spectrum.csv");
    ASSERT_EQ(L.size(), 4u);
    EXPECT_EQ(L[0], "index,Re E,Im E,mismatch_residual,imag_purity");
}

TEST(Binary, ConfigFileAndOverride) {
    const fs::path d = scratch();
    {
        std::ofstream f(d / "bad.toml");
        f << "epsilon = 2.0\n";
    }
    const std::string out = " --out " + d.string();
    EXPECT_EQ(run("--config " + (d / "bad.toml").string() + " spectrum --count 1 --epsilon 0.25" + out), 0);
    EXPECT_EQ(run("--config " + (d / "bad.toml").string() + " spectrum --count 1" + out), kConfigError);
    // a saved configuration reproduces the run
    ASSERT_EQ(run("--epsilon 0.3 --save-config " + (d / "saved.toml").string() + " spectrum --count 2" + out), 0);
    const std::string first = slurp(d / "spectrum.csv");
    fs::remove(d / "spectrum.csv");
    ASSERT_EQ(run("--config " + (d / "saved.toml").string() + " spectrum --count 2" + out), 0);
    EXPECT_EQ(slurp(d / "spectrum.csv"), first);
    // list-valued options survive the round trip too
    ASSERT_EQ(run("--r 1,0.5 --save-config " + (d / "pm.toml").string() + " pseudomode --lambda 30,40 --theta 0.3" + out),
              0);
    const std::string pm = slurp(d / "pseudomode.csv");
    fs::remove(d / "pseudomode.csv");
    ASSERT_EQ(run("--config " + (d / "pm.toml").string() + " pseudomode" + out), 0);
    EXPECT_EQ(slurp(d / "pseudomode.csv"), pm);
    EXPECT_EQ(lines(d / "pseudomode.csv").size(), 3u);
}
