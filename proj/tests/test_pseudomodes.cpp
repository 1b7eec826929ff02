#include <gtest/gtest.h>

#include <numbers>

#include "singsl/fit.hpp"
#include "singsl/pseudomodes.hpp"
#include "support.hpp"

using namespace singsl;
using oracle::rel;

namespace {
const double pi = std::numbers::pi;

const TransformedProblem& linear() {
    static const TransformedProblem tp(build_field(0.25, {}));
    return tp;
}
const TransformedProblem& cubic() {
    static const TransformedProblem tp(build_field(0.25, {1.0}));
    return tp;
}

const std::vector<double> kLambdas{30, 50, 80, 120};
const std::vector<double> kThetas{pi / 16, pi / 8, 3 * pi / 16};
}  // namespace

TEST(BumpPoly, EndValues) {
    EXPECT_EQ(bump_poly(0.0).p, 1.0);
    EXPECT_EQ(bump_poly(1.0).p, 0.0);
    for (double x : {1e-9, 1.0 - 1e-9}) {
        EXPECT_NEAR(bump_poly(x).dp, 0.0, 1e-15);
        EXPECT_NEAR(bump_poly(x).d2p, 0.0, 1e-7);
    }
}

TEST(BumpPoly, MonotoneWithMaxSlopeFifteenEighths) {
    double prev = 1.0, mx = 0.0;
    for (int i = 1; i <= 10000; ++i) {
        const BumpValue b = bump_poly(i / 10000.0);
        EXPECT_LE(b.p, prev);
        prev = b.p;
        mx = std::max(mx, std::abs(b.dp));
    }
    EXPECT_NEAR(mx, 15.0 / 8.0, 1e-12);
    EXPECT_NEAR(std::abs(bump_poly(0.5).dp), 15.0 / 8.0, 1e-15);
}

TEST(BumpPoly, DerivativesMatchDifferences) {
    for (double x : {0.1, 0.37, 0.5, 0.81}) {
        EXPECT_NEAR(bump_poly(x).dp, oracle::d1([](double s) { return bump_poly(s).p; }, x, 1e-3), 1e-10);
        EXPECT_NEAR(bump_poly(x).d2p, oracle::d1([](double s) { return bump_poly(s).dp; }, x, 1e-3), 1e-9);
    }
}

TEST(Periodiser, PiecesAndBoundaryRatio) {
    const RegularSolution sol(linear(), SpectralPoint::from_polar(2.0, 30.0, pi / 8).E);
    const Periodiser per = build_periodiser(sol);
    EXPECT_EQ(eval_chi(per, -1.0).chi, cplx(1.0, 0.0));
    EXPECT_EQ(eval_chi(per, 1.0).chi, per.boundary_ratio);
    EXPECT_LE(rel(per.boundary_ratio, sol.phi(-1.0) / sol.phi(1.0)), 1e-13);
    EXPECT_DOUBLE_EQ(per.a, -2.0 / 900.0);
    EXPECT_DOUBLE_EQ(per.b, -1.0 / 900.0);
}

TEST(Periodiser, RatioInsideUnitDiscOnSector) {
    gen::Gen g(41);
    for (int k = 0; k < 40; ++k) {
        const double lm = g.uniform(5.0, 300.0), th = g.uniform(0.02, pi / 4 - 0.02);
        for (const TransformedProblem* tp : {&linear(), &cubic()}) {
            const Periodiser per = build_periodiser(*tp, SpectralPoint::from_polar(tp->m(), lm, th).E);
            EXPECT_LT(std::abs(per.boundary_ratio), 1.0) << lm << " " << th;
        }
    }
}

TEST(Periodiser, SmoothJunctions) {
    const Periodiser per = build_periodiser(linear(), SpectralPoint::from_polar(2.0, 40.0, 0.3).E);
    for (double x0 : {per.a, per.b}) {
        const double h = 1e-9 * std::abs(x0);
        const ChiValue l = eval_chi(per, x0 - h), r = eval_chi(per, x0 + h);
        const double l2 = per.lambda_mag * per.lambda_mag;
        EXPECT_LE(std::abs(l.chi - r.chi), 1e-12);
        EXPECT_LE(std::abs(l.dchi - r.dchi), 1e-10 * l2);
        EXPECT_LE(std::abs(l.d2chi - r.d2chi), 1e-6 * l2 * l2);
    }
}

TEST(Periodiser, DerivativeBounds) {
    gen::Gen g(42);
    for (int k = 0; k < 20; ++k) {
        const double lm = g.uniform(5.0, 200.0), th = g.uniform(0.02, pi / 4 - 0.02);
        const TransformedProblem& tp = k % 2 ? cubic() : linear();
        const Periodiser per = build_periodiser(tp, SpectralPoint::from_polar(tp.m(), lm, th).E);
        const double l2 = lm * lm;
        for (int i = 0; i <= 1000; ++i) {
            const ChiValue c = eval_chi(per, per.a + (per.b - per.a) * i / 1000.0);
            EXPECT_LE(std::abs(c.dchi), 15.0 / 4.0 * l2);
            EXPECT_LE(std::abs(c.d2chi), 12.0 * l2 * l2);
        }
    }
}

TEST(Periodiser, RejectsSmallLambda) {
    EXPECT_THROW((void)build_periodiser(linear(), SpectralPoint::from_polar(2.0, 1.5, 0.3).E), std::domain_error);
    EXPECT_THROW((void)build_pseudomode_polar(linear(), 1.5, 0.3), std::domain_error);
}

TEST(Pseudomode, ReferenceConstruction) {
    const cplx lam{-7.0, 9.0};
    const SpectralPoint p = SpectralPoint::from_lambda(2.0, lam);
    EXPECT_LE(std::abs(p.E - cplx{4.0, 15.75}), 1e-14);
    const RegularSolution sol(linear(), p.E);
    const Pseudomode pm = build_pseudomode(sol);
    const Periodiser& per = pm.periodiser;
    EXPECT_NEAR(per.a, -2.0 / 130.0, 1e-15);
    EXPECT_NEAR(per.b, -1.0 / 130.0, 1e-15);
    // Dom(L): u(-1) = u(1)
    const cplx um = eval_chi(per, -1.0).chi * sol.phi(-1.0), up = eval_chi(per, 1.0).chi * sol.phi(1.0);
    EXPECT_LE(rel(um, up), 1e-14);
    // continuity of the sampled profile: neighbouring samples close relative to the spacing
    const auto& u = pm.u;
    double jump = 0.0;
    for (std::size_t i = 1; i < u.x.size(); ++i)
        jump = std::max(jump, std::abs(u.values[i] - u.values[i - 1]) / (u.x[i] - u.x[i - 1]));
    EXPECT_LT(jump, 20.0 * 130.0);
    // the blend sits strictly inside [-1, 0)
    EXPECT_GT(per.a, -1.0);
    EXPECT_LT(per.b, 0.0);
}

TEST(Pseudomode, UnitNormSamples) {
    const Pseudomode pm = build_pseudomode_polar(linear(), 50.0, pi / 8);
    double acc = 0.0;
    for (std::size_t i = 0; i < pm.u.x.size(); ++i) acc += pm.u.w[i] * std::norm(pm.u.values[i]);
    EXPECT_NEAR(acc, 1.0, 1e-12);
}

TEST(Pseudomode, ResidualVanishesOffSupport) {
    for (const TransformedProblem* tp : {&linear(), &cubic()})
        for (double lm : {20.0, 80.0}) {
            const Pseudomode pm = build_pseudomode_polar(*tp, lm, pi / 8);
            // the junctions sit near 0 where Phi ~ 1, so |E u| ~ |E| there
            EXPECT_LE(pm.residual_outside / std::abs(pm.point.E), 1e-6) << lm;
        }
}

TEST(Pseudomode, ResidualAgainstDirectDifference) {
    // (L - E)u by finite differences of the flux chi (f Phi' + Phi) + f chi' Phi, at blend points
    const RegularSolution sol(cubic(), SpectralPoint::from_polar(cubic().m(), 25.0, 0.4).E);
    const Periodiser per = build_periodiser(sol);
    const auto& F = cubic().field();
    auto flux = [&](double x) {
        const ChiValue c = eval_chi(per, x);
        const auto [v, d] = sol.eval(x);
        return F.f(x) * (c.dchi * v.value() + c.chi * d.value()) + c.chi * v.value();
    };
    for (double s : {0.2, 0.5, 0.8}) {
        const double x = per.a + s * (per.b - per.a), h = 1e-3 * (per.b - per.a);
        const auto [v, d] = sol.eval(x);
        const ChiValue c = eval_chi(per, x);
        const cplx fd = oracle::d1(flux, x, h) - sol.point().E * c.chi * v.value();
        const cplx formula =
            v.value() * (F.f(x) * c.d2chi + (F.f_prime(x) + 1.0) * c.dchi) + 2.0 * F.f(x) * c.dchi * d.value();
        EXPECT_LE(rel(formula, fd), 1e-6) << s;
    }
}

TEST(Pseudomode, FluxContinuousAtOrigin) {
    // chi is constant near 0, so this is the flux of Phi; the odd part 2 h E u(0) is removed
    const RegularSolution sol(cubic(), SpectralPoint::from_polar(cubic().m(), 40.0, pi / 8).E);
    const cplx E = sol.point().E;
    for (double h : {1e-4, 1e-5, 1e-6}) {
        const cplx jump = sol.flux_scaled(h).value() - sol.flux_scaled(-h).value() - 2.0 * h * E;
        EXPECT_LE(std::abs(jump), 1e-6) << h;
    }
}

TEST(BoundRhsLinear, ExplicitValue) {
    EXPECT_LE(std::abs(bound_rhs_linear(2.0, 50.0, pi / 8) / 24.3018981625837 - 1.0), 1e-13);
    EXPECT_LE(std::abs(std::exp(log_step2_lower(2.0, 50.0, pi / 8)) / 67.8433124717218 - 1.0), 1e-13);
    EXPECT_DOUBLE_EQ(step3_upper(2.0, 50.0), 50.0 * std::exp(0.5) * 20.0);
}

TEST(BoundRhsLinear, MonotoneDecreasing) {
    for (double th : kThetas) {
        double prev = bound_rhs_linear(2.0, 50.0, th);
        for (double lm = 51.0; lm <= 200.0; lm += 1.0) {
            const double b = bound_rhs_linear(2.0, lm, th);
            if (lm * std::sin(th) / std::numbers::sqrt2 > 2.0 * 3.5) {
                EXPECT_LT(b, prev) << lm << " " << th;
            }
            prev = b;
        }
    }
}

TEST(BoundRhsGeneral, LinearRateCollapses) {
    EXPECT_NEAR(linear().eval_tau(0.5), 1.0 / std::numbers::sqrt2, 1e-14);
    const double d0 = log_bound_rhs_general(linear(), 30.0, 0.3, 1.0) - log_bound_rhs_linear(2.0, 30.0, 0.3);
    for (double lm : {50.0, 120.0, 400.0})
        EXPECT_NEAR(log_bound_rhs_general(linear(), lm, 0.3, 1.0) - log_bound_rhs_linear(2.0, lm, 0.3), d0, 1e-9);
}

TEST(BoundRhsGeneral, CubicRateFromTau) {
    const double tau_half = oracle::Coefficients(0.25, {1.0}).tau(0.5);
    const double d = log_bound_rhs_general(cubic(), 80.0, 0.3, 1.0) - log_bound_rhs_general(cubic(), 81.0, 0.3, 1.0);
    const double expect = tau_half * std::sin(0.3) - (cubic().m() + 1.5) * std::log(81.0 / 80.0);
    EXPECT_NEAR(d, expect, 1e-9);
}

TEST(Pseudomode, LinearBoundOnGrid) {
    for (double lm : kLambdas)
        for (double th : kThetas) {
            const Pseudomode pm = build_pseudomode_polar(linear(), lm, th);
            EXPECT_LE(pm.log_ratio(), pm.log_bound_rhs) << lm << " " << th;
            EXPECT_GE(pm.log_norm_u, log_step2_lower(2.0, lm, th)) << lm << " " << th;
            EXPECT_LE(pm.norm_residual(), step3_upper(2.0, lm)) << lm << " " << th;
        }
}

TEST(Pseudomode, DerivativeBoundsOnQuadrature) {
    for (double lm : kLambdas) {
        const Pseudomode pm = build_pseudomode_polar(linear(), lm, pi / 16);
        EXPECT_LE(pm.sup_dchi, 15.0 / 4.0 * lm * lm);
        EXPECT_LE(pm.sup_d2chi, 12.0 * std::pow(lm, 4));
    }
}

TEST(Pseudomode, MassMigration) {
    EXPECT_GT(build_pseudomode_polar(linear(), 100.0, pi / 16).left_mass_fraction, 0.5);
    EXPECT_LT(build_pseudomode_polar(linear(), 10.0, pi / 16).left_mass_fraction, 0.5);
}

TEST(Pseudomode, QuadratureConverged) {
    PseudomodeOptions fine;
    fine.support_panels *= 2;
    fine.panel_phase /= 2;
    for (double lm : {30.0, 120.0}) {
        const Pseudomode a = build_pseudomode_polar(cubic(), lm, pi / 8), b = build_pseudomode_polar(cubic(), lm, pi / 8, fine);
        EXPECT_NEAR(a.log_norm_u, b.log_norm_u, 1e-10);
        EXPECT_NEAR(a.log_norm_residual, b.log_norm_residual, 1e-10);
    }
}

namespace {
detail::LineFit lower_bound_fit(double th, double power) {
    std::vector<double> x, y;
    for (double lm = 40.0; lm <= 120.0; lm += 10.0) {
        x.push_back(lm * std::sin(th) / std::numbers::sqrt2);
        y.push_back(log_resolvent_lower_bound(linear(), SpectralPoint::from_polar(2.0, lm, th).E) + power * std::log(lm));
    }
    return detail::fit_line(x, y);
}
}  // namespace

TEST(ResolventLower, SlopeOneAgainstBoundExponent) {
    for (double th : kThetas) {
        const auto fit = lower_bound_fit(th, 0.0);
        EXPECT_NEAR(fit.slope, 1.0, 0.1) << "theta=" << th;
        EXPECT_GE(fit.r2, 0.99) << th;
    }
}

TEST(ResolventLower, RateBetweenBoundAndMaximalGrowth) {
    // with the |lambda|^{m+3/2} prefactor removed the rate lies between the bound's
    // tau(1/2) sin(theta) and the growth tau(1) sin(theta) of |Phi(-1)|, a factor sqrt2 apart
    for (double th : kThetas) {
        const auto fit = lower_bound_fit(th, 3.5);
        EXPECT_GE(fit.slope, 1.0) << th;
        EXPECT_LE(fit.slope, std::numbers::sqrt2 + 0.02) << th;
        EXPECT_GE(fit.r2, 0.999) << th;
    }
}

TEST(ResolventLower, RateAboveAdmissibleConstant) {
    // Re-expressed in |E|^{1/2} |sin(alpha/2)|: rate >= eps^{1/2}/4
    std::vector<double> x, y;
    for (double absE = 100.0; absE <= 3600.0; absE *= 1.5) {
        const cplx E = std::polar(absE, pi / 4);
        x.push_back(std::sqrt(absE) * std::sin(pi / 8));
        y.push_back(log_resolvent_lower_bound(linear(), E));
    }
    const auto fit = detail::fit_line(x, y);
    EXPECT_GE(fit.slope, std::sqrt(0.25) / 4.0);
    EXPECT_GE(fit.r2, 0.99);
}

TEST(ResolventLower, GrowsAlongRays) {
    for (const TransformedProblem* tp : {&linear(), &cubic()})
        for (double alpha : {pi / 8, pi / 4, 3 * pi / 8}) {
            double prev = -1e300;
            for (double absE = 200.0; absE <= 12800.0; absE *= 2) {
                const double v = log_resolvent_lower_bound(*tp, std::polar(absE, alpha));
                EXPECT_GT(v, prev) << absE << " " << alpha;
                prev = v;
            }
        }
}

TEST(Calibration, CubicCoarseThenFine) {
    const CalibrationResult c = calibrate_Cf(cubic(), kLambdas, kThetas);
    EXPECT_GT(c.C_f, 0.0);
    EXPECT_TRUE(std::isfinite(c.C_f));
    EXPECT_EQ(c.lambda_grid, kLambdas);
    for (double lm = 30.0; lm <= 120.0; lm += 15.0)
        for (double th = pi / 16; th <= 3 * pi / 16 + 1e-12; th += pi / 32) {
            const Pseudomode pm = build_pseudomode_polar(cubic(), lm, th);
            EXPECT_LE(pm.log_ratio(), log_bound_rhs_general(cubic(), lm, th, c.C_f)) << lm << " " << th;
        }
}

TEST(Calibration, NonlinearBoundIsNaN) {
    EXPECT_TRUE(std::isnan(build_pseudomode_polar(cubic(), 30.0, pi / 8).log_bound_rhs));
}
