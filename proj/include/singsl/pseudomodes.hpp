#pragma once

// Pseudo-modes u = chi Phi.  chi is 1 left of -2/|lambda|^2, the constant
// Phi(-1)/Phi(1) right of -1/|lambda|^2, and a quintic blend in between, so
// u(-1) = u(1) and (L - E)u = Phi L[chi] + 2 f chi' Phi' lives on the blend.
//
// Norms are carried as logarithms: |u| reaches e^{|lambda| sin(theta)/sqrt 2}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "singsl/quadrature.hpp"
#include "singsl/solutions.hpp"

namespace singsl {

struct BumpValue {
    double p, dp, d2p;
};

/// p(x) = 1 - 10x^3 + 15x^4 - 6x^5 with derivatives; constant outside [0,1].
inline BumpValue bump_poly(double x) {
    if (x <= 0.0) return {1.0, 0.0, 0.0};
    if (x >= 1.0) return {0.0, 0.0, 0.0};
    const double x2 = x * x, x3 = x2 * x;
    return {1.0 - 10.0 * x3 + 15.0 * x3 * x - 6.0 * x3 * x2, -30.0 * x2 * (1.0 - x) * (1.0 - x),
            -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)};
}

struct Periodiser {
    double lambda_mag = 0.0;
    cplx boundary_ratio{1.0, 0.0};  // Phi(-1)/Phi(1)
    double a = 0.0;                 // -2/|lambda|^2
    double b = 0.0;                 // -1/|lambda|^2
};

struct ChiValue {
    cplx chi, dchi, d2chi;
};

inline ChiValue eval_chi(const Periodiser& per, double x) {
    const double l2 = per.lambda_mag * per.lambda_mag;
    const cplx B = per.boundary_ratio;
    if (x <= per.a) return {1.0, 0.0, 0.0};
    if (x >= per.b) return {B, 0.0, 0.0};
    const BumpValue p = bump_poly(l2 * x + 2.0);
    const cplx c = 1.0 - B;
    return {c * p.p + B, c * (l2 * p.dp), c * (l2 * l2 * p.d2p)};
}

inline Periodiser build_periodiser(const RegularSolution& sol) {
    const double lm = std::abs(sol.point().lambda);
    if (lm < 2.0) throw std::domain_error("build_periodiser: need |lambda| >= 2 so the blend lies inside [-1,0)");
    const Scaled p1 = sol.phi_scaled(1.0);
    if (p1.mant == cplx{0.0, 0.0}) throw std::domain_error("build_periodiser: Phi(1;E) = 0, perturb E");
    Periodiser per;
    per.lambda_mag = lm;
    per.boundary_ratio = ratio(sol.phi_scaled(-1.0), p1);
    per.a = -2.0 / (lm * lm);
    per.b = -1.0 / (lm * lm);
    return per;
}

inline Periodiser build_periodiser(const TransformedProblem& tp, cplx E) {
    return build_periodiser(RegularSolution(tp, E));
}

struct PseudomodeOptions {
    int support_panels = 12;   // Gauss panels on the blend interval
    int order = 20;
    double panel_phase = 4.0;  // |lambda| ds per panel in s = sqrt|x|
    bool keep_samples = true;
};

struct Pseudomode {
    SpectralPoint point;
    Periodiser periodiser;
    GridFunction u;  // samples of u / ||u|| (unit L^2 norm)
    double log_norm_u = 0.0;
    double log_norm_residual = 0.0;
    double log_bound_rhs = 0.0;  // explicit bound for linear f, NaN otherwise
    double residual_outside = 0.0;
    double left_mass_fraction = 0.0;  // share of ||u||^2 on [-1,-1/2]
    double sup_dchi = 0.0, sup_d2chi = 0.0;

    [[nodiscard]] double log_ratio() const { return log_norm_residual - log_norm_u; }
    [[nodiscard]] double log_resolvent_lower() const { return log_norm_u - log_norm_residual; }
    [[nodiscard]] double norm_u() const { return std::exp(log_norm_u); }
    [[nodiscard]] double norm_residual() const { return std::exp(log_norm_residual); }
    [[nodiscard]] double ratio() const { return std::exp(log_ratio()); }
    [[nodiscard]] double bound_rhs() const { return std::exp(log_bound_rhs); }
    [[nodiscard]] double resolvent_lower() const { return std::exp(log_resolvent_lower()); }
};

/// log of 2 sqrt(2 pi) e^{1/2} (32/m + 4) / (2^m Gamma(m+1)) |lambda|^{m+3/2} e^{-|lambda| sin(theta)/sqrt 2}.
inline double log_bound_rhs_linear(double m, double lambda_mag, double theta) {
    return std::log(2.0 * std::sqrt(2.0 * std::numbers::pi)) + 0.5 + std::log(32.0 / m + 4.0) -
           m * std::log(2.0) - std::lgamma(m + 1.0) + (m + 1.5) * std::log(lambda_mag) -
           lambda_mag * std::sin(theta) / std::numbers::sqrt2;
}
inline double bound_rhs_linear(double m, double lambda_mag, double theta) {
    return std::exp(log_bound_rhs_linear(m, lambda_mag, theta));
}

/// log of C_f |lambda|^{m+3/2} e^{-tau(1/2) |lambda| sin theta}.
inline double log_bound_rhs_general(const TransformedProblem& tp, double lambda_mag, double theta, double C_f) {
    return std::log(C_f) + (tp.m() + 1.5) * std::log(lambda_mag) - tp.eval_tau(0.5) * lambda_mag * std::sin(theta);
}
inline double bound_rhs_general(const TransformedProblem& tp, double lambda_mag, double theta, double C_f) {
    return std::exp(log_bound_rhs_general(tp, lambda_mag, theta, C_f));
}

/// Step-2 lower bound on ||u|| (linear f), as a logarithm.
inline double log_step2_lower(double m, double lambda_mag, double theta) {
    return m * std::log(2.0) + std::lgamma(m + 1.0) - std::log(2.0 * std::sqrt(2.0 * std::numbers::pi)) -
           (m + 0.5) * std::log(lambda_mag) + lambda_mag * std::sin(theta) / std::numbers::sqrt2;
}

/// Step-3 upper bound on ||(L - E)u|| (linear f).
inline double step3_upper(double m, double lambda_mag) {
    return lambda_mag * std::exp(0.5) * (32.0 / m + 4.0);
}

namespace detail {

/// Gauss nodes in s on [s0, s1] mapped to x = sign * s^2 with dx weights.
inline void add_sqrt_panels(QuadratureGrid& g, double s0, double s1, int panels, int order, double sign) {
    std::vector<double> br(panels + 1);
    for (int k = 0; k <= panels; ++k) br[k] = s0 + (s1 - s0) * k / panels;
    const QuadratureGrid sg = composite_gauss(br, order);
    for (std::size_t i = 0; i < sg.size(); ++i) {
        const double s = sg.nodes[i];
        g.nodes.push_back(sign * s * s);
        g.weights.push_back(2.0 * s * sg.weights[i]);
    }
}

inline double log_sum_exp_norm(const std::vector<Scaled>& v, const std::vector<double>& w, double& ref) {
    ref = -std::numeric_limits<double>::infinity();
    for (const auto& s : v) ref = std::max(ref, s.log_abs());
    if (!std::isfinite(ref)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * std::norm(v[i].relative_to(ref));
    return ref + 0.5 * std::log(acc);
}

}  // namespace detail

inline Pseudomode build_pseudomode(const RegularSolution& sol, const PseudomodeOptions& opt = {}) {
    const TransformedProblem& tp = sol.problem();
    const auto& F = tp.field();
    Pseudomode pm;
    pm.point = sol.point();
    pm.periodiser = build_periodiser(sol);
    const Periodiser& per = pm.periodiser;
    const double lm = per.lambda_mag;

    // Residual on the blend interval, in x.
    {
        const QuadratureGrid g = composite_gauss(graded_breaks(per.a, per.b, opt.support_panels, 1.0), opt.order);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.nodes[i];
            const auto [phi, dphi] = sol.eval(x);
            const ChiValue c = eval_chi(per, x);
            const double f = F.f(x), fp = F.f_prime(x);
            const cplx Lchi = f * c.d2chi + (fp + 1.0) * c.dchi;
            const cplx res = phi.value() * Lchi + 2.0 * f * c.dchi * dphi.value();
            acc += g.weights[i] * std::norm(res);
            pm.sup_dchi = std::max(pm.sup_dchi, std::abs(c.dchi));
            pm.sup_d2chi = std::max(pm.sup_d2chi, std::abs(c.d2chi));
        }
        pm.log_norm_residual = 0.5 * std::log(acc);
        // (L - E)u off the blend: u is a multiple of Phi, so only the discrete
        // ODE residual could show here; probe it at the two junctions.
        const double h = 1e-3 * (per.b - per.a);
        for (double x0 : {per.a - 4.0 * h, per.b + 4.0 * h}) {
            auto flux = [&](double x) {
                const auto [v, d] = sol.eval(x);
                return (eval_chi(per, x).chi * (F.f(x) * d.value() + v.value()));
            };
            const cplx dflux = (flux(x0 - 2 * h) - 8.0 * flux(x0 - h) + 8.0 * flux(x0 + h) - flux(x0 + 2 * h)) / (12.0 * h);
            const cplx u0 = eval_chi(per, x0).chi * sol.phi(x0);
            pm.residual_outside = std::max(pm.residual_outside, std::abs(dflux - pm.point.E * u0));
        }
    }

    // ||u|| over [-1, 1] with s = sqrt|x| panels; the blend interval sits between s = 1/|lambda| and sqrt2/|lambda|.
    QuadratureGrid g;
    const int panels = std::max(8, static_cast<int>(std::ceil(lm / opt.panel_phase)));
    const double sb = 1.0 / lm, sa = std::numbers::sqrt2 / lm;
    detail::add_sqrt_panels(g, sa, 1.0, panels, opt.order, -1.0);
    {
        const QuadratureGrid gs = composite_gauss(graded_breaks(per.a, per.b, opt.support_panels, 1.0), opt.order);
        g.nodes.insert(g.nodes.end(), gs.nodes.begin(), gs.nodes.end());
        g.weights.insert(g.weights.end(), gs.weights.begin(), gs.weights.end());
    }
    detail::add_sqrt_panels(g, 0.0, sb, 2, opt.order, -1.0);
    detail::add_sqrt_panels(g, 0.0, 1.0, panels, opt.order, 1.0);
    // sort by x for the exported profile
    std::vector<std::size_t> idx(g.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return g.nodes[i] < g.nodes[j]; });
    QuadratureGrid sorted;
    for (std::size_t i : idx) {
        sorted.nodes.push_back(g.nodes[i]);
        sorted.weights.push_back(g.weights[i]);
    }
    std::vector<Scaled> u(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double x = sorted.nodes[i];
        u[i] = sol.phi_scaled(x) * eval_chi(per, x).chi;
    }
    double ref = 0.0;
    pm.log_norm_u = detail::log_sum_exp_norm(u, sorted.weights, ref);
    double left = 0.0, total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double v = sorted.weights[i] * std::norm(u[i].relative_to(ref));
        total += v;
        if (sorted.nodes[i] <= -0.5) left += v;
    }
    pm.left_mass_fraction = left / total;
    if (opt.keep_samples) {
        pm.u = GridFunction(sorted);
        for (std::size_t i = 0; i < u.size(); ++i) pm.u.values[i] = u[i].relative_to(pm.log_norm_u);
    }
    pm.log_bound_rhs = F.is_linear() ? log_bound_rhs_linear(tp.m(), lm, pm.point.theta)
                                     : std::numeric_limits<double>::quiet_NaN();
    return pm;
}

inline Pseudomode build_pseudomode(const TransformedProblem& tp, cplx E, const PseudomodeOptions& opt = {}) {
    const SpectralPoint p = SpectralPoint::from_E(tp.m(), E);
    if (std::abs(p.lambda) < 2.0) throw std::domain_error("build_pseudomode: need |lambda| >= 2");
    return build_pseudomode(RegularSolution(tp, E), opt);
}

/// Pseudo-mode at lambda = |lambda| e^{i(pi/2 + theta)}.
inline Pseudomode build_pseudomode_polar(const TransformedProblem& tp, double lambda_mag, double theta,
                                         const PseudomodeOptions& opt = {}) {
    return build_pseudomode(tp, SpectralPoint::from_polar(tp.m(), lambda_mag, theta).E, opt);
}

/// ||u|| / ||(L - E)u||, a lower bound for ||(L - E)^{-1}||, as a logarithm.
inline double log_resolvent_lower_bound(const TransformedProblem& tp, cplx E) {
    PseudomodeOptions o;
    o.keep_samples = false;
    return build_pseudomode(tp, E, o).log_resolvent_lower();
}
inline double resolvent_lower_bound(const TransformedProblem& tp, cplx E) {
    return std::exp(log_resolvent_lower_bound(tp, E));
}

struct CalibrationResult {
    double C_f = 0.0;
    std::vector<double> lambda_grid, theta_grid;
};

/// C_f = max over the grid of ratio / (|lambda|^{m+3/2} e^{-tau(1/2)|lambda| sin theta}).
inline CalibrationResult calibrate_Cf(const TransformedProblem& tp, const std::vector<double>& lambda_grid,
                                      const std::vector<double>& theta_grid) {
    CalibrationResult c;
    c.lambda_grid = lambda_grid;
    c.theta_grid = theta_grid;
    double best = -std::numeric_limits<double>::infinity();
    PseudomodeOptions o;
    o.keep_samples = false;
    for (double lm : lambda_grid)
        for (double th : theta_grid) {
            const Pseudomode pm = build_pseudomode_polar(tp, lm, th, o);
            best = std::max(best, pm.log_ratio() - log_bound_rhs_general(tp, lm, th, 1.0));
        }
    c.C_f = std::exp(best);
    return c;
}

}  // namespace singsl
