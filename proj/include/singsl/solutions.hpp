#pragma once

// Regular solution Phi(x;E) of (f u' + u)' = E u, Phi(0) = 1.
//
// For x > 0,  Phi(x) = w^{-1/4} y^{-(l+1)} Z(tau(x)) with Z the principal
// solution of the Liouville equation.  The table stores Y = Z / t^{l+1},
// which solves
//
//     Y'' + 2(l+1)/t Y' = (q(t) - lambda^2) Y,   Y(0) = 1,
//
// so that for q = 0 it is exactly Lambda_m(lambda t).  Working with Y keeps
// Phi' free of the 1/x cancellation between the prefactor and Z'.
// For x < 0 the parity rule Phi(x;E) = Phi(-x;-E) is used.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "singsl/coefficients.hpp"
#include "singsl/scaled.hpp"
#include "singsl/special_functions.hpp"

namespace singsl {

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BesselZeroError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// E together with lambda = 2 i sqrt(m E) (so lambda^2 = -4 m E),
/// lambda = |lambda| e^{i(pi/2 + theta)} and alpha = arg E.
struct SpectralPoint {
    cplx E{0.0, 0.0};
    cplx lambda{0.0, 0.0};
    double theta = 0.0;
    double alpha = 0.0;

    static SpectralPoint from_E(double m, cplx E) {
        SpectralPoint p;
        p.E = E;
        p.lambda = cplx{0.0, 2.0} * std::sqrt(m * E);
        if (E != cplx{0.0, 0.0}) {
            p.alpha = std::arg(E);
            p.theta = std::arg(p.lambda) - std::numbers::pi / 2.0;
        }
        return p;
    }
    static SpectralPoint from_lambda(double m, cplx lambda) {
        SpectralPoint p = from_E(m, -lambda * lambda / (4.0 * m));
        p.lambda = lambda;  // keep the caller's branch
        if (lambda != cplx{0.0, 0.0}) p.theta = std::arg(lambda) - std::numbers::pi / 2.0;
        return p;
    }
    static SpectralPoint from_polar(double m, double lambda_mag, double theta) {
        return from_lambda(m, std::polar(lambda_mag, std::numbers::pi / 2.0 + theta));
    }
};

/// Closed-form regular solution for r = 0:
/// sum_k (-1)^k Gamma(m+1)/(k! Gamma(m+k+1)) (lambda/2)^{2k} x^k = Lambda_m(lambda sqrt(x)).
inline Scaled phi_linear_scaled(double m, cplx E, double x) {
    const cplx lam = SpectralPoint::from_E(m, E).lambda;
    const cplx z = x >= 0.0 ? lam * std::sqrt(x) : cplx{0.0, 1.0} * lam * std::sqrt(-x);
    return bessel_lambda_scaled(m, z);
}
inline cplx phi_linear(double m, cplx E, double x) { return phi_linear_scaled(m, E, x).value(); }

/// d/dx of phi_linear: m E/(m+1) Lambda_{m+1}(lambda sqrt(x)); entire in x.
inline Scaled phi_linear_prime_scaled(double m, cplx E, double x) {
    const cplx lam = SpectralPoint::from_E(m, E).lambda;
    const cplx z = x >= 0.0 ? lam * std::sqrt(x) : cplx{0.0, 1.0} * lam * std::sqrt(-x);
    return bessel_lambda_scaled(m + 1.0, z) * (m * E / (m + 1.0));
}

/// Z_0(t) = t^{l+1} Lambda_m(lambda t), the q = 0 principal solution.
inline Scaled z0_scaled(double m, cplx lambda, double t) {
    const Scaled lam = bessel_lambda_scaled(m, lambda * t);
    return Scaled{lam.mant, lam.log_scale + (m + 0.5) * std::log(t)};
}

/// t^2 coefficient of Y = Z / t^{l+1} at the origin.
inline cplx frobenius_c1(double ell, double q0, cplx lambda2) { return (q0 - lambda2) / (4.0 * ell + 6.0); }

struct SolverOptions {
    double t_small = 1e-3;   // seed point for the regular solution
    double t_floor = 1e-6;   // inner end of the second-solution table
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double phase_step = 0.1;  // |lambda| dt per table interval
};

enum class SolutionMethod { Auto, ClosedForm, Integrated };

namespace detail {

/// Coefficients of y'' = a(t) y + b(t) y' and their t-derivatives.
struct LinearCoeffs {
    cplx a, da;
    double b, db;
};

using ode_state = std::array<double, 4>;

/// Dense table of a solution of y'' = a y + b y' in scaled form, with
/// quintic Hermite interpolation for y and y'.
class OdeTable {
public:
    using CoeffFn = std::function<LinearCoeffs(double)>;

    OdeTable() = default;

    /// Integrate from grid.front() to grid.back() (either direction).
    OdeTable(CoeffFn coeffs, std::vector<double> grid, cplx y0, cplx dy0, double k_scale, const SolverOptions& opt)
        : coeffs_(std::move(coeffs)), t_(std::move(grid)) {
        namespace ode = boost::numeric::odeint;
        const std::size_t n = t_.size();
        y_.resize(n);
        dy_.resize(n);
        d2_.resize(n);
        d3_.resize(n);
        s_.resize(n);
        double scale = 0.0;
        cplx y = y0, dy = dy0;
        auto store = [&](std::size_t k) {
            const double nrm = std::abs(y) + std::abs(dy) / k_scale;
            if (!(nrm > 0.0) || !std::isfinite(nrm)) throw IntegrationError("ODE solution degenerated");
            y /= nrm;
            dy /= nrm;
            scale += std::log(nrm);
            y_[k] = y;
            dy_[k] = dy;
            s_[k] = scale;
            const LinearCoeffs c = coeffs_(t_[k]);
            d2_[k] = c.a * y + c.b * dy;
            d3_[k] = c.da * y + c.a * dy + c.db * dy + c.b * d2_[k];
        };
        store(0);
        auto sys = [this](const ode_state& x, ode_state& dxdt, double t) {
            const LinearCoeffs c = coeffs_(t);
            const cplx yy{x[0], x[1]}, dd{x[2], x[3]};
            const cplx acc = c.a * yy + c.b * dd;
            dxdt = {x[2], x[3], acc.real(), acc.imag()};
        };
        auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_fehlberg78<ode_state>());
        for (std::size_t k = 0; k + 1 < n; ++k) {
            ode_state x{y.real(), y.imag(), dy.real(), dy.imag()};
            const double h = t_[k + 1] - t_[k];
            try {
                ode::integrate_adaptive(stepper, sys, x, t_[k], t_[k + 1], h);
            } catch (const std::exception& e) {
                throw IntegrationError(std::string("step control failed: ") + e.what());
            }
            y = {x[0], x[1]};
            dy = {x[2], x[3]};
            store(k + 1);
        }
        ascending_ = t_.back() > t_.front();
    }

    [[nodiscard]] double t_min() const { return ascending_ ? t_.front() : t_.back(); }
    [[nodiscard]] double t_max() const { return ascending_ ? t_.back() : t_.front(); }
    [[nodiscard]] bool empty() const { return t_.empty(); }

    /// (y, y') at t inside the table range.
    [[nodiscard]] std::pair<Scaled, Scaled> eval(double t) const {
        const std::size_t n = t_.size();
        if (t < t_min() * (1.0 - 1e-13) || t > t_max() * (1.0 + 1e-13))
            throw std::domain_error("OdeTable: t outside table range");
        // index k with node k and k+1 bracketing t
        std::size_t k;
        if (ascending_) {
            k = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
            k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
        } else {
            k = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t, std::greater<>()) - t_.begin());
            k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
        }
        const double h = t_[k + 1] - t_[k];
        const double u = (t - t_[k]) / h;
        const double rel = std::exp(s_[k + 1] - s_[k]);
        const cplx y0 = y_[k], y1 = y_[k + 1] * rel;
        const cplx p0 = dy_[k], p1 = dy_[k + 1] * rel;
        const cplx a0 = d2_[k], a1 = d2_[k + 1] * rel;
        const cplx b0 = d3_[k], b1 = d3_[k + 1] * rel;
        const cplx yv = hermite5(u, h, y0, p0, a0, y1, p1, a1);
        const cplx dv = hermite5(u, h, p0, a0, b0, p1, a1, b1);
        return {Scaled{yv, s_[k]}.normalized(), Scaled{dv, s_[k]}.normalized()};
    }

    /// Value data at the last node (scaled).
    [[nodiscard]] std::pair<Scaled, Scaled> back() const {
        return {Scaled{y_.back(), s_.back()}.normalized(), Scaled{dy_.back(), s_.back()}.normalized()};
    }

private:
    static cplx hermite5(double u, double h, cplx f0, cplx d0, cplx s0, cplx f1, cplx d1, cplx s1) {
        const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
        const double H0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        const double H1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        const double H2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
        const double H3 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        const double H4 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        const double H5 = 0.5 * (u3 - 2.0 * u4 + u5);
        return H0 * f0 + (H1 * h) * d0 + (H2 * h * h) * s0 + H3 * f1 + (H4 * h) * d1 + (H5 * h * h) * s1;
    }

    CoeffFn coeffs_;
    std::vector<double> t_;
    std::vector<cplx> y_, dy_, d2_, d3_;
    std::vector<double> s_;
    bool ascending_ = true;
};

/// Nodes from a to b (a < b): geometric near the origin, then steps of at most phase_step/k.
inline std::vector<double> table_grid(double a, double b, double k, double ell, const SolverOptions& opt) {
    const double hmax = std::min(0.02, opt.phase_step / std::max(k, 1.0));
    const double rel = 0.2 / (ell + 2.0);
    std::vector<double> g{a};
    double t = a;
    while (t < b) {
        const double h = std::min(rel * t, hmax);
        t = (b - t <= 1.5 * h) ? (b - t <= h ? b : t + 0.5 * (b - t)) : t + h;
        g.push_back(t);
    }
    g.back() = b;
    return g;
}

inline double wave_number(const TransformedProblem& tp, cplx lambda) {
    return std::max({std::abs(lambda), std::sqrt(tp.q_max()), 1.0});
}

}  // namespace detail

/// Regular solution on x in [0, 1] for one value of E.
class HalfLineSolution {
public:
    HalfLineSolution() = default;
    HalfLineSolution(const TransformedProblem& tp, cplx E, bool closed_form, const SolverOptions& opt)
        : tp_(&tp), point_(SpectralPoint::from_E(tp.m(), E)), closed_(closed_form), opt_(opt) {
        if (closed_) return;
        const double ell = tp.ell();
        lam2_ = point_.lambda * point_.lambda;
        kappa_ = std::sqrt(lam2_ - tp.q0());
        const double k = detail::wave_number(tp, point_.lambda);
        const double t0 = std::min(opt.t_small, 0.5 * tp.b2());
        const cplx l2 = lam2_;
        const TransformedProblem* p = tp_;
        auto coeffs = [p, l2, ell](double t) {
            const double q = p->eval_q(t), dq = p->eval_q_prime(t);
            return detail::LinearCoeffs{q - l2, cplx{dq, 0.0}, -2.0 * (ell + 1.0) / t, 2.0 * (ell + 1.0) / (t * t)};
        };
        const auto [y0, dy0] = seed(t0);
        table_ = detail::OdeTable(coeffs, detail::table_grid(t0, tp.b2(), k, ell, opt), y0, dy0, k, opt);
        t0_ = t0;
    }

    [[nodiscard]] const SpectralPoint& point() const { return point_; }
    [[nodiscard]] bool closed_form() const { return closed_; }
    [[nodiscard]] double m() const { return tp_->m(); }
    [[nodiscard]] double t_seed() const { return t0_; }

    /// Y(t) = Z(t)/t^{l+1} and Y'(t).
    [[nodiscard]] std::pair<Scaled, Scaled> y_of_t(double t) const {
        if (closed_) {
            const double m = tp_->m();
            const cplx lam = point_.lambda;
            const Scaled v = bessel_lambda_scaled(m, lam * t);
            const Scaled d = bessel_lambda_scaled(m + 1.0, lam * t) * (-lam * lam * t / (2.0 * (m + 1.0)));
            return {v, d};
        }
        if (t < t0_) {
            const auto [a, b] = seed(t);
            return {Scaled{a}, Scaled{b}};
        }
        return table_.eval(std::min(t, tp_->b2()));
    }

    /// Z(t) and Z'(t).
    [[nodiscard]] std::pair<Scaled, Scaled> z_of_t(double t) const {
        const double ell = tp_->ell();
        const auto [y, dy] = y_of_t(t);
        const Scaled pw{cplx{1.0, 0.0}, (ell + 1.0) * std::log(t)};
        const Scaled z = y * pw;
        const Scaled dz = (dy + y * cplx{(ell + 1.0) / t, 0.0}) * pw;
        return {z, dz};
    }

    /// (Phi, Phi') at x in [0, 1].
    [[nodiscard]] std::pair<Scaled, Scaled> phi(double x) const {
        if (x < 0.0 || x > 1.0 + 1e-14) throw std::domain_error("HalfLineSolution: x must lie in [0,1]");
        const double m = tp_->m();
        if (closed_) return {phi_linear_scaled(m, point_.E, x), phi_linear_prime_scaled(m, point_.E, x)};
        if (x == 0.0) return {Scaled{cplx{1.0, 0.0}}, Scaled{point_.E / (1.0 + 2.0 * tp_->epsilon())}};
        x = std::min(x, 1.0);
        const auto& F = tp_->field();
        const LiouvilleJet j = tp_->jet(x);
        const double ell = tp_->ell();
        // A = w^{-1/4} (tau/y)^{l+1};
        // d log A = -dlog_w/4 + (l+1)(tau'/tau - dlog_y), assembled without the 1/(2x) cancellation.
        const double s = std::sqrt(x), pr = F.p(x);
        const double delta = j.t - s;
        const double tau_term = (s * pr / (1.0 + std::sqrt(1.0 + pr)) - delta) / (2.0 * x * j.t);
        const double dlogA = -0.25 * j.dlog_w + (ell + 1.0) * (tau_term - 0.5 * F.r(x));
        const double logA = -0.25 * std::log(j.w) + (ell + 1.0) * (std::log(j.t) - std::log(j.y));
        const auto [Y, dY] = y_of_t(j.t);
        const Scaled A{cplx{1.0, 0.0}, logA};
        return {Y * A, (Y * cplx{dlogA, 0.0} + dY * cplx{j.tau_prime, 0.0}) * A};
    }

private:
    std::pair<cplx, cplx> seed(double t) const {
        const double m = tp_->m();
        const cplx z = kappa_ * t;
        const cplx v = bessel_lambda(m, z);
        const cplx d = bessel_lambda(m + 1.0, z) * (-kappa_ * kappa_ * t / (2.0 * (m + 1.0)));
        return {v, d};
    }

    const TransformedProblem* tp_ = nullptr;
    SpectralPoint point_;
    bool closed_ = false;
    SolverOptions opt_;
    cplx lam2_{0.0, 0.0}, kappa_{0.0, 0.0};
    double t0_ = 0.0;
    detail::OdeTable table_;
};

/// Phi(.;E) on [-1, 1]: the E table on x > 0 and the -E table on x < 0.
/// Holds a pointer to tp, which must outlive it.
class RegularSolution {
public:
    RegularSolution(const TransformedProblem& tp, cplx E, SolutionMethod method = SolutionMethod::Auto,
                    const SolverOptions& opt = {})
        : tp_(&tp), point_(SpectralPoint::from_E(tp.m(), E)) {
        if (method == SolutionMethod::ClosedForm && !tp.field().is_linear())
            throw std::invalid_argument("closed-form regular solution requires r = 0");
        closed_ = method == SolutionMethod::ClosedForm || (method == SolutionMethod::Auto && tp.field().is_linear());
        plus_ = HalfLineSolution(tp, E, closed_, opt);
        minus_ = HalfLineSolution(tp, -E, closed_, opt);
    }

    [[nodiscard]] const SpectralPoint& point() const { return point_; }
    [[nodiscard]] SolutionMethod method() const {
        return closed_ ? SolutionMethod::ClosedForm : SolutionMethod::Integrated;
    }
    [[nodiscard]] const HalfLineSolution& plus() const { return plus_; }
    [[nodiscard]] const HalfLineSolution& minus() const { return minus_; }
    [[nodiscard]] const TransformedProblem& problem() const { return *tp_; }

    /// (Phi, Phi') at x in [-1, 1].
    [[nodiscard]] std::pair<Scaled, Scaled> eval(double x) const {
        if (!(x >= -1.0 - 1e-14 && x <= 1.0 + 1e-14)) throw std::domain_error("regular_phi: x must lie in [-1,1]");
        if (x >= 0.0) return plus_.phi(x);
        auto [v, d] = minus_.phi(-x);
        return {v, Scaled{-d.mant, d.log_scale}};
    }
    [[nodiscard]] Scaled phi_scaled(double x) const { return eval(x).first; }
    [[nodiscard]] Scaled phi_prime_scaled(double x) const { return eval(x).second; }
    [[nodiscard]] cplx phi(double x) const { return phi_scaled(x).value(); }
    [[nodiscard]] cplx phi_prime(double x) const { return phi_prime_scaled(x).value(); }

    /// f Phi' + Phi.
    [[nodiscard]] Scaled flux_scaled(double x) const {
        const auto [v, d] = eval(x);
        return d * cplx{tp_->field().f(x), 0.0} + v;
    }

private:
    const TransformedProblem* tp_;
    SpectralPoint point_;
    bool closed_ = false;
    HalfLineSolution plus_, minus_;
};

inline cplx regular_phi(const TransformedProblem& tp, cplx E, double x) { return RegularSolution(tp, E).phi(x); }
inline cplx regular_phi_prime(const TransformedProblem& tp, cplx E, double x) {
    return RegularSolution(tp, E).phi_prime(x);
}

/// Table of Z_q(t;E) on [t_small, b2] by integration (never the closed form).
inline HalfLineSolution solve_Z(const TransformedProblem& tp, cplx E, const SolverOptions& opt = {}) {
    return HalfLineSolution(tp, E, false, opt);
}

/// W_q(t;E) = Z_q/Z_0 - 1 from an integrated table.
inline cplx compute_Wq(const HalfLineSolution& sol, double t) {
    const double m = sol.m();
    const Scaled Y = sol.y_of_t(t).first;
    const cplx lam = sol.point().lambda;
    const Scaled y0 = bessel_lambda_scaled(m, lam * t);
    // Lambda_m(z) is of size e^{|Im z|} |z|^{-m-1/2} away from its zeros.
    const double az = std::abs(lam * t);
    const double envelope = std::abs((lam * t).imag()) - (m + 0.5) * std::log(std::max(az, 1.0));
    if (y0.log_abs() < envelope - 18.0)
        throw BesselZeroError("compute_Wq: Z_0 is within 1e-8 of a zero at t = " + std::to_string(t));
    return ratio(Y, y0) - 1.0;
}

}  // namespace singsl
