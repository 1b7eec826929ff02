#pragma once

// Coefficient f(x) = 2 eps x / (1 + x r(x)) with r an odd polynomial, and the
// geometry of the change of variables x -> y = g(x) -> t = tau(x) that takes
// (f u' + u)' = E u to the Liouville form
//
//     -Z'' + q(t) Z + l(l+1) Z / t^2 = -4 m E Z,   t in (0, b2].
//
// Everything is written in terms of x (or s = sqrt(x)) so that no inverse
// has to be taken during evaluation:
//
//     g(x)   = sqrt(x) exp(R(x)),          R(x) = (1/2) int_0^x r
//     1+rho  = exp(-2R(x)) / (1 + x r(x))  (rho as a function of x)
//     tau(x) = int_0^{sqrt x} sqrt(1 + s^2 r(s^2)) ds
//
// The exp/log forms carry no 0/0 cancellation at the origin, so the
// near-origin series switch is only needed for q at t = 0 exactly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "singsl/quadrature.hpp"

namespace singsl {

class CoefficientField {
public:
    /// r(x) = sum_k r_coeffs[k] x^{2k+1}.
    CoefficientField(double epsilon, std::vector<double> r_coeffs) : eps_(epsilon), r_(std::move(r_coeffs)) {
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw std::invalid_argument("epsilon must lie in (0,1), got " + std::to_string(epsilon));
        for (double c : r_)
            if (!std::isfinite(c)) throw std::invalid_argument("r coefficients must be finite");
        while (!r_.empty() && r_.back() == 0.0) r_.pop_back();
        constexpr int samples = 4096;
        for (int i = 0; i <= samples; ++i) {
            const double x = static_cast<double>(i) / samples;
            if (!(1.0 + p(x) > 0.0))
                throw std::invalid_argument("r makes f vanish or change sign inside (0,1] (1 + x r(x) <= 0 at x = " +
                                            std::to_string(x) + ")");
        }
        m_ = 1.0 / (2.0 * eps_);
        ell_ = m_ - 0.5;
        beta_ = m_ + 0.5;
        b1_ = std::exp(R(1.0));
    }

    [[nodiscard]] double epsilon() const { return eps_; }
    [[nodiscard]] const std::vector<double>& r_coeffs() const { return r_; }
    [[nodiscard]] bool is_linear() const { return r_.empty(); }
    [[nodiscard]] double m() const { return m_; }
    [[nodiscard]] double ell() const { return ell_; }
    [[nodiscard]] double beta() const { return beta_; }
    [[nodiscard]] double b1() const { return b1_; }

    [[nodiscard]] double r(double x) const {
        double s = 0.0, x2 = x * x, pw = x;
        for (double c : r_) {
            s += c * pw;
            pw *= x2;
        }
        return s;
    }
    [[nodiscard]] double r_prime(double x) const {
        double s = 0.0, x2 = x * x, pw = 1.0;
        for (std::size_t k = 0; k < r_.size(); ++k) {
            s += (2.0 * k + 1.0) * r_[k] * pw;
            pw *= x2;
        }
        return s;
    }
    /// p(x) = x r(x), even.
    [[nodiscard]] double p(double x) const { return x * r(x); }
    [[nodiscard]] double p_prime(double x) const { return r(x) + x * r_prime(x); }
    [[nodiscard]] double p_second(double x) const {
        double s = 0.0, x2 = x * x, pw = 1.0;
        for (std::size_t k = 0; k < r_.size(); ++k) {
            s += (2.0 * k + 2.0) * (2.0 * k + 1.0) * r_[k] * pw;
            pw *= x2;
        }
        return s;
    }
    /// R(x) = r2(x) - a2 = (1/2) int_0^x r(s) ds.
    [[nodiscard]] double R(double x) const {
        double s = 0.0, x2 = x * x, pw = x2;
        for (std::size_t k = 0; k < r_.size(); ++k) {
            s += r_[k] * pw / (2.0 * k + 2.0);
            pw *= x2;
        }
        return 0.5 * s;
    }
    /// a2 = r2(0) = (1/2) int_1^0 r(s) ds.
    [[nodiscard]] double a2() const { return -R(1.0); }

    [[nodiscard]] double f(double x) const { return 2.0 * eps_ * x / (1.0 + p(x)); }
    [[nodiscard]] double f_prime(double x) const {
        const double d = 1.0 + p(x);
        return 2.0 * eps_ * (d - x * p_prime(x)) / (d * d);
    }

private:
    double eps_;
    std::vector<double> r_;
    double m_ = 0, ell_ = 0, beta_ = 0, b1_ = 0;
};

inline CoefficientField build_field(double epsilon, std::vector<double> r_coeffs) {
    return CoefficientField(epsilon, std::move(r_coeffs));
}

/// Chebyshev interpolant on [a, b].
class ChebyshevSeries {
public:
    ChebyshevSeries() = default;
    template <class F>
    ChebyshevSeries(F&& fn, double a, double b, int n) : a_(a), b_(b), c_(n, 0.0) {
        std::vector<double> fv(n);
        for (int j = 0; j < n; ++j) {
            const double th = std::numbers::pi * (j + 0.5) / n;
            fv[j] = fn(0.5 * (a + b) + 0.5 * (b - a) * std::cos(th));
        }
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += fv[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
            c_[k] = (k == 0 ? 1.0 : 2.0) * s / n;
        }
    }
    [[nodiscard]] double operator()(double t) const {
        if (c_.empty()) return 0.0;
        const double u = (2.0 * t - a_ - b_) / (b_ - a_);
        double b0 = 0.0, b1 = 0.0;
        for (std::size_t k = c_.size(); k-- > 1;) {
            const double tmp = 2.0 * u * b0 - b1 + c_[k];
            b1 = b0;
            b0 = tmp;
        }
        return u * b0 - b1 + c_[0];
    }
    [[nodiscard]] ChebyshevSeries derivative() const {
        ChebyshevSeries d;
        d.a_ = a_;
        d.b_ = b_;
        const std::size_t n = c_.size();
        if (n < 2) return d;
        d.c_.assign(n, 0.0);
        for (std::size_t k = n - 1; k >= 1; --k) {
            const double next = k + 1 < n ? d.c_[k + 1] : 0.0;
            d.c_[k - 1] = next + 2.0 * k * c_[k];
        }
        d.c_[0] *= 0.5;
        for (double& c : d.c_) c *= 2.0 / (b_ - a_);
        return d;
    }

    /// Magnitude of the trailing coefficients: a truncation-error proxy.
    [[nodiscard]] double tail() const {
        double s = 0.0;
        for (std::size_t k = c_.size() > 4 ? c_.size() - 4 : 0; k < c_.size(); ++k) s += std::abs(c_[k]);
        return s;
    }

private:
    double a_ = 0.0, b_ = 1.0;
    std::vector<double> c_;
};

/// Local data of the change of variables at a point x in (0, 1].
struct LiouvilleJet {
    double x = 0;
    double y = 0;          // g(x)
    double w = 1;          // 1 + rho(g(x))
    double t = 0;          // tau(x)
    double dlog_w = 0;     // d/dx log w
    double dlog_y = 0;     // d/dx log g
    double tau_prime = 0;  // d tau / dx
};

class TransformedProblem {
public:
    explicit TransformedProblem(CoefficientField field, int q_nodes = 96) : field_(std::move(field)) {
        const GaussRule rule = gauss_legendre(24);
        gl_nodes_ = rule.nodes;
        gl_weights_ = rule.weights;
        b2_ = eval_tau(1.0);
        if (!field_.is_linear()) {
            q_cheb_ = ChebyshevSeries([this](double t) { return q_at_x(tau_inverse(t)); }, 0.0, b2_, q_nodes);
            dq_cheb_ = q_cheb_.derivative();
            constexpr int probes = 2000;
            for (int i = 0; i <= probes; ++i) q_max_ = std::max(q_max_, std::abs(eval_q(b2_ * i / probes)));
        }
    }

    [[nodiscard]] const CoefficientField& field() const { return field_; }
    [[nodiscard]] double m() const { return field_.m(); }
    [[nodiscard]] double ell() const { return field_.ell(); }
    [[nodiscard]] double epsilon() const { return field_.epsilon(); }
    [[nodiscard]] double b1() const { return field_.b1(); }
    [[nodiscard]] double b2() const { return b2_; }
    [[nodiscard]] double a2() const { return field_.a2(); }
    /// q(0); zero for every odd polynomial r since rho = O(y^4) there.
    [[nodiscard]] double q0() const { return 0.0; }
    [[nodiscard]] double q_max() const { return q_max_; }
    [[nodiscard]] double q_interp_tail() const { return q_cheb_.tail(); }

    [[nodiscard]] double eval_g(double x) const {
        if (!(x > 0.0 && x <= 1.0)) throw std::domain_error("eval_g: x must lie in (0,1]");
        return std::sqrt(x) * std::exp(field_.R(x));
    }

    [[nodiscard]] double eval_g_inverse(double y) const {
        if (!(y > 0.0 && y <= b1() * (1.0 + 1e-14))) throw std::domain_error("eval_g_inverse: y must lie in (0,b1]");
        const double ly = std::log(y);
        // phi(u) = u/2 + R(e^u) - log y is increasing with slope (1 + p)/2.
        double lo = 2.0 * ly - 50.0, hi = 1e-15;
        double u = std::min(2.0 * ly, 0.0);
        for (int it = 0; it < 200; ++it) {
            const double x = std::exp(u);
            const double phi = 0.5 * u + field_.R(x) - ly;
            if (phi > 0) hi = u; else lo = u;
            const double dphi = 0.5 * (1.0 + field_.p(x));
            double un = u - phi / dphi;
            if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
            if (std::abs(un - u) < 1e-16 * std::max(1.0, std::abs(u))) {
                u = un;
                break;
            }
            u = un;
        }
        return std::min(std::exp(u), 1.0);
    }

    /// 1 + rho as a function of x.
    [[nodiscard]] double w_of_x(double x) const { return std::exp(-2.0 * field_.R(x) - std::log1p(field_.p(x))); }
    [[nodiscard]] double rho_of_x(double x) const { return std::expm1(-2.0 * field_.R(x) - std::log1p(field_.p(x))); }

    [[nodiscard]] double eval_h(double y) const {
        const double x = eval_g_inverse(y);
        return field_.f(x) / (field_.epsilon() * y);
    }

    [[nodiscard]] double eval_rho(double y) const {
        if (!(y > 0.0 && y <= b1() * (1.0 + 1e-14))) throw std::domain_error("eval_rho: y must lie in (0,b1]");
        return rho_of_x(eval_g_inverse(y));
    }

    /// tau(x) - sqrt(x), computed without cancellation.
    [[nodiscard]] double tau_minus_sqrt(double x) const {
        const double s = std::sqrt(x);
        if (field_.is_linear() || s == 0.0) return 0.0;
        double acc = 0.0;
        for (int half = 0; half < 2; ++half) {
            const double a = 0.5 * s * half, h = 0.25 * s;
            for (std::size_t i = 0; i < gl_nodes_.size(); ++i) {
                const double sig = a + h * (1.0 + gl_nodes_[i]);
                const double P = field_.p(sig * sig);
                acc += h * gl_weights_[i] * P / (1.0 + std::sqrt(1.0 + P));
            }
        }
        return acc;
    }

    [[nodiscard]] double eval_tau(double x) const {
        if (!(x >= 0.0 && x <= 1.0 + 1e-14)) throw std::domain_error("eval_tau: x must lie in [0,1]");
        return std::sqrt(x) + tau_minus_sqrt(x);
    }

    /// x with tau(x) = t, t in [0, b2].
    [[nodiscard]] double tau_inverse(double t) const {
        if (!(t >= 0.0 && t <= b2_ * (1.0 + 1e-14))) throw std::domain_error("tau_inverse: t must lie in [0,b2]");
        if (field_.is_linear()) return t * t;
        double s = std::min(t, 1.0);
        for (int it = 0; it < 100; ++it) {
            const double T = s + tau_minus_sqrt(s * s);
            const double ds = (T - t) / std::sqrt(1.0 + field_.p(s * s));
            s = std::clamp(s - ds, 0.0, 1.0);
            if (std::abs(ds) < 1e-16 * std::max(t, 1e-300)) break;
        }
        return s * s;
    }

    [[nodiscard]] double eval_q(double t) const {
        if (!(t >= -1e-14 && t <= b2_ * (1.0 + 1e-12))) throw std::domain_error("eval_q: t must lie in [0,b2]");
        if (field_.is_linear()) return 0.0;
        if (t <= 0.0) return q0();
        return q_cheb_(t);
    }

    [[nodiscard]] double eval_q_prime(double t) const {
        if (field_.is_linear()) return 0.0;
        return dq_cheb_(std::clamp(t, 0.0, b2_));
    }

    /// q evaluated directly from its closed form at the point x (no interpolation).
    [[nodiscard]] double q_at_x(double x) const {
        if (field_.is_linear()) return 0.0;
        if (x <= 0.0) return q0();
        const auto& F = field_;
        const double pr = F.p(x), p1 = F.p_prime(x), p2 = F.p_second(x);
        const double rr = F.r(x), r1 = F.r_prime(x);
        const double one_p = 1.0 + pr;
        const double lw1 = -rr - p1 / one_p;
        const double lw2 = -r1 - p2 / one_p + p1 * p1 / (one_p * one_p);
        const double w = w_of_x(x);
        const double wx = w * lw1, wxx = w * (lw2 + lw1 * lw1);
        const double ly1 = one_p / (2.0 * x), ly2 = -1.0 / (2.0 * x * x) + 0.5 * r1;
        const double y = std::sqrt(x) * std::exp(F.R(x));
        const double yx = y * ly1, yxx = y * (ly2 + ly1 * ly1);
        const double rho_y = wx / yx;
        const double rho_yy = (wxx * yx - wx * yxx) / (yx * yx * yx);
        const double s = std::sqrt(x);
        const double d = tau_minus_sqrt(x);
        const double t = s + d;
        const double diff = 2.0 * s * d + d * d + x * pr / one_p;  // t^2 - y^2 w
        const double mm = F.m() * F.m() - 0.25;
        const double y2w = x / one_p;
        return mm * diff / (y2w * t * t) + rho_yy / (4.0 * w * w) - 5.0 * rho_y * rho_y / (16.0 * w * w * w);
    }

    [[nodiscard]] double eval_rho4(double y) const {
        if (!(y > 0.0)) throw std::domain_error("eval_rho4: singular at y = 0");
        const double x = eval_g_inverse(y);
        return std::pow(w_of_x(x), -0.25) * std::pow(y, -(ell() + 1.0));
    }

    [[nodiscard]] LiouvilleJet jet(double x) const {
        LiouvilleJet j;
        j.x = x;
        const auto& F = field_;
        const double pr = F.p(x);
        j.y = eval_g(x);
        j.w = w_of_x(x);
        j.t = eval_tau(x);
        j.dlog_w = -F.r(x) - F.p_prime(x) / (1.0 + pr);
        j.dlog_y = (1.0 + pr) / (2.0 * x);
        j.tau_prime = std::sqrt(1.0 + pr) / (2.0 * std::sqrt(x));
        return j;
    }

private:
    CoefficientField field_;
    double b2_ = 1.0;
    double q_max_ = 0.0;
    ChebyshevSeries q_cheb_, dq_cheb_;
    std::vector<double> gl_nodes_, gl_weights_;
};

}  // namespace singsl
