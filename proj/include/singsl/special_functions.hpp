#pragma once

// Bessel J of real order m > 1/2 and complex argument, plus Gamma.
//
// The workhorse is the normalised, even, entire function
//
//     Lambda_m(z) = Gamma(m+1) (z/2)^(-m) J_m(z) = 0F1(; m+1; -z^2/4),
//
// which is exactly the x -> lambda sqrt(x) profile of the regular solution
// for linear f.  Small |z| uses the ascending series summed in binary128 so
// that the cancellation near the real axis (terms up to e^|z|) costs
// nothing; large |z| uses the Hankel expansion on Re z >= 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "singsl/scaled.hpp"

namespace singsl {

struct BesselEvalConfig {
    int series_max_terms = 600;
    double switch_radius = 30.0;
    double target_rel_tol = 1e-15;
};

class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline double gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("gamma: argument must be positive, got " + std::to_string(x));
    return std::tgamma(x);
}

namespace detail {

using quad = __float128;

struct QComplex {
    quad re = 0, im = 0;
};

inline QComplex qmul(QComplex a, QComplex b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline double qabs_approx(QComplex a) { return std::hypot(static_cast<double>(a.re), static_cast<double>(a.im)); }

inline void check_order(double m) {
    if (!(m > 0.5) || !std::isfinite(m)) throw std::domain_error("Bessel order must satisfy m > 1/2");
}

/// Lambda_m(z) by its ascending series in binary128.
inline cplx lambda_series(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    const QComplex w{-static_cast<quad>(z.real()) * static_cast<quad>(z.real()) / 4 +
                         static_cast<quad>(z.imag()) * static_cast<quad>(z.imag()) / 4,
                     -static_cast<quad>(z.real()) * static_cast<quad>(z.imag()) / 2};
    QComplex term{1, 0};
    QComplex sum{1, 0};
    const quad mq = m;
    const double half_abs = std::abs(z) / 2.0;
    for (int k = 1; k <= cfg.series_max_terms; ++k) {
        const quad denom = static_cast<quad>(k) * (mq + k);
        term = qmul(term, w);
        term.re /= denom;
        term.im /= denom;
        sum.re += term.re;
        sum.im += term.im;
        if (k > half_abs + 2 && qabs_approx(term) <= 1e-30 * std::max(qabs_approx(sum), 1e-300)) {
            return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
        }
    }
    throw NonConvergenceError("Bessel series did not converge for |z| = " + std::to_string(std::abs(z)));
}

/// Hankel expansion of Lambda_m(z) for Re z >= 0, returned in scaled form.
/// Throws NonConvergenceError if the asymptotic terms stop shrinking above
/// the target tolerance.
inline Scaled lambda_hankel(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    if (z.real() < 0.0) z = -z;
    const double mu = 4.0 * m * m;
    cplx term{1.0, 0.0};
    cplx P{1.0, 0.0};
    cplx Q{0.0, 0.0};
    double prev = 1.0;
    bool converged = false;
    for (int k = 1; k <= cfg.series_max_terms; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (8.0 * k * z);
        const double mag = std::abs(term);
        if (mag > prev && mag > cfg.target_rel_tol) break;  // asymptotic divergence
        // (-1)^floor(k/2): k = 1,2 -> -1 ... pattern + - - + + - -
        const int phase = (k / 2) % 2 == 0 ? 1 : -1;
        if (k % 2 == 1) {
            Q += static_cast<double>(phase) * term;
        } else {
            P += static_cast<double>(phase) * term;
        }
        prev = mag;
        if (mag == 0.0 || mag <= cfg.target_rel_tol * std::max(std::abs(P), std::abs(Q))) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NonConvergenceError("Hankel expansion did not reach tolerance for |z| = " + std::to_string(std::abs(z)));

    const double chi = z.real() - m * std::numbers::pi / 2.0 - std::numbers::pi / 4.0;
    const double s = std::abs(z.imag());
    // e^{+i omega - s} and e^{-i omega - s}, omega = z - m pi/2 - pi/4
    const cplx ep = std::exp(cplx{-z.imag() - s, chi});
    const cplx em = std::exp(cplx{z.imag() - s, -chi});
    const cplx I{0.0, 1.0};
    const cplx bracket = 0.5 * (ep * (P + I * Q) + em * (P - I * Q));
    // sqrt(2/(pi z)) * Gamma(m+1) (2/z)^m
    const double argz = std::arg(z);
    const double absz = std::abs(z);
    const cplx phase = std::exp(cplx{0.0, -(m + 0.5) * argz});
    const double log_mag = std::lgamma(m + 1.0) + m * (std::log(2.0) - std::log(absz)) +
                           0.5 * (std::log(2.0 / std::numbers::pi) - std::log(absz));
    return Scaled{bracket * phase, s + log_mag}.normalized();
}

}  // namespace detail

/// Gamma(m+1) (z/2)^{-m} J_m(z), an even entire function of z equal to 1 at 0.
inline Scaled bessel_lambda_scaled(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    detail::check_order(m);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::domain_error("Bessel argument not finite");
    const double r = std::abs(z);
    if (r <= cfg.switch_radius) return Scaled{detail::lambda_series(m, z, cfg), 0.0}.normalized();
    try {
        return detail::lambda_hankel(m, z, cfg);
    } catch (const NonConvergenceError&) {
        // Large order relative to |z|: binary128 still carries the series to ~|z| = 70.
        if (r <= 70.0) return Scaled{detail::lambda_series(m, z, cfg), 0.0}.normalized();
        throw;
    }
}

inline cplx bessel_lambda(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    return bessel_lambda_scaled(m, z, cfg).value();
}

namespace detail {
inline Scaled lambda_to_j(double m, cplx z, const Scaled& lam) {
    if (z == cplx{0.0, 0.0}) return Scaled{};
    // (z/2)^m / Gamma(m+1) on the principal branch
    const cplx phase = std::exp(cplx{0.0, m * std::arg(z)});
    return Scaled{lam.mant * phase, lam.log_scale + m * std::log(std::abs(z) / 2.0) - std::lgamma(m + 1.0)}
        .normalized();
}
}  // namespace detail

/// J_m(z), principal branch, in scaled form.
inline Scaled bessel_j_scaled(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    return detail::lambda_to_j(m, z, bessel_lambda_scaled(m, z, cfg));
}

inline cplx bessel_j(double m, cplx z, const BesselEvalConfig& cfg = {}) { return bessel_j_scaled(m, z, cfg).value(); }

/// Forced ascending-series evaluation (regime consistency checks).
inline cplx bessel_j_series(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    detail::check_order(m);
    return detail::lambda_to_j(m, z, Scaled{detail::lambda_series(m, z, cfg), 0.0}).value();
}

/// Forced large-argument evaluation (regime consistency checks).
inline cplx bessel_j_asymptotic(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    detail::check_order(m);
    return detail::lambda_to_j(m, z, detail::lambda_hankel(m, z, cfg)).value();
}

/// Right-hand side of |J_m(z)| <= 2^{1-m} |z|^m e^{|z|} / (sqrt(pi) Gamma(m+1/2)), as a logarithm.
inline double log_bessel_growth_bound(double m, cplx z) {
    const double r = std::abs(z);
    return (1.0 - m) * std::log(2.0) + m * std::log(r) + r - 0.5 * std::log(std::numbers::pi) -
           std::lgamma(m + 0.5);
}

/// Leading-order estimate of J_m(i|lambda| s e^{i theta}) / J_m(i|lambda| t e^{i theta}):
/// sqrt(t/s) exp(|lambda| (s - t) e^{i theta}), with relative error O(1/|lambda|).
inline cplx bessel_j_ratio_asymptotic(double m, double lambda_mag, double theta, double s, double t,
                                      const BesselEvalConfig& cfg = {}) {
    detail::check_order(m);
    if (lambda_mag < cfg.switch_radius)
        throw RegimeError("bessel_j_ratio_asymptotic: |lambda| below the asymptotic switch radius");
    if (!(s > 0.0) || !(t >= s)) throw std::domain_error("bessel_j_ratio_asymptotic: need 0 < s <= t");
    if (s == t) return {1.0, 0.0};
    return std::sqrt(t / s) * std::exp(lambda_mag * (s - t) * std::exp(cplx{0.0, theta}));
}

/// J_m(z e^{i pi}) continued from z, i.e. (z e^{i pi}/2)^m Lambda_m(-z) / Gamma(m+1).
inline cplx bessel_j_rotated(double m, cplx z, const BesselEvalConfig& cfg = {}) {
    detail::check_order(m);
    if (z == cplx{0.0, 0.0}) return {0.0, 0.0};
    const Scaled lam = bessel_lambda_scaled(m, -z, cfg);
    const cplx phase = std::exp(cplx{0.0, m * (std::arg(z) + std::numbers::pi)});
    return Scaled{lam.mant * phase, lam.log_scale + m * std::log(std::abs(z) / 2.0) - std::lgamma(m + 1.0)}.value();
}

struct IdentityCheck {
    std::string name;
    int samples = 0;
    double max_error = 0.0;  // relative error, or log-margin excess for the growth bound
    double tolerance = 0.0;
    bool passed = false;
};

/// Conjugation, rotation, growth bound and series/asymptotic agreement on
/// random arguments drawn from a seeded generator.
inline std::vector<IdentityCheck> bessel_identity_suite(std::uint64_t seed = 1, int samples = 100,
                                                        const std::vector<double>& orders = {0.75, 2.0, 3.3},
                                                        const BesselEvalConfig& cfg = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto rel = [](cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    auto draw = [&](double rmin, double rmax, double amin, double amax) {
        return std::polar(rmin + (rmax - rmin) * U(rng), amin + (amax - amin) * U(rng));
    };
    const double pi = std::numbers::pi;
    std::vector<IdentityCheck> out;

    IdentityCheck conj{"conjugation", 0, 0.0, 1e-12, false};
    IdentityCheck rot{"rotation", 0, 0.0, 1e-10, false};
    IdentityCheck grow{"growth_bound", 0, -std::numeric_limits<double>::infinity(), 0.0, false};
    IdentityCheck regime{"regime_overlap", 0, 0.0, 1e-8, false};
    for (double m : orders) {
        for (int k = 0; k < samples; ++k) {
            const cplx z = draw(0.0, 200.0, -pi, pi);
            const cplx a = bessel_j(m, std::conj(z), cfg), b = std::conj(bessel_j(m, z, cfg));
            conj.max_error = std::max(conj.max_error, rel(a, b));
            ++conj.samples;

            const cplx w = draw(0.01, 200.0, -pi, pi);
            const cplx lhs = bessel_j_rotated(m, w, cfg);
            const cplx rhs = std::exp(cplx{0.0, pi * m}) * bessel_j(m, w, cfg);
            rot.max_error = std::max(rot.max_error, rel(lhs, rhs));
            ++rot.samples;

            const cplx v = draw(0.01, 200.0, -pi, pi);
            const double excess = bessel_j_scaled(m, v, cfg).log_abs() - log_bessel_growth_bound(m, v);
            grow.max_error = std::max(grow.max_error, excess);
            ++grow.samples;

            const double R = cfg.switch_radius;
            const cplx y = draw(0.8 * R, 1.2 * R, -0.75 * pi, 0.75 * pi);
            regime.max_error = std::max(regime.max_error, rel(bessel_j_series(m, y, cfg), bessel_j_asymptotic(m, y, cfg)));
            ++regime.samples;
        }
    }
    conj.passed = conj.max_error <= conj.tolerance;
    rot.passed = rot.max_error <= rot.tolerance;
    // log|J| may touch the bound only up to rounding
    grow.tolerance = 1e-12;
    grow.passed = grow.max_error <= grow.tolerance;
    regime.passed = regime.max_error <= regime.tolerance;
    out = {conj, rot, grow, regime};

    IdentityCheck g{"gamma", 3, 0.0, 1e-12, false};
    g.max_error = std::max({std::abs(gamma(3.0) - 2.0) / 2.0, std::abs(gamma(0.5) - std::sqrt(pi)) / std::sqrt(pi),
                            std::abs(gamma(3.5) - 15.0 * std::sqrt(pi) / 8.0) / (15.0 * std::sqrt(pi) / 8.0)});
    g.passed = g.max_error <= g.tolerance;
    out.push_back(g);
    return out;
}

}  // namespace singsl
