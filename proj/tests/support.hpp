#pragma once

// Independent reference evaluations and random generators for the tests.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using mp = boost::multiprecision::cpp_bin_float_100;

struct mpc {
    mp re, im;
};
inline mpc mul(const mpc& a, const mpc& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

/// 0F1(; b; w) by its series in 100-digit arithmetic.
inline cplx hyp0f1(double b, cplx w) {
    const mpc W{mp(w.real()), mp(w.imag())};
    mpc term{mp(1), mp(0)}, sum = term;
    const mp tiny = mp(1e-60);
    for (int k = 0; k < 5000; ++k) {
        term = mul(term, W);
        const mp d = (mp(b) + k) * (k + 1);
        term.re /= d;
        term.im /= d;
        sum.re += term.re;
        sum.im += term.im;
        const mp at = abs(term.re) + abs(term.im), as = abs(sum.re) + abs(sum.im);
        if (k > 10 && at < tiny * (as + 1)) break;
    }
    return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
}

/// J_m(z) on the principal branch: (z/2)^m / Gamma(m+1) 0F1(; m+1; -z^2/4).
inline cplx bessel_j(double m, cplx z) {
    if (z == cplx{0.0, 0.0}) return {0.0, 0.0};
    const cplx pre = std::exp(m * std::log(z / 2.0) - std::lgamma(m + 1.0));
    return pre * hyp0f1(m + 1.0, -z * z / 4.0);
}

inline double gamma(double x) {
    using f50 = boost::multiprecision::cpp_bin_float_50;
    return static_cast<double>(boost::math::tgamma(f50(x)));
}

/// Regular solution for linear f: 0F1(; m+1; m E x).
inline cplx phi_linear(double m, cplx E, double x) { return hyp0f1(m + 1.0, m * E * x); }

/// Regular solution for r(x) = x, f = 2 eps x/(1+x^2), by its Taylor series at 0.
/// Multiplying f u'' + (f'+1) u' = E u by (1+x^2)^2 gives the recurrence
///   (n+1)(2 eps n + 2 eps + 1) a_{n+1} = E (a_n + 2 a_{n-2} + a_{n-4})
///       - (n-1)(2 eps (n-2) + 2 - 2 eps) a_{n-1} - (n-3) a_{n-3}.
/// Radius of convergence 1 (poles of f at +-i); intended for |x| <= 0.75.
inline cplx phi_cubic_series(double eps, cplx E, double x) {
    const mpc e{mp(E.real()), mp(E.imag())};
    const mp X(x), ep(eps);
    std::vector<mpc> a{{mp(1), mp(0)}};
    auto at = [&](int k) { return k < 0 ? mpc{mp(0), mp(0)} : a[k]; };
    mpc sum = a[0];
    mp xp(1);
    const mp tiny = mp(1e-40);
    int quiet = 0;
    for (int n = 0; n < 4000; ++n) {
        const mpc s0 = at(n), s2 = at(n - 2), s4 = at(n - 4), s1 = at(n - 1), s3 = at(n - 3);
        const mpc Es = mul(e, {s0.re + 2 * s2.re + s4.re, s0.im + 2 * s2.im + s4.im});
        const mp c1 = mp(n - 1) * (2 * ep * (n - 2) + 2 - 2 * ep), c3 = mp(n - 3);
        const mp d = mp(n + 1) * (2 * ep * n + 2 * ep + 1);
        a.push_back({(Es.re - c1 * s1.re - c3 * s3.re) / d, (Es.im - c1 * s1.im - c3 * s3.im) / d});
        xp *= X;
        sum.re += a.back().re * xp;
        sum.im += a.back().im * xp;
        const mp t = (abs(a.back().re) + abs(a.back().im)) * abs(xp);
        quiet = t < tiny * (abs(sum.re) + abs(sum.im)) ? quiet + 1 : 0;
        if (n > 20 && quiet > 6) break;
    }
    return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
}

/// First root s > s_lo of Im 0F1(; m+1; i m s), the eigenvalue condition on E = i s.
inline double first_imaginary_eigenvalue(double m, double s_lo = 0.5, double step = 0.05) {
    auto F = [m](double s) { return hyp0f1(m + 1.0, cplx{0.0, m * s}).imag(); };
    double a = s_lo, fa = F(a);
    for (;;) {
        const double b = a + step, fb = F(b);
        if ((fa > 0) != (fb > 0)) {
            boost::uintmax_t it = 200;
            const auto r = boost::math::tools::toms748_solve(F, a, b, fa, fb,
                                                             boost::math::tools::eps_tolerance<double>(52), it);
            return 0.5 * (r.first + r.second);
        }
        a = b;
        fa = fb;
    }
}

/// Coefficient geometry computed from scratch with adaptive quadrature and bracketing.
class Coefficients {
public:
    Coefficients(double eps, std::vector<double> r) : eps_(eps), r_(std::move(r)) {}

    double r(double x) const {
        double s = 0.0, p = x;
        for (double c : r_) {
            s += c * p;
            p *= x * x;
        }
        return s;
    }
    double f(double x) const { return 2.0 * eps_ * x / (1.0 + x * r(x)); }

    /// g = sqrt(x) exp(1/2 int_0^x r).
    double g(double x) const {
        const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [this](double s) { return r(s); }, 0.0, x, 10, 1e-15);
        return std::sqrt(x) * std::exp(0.5 * I);
    }
    double g_inverse(double y) const {
        boost::uintmax_t it = 300;
        auto F = [&](double x) { return g(x) - y; };
        const auto r = boost::math::tools::toms748_solve(F, 0.0, 1.0 + 1e-12, -y, g(1.0 + 1e-12) - y,
                                                         boost::math::tools::eps_tolerance<double>(50), it);
        return 0.5 * (r.first + r.second);
    }
    double h(double y) const { return f(g_inverse(y)) / (eps_ * y); }
    double rho(double y) const { return h(y) / (2.0 * y) - 1.0; }
    double tau(double x) const {
        boost::math::quadrature::tanh_sinh<double> ts;
        return ts.integrate([this](double s) { return std::sqrt(1.0 + rho(s)); }, 0.0, g(x), 1e-13);
    }

private:
    double eps_;
    std::vector<double> r_;
};

// Central differences, fourth order.
template <class F>
auto d1(F&& fn, double x, double h) {
    return (fn(x - 2 * h) - 8.0 * fn(x - h) + 8.0 * fn(x + h) - fn(x + 2 * h)) / (12.0 * h);
}

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle

namespace gen {

/// Seeded draws for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
    std::complex<double> polar(double rmin, double rmax, double amin, double amax) {
        return std::polar(uniform(rmin, rmax), uniform(amin, amax));
    }
    /// E with arg E in [amin, amax] and |E| log-uniform in [rmin, rmax].
    std::complex<double> spectral(double rmin, double rmax, double amin, double amax) {
        return std::polar(std::exp(uniform(std::log(rmin), std::log(rmax))), uniform(amin, amax));
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace gen
