#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace singsl {

using cplx = std::complex<double>;

/// A complex number stored as mantissa * exp(log_scale).
///
/// Solutions of the spectral problem grow like exp(|lambda| t); for
/// |lambda| beyond a few hundred the plain double exponent runs out, so
/// every quantity that can grow exponentially in |lambda| travels in this
/// form and only ratios are brought back to ordinary doubles.
struct Scaled {
    cplx mant{0.0, 0.0};
    double log_scale = 0.0;

    Scaled() = default;
    Scaled(cplx m, double s = 0.0) : mant(m), log_scale(s) {}

    /// log|value|; -inf for zero.
    [[nodiscard]] double log_abs() const {
        const double a = std::abs(mant);
        if (a == 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(a) + log_scale;
    }

    [[nodiscard]] cplx value() const {
        if (mant == cplx{0.0, 0.0}) return mant;
        return mant * std::exp(log_scale);
    }

    [[nodiscard]] Scaled normalized() const {
        const double a = std::abs(mant);
        if (a == 0.0 || !std::isfinite(a)) return *this;
        const double la = std::log(a);
        return {mant / a, log_scale + la};
    }

    [[nodiscard]] Scaled conj() const { return {std::conj(mant), log_scale}; }

    /// Value rescaled to exp(reference) units: value() * exp(-reference).
    [[nodiscard]] cplx relative_to(double reference) const {
        if (mant == cplx{0.0, 0.0}) return mant;
        return mant * std::exp(log_scale - reference);
    }
};

inline Scaled operator*(const Scaled& a, const Scaled& b) {
    return Scaled{a.mant * b.mant, a.log_scale + b.log_scale}.normalized();
}
inline Scaled operator*(const Scaled& a, cplx b) { return Scaled{a.mant * b, a.log_scale}.normalized(); }
inline Scaled operator*(cplx b, const Scaled& a) { return a * b; }
inline Scaled operator/(const Scaled& a, const Scaled& b) {
    return Scaled{a.mant / b.mant, a.log_scale - b.log_scale}.normalized();
}

inline Scaled operator+(const Scaled& a, const Scaled& b) {
    if (a.mant == cplx{0.0, 0.0}) return b;
    if (b.mant == cplx{0.0, 0.0}) return a;
    const double ref = std::max(a.log_scale, b.log_scale);
    return Scaled{a.relative_to(ref) + b.relative_to(ref), ref}.normalized();
}
inline Scaled operator-(const Scaled& a, const Scaled& b) { return a + Scaled{-b.mant, b.log_scale}; }

/// |a/b| without forming either value.
inline double abs_ratio(const Scaled& a, const Scaled& b) { return std::exp(a.log_abs() - b.log_abs()); }

/// a/b as an ordinary complex number (the caller knows it is moderate).
inline cplx ratio(const Scaled& a, const Scaled& b) { return (a / b).value(); }

}  // namespace singsl
