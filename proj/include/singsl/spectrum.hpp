#pragma once

// Eigenvalues of L: E is an eigenvalue iff Phi(-1;E) = Phi(1;E).
//
// On the imaginary axis Phi(-1;is) = conj Phi(1;is), so the normalised
// mismatch is purely imaginary there and changes sign at every root.  The
// scan brackets roots that way, refines on the axis, then polishes with a
// complex secant iteration that is free to leave the axis.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "singsl/fit.hpp"
#include "singsl/quadrature.hpp"
#include "singsl/solutions.hpp"

namespace singsl {

struct MismatchValue {
    Scaled minus_one;  // Phi(-1;E)
    Scaled plus_one;   // Phi(1;E)

    [[nodiscard]] Scaled diff() const { return minus_one - plus_one; }
    /// (Phi(-1) - Phi(1)) / (|Phi(-1)| + |Phi(1)|), always of size <= 1.
    [[nodiscard]] cplx relative() const {
        const double ref = std::max(minus_one.log_abs(), plus_one.log_abs());
        const cplx a = minus_one.relative_to(ref), b = plus_one.relative_to(ref);
        const double den = std::abs(a) + std::abs(b);
        return den > 0.0 ? (a - b) / den : cplx{0.0, 0.0};
    }
};

inline MismatchValue mismatch_value(const TransformedProblem& tp, cplx E, SolutionMethod method = SolutionMethod::Auto,
                                    const SolverOptions& opt = {}) {
    if (E == cplx{0.0, 0.0}) return {Scaled{1.0}, Scaled{1.0}};
    const RegularSolution sol(tp, E, method, opt);
    return {sol.phi_scaled(-1.0), sol.phi_scaled(1.0)};
}

/// Phi(-1;E) - Phi(1;E).
inline cplx boundary_mismatch(const TransformedProblem& tp, cplx E, SolutionMethod method = SolutionMethod::Auto) {
    return mismatch_value(tp, E, method).diff().value();
}

/// (lambda/2)^m / Gamma(m+1) * (Lambda_m(i lambda) - Lambda_m(lambda)).
/// For even integer m this is e^{i m pi/2} J_m(i lambda) - J_m(lambda); the
/// Lambda form keeps the branch of (i lambda)^m consistent for every m, so the
/// value vanishes exactly when Phi(-1) = Phi(1).
inline cplx linear_condition(double m, cplx lambda) {
    if (lambda == cplx{0.0, 0.0}) return {0.0, 0.0};
    const Scaled a = bessel_lambda_scaled(m, cplx{0.0, 1.0} * lambda);
    const Scaled b = bessel_lambda_scaled(m, lambda);
    return detail::lambda_to_j(m, lambda, a - b).value();
}

struct EigenvalueRecord {
    cplx E{0.0, 0.0};
    double mismatch_residual = 0.0;  // |Phi(-1) - Phi(1)| / (|Phi(-1)| + |Phi(1)|) at the polished root
    double mirror_residual = 0.0;    // same quantity at -E
    double imag_purity = 0.0;        // |Re E| / |E|
    double scan_s = 0.0;             // axis position where the root was bracketed
    double scan_step = 0.0;
    bool near_singular = false;      // polish derivative tiny: possible multiple root
    bool accepted = true;
};

struct SpectrumOptions {
    double s_min = 1e-3;
    double initial_step = 0.25;
    double max_step = 1.0;
    double purity_tol = 1e-8;
    double root_tol = 1e-10;
    SolutionMethod method = SolutionMethod::Auto;
    SolverOptions solver{};
};

class PurityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double axis_signal(const TransformedProblem& tp, double s, const SpectrumOptions& o) {
    return mismatch_value(tp, cplx{0.0, s}, o.method, o.solver).relative().imag();
}

/// Illinois refinement of a sign change of the axis signal on [a, b].
inline double refine_on_axis(const TransformedProblem& tp, double a, double fa, double b, double fb,
                             const SpectrumOptions& o) {
    int side = 0;
    for (int it = 0; it < 80; ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        const double fc = axis_signal(tp, c, o);
        if (fc == 0.0) return c;
        if ((fc > 0) == (fb > 0)) {
            b = c;
            fb = fc;
            if (side == -1) fa *= 0.5;
            side = -1;
        } else {
            a = c;
            fa = fc;
            if (side == 1) fb *= 0.5;
            side = 1;
        }
        if (std::abs(b - a) < 1e-13 * std::abs(c)) return c;
    }
    return 0.5 * (a + b);
}

/// Complex secant on the analytic function (Phi(-1) - Phi(1)) e^{-ref}.
inline EigenvalueRecord polish(const TransformedProblem& tp, cplx guess, const SpectrumOptions& o) {
    const double ref = mismatch_value(tp, guess, o.method, o.solver).plus_one.log_abs();
    auto h = [&](cplx E) { return mismatch_value(tp, E, o.method, o.solver).diff().relative_to(ref); };
    const double d = 1e-7 * std::abs(guess);
    cplx E0 = guess + cplx{d, d}, E1 = guess;
    cplx h0 = h(E0), h1 = h(E1);
    double slope = 0.0;
    for (int it = 0; it < 30 && h1 != h0; ++it) {
        const cplx dh = (h1 - h0) / (E1 - E0);
        slope = std::abs(dh);
        const cplx E2 = E1 - h1 / dh;
        E0 = E1;
        h0 = h1;
        E1 = E2;
        h1 = h(E1);
        if (std::abs(E1 - E0) < 1e-15 * std::abs(E1)) break;
    }
    EigenvalueRecord rec;
    rec.E = E1;
    rec.mismatch_residual = std::abs(mismatch_value(tp, E1, o.method, o.solver).relative());
    rec.mirror_residual = std::abs(mismatch_value(tp, -E1, o.method, o.solver).relative());
    rec.imag_purity = std::abs(E1.real()) / std::abs(E1);
    // |dh/dE| * |E| compared with the typical size of h (~1 in these units)
    rec.near_singular = slope * std::abs(E1) < 1e-6;
    return rec;
}

}  // namespace detail

/// Nonzero eigenvalues E = i s with s in (s_min, s_max], at most max_count of
/// them, sorted by |E|.  Records failing the purity check are returned with
/// accepted = false.
inline std::vector<EigenvalueRecord> find_eigenvalues(const TransformedProblem& tp, double s_max, int max_count,
                                                      const SpectrumOptions& o = {}) {
    if (!(s_max > 0.0)) throw std::invalid_argument("find_eigenvalues: s_max must be positive");
    std::vector<EigenvalueRecord> out;
    double s = o.s_min;
    double f = detail::axis_signal(tp, s, o);
    double last_root = 0.0, gap = 0.0;
    double prev_abs = std::numeric_limits<double>::infinity(), prev2_abs = prev_abs;
    while (s < s_max && static_cast<int>(out.size()) < max_count) {
        const double step = gap > 0.0 ? std::min(o.max_step, gap / 8.0) : o.initial_step;
        const double sn = std::min(s + step, s_max);
        const cplx Mn = mismatch_value(tp, cplx{0.0, sn}, o.method, o.solver).relative();
        const double fn = Mn.imag();
        double root_s = -1.0;
        if ((f > 0) != (fn > 0) || fn == 0.0) {
            root_s = detail::refine_on_axis(tp, s, f, sn, fn, o);
        } else if (prev_abs < prev2_abs && prev_abs < std::abs(Mn) && prev_abs < 0.05) {
            // tangential dip without a sign change
            root_s = s;
        }
        prev2_abs = prev_abs;
        prev_abs = std::abs(Mn);
        if (root_s > 0.0) {
            EigenvalueRecord rec = detail::polish(tp, cplx{0.0, root_s}, o);
            rec.scan_s = root_s;
            rec.scan_step = step;
            const bool is_root = rec.mismatch_residual < o.root_tol;
            const bool dup = !out.empty() && std::abs(out.back().E - rec.E) < 1e-8 * std::abs(rec.E);
            if (is_root && !dup) {
                rec.accepted = rec.imag_purity <= o.purity_tol && rec.mirror_residual < o.root_tol;
                gap = root_s - last_root;
                last_root = root_s;
                out.push_back(rec);
            }
        }
        s = sn;
        f = fn;
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return std::abs(a.E) < std::abs(b.E); });
    return out;
}

/// The zero eigenvalue (constant eigenfunction) as a record.
inline EigenvalueRecord zero_eigenvalue() { return EigenvalueRecord{}; }

/// Phi(x;E) on a uniform grid of n_samples points in [-1, 1], scaled to max modulus 1.
inline GridFunction export_eigenfunction(const TransformedProblem& tp, const EigenvalueRecord& rec, int n_samples,
                                         SolutionMethod method = SolutionMethod::Auto) {
    if (n_samples < 2) throw std::invalid_argument("export_eigenfunction: need at least 2 samples");
    GridFunction g;
    g.x.resize(n_samples);
    g.w.assign(n_samples, 2.0 / (n_samples - 1));
    g.w.front() *= 0.5;
    g.w.back() *= 0.5;
    g.values.resize(n_samples);
    if (rec.E == cplx{0.0, 0.0}) {
        for (int i = 0; i < n_samples; ++i) {
            g.x[i] = -1.0 + 2.0 * i / (n_samples - 1);
            g.values[i] = 1.0;
        }
        return g;
    }
    const RegularSolution sol(tp, rec.E, method);
    std::vector<Scaled> v(n_samples);
    double ref = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        g.x[i] = i == n_samples - 1 ? 1.0 : -1.0 + 2.0 * i / (n_samples - 1);
        v[i] = sol.phi_scaled(g.x[i]);
        ref = std::max(ref, v[i].log_abs());
    }
    for (int i = 0; i < n_samples; ++i) g.values[i] = v[i].relative_to(ref);
    std::size_t imax = 0;
    for (int i = 0; i < n_samples; ++i)
        if (std::abs(g.values[i]) > std::abs(g.values[imax])) imax = i;
    const cplx phase = std::abs(g.values[imax]) / g.values[imax];
    for (auto& c : g.values) c *= phase;
    return g;
}

/// Fit |E_n| = c (n + n0)^p over the records in order (n = 1, 2, ...).  The
/// offset n0 absorbs the phase shift of the large-n law (|E_n|^{1/2} is
/// asymptotically affine in n), so p is the growth exponent proper; n0 is
/// chosen on a fine grid in [-0.9, 3] to minimise the log-residual.
struct GrowthFit {
    double exponent = 0.0;
    double offset = 0.0;
    double r2 = 0.0;
};

inline GrowthFit fit_growth_exponent(const std::vector<EigenvalueRecord>& recs) {
    if (recs.size() < 3) throw std::invalid_argument("fit_growth_exponent: need at least 3 eigenvalues");
    std::vector<double> ly;
    for (const auto& r : recs) ly.push_back(std::log(std::abs(r.E)));
    GrowthFit best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 3900; ++k) {
        const double n0 = -0.9 + 1e-3 * k;
        std::vector<double> lx;
        for (std::size_t n = 1; n <= recs.size(); ++n) lx.push_back(std::log(static_cast<double>(n) + n0));
        const detail::LineFit f = detail::fit_line(lx, ly);
        double sse = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) sse += std::pow(ly[i] - f.intercept - f.slope * lx[i], 2);
        if (sse < best_sse) {
            best_sse = sse;
            best = {f.slope, n0, f.r2};
        }
    }
    return best;
}

}  // namespace singsl
