#pragma once

// Resolvent of L.
//
// E = 0: u = Sv with the Volterra-type kernel
//     H(x,z) = sgn(x) (1 - G(z)/G(x)) 1{0 < sgn(x) z <= |x|},  G = g^{1/eps}.
//
// General E: variation of parameters for the first-order system
//     u' = (w - u)/f,   w' = E u + v,   w = f u' + u,
// on each half-line with the regular solution Phi and a second solution psi
// integrated back from x = 1.  The flux Wronskian D = Phi w_psi - psi w_Phi
// follows Abel's rule D(z) = eps g(z)^{-1/eps} W_t, W_t the (constant)
// Wronskian of the Liouville-form solutions.  The coefficient of Phi, common
// to both halves by continuity at 0, is fixed by u(-1) = u(1).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "singsl/fit.hpp"
#include "singsl/parallel.hpp"
#include "singsl/quadrature.hpp"
#include "singsl/solutions.hpp"

namespace singsl {

class NearEigenvalueError : public std::runtime_error {
public:
    NearEigenvalueError(cplx E, double measure)
        : std::runtime_error("E = (" + std::to_string(E.real()) + ", " + std::to_string(E.imag()) +
                             ") is within root tolerance of an eigenvalue (relative mismatch " +
                             std::to_string(measure) + ")"),
          E_(E), measure_(measure) {}
    [[nodiscard]] cplx E() const { return E_; }
    [[nodiscard]] double measure() const { return measure_; }

private:
    cplx E_;
    double measure_;
};

// ---------------------------------------------------------------- E = 0 ----

/// g^{1/eps}(|z|), even in z.
inline double g_power(const TransformedProblem& tp, double z) {
    const double a = std::abs(z);
    if (a == 0.0) return 0.0;
    return std::exp(std::log(tp.eval_g(std::min(a, 1.0))) / tp.epsilon());
}

inline double green_kernel_H(const TransformedProblem& tp, double x, double z) {
    if (x == 0.0) return 0.0;
    const double sx = x > 0.0 ? 1.0 : -1.0;
    const double zz = sx * z;
    if (!(zz > 0.0 && zz <= std::abs(x))) return 0.0;
    // 1 - (g(z)/g(x))^{1/eps}
    const double lr = (std::log(tp.eval_g(zz)) - std::log(tp.eval_g(std::abs(x)))) / tp.epsilon();
    return -sx * std::expm1(lr);
}

/// u = S v on the grid of v (Nystrom sum).
inline GridFunction apply_S(const TransformedProblem& tp, const GridFunction& v) {
    GridFunction u = v;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        cplx s{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            const double h = green_kernel_H(tp, v.x[i], v.x[j]);
            if (h != 0.0) s += v.w[j] * h * v.values[j];
        }
        u.values[i] = s;
    }
    return u;
}

/// (S v)(x) for a callable v, by Gauss quadrature in s = sqrt(z).
template <class V>
cplx apply_S_at(const TransformedProblem& tp, V&& v, double x, int panels = 8, int order = 16) {
    if (x == 0.0) return {0.0, 0.0};
    const double sx = x > 0.0 ? 1.0 : -1.0;
    const double smax = std::sqrt(std::abs(x));
    std::vector<double> br(panels + 1);
    for (int k = 0; k <= panels; ++k) br[k] = smax * k / panels;
    const QuadratureGrid g = composite_gauss(br, order);
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double z = sx * g.nodes[i] * g.nodes[i];
        acc += 2.0 * g.nodes[i] * g.weights[i] * green_kernel_H(tp, x, z) * v(z);
    }
    return acc;
}

/// int (g^{1/eps}(1) - g^{1/eps}(z)) v(z) dz; Sv is periodic iff this vanishes.
inline cplx check_orthogonality(const TransformedProblem& tp, const GridFunction& v) {
    const double G1 = g_power(tp, 1.0);
    cplx s{0.0, 0.0};
    for (std::size_t j = 0; j < v.size(); ++j) s += v.w[j] * (G1 - g_power(tp, v.x[j])) * v.values[j];
    return s;
}

/// v minus its component along the defect direction g^{1/eps}(1) - g^{1/eps}(z).
inline GridFunction project_to_range(const TransformedProblem& tp, const GridFunction& v) {
    const double G1 = g_power(tp, 1.0);
    cplx num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double d = G1 - g_power(tp, v.x[j]);
        num += v.w[j] * d * v.values[j];
        den += v.w[j] * d * d;
    }
    GridFunction out = v;
    for (std::size_t j = 0; j < v.size(); ++j) out.values[j] -= (num / den) * (G1 - g_power(tp, v.x[j]));
    return out;
}

/// Symmetric graded nodes with n (rounded to a multiple of 2*order) points.
inline QuadratureGrid resolvent_grid(int n_nodes, int order = 16, double grading = 2.0) {
    const int per_side = std::max(1, n_nodes / (2 * order));
    return symmetric_graded_grid(per_side, order, grading);
}

struct SvDecay {
    std::vector<double> sigma;         // fine grid, descending
    std::vector<double> sigma_coarse;  // half the nodes
    int n_converged = 0;               // leading sigma agreeing to 1% between the two grids
    int fit_from = 0, fit_to = 0;      // fitted index range (1-based, inclusive)
    double slope = 0.0;
    double slope_stderr = 0.0;
    bool resolution_warning = false;
};

namespace detail {

inline std::vector<double> s_singular_values(const TransformedProblem& tp, int n_nodes) {
    const QuadratureGrid g = resolvent_grid(n_nodes);
    const Eigen::Index n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = std::sqrt(g.weights[i] * g.weights[j]) * green_kernel_H(tp, g.nodes[i], g.nodes[j]);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

}  // namespace detail

/// Singular values of the weight-symmetrised Nystrom matrix of S and their log-log decay.
inline SvDecay singular_value_decay(const TransformedProblem& tp, int n_nodes, int fit_from = 4) {
    if (n_nodes < 128) throw std::invalid_argument("singular_value_decay: need at least 128 nodes");
    SvDecay out;
    out.sigma = detail::s_singular_values(tp, n_nodes);
    out.sigma_coarse = detail::s_singular_values(tp, n_nodes / 2);
    const std::size_t nc = std::min(out.sigma.size(), out.sigma_coarse.size());
    int k = 0;
    while (static_cast<std::size_t>(k) < nc && std::abs(out.sigma[k] - out.sigma_coarse[k]) <= 1e-2 * out.sigma[k]) ++k;
    out.n_converged = k;
    out.resolution_warning = k < 30;
    out.fit_from = fit_from;
    out.fit_to = std::max(k, fit_from + 2);
    std::vector<double> lx, ly;
    for (int i = out.fit_from; i <= out.fit_to && static_cast<std::size_t>(i) <= out.sigma.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(i)));
        ly.push_back(std::log(out.sigma[i - 1]));
    }
    const auto f = detail::fit_line(lx, ly);
    out.slope = f.slope;
    out.slope_stderr = f.slope_stderr;
    return out;
}

// ------------------------------------------------------------ general E ----

/// psi on (0, 1] for one value of E: integrated from t = b2 down to t_floor,
/// starting from data orthogonal to the regular solution there.
class SecondSolution {
public:
    SecondSolution() = default;
    SecondSolution(const HalfLineSolution& phi, const TransformedProblem& tp, const SolverOptions& opt)
        : tp_(&tp), t_floor_(opt.t_floor) {
        const double ell = tp.ell();
        const cplx lam = phi.point().lambda;
        const cplx l2 = lam * lam;
        const double k = detail::wave_number(tp, lam);
        const TransformedProblem* p = tp_;
        auto coeffs = [p, l2, ell](double t) {
            const double c = ell * (ell + 1.0);
            return detail::LinearCoeffs{c / (t * t) + p->eval_q(t) - l2,
                                        cplx{-2.0 * c / (t * t * t) + p->eval_q_prime(t), 0.0}, 0.0, 0.0};
        };
        auto grid = detail::table_grid(opt.t_floor, tp.b2(), k, ell, opt);
        std::reverse(grid.begin(), grid.end());
        const auto [zp, dzp] = phi.z_of_t(tp.b2());
        const double ref = std::max(zp.log_abs(), dzp.log_abs() - std::log(k));
        const cplx a = zp.relative_to(ref), b = dzp.relative_to(ref) / k;
        const cplx z0 = -std::conj(b), dz0 = std::conj(a) * k;
        table_ = detail::OdeTable(coeffs, std::move(grid), z0, dz0, k, opt);
        const auto [zs, dzs] = table_.eval(tp.b2());
        wronskian_ = zp * dzs - dzp * zs;
    }

    /// Z W'_psi - Z' W_psi in the Liouville variable (constant in t).
    [[nodiscard]] const Scaled& wronskian_t() const { return wronskian_; }

    [[nodiscard]] std::pair<Scaled, Scaled> z_of_t(double t) const {
        if (t >= t_floor_) return table_.eval(std::min(t, tp_->b2()));
        const auto [z, dz] = table_.eval(t_floor_);
        const double ell = tp_->ell();
        const Scaled zz = z * cplx{std::pow(t / t_floor_, -ell), 0.0};
        return {zz, zz * cplx{-ell / t, 0.0}};
    }

    /// (psi, psi') at x in (0, 1].
    [[nodiscard]] std::pair<Scaled, Scaled> psi(double x) const {
        const LiouvilleJet j = tp_->jet(std::min(x, 1.0));
        const double ell = tp_->ell();
        const Scaled P{cplx{1.0, 0.0}, -0.25 * std::log(j.w) - (ell + 1.0) * std::log(j.y)};
        const auto [z, dz] = z_of_t(j.t);
        const double c = -0.25 * j.dlog_w - (ell + 1.0) * j.dlog_y;
        return {z * P, (z * cplx{c, 0.0} + dz * cplx{j.tau_prime, 0.0}) * P};
    }

private:
    const TransformedProblem* tp_ = nullptr;
    double t_floor_ = 1e-6;
    detail::OdeTable table_;
    Scaled wronskian_;
};

/// Green function of L - E with the periodic condition, G(x,z) and its flux companion.
///
/// Written so that no two exponentially large terms cancel.  With
/// P = Phi(1), M = Phi(-1), Delta = P - M and omega = P psi - psi(1) Phi
/// (the solution vanishing at x = 1), for x, z > 0
///     G = Phi(min) omega(max) / (D(z) Delta) - (M/Delta) K(x,z) 1{z < x},
/// K the initial-value kernel from 0; x, z < 0 is the mirror image, and the
/// cross terms are Phi(x) omega(|z|) / (D(|z|) Delta).
class GreenFunction {
public:
    struct Nodal {
        Scaled phi, flux_phi, psi, flux_psi;
        Scaled omega, flux_omega;
        Scaled A, B, C;  // phi / D, psi / D, omega / D
    };

    GreenFunction(const TransformedProblem& tp, cplx E, const SolverOptions& opt = {}, double eig_tol = 1e-11)
        : tp_(&tp), E_(E), reg_(tp, E, SolutionMethod::Auto, opt) {
        psi_[0] = SecondSolution(reg_.plus(), tp, opt);
        psi_[1] = SecondSolution(reg_.minus(), tp, opt);
        for (int side = 0; side < 2; ++side) {
            const HalfLineSolution& h = side == 0 ? reg_.plus() : reg_.minus();
            end_phi_[side] = h.phi(1.0).first;
            end_psi_[side] = psi_[side].psi(1.0).first;
        }
        const Scaled& p1 = end_phi_[0];
        const Scaled& m1 = end_phi_[1];
        delta_ = p1 - m1;
        const double ref = std::max(p1.log_abs(), m1.log_abs());
        conditioning_ = std::abs(delta_.relative_to(ref)) / (std::abs(p1.relative_to(ref)) + std::abs(m1.relative_to(ref)));
        if (conditioning_ < eig_tol) throw NearEigenvalueError(E, conditioning_);
        // M/Delta for x > 0 and P/(M - P) = -P/Delta for x < 0, as plain numbers (|.| <= ~1 in the bad case)
        cross_[0] = ratio(m1, delta_);
        cross_[1] = -ratio(p1, delta_);
    }

    [[nodiscard]] cplx E() const { return E_; }
    [[nodiscard]] const RegularSolution& regular() const { return reg_; }
    /// |Phi(1) - Phi(-1)| / (|Phi(1)| + |Phi(-1)|); zero at eigenvalues.
    [[nodiscard]] double conditioning() const { return conditioning_; }

    /// Half-line data at xi in (0, 1]; side 0 uses E (x > 0), side 1 uses -E (x < 0).
    [[nodiscard]] Nodal nodal(int side, double xi) const {
        const HalfLineSolution& h = side == 0 ? reg_.plus() : reg_.minus();
        const auto& F = tp_->field();
        Nodal n;
        const auto [ph, dph] = h.phi(xi);
        const auto [ps, dps] = psi_[side].psi(xi);
        const double f = F.f(xi);
        n.phi = ph;
        n.flux_phi = dph * cplx{f, 0.0} + ph;
        n.psi = ps;
        n.flux_psi = dps * cplx{f, 0.0} + ps;
        n.omega = end_phi_[side] * n.psi - end_psi_[side] * n.phi;
        n.flux_omega = end_phi_[side] * n.flux_psi - end_psi_[side] * n.flux_phi;
        const Scaled& W = psi_[side].wronskian_t();
        const Scaled D{W.mant, W.log_scale + std::log(tp_->epsilon()) - std::log(tp_->eval_g(xi)) / tp_->epsilon()};
        n.A = ph / D;
        n.B = ps / D;
        n.C = n.omega / D;
        return n;
    }

    [[nodiscard]] Nodal nodal_at(double x) const { return x > 0.0 ? nodal(0, x) : nodal(1, -x); }

    /// G(x,z) (flux = false) or the flux f d/dx G + G, from nodal data at x and z.
    [[nodiscard]] Scaled kernel(double x, const Nodal& nx, double z, const Nodal& nz, bool flux = false) const {
        const Scaled& phx = flux ? nx.flux_phi : nx.phi;
        if ((x > 0.0) != (z > 0.0)) return phx * nz.C / delta_;
        // same side; the x < 0 half is the mirror problem with Delta -> -Delta and an overall sign
        const int side = x > 0.0 ? 0 : 1;
        const Scaled dl = side == 0 ? delta_ : negated(delta_);
        const bool inner = std::abs(z) < std::abs(x);
        Scaled g = inner ? (flux ? nx.flux_omega : nx.omega) * nz.A / dl : phx * nz.C / dl;
        if (inner) {
            const Scaled k = flux ? nx.flux_psi * nz.A - nx.flux_phi * nz.B : nx.psi * nz.A - nx.phi * nz.B;
            g = g - k * cross_[side];
        }
        return side == 0 ? g : negated(g);
    }

    [[nodiscard]] cplx kernel(double x, double z, bool flux = false) const {
        return kernel(x, nodal_at(x), z, nodal_at(z), flux).value();
    }

private:
    static Scaled negated(const Scaled& s) { return {-s.mant, s.log_scale}; }

    const TransformedProblem* tp_;
    cplx E_;
    RegularSolution reg_;
    SecondSolution psi_[2];
    Scaled end_phi_[2], end_psi_[2];
    Scaled delta_;
    cplx cross_[2];
    double conditioning_ = 1.0;
};

/// Solution of (L - E)u = v for a callable v, evaluated pointwise by
/// quadrature of G(x, .) v in s = sqrt|z|, split at 0 and at x.
class ResolventSolution {
public:
    template <class V>
    ResolventSolution(const GreenFunction& G, V&& v, int order = 16) : G_(&G), v_(std::forward<V>(v)), order_(order) {}

    [[nodiscard]] cplx u(double x) const { return eval(x, false); }
    [[nodiscard]] cplx flux(double x) const { return eval(x, true); }

private:
    cplx eval(double x, bool flux) const {
        if (x == 0.0) x = 1e-300;
        const GreenFunction::Nodal nx = G_->nodal_at(x);
        const double lm = std::abs(G_->regular().point().lambda);
        const double sx = std::sqrt(std::abs(x));
        Scaled acc;
        for (double sgn : {-1.0, 1.0}) {
            std::vector<double> br;
            const bool same = (sgn > 0) == (x > 0);
            auto add = [&](double a, double b) {
                const int panels = std::max(2, static_cast<int>(std::ceil((b - a) * (lm + 4.0) / 2.0)));
                for (int k = 0; k < panels; ++k) br.push_back(a + (b - a) * k / panels);
            };
            if (same) {
                add(0.0, sx);
                add(sx, 1.0);
            } else {
                add(0.0, 1.0);
            }
            br.push_back(1.0);
            const QuadratureGrid g = composite_gauss(br, order_);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = g.nodes[i];
                const double z = sgn * s * s;
                acc = acc + G_->kernel(x, nx, z, G_->nodal_at(z), flux) * (2.0 * s * g.weights[i] * v_(z));
            }
        }
        return acc.value();
    }

    const GreenFunction* G_;
    std::function<cplx(double)> v_;
    int order_;
};

/// Nystrom matrix sqrt(w_i) G(x_i, z_j) sqrt(w_j) on a grid.
inline Eigen::MatrixXcd resolvent_matrix(const GreenFunction& G, const QuadratureGrid& grid) {
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    std::vector<GreenFunction::Nodal> nd(n);
    for (Eigen::Index i = 0; i < n; ++i) nd[i] = G.nodal_at(grid.nodes[i]);
    Eigen::MatrixXcd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            M(i, j) = std::sqrt(grid.weights[i] * grid.weights[j]) *
                      G.kernel(grid.nodes[i], nd[i], grid.nodes[j], nd[j]).value();
    return M;
}

/// u on the grid of v: Nystrom application of the Green function.
inline GridFunction solve_resolvent(const TransformedProblem& tp, cplx E, const GridFunction& v,
                                    const SolverOptions& opt = {}) {
    const GreenFunction G(tp, E, opt);
    QuadratureGrid grid{v.x, v.w};
    const Eigen::MatrixXcd M = resolvent_matrix(G, grid);
    const Eigen::Index n = static_cast<Eigen::Index>(v.size());
    Eigen::VectorXcd b(n);
    for (Eigen::Index j = 0; j < n; ++j) b(j) = std::sqrt(v.w[j]) * v.values[j];
    const Eigen::VectorXcd y = M * b;
    GridFunction u = v;
    for (Eigen::Index i = 0; i < n; ++i) u.values[i] = y(i) / std::sqrt(v.w[i]);
    return u;
}

/// Largest singular value: power iteration on M^* M, with a dense SVD fallback.
inline double largest_singular_value(const Eigen::MatrixXcd& M, int max_iter = 400, double tol = 1e-10) {
    const Eigen::Index n = M.cols();
    Eigen::VectorXcd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = cplx{1.0 + 0.01 * static_cast<double>(i % 7), 0.3 * std::sin(1.0 + i)};
    x.normalize();
    double prev = 0.0, sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXcd y = M * x;
        sigma = y.norm();
        Eigen::VectorXcd z = M.adjoint() * y;
        const double zn = z.norm();
        if (zn == 0.0) return 0.0;
        x = z / zn;
        if (it > 3 && std::abs(sigma - prev) <= tol * sigma) return sigma;
        prev = sigma;
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M);
    return svd.singularValues()(0);
}

struct ResolventEstimate {
    cplx E{0.0, 0.0};
    double norm_estimate = std::numeric_limits<double>::quiet_NaN();
    double norm_refined = std::numeric_limits<double>::quiet_NaN();  // at twice the nodes
    double lower_bound_from_pseudomode = std::numeric_limits<double>::quiet_NaN();
    int grid_level = 0;  // node count
    bool converged = false;
    bool masked = false;
};

struct ResolventOptions {
    int n_basis = 256;
    bool check_convergence = true;
    double convergence_tol = 0.02;
    SolverOptions solver{};
};

inline double resolvent_norm_at(const GreenFunction& G, int n_basis) {
    return largest_singular_value(resolvent_matrix(G, resolvent_grid(n_basis)));
}

inline ResolventEstimate resolvent_norm(const TransformedProblem& tp, cplx E, const ResolventOptions& opt = {}) {
    ResolventEstimate r;
    r.E = E;
    const GreenFunction G(tp, E, opt.solver);
    r.norm_estimate = resolvent_norm_at(G, opt.n_basis);
    r.grid_level = static_cast<int>(resolvent_grid(opt.n_basis).size());
    if (opt.check_convergence) {
        r.norm_refined = resolvent_norm_at(G, 2 * opt.n_basis);
        r.converged = std::abs(r.norm_refined - r.norm_estimate) <= opt.convergence_tol * r.norm_refined;
    }
    return r;
}

inline ResolventEstimate resolvent_norm(const TransformedProblem& tp, cplx E, int n_basis) {
    ResolventOptions o;
    o.n_basis = n_basis;
    return resolvent_norm(tp, E, o);
}

/// eta = half the smallest nonzero eigenvalue modulus.
inline double default_eta(const std::vector<cplx>& eigenvalues) {
    double best = std::numeric_limits<double>::infinity();
    for (const cplx& e : eigenvalues)
        if (std::abs(e) > 0.0) best = std::min(best, std::abs(e));
    return 0.5 * best;
}

/// Eigenvalue set closed under E -> -E and conjugation, with its local spacing.
struct MaskSet {
    std::vector<cplx> centres;
    std::vector<double> radii;

    [[nodiscard]] bool masked(cplx E) const {
        for (std::size_t k = 0; k < centres.size(); ++k)
            if (std::abs(E - centres[k]) < radii[k]) return true;
        return false;
    }
};

/// Masks of radius frac * (local spacing) around 0 and each +-i s_k.
inline MaskSet build_masks(const std::vector<double>& imag_parts, double frac = 1e-2) {
    std::vector<double> s{0.0};
    for (double v : imag_parts) s.push_back(std::abs(v));
    std::sort(s.begin(), s.end());
    MaskSet m;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double lo = k > 0 ? s[k] - s[k - 1] : std::numeric_limits<double>::infinity();
        const double hi = k + 1 < s.size() ? s[k + 1] - s[k] : std::numeric_limits<double>::infinity();
        double sp = std::min(lo, hi);
        if (!std::isfinite(sp)) sp = s[k] > 0 ? s[k] : 1.0;
        m.centres.push_back({0.0, s[k]});
        m.radii.push_back(frac * sp);
        if (s[k] > 0) {
            m.centres.push_back({0.0, -s[k]});
            m.radii.push_back(frac * sp);
        }
    }
    return m;
}

struct PseudospectrumTable {
    int n_re = 0, n_im = 0;
    std::vector<double> re, im;
    std::vector<ResolventEstimate> points;  // row-major: index = i_im * n_re + i_re

    [[nodiscard]] const ResolventEstimate& at(int i_re, int i_im) const { return points[i_im * n_re + i_re]; }
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

inline PseudospectrumTable pseudospectrum_grid(const TransformedProblem& tp, std::pair<double, double> re_range,
                                               std::pair<double, double> im_range, int n_re, int n_im,
                                               const MaskSet& masks, const ResolventOptions& opt = {},
                                               unsigned jobs = 1) {
    PseudospectrumTable t;
    t.n_re = n_re;
    t.n_im = n_im;
    t.re = linspace(re_range.first, re_range.second, n_re);
    t.im = linspace(im_range.first, im_range.second, n_im);
    t.points = parallel_map(static_cast<std::size_t>(n_re) * n_im, jobs, [&](std::size_t idx) {
        const cplx E{t.re[idx % n_re], t.im[idx / n_re]};
        ResolventEstimate r;
        r.E = E;
        if (masks.masked(E)) {
            r.masked = true;
            return r;
        }
        try {
            r = resolvent_norm(tp, E, opt);
        } catch (const NearEigenvalueError&) {
            r.masked = true;
        }
        return r;
    });
    return t;
}

/// Crossings of log10 ||(L - E)^{-1}|| = level, one per column of the table
/// (first crossing walking up in Im E), and the log-log fit |Im E| ~ |Re E|^p.
struct LevelLine {
    double level_log10 = 0.0;
    std::vector<double> re, im;
    double exponent = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
};

inline LevelLine level_line(const PseudospectrumTable& t, double level_log10) {
    LevelLine L;
    L.level_log10 = level_log10;
    auto value = [&](int i, int j) {
        const ResolventEstimate& r = t.at(i, j);
        return r.masked || !(r.norm_estimate > 0.0) ? std::numeric_limits<double>::quiet_NaN()
                                                     : std::log10(r.norm_estimate);
    };
    for (int i = 0; i < t.n_re; ++i) {
        if (t.re[i] == 0.0) continue;
        for (int j = 0; j + 1 < t.n_im; ++j) {
            const double a = value(i, j), b = value(i, j + 1);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            if ((a - level_log10) * (b - level_log10) <= 0.0 && a != b) {
                const double w = (level_log10 - a) / (b - a);
                const double im = t.im[j] + w * (t.im[j + 1] - t.im[j]);
                if (im != 0.0) {
                    L.re.push_back(t.re[i]);
                    L.im.push_back(im);
                }
                break;
            }
        }
    }
    if (L.re.size() >= 3) {
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < L.re.size(); ++k) {
            lx.push_back(std::log(std::abs(L.re[k])));
            ly.push_back(std::log(std::abs(L.im[k])));
        }
        const auto f = detail::fit_line(lx, ly);
        L.exponent = f.slope;
        L.r2 = f.r2;
    }
    return L;
}

/// Largest relative discrepancy of the table under E -> -E, E -> conj E and
/// E -> -conj E; NaN when the grid is not mirror symmetric.
inline double symmetry_defect(const PseudospectrumTable& t) {
    auto mirrored = [](const std::vector<double>& v) {
        for (std::size_t k = 0; k < v.size(); ++k)
            if (std::abs(v[k] + v[v.size() - 1 - k]) > 1e-12 * (1.0 + std::abs(v[k]))) return false;
        return true;
    };
    if (!mirrored(t.re) || !mirrored(t.im)) return std::numeric_limits<double>::quiet_NaN();
    double worst = 0.0;
    for (int i = 0; i < t.n_re; ++i)
        for (int j = 0; j < t.n_im; ++j) {
            const ResolventEstimate& a = t.at(i, j);
            if (a.masked) continue;
            for (auto [ii, jj] : {std::pair{t.n_re - 1 - i, j}, std::pair{i, t.n_im - 1 - j},
                                  std::pair{t.n_re - 1 - i, t.n_im - 1 - j}}) {
                const ResolventEstimate& b = t.at(ii, jj);
                if (b.masked) continue;
                worst = std::max(worst, std::abs(a.norm_estimate - b.norm_estimate) /
                                            std::max(a.norm_estimate, b.norm_estimate));
            }
        }
    return worst;
}

}  // namespace singsl
