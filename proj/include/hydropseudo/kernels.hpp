#pragma once

// Pseudopotential kernels h(x, v) with a movable logarithmic singularity.
//
// Closed-form families:
//   LogKappa              kappa (x - v) + log|x - v|
//   ExpKappa              kappa (x - v) + log|e^{x - v} - 1|
//   ShiftedLog            (x + 1) log|v| - log|v - x|
//   AffineLogDegenerate   c1 + c2 (x - v) + log|c3 (x - v)|
// The quadrature family is built from P, Z and phi (see phi_table.hpp). It is available in two frames:
// `example4` is h(xi, u) with singularity at u = phi(xi); `diagonal` is H(x, v) = h(x, phi(v)).

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hydropseudo/errors.hpp"
#include "hydropseudo/jet.hpp"
#include "hydropseudo/numerics.hpp"
#include "hydropseudo/phi_table.hpp"

namespace hydropseudo {

enum class KernelTag { LogKappa, ExpKappa, ShiftedLog, Quadrature, AffineLogDegenerate };

inline const char* to_string(KernelTag t) {
    switch (t) {
        case KernelTag::LogKappa: return "LogKappa";
        case KernelTag::ExpKappa: return "ExpKappa";
        case KernelTag::ShiftedLog: return "ShiftedLog";
        case KernelTag::Quadrature: return "Quadrature";
        case KernelTag::AffineLogDegenerate: return "AffineLogDegenerate";
    }
    return "?";
}

inline KernelTag parse_kernel_tag(const std::string& s) {
    for (KernelTag t : {KernelTag::LogKappa, KernelTag::ExpKappa, KernelTag::ShiftedLog, KernelTag::Quadrature,
                        KernelTag::AffineLogDegenerate}) {
        if (s == to_string(t)) return t;
    }
    throw ConfigError("unknown kernel family tag '" + s + "'");
}

enum class Frame { diagonal, example4 };

struct HKernelFamily {
    KernelTag tag = KernelTag::LogKappa;
    double kappa = 0.0;
    std::array<double, 4> p_coeffs{1.0, 0.0, 0.0, 0.0};  // k0..k3
    std::array<double, 2> z_coeffs{0.0, 0.0};            // z0, z1 of M'/M
    double base_point = 0.0;
    double m_base = 1.0;                                  // M(base_point)
    std::array<double, 3> constants{0.0, 0.0, 1.0};       // c1, c2, c3
    Interval domain{-2.0, 2.0};                           // u-range (all families)
    Interval xi_domain{-0.5, 0.5};                        // quadrature only
    std::optional<double> phi0;                           // phi(mid xi_domain); base point when unset
    double guard_fraction = 0.05;

    static HKernelFamily log_kappa(double kappa) {
        HKernelFamily f;
        f.tag = KernelTag::LogKappa;
        f.kappa = kappa;
        return f;
    }
    static HKernelFamily exp_kappa(double kappa) {
        HKernelFamily f;
        f.tag = KernelTag::ExpKappa;
        f.kappa = kappa;
        return f;
    }
    static HKernelFamily shifted_log() {
        HKernelFamily f;
        f.tag = KernelTag::ShiftedLog;
        f.domain = {0.25, 4.0};
        return f;
    }
    static HKernelFamily affine_log(double c1, double c2, double c3) {
        HKernelFamily f;
        f.tag = KernelTag::AffineLogDegenerate;
        f.constants = {c1, c2, c3};
        return f;
    }
    /// P = 1 canonical form.
    static HKernelFamily quadrature_unit(double z0, double z1) {
        HKernelFamily f;
        f.tag = KernelTag::Quadrature;
        f.p_coeffs = {1.0, 0.0, 0.0, 0.0};
        f.z_coeffs = {z0, z1};
        f.base_point = 0.0;
        f.domain = {-2.0, 2.0};
        f.xi_domain = {-0.5, 0.5};
        return f;
    }
    /// P = x canonical form.
    static HKernelFamily quadrature_linear(double z0, double z1) {
        HKernelFamily f;
        f.tag = KernelTag::Quadrature;
        f.p_coeffs = {0.0, 1.0, 0.0, 0.0};
        f.z_coeffs = {z0, z1};
        f.base_point = 1.5;
        f.domain = {0.5, 4.0};
        f.xi_domain = {-0.3, 0.3};
        return f;
    }
    /// P = x(x - 1) canonical form with M = x^{s1} (x - 1)^{s2} on x > 1.
    static HKernelFamily quadrature_x_xm1(double s1, double s2) {
        HKernelFamily f;
        f.tag = KernelTag::Quadrature;
        f.p_coeffs = {0.0, -1.0, 1.0, 0.0};
        f.z_coeffs = {-s1, s1 + s2};
        f.base_point = 2.0;
        f.m_base = std::pow(2.0, s1);
        f.domain = {1.2, 4.0};
        f.xi_domain = {-0.4, 0.4};
        return f;
    }

    double s1() const { return -z_coeffs[0]; }
    double s2() const { return z_coeffs[0] + z_coeffs[1]; }

    QuadratureCoefficients quadrature_coefficients() const {
        return QuadratureCoefficients{p_coeffs, z_coeffs, base_point, m_base, domain};
    }
    PhiInitial phi_initial() const { return {xi_domain.mid(), phi0.value_or(base_point)}; }
};

/// Quadrature-family evaluator over a PhiTable.
class QuadratureModel {
public:
    explicit QuadratureModel(std::shared_ptr<const PhiTable> table) : table_(std::move(table)) {
        if (!table_) throw ConfigError("quadrature family requires a PhiTable");
    }

    const PhiTable& table() const { return *table_; }
    const QuadratureCoefficients& coefficients() const { return table_->coefficients(); }

    /// Taylor series of M at x0 given log M(x0).
    Jet m_series(double x0, double log_m0, int order) const {
        if (order == 0) return Jet::constant(std::exp(log_m0), 1, 0);
        const auto& q = coefficients();
        const Jet t = Jet::variable(x0, 0, 1, order - 1);
        const Jet r = ((-q.p[3] * t + q.z[1]) * t + q.z[0]) / eval_cubic(q.p, t);
        return exp(antiderivative(r, log_m0));
    }

    /// Taylor series of B at x0.
    Jet b_series(double x0, double log_m0, double b0, int order) const {
        if (order == 0) return Jet::constant(b0, 1, 0);
        const auto& q = coefficients();
        const Jet t = Jet::variable(x0, 0, 1, order - 1);
        return antiderivative((q.p[3] * t + (q.p[2] + q.z[1])) * m_series(x0, log_m0, order - 1), b0);
    }

    /// Taylor series of phi at xi0 (Picard iteration on phi' = P(phi) M(phi)).
    Jet phi_series(double xi0, int order) const {
        const PhiNode s = table_->state(xi0);
        Jet phi = Jet::constant(s.phi, 1, order);
        if (order == 0) return phi;
        const Jet m = m_series(s.phi, s.log_m, order);
        for (int it = 0; it < order; ++it) {
            const Jet rhs = eval_cubic(coefficients().p, phi) * compose(m, phi);
            phi = antiderivative(with_order(rhs, order - 1), s.phi);
        }
        return phi;
    }

    /// J(p, u) / M(p) with J(p, u) = int_c^u (M(t) - M(p)) / (p - t) dt.
    double j_scaled(double p, double u) const {
        const auto& q = coefficients();
        const double rp = q.R(p);
        return -integrate(
            [&](double t) {
                if (t == p) return rp;
                const double i = integrate([&q](double s) { return q.R(s); }, p, t);
                return std::expm1(i) / (t - p);
            },
            q.base_point, u, 1e-13);
    }

    /// int_c^p (P(c) M(c) / (P(s) M(s)) - 1) / (s - c) ds.
    double l_integral(double p) const {
        const auto& q = coefficients();
        const double c = q.base_point;
        const double at_c = -q.P_prime(c) / q.P(c) - q.R(c);
        return integrate(
            [&](double s) {
                if (s == c) return at_c;
                const double lp = std::log1p((c - s) * cubic_divided_difference(q.p, c, s) / q.P(s));
                const double lm = integrate([&q](double t) { return q.R(t); }, c, s);
                return std::expm1(lp - lm) / (s - c);
            },
            c, p, 1e-13);
    }

    /// h(xi, u) in the example4 frame.
    double value(double xi, double u) const { return value_at(table_->phi(xi), u); }

    /// Jet of h(xi, u) at (xi0, u0). The value slot is skipped (set to 0) when with_value is false.
    Jet example4_jet(double xi0, double u0, int order, bool with_value = true) const {
        const auto& q = coefficients();
        return example4_jet_at(xi0, u0, q.log_m(u0), q.b(u0), order, with_value);
    }

    /// Jet of H(x, v) = h(x, phi(v)) at (x0, v0).
    Jet diagonal_jet(double x0, double v0, int order, bool with_value = true) const {
        const PhiNode s = table_->state(v0);
        const Jet outer = example4_jet_at(x0, s.phi, s.log_m, s.b, order, with_value);
        const std::array<Jet, 2> inputs{Jet::variable(x0, 0, 2, order),
                                        compose(phi_series(v0, order), Jet::variable(v0, 1, 2, order))};
        return compose(outer, inputs);
    }

    /// Jet in (w, eps) at (w0, 0) of -H(w, w - eps) - log(eps).
    /// Entries (n, 0) with n >= 1 (w-derivatives of the eps^0 term) are not computed and left at zero.
    Jet diagonal_regular_part(double w0, int order) const {
        const PhiNode s = table_->state(w0);
        const double p0 = s.phi;
        const Jet phis = phi_series(w0, order);
        const Jet m = m_series(p0, s.log_m, order);
        const Jet dphi = eval_cubic(coefficients().p, phis) * compose(m, phis);
        const Jet W = Jet::variable(w0, 0, 2, order);
        const Jet E = Jet::variable(0.0, 1, 2, order);
        const Jet pj = compose(phis, W);
        const Jet D = segment_average(compose(dphi, W - E), 1);
        const Jet b = -multiply_by_var(D, 1);  // phi(w - eps) - phi(w)
        const Jet a = pj - p0;
        const auto mc = m.coeffs();

        std::vector<Jet> apow{Jet::constant(1.0, 2, order)}, bpow{Jet::constant(1.0, 2, order)};
        for (int i = 1; i <= order; ++i) {
            apow.push_back(apow.back() * a);
            bpow.push_back(bpow.back() * b);
        }
        Jet t = W.zeros_like();
        for (int n = 1; n <= order; ++n) {
            for (int j = 1; j <= n; ++j) t += apow[n - j] * bpow[j] * (mc[n] * binomial(n, j) / j);
        }
        Jet r = t / compose(m, pj) + log_abs(D);
        r.coeffs()[0] = -j_scaled(p0, p0) + l_integral(p0) + log_abs(D.value());
        return r;
    }

private:
    double value_at(double p, double u) const { return j_scaled(p, u) - log_abs(p - u) - l_integral(p); }

    Jet example4_jet_at(double xi0, double u0, double log_mu, double bu, int order, bool with_value) const {
        const auto& q = coefficients();
        const PhiNode s = table_->state(xi0);
        const double value = with_value ? value_at(s.phi, u0) : 0.0;
        if (order == 0) return Jet::constant(value, 2, 0);
        const int lo = order - 1;
        const Jet xi = Jet::variable(xi0, 0, 2, lo);
        const Jet u = Jet::variable(u0, 1, 2, lo);
        const Jet p = compose(phi_series(xi0, lo), xi);
        const Jet mp = compose(m_series(s.phi, s.log_m, lo), p);
        const Jet mu = compose(m_series(u0, log_mu, lo), u);
        const Jet bj = compose(b_series(u0, log_mu, bu, lo), u);
        const Jet d = u - p;
        const Jet h_u = -(mu / (d * mp));
        const Jet h_xi = eval_cubic(q.p, u) * mu / d - bj;
        return from_gradient(value, h_xi, h_u);
    }

    std::shared_ptr<const PhiTable> table_;
};

namespace detail {

template <class S>
S closed_form_h(const HKernelFamily& f, const S& x, const S& v) {
    using std::expm1;
    switch (f.tag) {
        case KernelTag::LogKappa: return f.kappa * (x - v) + log_abs(x - v);
        case KernelTag::ExpKappa: return f.kappa * (x - v) + log_abs(expm1(x - v));
        case KernelTag::ShiftedLog: return (x + 1.0) * log_abs(v) - log_abs(v - x);
        case KernelTag::AffineLogDegenerate:
            return f.constants[0] + f.constants[1] * (x - v) + log_abs(f.constants[2] * (x - v));
        case KernelTag::Quadrature: break;
    }
    throw ConfigError("closed form requested for the quadrature family");
}

}  // namespace detail

class Kernel {
public:
    explicit Kernel(HKernelFamily family, double phi_tolerance = 1e-12) : family_(std::move(family)) {
        validate();
        if (family_.tag == KernelTag::Quadrature) {
            auto table = std::make_shared<const PhiTable>(build_phi_table(
                family_.quadrature_coefficients(), family_.xi_domain, phi_tolerance, family_.phi_initial()));
            quad_ = std::make_shared<const QuadratureModel>(std::move(table));
        }
    }

    Kernel(HKernelFamily family, std::shared_ptr<const PhiTable> table) : family_(std::move(family)) {
        validate();
        if (family_.tag == KernelTag::Quadrature) quad_ = std::make_shared<const QuadratureModel>(std::move(table));
    }

    const HKernelFamily& family() const { return family_; }
    KernelTag tag() const { return family_.tag; }
    bool is_quadrature() const { return family_.tag == KernelTag::Quadrature; }
    const QuadratureModel& quadrature() const {
        if (!quad_) throw ConfigError("kernel has no PhiTable");
        return *quad_;
    }
    const PhiTable* phi_table() const { return quad_ ? &quad_->table() : nullptr; }

    /// Range of the second slot (and of the first, except for the quadrature example4 frame).
    Interval domain(Frame f = Frame::diagonal) const {
        return (is_quadrature() && f == Frame::diagonal) ? family_.xi_domain : family_.domain;
    }
    Interval first_slot_domain(Frame = Frame::diagonal) const {
        return is_quadrature() ? family_.xi_domain : family_.domain;
    }
    double delta(Frame f = Frame::diagonal) const { return family_.guard_fraction * domain(f).diameter(); }

    /// Sign s such that s*h(x, v) - log|x - v| stays bounded as v -> x.
    int asymptotic_sign() const {
        return (family_.tag == KernelTag::ShiftedLog || family_.tag == KernelTag::Quadrature) ? -1 : 1;
    }

    /// Empty when (x, v) passes the family guards; otherwise the violated guard.
    std::optional<std::string> violation(double x, double v, Frame f = Frame::diagonal) const {
        const double d = delta(f);
        std::ostringstream os;
        if (is_quadrature()) {
            const Interval xd = first_slot_domain(f);
            const Interval vd = domain(f);
            if (!xd.contains(x)) {
                os << "first argument " << x << " outside [" << xd.lo << ", " << xd.hi << "]";
                return os.str();
            }
            if (!vd.contains(v)) {
                os << "second argument " << v << " outside [" << vd.lo << ", " << vd.hi << "]";
                return os.str();
            }
            const double sing = f == Frame::example4 ? quad_->table().phi(x) : x;
            if (std::abs(v - sing) < d) {
                os << (f == Frame::example4 ? "|u - phi(xi)| >= delta" : "|x - v| >= delta") << " violated: |"
                   << v << " - " << sing << "| < " << d;
                return os.str();
            }
            return std::nullopt;
        }
        if (std::abs(x - v) < d) {
            os << "|x - v| >= delta violated: |" << x << " - " << v << "| < " << d;
            return os.str();
        }
        if (family_.tag == KernelTag::ShiftedLog && v < d) {
            os << "v > delta violated: v = " << v << ", delta = " << d;
            return os.str();
        }
        return std::nullopt;
    }

    bool admissible(double x, double v, Frame f = Frame::diagonal) const { return !violation(x, v, f); }

    void check(double x, double v, Frame f = Frame::diagonal) const {
        if (auto msg = violation(x, v, f)) throw DomainError(std::string(to_string(tag())) + ": " + *msg);
    }

    /// Bivariate jet of h at (x, v); slot 0 is the first argument.
    Jet jet(double x, double v, int order, Frame f = Frame::diagonal, bool with_value = true) const {
        check(x, v, f);
        return jet_unchecked(x, v, order, f, with_value);
    }

    Jet jet_unchecked(double x, double v, int order, Frame f = Frame::diagonal, bool with_value = true) const {
        if (is_quadrature()) {
            return f == Frame::example4 ? quad_->example4_jet(x, v, order, with_value)
                                        : quad_->diagonal_jet(x, v, order, with_value);
        }
        return detail::closed_form_h(family_, Jet::variable(x, 0, 2, order), Jet::variable(v, 1, 2, order));
    }

    double value(double x, double v, Frame f = Frame::diagonal) const {
        check(x, v, f);
        if (is_quadrature()) return f == Frame::example4 ? quad_->value(x, v) : quad_->value(x, quad_->table().phi(v));
        return detail::closed_form_h(family_, x, v);
    }

    /// Right-hand side of the three-point functional equation.
    double nu(double x, double v) const {
        switch (family_.tag) {
            case KernelTag::LogKappa: return family_.kappa * family_.kappa;
            case KernelTag::ExpKappa: return family_.kappa * (family_.kappa + 1.0);
            case KernelTag::ShiftedLog:
                if (v == 0.0) throw SingularPointError("nu(x, v) = x / v at v = 0");
                return x / v;
            case KernelTag::AffineLogDegenerate: return family_.constants[1] * family_.constants[1];
            case KernelTag::Quadrature: return 0.0;
        }
        return 0.0;
    }

    /// Reference closed forms kappa(kappa + 1) and x / v for the classified families; empty otherwise.
    std::optional<double> reference_nu(double x, double v) const {
        switch (family_.tag) {
            case KernelTag::LogKappa:
            case KernelTag::ExpKappa: return family_.kappa * (family_.kappa + 1.0);
            case KernelTag::ShiftedLog: return nu(x, v);
            default: return std::nullopt;
        }
    }

private:
    void validate() const {
        if (!(family_.domain.hi > family_.domain.lo)) throw ConfigError("family domain is empty");
        if (!(family_.guard_fraction > 0.0 && family_.guard_fraction < 0.5)) {
            throw ConfigError("guard_fraction must lie in (0, 0.5)");
        }
        if (family_.tag == KernelTag::AffineLogDegenerate && family_.constants[2] == 0.0) {
            throw ConfigError("AffineLogDegenerate needs c3 != 0");
        }
        if (family_.tag == KernelTag::ShiftedLog && family_.domain.lo <= 0.0) {
            throw ConfigError("ShiftedLog needs a domain with v > 0");
        }
    }

    HKernelFamily family_;
    std::shared_ptr<const QuadratureModel> quad_;
};

/// Jet of h(xi, u) in the example4 frame (the only frame for closed-form families).
inline Jet h_jet(const HKernelFamily& family, std::shared_ptr<const PhiTable> table, double xi, double u, int order) {
    if (family.tag == KernelTag::Quadrature && !table) throw ConfigError("quadrature family requires a PhiTable");
    return Kernel(family, std::move(table)).jet(xi, u, order, Frame::example4);
}

inline double nu_eval(const HKernelFamily& family, double xi, double v) {
    if (family.tag == KernelTag::Quadrature) return 0.0;
    return Kernel(family).nu(xi, v);
}

/// Seeded admissible points (xi, u_1..u_N): all pairs separated by delta and passing the family guards.
inline std::vector<std::vector<double>> sample_domain(const Kernel& kernel, int n, int n_vars, std::uint64_t seed,
                                                      Frame frame = Frame::diagonal) {
    if (n < 1 || n_vars < 1) throw ConfigError("sample_domain needs n >= 1 and N >= 1");
    const Interval ud = kernel.domain(frame);
    const Interval xd = kernel.first_slot_domain(frame);
    const double d = kernel.delta(frame);
    const bool split = kernel.is_quadrature() && frame == Frame::example4;
    if (n_vars * d * 1.5 > ud.diameter()) {
        std::ostringstream os;
        os << "domain too small: cannot place " << n_vars << " points separated by " << d << " in [" << ud.lo << ", "
           << ud.hi << "]";
        throw DomainError(os.str());
    }
    std::vector<std::vector<double>> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        Rng rng(sample_seed(seed, static_cast<std::uint64_t>(k)));
        std::vector<double> pt(n_vars + 1);
        bool ok = false;
        for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
            pt[0] = rng.uniform(xd.lo, xd.hi);
            const double sing = split ? kernel.phi_table()->phi(pt[0]) : pt[0];
            ok = true;
            for (int i = 1; i <= n_vars && ok; ++i) {
                pt[i] = rng.uniform(ud.lo, ud.hi);
                if (std::abs(pt[i] - sing) < d) ok = false;
                for (int j = 1; j < i && ok; ++j) {
                    if (std::abs(pt[i] - pt[j]) < d) ok = false;
                }
            }
            // every ordered pair the identities evaluate must pass the guards
            for (int i = 0; i <= n_vars && ok; ++i) {
                for (int j = 0; j <= n_vars && ok; ++j) {
                    if (i == j || (split && i != 0)) continue;
                    if (split && j == 0) continue;
                    ok = kernel.admissible(pt[i], pt[j], frame);
                }
            }
        }
        if (!ok) throw DomainError("domain too small: no admissible point found after 10000 draws");
        out.push_back(std::move(pt));
    }
    return out;
}

// ---- diagonal expansion  s*h(w, v) = log(w - v) + sum_k a_k(w) (w - v)^k ----

/// Jet in (w, eps) at (w0, 0) of s*h(w, w - eps) - log(eps), s = asymptotic_sign().
inline Jet regular_part_jet(const Kernel& kernel, double w0, int order) {
    const HKernelFamily& f = kernel.family();
    const Interval dom = kernel.domain(Frame::diagonal);
    if (!dom.contains(w0)) {
        std::ostringstream os;
        os << "expansion point w=" << w0 << " outside [" << dom.lo << ", " << dom.hi << "]";
        throw DomainError(os.str());
    }
    if (kernel.is_quadrature()) return kernel.quadrature().diagonal_regular_part(w0, order);
    const Jet W = Jet::variable(w0, 0, 2, order);
    const Jet E = Jet::variable(0.0, 1, 2, order);
    switch (f.tag) {
        case KernelTag::LogKappa: return f.kappa * E;
        case KernelTag::ExpKappa: return f.kappa * E + log_abs(segment_average(exp(E), 1));
        case KernelTag::ShiftedLog: return -(W + 1.0) * log_abs(W - E);
        case KernelTag::AffineLogDegenerate:
            return f.constants[0] + f.constants[1] * E + log_abs(f.constants[2]) + 0.0 * W;
        case KernelTag::Quadrature: break;
    }
    throw ConfigError("unreachable kernel tag");
}

/// a_0..a_4 as univariate jets in w at w0; a_k has order (order - k).
/// For the quadrature family only the value of a_0 is available (its derivative slots are zero).
inline std::vector<Jet> expansion_jets(const Kernel& kernel, double w0, int order = kMaxJetOrder) {
    const Jet r = regular_part_jet(kernel, w0, order);
    std::vector<Jet> a;
    for (int k = 0; k <= std::min(4, order); ++k) {
        Jet ak = Jet::constant(0.0, 1, order - k);
        auto c = ak.coeffs();
        for (int n = 0; n <= order - k; ++n) c[n] = r.coeff({n, k, 0});
        a.push_back(ak);
    }
    return a;
}

/// Coefficients a_0..a_kmax at w (exact expansion at eps = 0).
inline std::vector<double> expansion_coeffs(const Kernel& kernel, double w, int k_max) {
    if (k_max < 0 || k_max > 4) throw CapacityError("expansion_coeffs supports k_max <= 4");
    const Jet r = regular_part_jet(kernel, w, k_max);
    std::vector<double> a;
    for (int k = 0; k <= k_max; ++k) a.push_back(r.coeff({0, k, 0}));
    return a;
}

/// a_0..a_kmax from Taylor jets of s*h(w, w - eps) - log(eps) at pivots eps0, eps0/2, eps0/4, eps0/8,
/// shifted to eps = 0 and Richardson-extrapolated. Cancellation against the log grows like eps^-k, so
/// a_2 is good to about 1e-6 and a_3 to about 1e-3. A wrong singular part makes a_0 or a_1 drift between
/// levels, which raises SingularStructureError.
inline std::vector<double> expansion_coeffs_richardson(const Kernel& kernel, double w, int k_max, double eps0 = 1e-2) {
    if (k_max < 0 || k_max > 3) throw CapacityError("Richardson expansion supports k_max <= 3");
    constexpr int K = kMaxJetOrder;
    constexpr int levels = 4;
    const double sgn = kernel.asymptotic_sign();
    std::array<std::vector<double>, levels> est;
    for (int l = 0; l < levels; ++l) {
        const double e0 = eps0 / std::pow(2.0, l);
        const Jet hb = kernel.jet_unchecked(w, w - e0, K, Frame::diagonal);
        const Jet E = Jet::variable(e0, 0, 1, K);
        const std::array<Jet, 2> in{Jet::constant(w, 1, K), w - E};
        const Jet r = sgn * compose(hb, in) - log_abs(E);
        const auto c = r.coeffs();
        for (int k = 0; k <= k_max; ++k) {
            double s = 0.0;
            for (int j = K - k; j >= 0; --j) s += binomial(k + j, k) * c[k + j] * std::pow(-e0, j);
            est[l].push_back(s);
        }
    }
    std::vector<double> a;
    for (int k = 0; k <= k_max; ++k) {
        std::array<double, levels> t{};
        for (int l = 0; l < levels; ++l) t[l] = est[l][k];
        double previous = t[0];
        for (int m = 1; m < levels; ++m) {
            const double f = std::pow(2.0, K + m - k);
            if (m == levels - 1) previous = t[0];
            for (int l = 0; l + m < levels; ++l) t[l] = (f * t[l + 1] - t[l]) / (f - 1.0);
        }
        const double change = std::abs(t[0] - previous);
        if (!std::isfinite(t[0]) || (k <= 1 && change > 1e-6 * (1.0 + std::abs(t[0])))) {
            std::ostringstream os;
            os << "expansion of " << to_string(kernel.tag()) << " at w=" << w << " does not converge for a_" << k
               << " (last Richardson change " << change << ")";
            throw SingularStructureError(os.str());
        }
        a.push_back(t[0]);
    }
    return a;
}

}  // namespace hydropseudo
