#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A Jet holds the Taylor coefficients c_alpha = d^alpha f / alpha! of a function of up to three
// variables at a fixed expansion point, for all multi-indices with |alpha| <= order <= 6.
// Coefficients are stored densely in graded order; the first entry is the function value.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hydropseudo/errors.hpp"

namespace hydropseudo {

inline constexpr int kMaxJetVars = 3;
inline constexpr int kMaxJetOrder = 6;
inline constexpr int kMaxJetCoeffs = 84;  // C(6 + 3, 3)

using MultiIndex = std::array<int, kMaxJetVars>;

namespace detail {

struct JetLayout {
    int num_vars = 0;
    int order = 0;
    int size = 0;
    std::vector<MultiIndex> index;
    std::vector<int> degree;
    std::vector<double> factorial;  // alpha! per coefficient
    std::array<int, 7 * 7 * 7> lookup{};
    // (i, j, k): result[k] += a[i] * b[j], restricted to |alpha_i| + |alpha_j| <= order
    std::vector<std::array<int, 3>> products;

    int find(const MultiIndex& a) const {
        for (int v = 0; v < kMaxJetVars; ++v) {
            if (a[v] < 0 || a[v] > kMaxJetOrder || (v >= num_vars && a[v] != 0)) return -1;
        }
        return lookup[(a[0] * 7 + a[1]) * 7 + a[2]];
    }
};

inline JetLayout make_layout(int nv, int order) {
    JetLayout l;
    l.num_vars = nv;
    l.order = order;
    l.lookup.fill(-1);
    auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    for (int d = 0; d <= order; ++d) {
        for (int a = d; a >= 0; --a) {
            for (int b = d - a; b >= 0; --b) {
                const int c = d - a - b;
                const MultiIndex m{a, nv > 1 ? b : 0, nv > 2 ? c : 0};
                if ((nv < 2 && b != 0) || (nv < 3 && c != 0)) continue;
                l.lookup[(m[0] * 7 + m[1]) * 7 + m[2]] = static_cast<int>(l.index.size());
                l.index.push_back(m);
                l.degree.push_back(d);
                l.factorial.push_back(fact(m[0]) * fact(m[1]) * fact(m[2]));
            }
        }
    }
    l.size = static_cast<int>(l.index.size());
    for (int i = 0; i < l.size; ++i) {
        for (int j = 0; j < l.size; ++j) {
            if (l.degree[i] + l.degree[j] > order) continue;
            const MultiIndex s{l.index[i][0] + l.index[j][0], l.index[i][1] + l.index[j][1],
                               l.index[i][2] + l.index[j][2]};
            l.products.push_back({i, j, l.find(s)});
        }
    }
    return l;
}

inline const JetLayout& jet_layout(int num_vars, int order) {
    if (num_vars < 1 || num_vars > kMaxJetVars || order < 0 || order > kMaxJetOrder) {
        throw CapacityError("jet capacity exceeded: num_vars=" + std::to_string(num_vars) +
                            " order=" + std::to_string(order) + " (max 3 variables, order 6)");
    }
    static const std::vector<JetLayout> tables = [] {
        std::vector<JetLayout> t;
        for (int nv = 1; nv <= kMaxJetVars; ++nv) {
            for (int o = 0; o <= kMaxJetOrder; ++o) t.push_back(make_layout(nv, o));
        }
        return t;
    }();
    return tables[(num_vars - 1) * (kMaxJetOrder + 1) + order];
}

}  // namespace detail

class Jet {
public:
    Jet() : layout_(&detail::jet_layout(1, 0)) {}

    static Jet constant(double value, int num_vars, int order) {
        Jet j(detail::jet_layout(num_vars, order));
        j.c_[0] = value;
        return j;
    }

    /// Jet of the coordinate function x_{var_index} expanded at `value`.
    static Jet variable(double value, int var_index, int num_vars, int order) {
        Jet j(detail::jet_layout(num_vars, order));
        if (var_index < 0 || var_index >= num_vars) {
            throw CapacityError("variable index " + std::to_string(var_index) + " out of range for " +
                                std::to_string(num_vars) + " variables");
        }
        j.c_[0] = value;
        if (order >= 1) {
            MultiIndex e{0, 0, 0};
            e[var_index] = 1;
            j.c_[j.layout_->find(e)] = 1.0;
        }
        return j;
    }

    /// Zero jet sharing this jet's shape.
    Jet zeros_like() const { return Jet(*layout_); }

    int num_vars() const { return layout_->num_vars; }
    int order() const { return layout_->order; }
    int size() const { return layout_->size; }
    double value() const { return c_[0]; }

    std::span<const double> coeffs() const { return {c_.data(), static_cast<std::size_t>(size())}; }
    std::span<double> coeffs() { return {c_.data(), static_cast<std::size_t>(size())}; }
    const MultiIndex& multi_index(int k) const { return layout_->index[k]; }
    int degree(int k) const { return layout_->degree[k]; }

    /// Linear position of a multi-index, or -1 when it lies outside the table.
    int position(const MultiIndex& alpha) const { return layout_->find(alpha); }

    /// Taylor coefficient d^alpha f / alpha! (zero above the truncation order).
    double coeff(const MultiIndex& alpha) const {
        const int k = layout_->find(alpha);
        return k < 0 ? 0.0 : c_[k];
    }

    void set_coeff(const MultiIndex& alpha, double v) {
        const int k = layout_->find(alpha);
        if (k < 0) throw CapacityError("multi-index outside jet table");
        c_[k] = v;
    }

    /// d^alpha f at the expansion point.
    double partial(const MultiIndex& alpha) const {
        const int k = layout_->find(alpha);
        if (k < 0) {
            throw CapacityError("partial of order " + std::to_string(alpha[0] + alpha[1] + alpha[2]) +
                                " requested from a jet of order " + std::to_string(order()));
        }
        return c_[k] * layout_->factorial[k];
    }

    bool same_shape(const Jet& o) const { return layout_ == o.layout_; }

    Jet& operator+=(const Jet& o) {
        check_shape(o);
        for (int k = 0; k < size(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        check_shape(o);
        for (int k = 0; k < size(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(const Jet& o) {
        *this = *this * o;
        return *this;
    }
    Jet& operator/=(const Jet& o) {
        *this = *this / o;
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }
    Jet& operator-=(double s) {
        c_[0] -= s;
        return *this;
    }
    Jet& operator*=(double s) {
        for (int k = 0; k < size(); ++k) c_[k] *= s;
        return *this;
    }
    Jet& operator/=(double s) {
        for (int k = 0; k < size(); ++k) c_[k] /= s;
        return *this;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        a.check_shape(b);
        Jet r(*a.layout_);
        for (const auto& [i, j, k] : a.layout_->products) r.c_[k] += a.c_[i] * b.c_[j];
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a -= s; }
    friend Jet operator-(double s, const Jet& a) { return -a + s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a /= s; }
    friend Jet operator/(double s, const Jet& a);
    friend Jet operator-(Jet a) { return a *= -1.0; }

private:
    explicit Jet(const detail::JetLayout& l) : layout_(&l) {}

    void check_shape(const Jet& o) const {
        if (layout_ != o.layout_) {
            throw ConfigError("jet shape mismatch: (" + std::to_string(num_vars()) + " vars, order " +
                              std::to_string(order()) + ") vs (" + std::to_string(o.num_vars()) +
                              " vars, order " + std::to_string(o.order()) + ")");
        }
    }

    friend Jet with_order(const Jet& a, int order);
    friend Jet apply_series(const Jet& a, std::span<const double> f);

    const detail::JetLayout* layout_;
    std::array<double, kMaxJetCoeffs> c_{};
};

/// Same function, truncated or zero-padded to a different order.
inline Jet with_order(const Jet& a, int order) {
    Jet r(detail::jet_layout(a.num_vars(), order));
    for (int k = 0; k < r.size(); ++k) {
        const int src = a.position(r.multi_index(k));
        if (src >= 0) r.c_[k] = a.c_[src];
    }
    return r;
}

/// Composes a univariate Taylor series f (f[k] = f^(k)(a0)/k!, a0 = a.value()) with the jet a.
inline Jet apply_series(const Jet& a, std::span<const double> f) {
    Jet delta = a;
    delta.c_[0] = 0.0;
    const int n = std::min<int>(a.order(), static_cast<int>(f.size()) - 1);
    Jet r = a.zeros_like();
    r.c_[0] = f[n];
    for (int k = n - 1; k >= 0; --k) {
        r = r * delta;
        r.c_[0] += f[k];
    }
    return r;
}

namespace detail {

inline void require_nonzero(double a0, const char* what) {
    if (a0 == 0.0 || !std::isfinite(a0)) {
        throw SingularPointError(std::string(what) + ": constant term is zero or not finite");
    }
}

}  // namespace detail

inline Jet reciprocal(const Jet& a) {
    const double a0 = a.value();
    detail::require_nonzero(a0, "reciprocal");
    std::array<double, kMaxJetOrder + 1> f{};
    double p = 1.0 / a0;
    for (int k = 0; k <= a.order(); ++k) {
        f[k] = p;
        p *= -1.0 / a0;
    }
    return apply_series(a, {f.data(), static_cast<std::size_t>(a.order() + 1)});
}

inline Jet operator/(const Jet& a, const Jet& b) {
    detail::require_nonzero(b.value(), "division");
    return a * reciprocal(b);
}

inline Jet operator/(double s, const Jet& a) { return s * reciprocal(a); }

inline Jet exp(const Jet& a) {
    std::array<double, kMaxJetOrder + 1> f{};
    double e = std::exp(a.value());
    for (int k = 0; k <= a.order(); ++k) {
        f[k] = e;
        e /= (k + 1);
    }
    return apply_series(a, {f.data(), static_cast<std::size_t>(a.order() + 1)});
}

/// exp(a) - 1 with the constant term taken from std::expm1.
inline Jet expm1(const Jet& a) {
    Jet r = exp(a);
    r.coeffs()[0] = std::expm1(a.value());
    return r;
}

/// log|a|; derivatives are branch-independent.
inline Jet log_abs(const Jet& a) {
    const double a0 = a.value();
    detail::require_nonzero(a0, "log");
    std::array<double, kMaxJetOrder + 1> f{};
    f[0] = std::log(std::abs(a0));
    double p = 1.0;
    for (int k = 1; k <= a.order(); ++k) {
        p /= a0;
        f[k] = ((k % 2) ? 1.0 : -1.0) * p / k;
    }
    return apply_series(a, {f.data(), static_cast<std::size_t>(a.order() + 1)});
}

/// a^p for a constant exponent. Non-integer p needs a positive constant term.
inline Jet pow_const(const Jet& a, double p) {
    const double a0 = a.value();
    const bool integral = p == std::round(p);
    if (integral && p >= 0.0) {
        Jet r = Jet::constant(1.0, a.num_vars(), a.order());
        for (int k = 0; k < static_cast<int>(p); ++k) r = r * a;
        return r;
    }
    detail::require_nonzero(a0, "pow_const");
    if (!integral && a0 < 0.0) {
        throw SingularPointError("pow_const: negative base with non-integer exponent");
    }
    std::array<double, kMaxJetOrder + 1> f{};
    double binom = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        f[k] = binom * std::pow(a0, p - k);
        binom *= (p - k) / (k + 1);
    }
    return apply_series(a, {f.data(), static_cast<std::size_t>(a.order() + 1)});
}

inline double log_abs(double x) { return std::log(std::abs(x)); }

/// Jet of the coordinate function x_{var_index} at `value`.
inline Jet lift_variable(double value, int var_index, int num_vars, int order) {
    return Jet::variable(value, var_index, num_vars, order);
}

/// d^alpha f at the expansion point.
inline double extract_partial(const Jet& a, const MultiIndex& alpha) { return a.partial(alpha); }

/// Partial derivative with respect to variable `var`, one order lower.
inline Jet derivative(const Jet& a, int var) {
    if (a.order() == 0) throw CapacityError("derivative of an order-0 jet");
    Jet r = Jet::constant(0.0, a.num_vars(), a.order() - 1);
    auto rc = r.coeffs();
    for (int k = 0; k < r.size(); ++k) {
        MultiIndex m = r.multi_index(k);
        m[var] += 1;
        rc[k] = m[var] * a.coeff(m);
    }
    return r;
}

/// Multiplies by (x_var - x_var0); terms above the order are dropped.
inline Jet multiply_by_var(const Jet& a, int var) {
    Jet r = a.zeros_like();
    auto rc = r.coeffs();
    for (int k = 0; k < r.size(); ++k) {
        MultiIndex m = r.multi_index(k);
        if (m[var] == 0) continue;
        m[var] -= 1;
        rc[k] = a.coeff(m);
    }
    return r;
}

/// Jet of  integral_0^1 f(.., x0 + s t, ..) ds  in the direction of variable `var`
/// (coefficient alpha scaled by 1/(alpha_var + 1)).
inline Jet segment_average(const Jet& a, int var) {
    Jet r = a;
    auto rc = r.coeffs();
    for (int k = 0; k < r.size(); ++k) rc[k] /= (r.multi_index(k)[var] + 1);
    return r;
}

/// Univariate antiderivative with constant term c0; the result is one order higher.
inline Jet antiderivative(const Jet& a, double c0) {
    if (a.num_vars() != 1) throw ConfigError("antiderivative is defined for univariate jets");
    Jet r = Jet::constant(c0, 1, a.order() + 1);
    auto rc = r.coeffs();
    const auto ac = a.coeffs();
    for (int k = 0; k < a.size(); ++k) rc[k + 1] = ac[k] / (k + 1);
    return r;
}

/// Rebuilds a bivariate jet of order K from its value and the order K-1 jets of both partials.
inline Jet from_gradient(double value, const Jet& d_first, const Jet& d_second) {
    if (d_first.num_vars() != 2 || !d_first.same_shape(d_second)) {
        throw ConfigError("from_gradient expects two bivariate jets of equal order");
    }
    Jet r = Jet::constant(value, 2, d_first.order() + 1);
    auto rc = r.coeffs();
    for (int k = 1; k < r.size(); ++k) {
        const MultiIndex& m = r.multi_index(k);
        if (m[1] > 0) {
            rc[k] = d_second.coeff({m[0], m[1] - 1, 0}) / m[1];
        } else {
            rc[k] = d_first.coeff({m[0] - 1, 0, 0}) / m[0];
        }
    }
    return r;
}

/// Substitutes jets for the variables of `outer`: sum_alpha c_alpha prod_i (inputs_i - inputs_i(0))^alpha_i.
/// All inputs must share one shape; outer.num_vars() must equal inputs.size().
inline Jet compose(const Jet& outer, std::span<const Jet> inputs) {
    if (static_cast<int>(inputs.size()) != outer.num_vars()) {
        throw ConfigError("compose: expected " + std::to_string(outer.num_vars()) + " inputs");
    }
    const Jet& ref = inputs[0];
    std::array<std::array<Jet, kMaxJetOrder + 1>, kMaxJetVars> powers;
    const int top = std::min(outer.order(), ref.order());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].same_shape(ref)) throw ConfigError("compose: inputs differ in shape");
        Jet d = inputs[i];
        d.coeffs()[0] = 0.0;
        powers[i][0] = Jet::constant(1.0, ref.num_vars(), ref.order());
        for (int e = 1; e <= top; ++e) powers[i][e] = powers[i][e - 1] * d;
    }
    Jet r = ref.zeros_like();
    const auto oc = outer.coeffs();
    for (int k = 0; k < outer.size(); ++k) {
        if (oc[k] == 0.0 || outer.degree(k) > top) continue;
        const MultiIndex& m = outer.multi_index(k);
        Jet term = powers[0][m[0]];
        for (std::size_t i = 1; i < inputs.size(); ++i) {
            if (m[i] > 0) term = term * powers[i][m[i]];
        }
        r += term * oc[k];
    }
    return r;
}

inline Jet compose(const Jet& outer, const Jet& input) { return compose(outer, std::span<const Jet>(&input, 1)); }

}  // namespace hydropseudo
