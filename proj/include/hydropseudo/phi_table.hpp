#pragma once

// Auxiliary functions of the quadrature kernel family:
//   P(x) = k3 x^3 + k2 x^2 + k1 x + k0,   M'/M = (-k3 x^2 + z1 x + z0) / P,   B' = (k3 x + k2 + z1) M,
//   phi' = P(phi) M(phi).
// M and B are evaluated by quadrature from the base point c (M(c) = m_base, B(c) = 0); phi is tabulated
// by adaptive Dormand-Prince integration. Queries between nodes redo one step from the nearest node,
// which keeps lookups at the integration tolerance (cubic interpolation between adaptive nodes does not).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "hydropseudo/errors.hpp"
#include "hydropseudo/numerics.hpp"

namespace hydropseudo {

struct QuadratureCoefficients {
    std::array<double, 4> p{1.0, 0.0, 0.0, 0.0};  // k0..k3
    std::array<double, 2> z{0.0, 0.0};            // z0, z1 as they appear in M'/M
    double base_point = 0.0;
    double m_base = 1.0;  // M(base_point)
    Interval u_domain{-2.0, 2.0};

    double P(double x) const { return eval_cubic(p, x); }
    double P_prime(double x) const { return cubic_derivative(p, x); }
    /// Numerator of M'/M.
    double Q(double x) const { return (-p[3] * x + z[1]) * x + z[0]; }
    double R(double x) const { return Q(x) / P(x); }
    double b_factor(double x) const { return p[3] * x + p[2] + z[1]; }

    /// The degree <= 1 polynomial Z of the second-order form phi'' = (2P'/(3P) + Z/P) phi'^2.
    double z_second_order(double x) const { return z[0] + z[1] * x + P_prime(x) / 3.0 - p[3] * x * x; }

    double log_m(double x) const {
        return std::log(m_base) + integrate([this](double t) { return R(t); }, base_point, x);
    }
    double m(double x) const { return std::exp(log_m(x)); }

    double b(double x) const {
        return integrate([this](double t) { return b_factor(t) * m(t); }, base_point, x);
    }

    /// Checks that P keeps one sign on the u-interval and the base point lies inside it.
    void validate() const {
        if (!(u_domain.hi > u_domain.lo)) throw ConfigError("quadrature family: empty u-domain");
        if (!u_domain.contains(base_point)) {
            throw ConfigError("quadrature family: base point outside the u-domain");
        }
        if (!(m_base > 0.0)) throw ConfigError("quadrature family: M(base point) must be positive");
        const int n = 2000;
        const double s0 = P(u_domain.lo);
        double pmax = 0.0;
        for (int i = 0; i <= n; ++i) pmax = std::max(pmax, std::abs(P(u_domain.lo + u_domain.diameter() * i / n)));
        for (int i = 0; i <= n; ++i) {
            const double x = u_domain.lo + u_domain.diameter() * i / n;
            const double v = P(x);
            if (v * s0 <= 0.0 || std::abs(v) < 1e-10 * pmax) {
                std::ostringstream os;
                os << "quadrature family: P vanishes or changes sign on the u-domain near x=" << x;
                throw ConfigError(os.str());
            }
        }
    }
};

struct PhiNode {
    double xi = 0.0;
    double phi = 0.0;
    double log_m = 0.0;  // log M(phi(xi))
    double b = 0.0;      // B(phi(xi))
};

/// Initial condition phi(xi) = phi.
struct PhiInitial {
    double xi = 0.0;
    double phi = 0.0;
};

class PhiTable {
public:
    PhiTable(QuadratureCoefficients coeffs, Interval domain, double tolerance, std::vector<PhiNode> nodes,
             double step_doubling_error, double second_order_residual)
        : coeffs_(std::move(coeffs)),
          domain_(domain),
          tolerance_(tolerance),
          nodes_(std::move(nodes)),
          step_doubling_error_(step_doubling_error),
          second_order_residual_(second_order_residual) {}

    const QuadratureCoefficients& coefficients() const { return coeffs_; }
    Interval domain() const { return domain_; }
    double tolerance() const { return tolerance_; }
    const std::vector<PhiNode>& nodes() const { return nodes_; }
    /// Max change of a stored phi value when its step is redone as two half steps.
    double step_doubling_error() const { return step_doubling_error_; }
    /// Max relative mismatch between the first-order system and the second-order phi equation.
    double second_order_residual() const { return second_order_residual_; }

    Interval phi_range() const {
        auto [lo, hi] = std::minmax_element(nodes_.begin(), nodes_.end(),
                                            [](const PhiNode& a, const PhiNode& b) { return a.phi < b.phi; });
        return {lo->phi, hi->phi};
    }

    /// (phi, log M(phi), B(phi)) at xi, re-integrated by one Dormand-Prince step from the nearest node.
    PhiNode state(double xi) const {
        if (xi < domain_.lo - 1e-12 || xi > domain_.hi + 1e-12) {
            std::ostringstream os;
            os << "xi=" << xi << " outside the PhiTable domain [" << domain_.lo << ", " << domain_.hi << "]";
            throw DomainError(os.str());
        }
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), xi,
                                   [](const PhiNode& n, double x) { return n.xi < x; });
        if (it == nodes_.end()) --it;
        if (it != nodes_.begin() && std::abs(std::prev(it)->xi - xi) < std::abs(it->xi - xi)) --it;
        if (it->xi == xi) return *it;
        std::array<double, 3> y{it->phi, it->log_m, it->b};
        boost::numeric::odeint::runge_kutta_dopri5<std::array<double, 3>> rk;
        const auto& q = coeffs_;
        rk.do_step(
            [&q](const std::array<double, 3>& s, std::array<double, 3>& ds, double) {
                const double mm = std::exp(s[1]);
                const double dphi = q.P(s[0]) * mm;
                ds[0] = dphi;
                ds[1] = q.Q(s[0]) * mm;
                ds[2] = q.b_factor(s[0]) * mm * dphi;
            },
            y, it->xi, xi - it->xi);
        return {xi, y[0], y[1], y[2]};
    }

    double phi(double xi) const { return state(xi).phi; }
    double phi_prime(double xi) const {
        const PhiNode s = state(xi);
        return coeffs_.P(s.phi) * std::exp(s.log_m);
    }

private:
    QuadratureCoefficients coeffs_;
    Interval domain_;
    double tolerance_;
    std::vector<PhiNode> nodes_;
    double step_doubling_error_;
    double second_order_residual_;
};

namespace detail {

using PhiState = std::array<double, 3>;  // phi, log M(phi), B(phi)

struct PhiSweep {
    std::vector<PhiNode> nodes;
    double doubling_error = 0.0;
    double second_order = 0.0;
};

/// Integrates from (xi0, y0) in direction dir (+1/-1) until |xi - xi0| = length.
inline PhiSweep sweep_phi(const QuadratureCoefficients& q, double xi0, const PhiState& y0, int dir, double length,
                          double tol) {
    namespace odeint = boost::numeric::odeint;
    const auto rhs = [&q, dir](const PhiState& y, PhiState& dy, double) {
        const double mm = std::exp(y[1]);
        const double dphi = dir * q.P(y[0]) * mm;
        dy[0] = dphi;
        dy[1] = dir * q.Q(y[0]) * mm;
        dy[2] = q.b_factor(y[0]) * mm * dphi;
    };
    const auto check = [&](double s, const PhiState& y) {
        const double xi = xi0 + dir * s;
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !q.u_domain.contains(y[0])) {
            std::ostringstream os;
            const double pv = std::isfinite(y[0]) ? q.P(y[0]) : NAN;
            os << (std::abs(pv) < 1e-8 ? "phi trajectory hit a root of P" : "phi trajectory left the u-domain")
               << " at xi=" << xi << " (phi=" << y[0] << ")";
            throw DomainError(os.str());
        }
    };
    const auto second_order = [&q](const PhiState& y) {
        const double mm = std::exp(y[1]);
        const double pv = q.P(y[0]);
        const double dphi = pv * mm;
        const double first_order = (q.P_prime(y[0]) + q.Q(y[0])) * mm * dphi;
        const double second = (2.0 * q.P_prime(y[0]) / (3.0 * pv) + q.z_second_order(y[0]) / pv) * dphi * dphi;
        return std::abs(first_order - second) / (std::abs(first_order) + std::abs(second) + 1e-300);
    };

    PhiSweep out;
    auto record = [&](double s, const PhiState& y) {
        out.nodes.push_back({xi0 + dir * s, y[0], y[1], y[2]});
        out.second_order = std::max(out.second_order, second_order(y));
    };
    record(0.0, y0);
    if (length <= 0.0) return out;

    auto stepper = odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<PhiState>());
    stepper.initialize(y0, 0.0, std::min(1e-3, length / 16.0));
    std::vector<std::pair<double, PhiState>> steps{{0.0, y0}};
    int guard = 0;
    while (stepper.current_time() < length) {
        if (++guard > 2000000) throw ToleranceError("phi integration: step budget exhausted");
        stepper.do_step(rhs);
        const double s = stepper.current_time();
        PhiState y = stepper.current_state();
        if (s >= length) {
            stepper.calc_state(length, y);
            check(length, y);
            steps.emplace_back(length, y);
            break;
        }
        check(s, y);
        steps.emplace_back(s, y);
    }

    odeint::runge_kutta_dopri5<PhiState> rk;
    for (std::size_t k = 1; k < steps.size(); ++k) {
        const auto& [s0, ya] = steps[k - 1];
        const auto& [s1, yb] = steps[k];
        PhiState y = ya;
        const double h = 0.5 * (s1 - s0);
        rk.do_step(rhs, y, s0, h);
        rk.do_step(rhs, y, s0 + h, h);
        out.doubling_error = std::max(out.doubling_error, std::abs(y[0] - yb[0]));
        record(s1, yb);
    }
    return out;
}

}  // namespace detail

/// Tabulates phi over xi_domain. By default phi(midpoint of xi_domain) = base point.
inline PhiTable build_phi_table(const QuadratureCoefficients& coeffs, Interval xi_domain, double tolerance = 1e-12,
                                std::optional<PhiInitial> initial = std::nullopt) {
    coeffs.validate();
    if (std::abs(coeffs.p[0]) + std::abs(coeffs.p[1]) + std::abs(coeffs.p[2]) + std::abs(coeffs.p[3]) == 0.0) {
        throw ConfigError("P must not vanish identically");
    }
    if (!(xi_domain.hi > xi_domain.lo)) throw ConfigError("empty xi-domain");
    const PhiInitial init = initial.value_or(PhiInitial{xi_domain.mid(), coeffs.base_point});
    if (!xi_domain.contains(init.xi)) throw ConfigError("initial xi outside the xi-domain");
    if (!coeffs.u_domain.contains(init.phi)) throw ConfigError("initial phi outside the u-domain");

    const detail::PhiState y0{init.phi, coeffs.log_m(init.phi), coeffs.b(init.phi)};
    auto fwd = detail::sweep_phi(coeffs, init.xi, y0, +1, xi_domain.hi - init.xi, tolerance);
    auto bwd = detail::sweep_phi(coeffs, init.xi, y0, -1, init.xi - xi_domain.lo, tolerance);

    std::vector<PhiNode> nodes(bwd.nodes.rbegin(), bwd.nodes.rend());
    nodes.insert(nodes.end(), fwd.nodes.begin() + 1, fwd.nodes.end());
    if (nodes.size() < 2) throw ConfigError("PhiTable needs a non-degenerate xi-domain");

    // phi' = P(phi) M(phi) must keep one sign (monotone phi).
    const double s0 = coeffs.P(nodes.front().phi);
    for (const auto& n : nodes) {
        if (coeffs.P(n.phi) * s0 <= 0.0) throw DomainError("phi is not monotone on the xi-domain");
    }

    const double doubling = std::max(fwd.doubling_error, bwd.doubling_error);
    if (doubling > 1e3 * tolerance + 1e-13) {
        std::ostringstream os;
        os << "phi integration did not converge under step halving (change " << doubling << ")";
        throw ToleranceError(os.str());
    }
    return PhiTable(coeffs, xi_domain, tolerance, std::move(nodes), doubling,
                    std::max(fwd.second_order, bwd.second_order));
}

}  // namespace hydropseudo
