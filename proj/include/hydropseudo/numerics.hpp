#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hydropseudo/jet.hpp"

namespace hydropseudo {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double diameter() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Seeded uniform generator; doubles are built from the top 53 bits so sequences are portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }
    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

/// Seed for the i-th sample of a run; independent of evaluation order.
inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

template <class F>
double integrate_adaptive(F& f, double a, double b, double tol, int depth) {
    double err = 0.0, l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &l1);
    // boost leaves the single-pass estimate on the reference interval [-1, 1]
    err *= 0.5 * (b - a);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * l1;
    if (err <= std::max(tol * l1, floor) || depth >= 15) return v;
    const double m = 0.5 * (a + b);
    return integrate_adaptive(f, a, m, tol, depth + 1) + integrate_adaptive(f, m, b, tol, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G15/K31) integral of f over [a, b]; b < a is allowed.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-14) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, tol);
    return detail::integrate_adaptive(f, a, b, tol, 0);
}

/// Cubic (deg <= 3) polynomial with coefficients k0..k3, evaluable on doubles and jets.
template <class S>
S eval_cubic(const std::array<double, 4>& k, const S& x) {
    return ((x * k[3] + k[2]) * x + k[1]) * x + k[0];
}

inline double cubic_derivative(const std::array<double, 4>& k, double x) {
    return (3.0 * k[3] * x + 2.0 * k[2]) * x + k[1];
}

/// (P(a) - P(b)) / (a - b) without cancellation.
inline double cubic_divided_difference(const std::array<double, 4>& k, double a, double b) {
    return k[1] + k[2] * (a + b) + k[3] * (a * a + a * b + b * b);
}

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace hydropseudo
