#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "hydropseudo/jet.hpp"
#include "hydropseudo/numerics.hpp"

using namespace hydropseudo;
using Catch::Approx;

TEST_CASE("coordinate jets", "[jets]") {
    const Jet a = lift_variable(2.0, 0, 2, 2);
    CHECK(a.num_vars() == 2);
    CHECK(a.order() == 2);
    CHECK(a.size() == 6);
    CHECK(a.coeff({0, 0, 0}) == 2.0);
    CHECK(a.coeff({1, 0, 0}) == 1.0);
    CHECK(a.coeff({0, 1, 0}) == 0.0);
    CHECK(a.coeff({2, 0, 0}) == 0.0);
    CHECK(a.coeff({1, 1, 0}) == 0.0);

    const Jet b = lift_variable(0.0, 1, 2, 1);
    CHECK(b.value() == 0.0);
    CHECK(b.coeff({0, 1, 0}) == 1.0);
    CHECK(b.coeff({1, 0, 0}) == 0.0);

    CHECK(extract_partial(lift_variable(5.0, 0, 1, 3), {2, 0, 0}) == 0.0);
}

TEST_CASE("table sizes are binomial(order + vars, vars)", "[jets]") {
    for (int nv = 1; nv <= 3; ++nv) {
        for (int o = 0; o <= 6; ++o) {
            CHECK(Jet::constant(0.0, nv, o).size() == static_cast<int>(std::lround(binomial(o + nv, nv))));
        }
    }
}

TEST_CASE("capacity limits", "[jets]") {
    CHECK_THROWS_AS(lift_variable(0.0, 0, 1, 7), CapacityError);
    CHECK_THROWS_AS(lift_variable(0.0, 0, 4, 1), CapacityError);
    CHECK_THROWS_AS(lift_variable(0.0, 2, 2, 1), CapacityError);
    const Jet x = lift_variable(1.0, 0, 1, 2);
    CHECK_THROWS_AS(x.partial({3, 0, 0}), CapacityError);
}

TEST_CASE("elementary values", "[jets]") {
    const Jet x = lift_variable(3.0, 0, 1, 2);
    const Jet sq = x * x;
    CHECK(sq.coeff({0, 0, 0}) == 9.0);
    CHECK(sq.coeff({1, 0, 0}) == 6.0);
    CHECK(sq.coeff({2, 0, 0}) == 1.0);
    CHECK(sq.partial({2, 0, 0}) == 2.0);

    const Jet l = log_abs(lift_variable(1.0, 0, 1, 3));
    CHECK(l.coeff({0, 0, 0}) == Approx(0.0).margin(1e-16));
    CHECK(l.coeff({1, 0, 0}) == Approx(1.0).epsilon(1e-15));
    CHECK(l.coeff({2, 0, 0}) == Approx(-0.5).epsilon(1e-15));
    CHECK(l.coeff({3, 0, 0}) == Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(l.partial({3, 0, 0}) == Approx(2.0).epsilon(1e-15));

    const Jet e = exp(lift_variable(1.0, 0, 1, 0));
    const Jet r = e / (e - 1.0);
    const double oracle = std::exp(1.0) / (std::exp(1.0) - 1.0);
    CHECK(r.value() == Approx(oracle).epsilon(1e-15));
    CHECK(r.value() == Approx(1.581977).epsilon(1e-6));

    const Jet xy = lift_variable(0.0, 0, 2, 2) * lift_variable(0.0, 1, 2, 2);
    CHECK(exp(xy).partial({1, 1, 0}) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("log of a negative constant term uses |x|", "[jets]") {
    const Jet l = log_abs(lift_variable(-2.0, 0, 1, 2));
    CHECK(l.value() == Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(l.partial({1, 0, 0}) == Approx(-0.5).epsilon(1e-15));
    CHECK(l.partial({2, 0, 0}) == Approx(-0.25).epsilon(1e-15));
}

TEST_CASE("singular constant terms", "[jets]") {
    const Jet z = lift_variable(0.0, 0, 1, 2);
    CHECK_THROWS_AS(reciprocal(z), SingularPointError);
    CHECK_THROWS_AS(log_abs(z), SingularPointError);
    CHECK_THROWS_AS(Jet::constant(1.0, 1, 2) / z, SingularPointError);
    CHECK_THROWS_AS(pow_const(lift_variable(-1.0, 0, 1, 2), 0.5), SingularPointError);
}

TEST_CASE("shape mismatch is rejected", "[jets]") {
    CHECK_THROWS_AS(lift_variable(1.0, 0, 1, 2) + lift_variable(1.0, 0, 1, 3), ConfigError);
    CHECK_THROWS_AS(lift_variable(1.0, 0, 2, 2) * lift_variable(1.0, 0, 1, 2), ConfigError);
}

namespace {

// Central differences of order n with step h (n <= 4).
double fd(const std::function<double(double)>& f, double x, int n, double h) {
    switch (n) {
        case 1: return (f(x + h) - f(x - h)) / (2 * h);
        case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        case 3: return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
        case 4: return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) / (h * h * h * h);
    }
    return 0.0;
}

}  // namespace

TEST_CASE("jet derivatives agree with central differences", "[jets]") {
    struct Fn {
        const char* name;
        std::function<Jet(const Jet&)> jet;
        std::function<double(double)> scalar;
        double lo, hi;
    };
    const std::vector<Fn> fns{
        {"exp", [](const Jet& x) { return exp(x); }, [](double x) { return std::exp(x); }, -1.0, 1.0},
        {"log", [](const Jet& x) { return log_abs(x); }, [](double x) { return std::log(x); }, 0.5, 2.0},
        {"recip", [](const Jet& x) { return reciprocal(x); }, [](double x) { return 1.0 / x; }, 0.5, 2.0},
        {"pow", [](const Jet& x) { return pow_const(x, 1.7); }, [](double x) { return std::pow(x, 1.7); }, 0.5, 2.0},
        {"expm1", [](const Jet& x) { return expm1(x); }, [](double x) { return std::expm1(x); }, -1.0, 1.0},
    };
    Rng rng(42);
    for (const auto& f : fns) {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double x = rng.uniform(f.lo, f.hi);
            const Jet j = f.jet(lift_variable(x, 0, 1, 4));
            for (int n = 1; n <= 4; ++n) {
                // order 1 at step 1e-5; higher orders need a wider stencil, extrapolated twice
                const auto r1 = [&](double h) { return (4.0 * fd(f.scalar, x, n, h / 2) - fd(f.scalar, x, n, h)) / 3.0; };
                const double ref = n == 1 ? fd(f.scalar, x, 1, 1e-5) : (16.0 * r1(2e-2) - r1(4e-2)) / 15.0;
                worst = std::max(worst, std::abs(j.partial({n, 0, 0}) - ref) / std::max(1.0, std::abs(ref)));
            }
        }
        INFO(f.name);
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("product of random polynomials matches the polynomial product", "[jets]") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        double p[4], q[4];
        for (int i = 0; i < 4; ++i) {
            p[i] = rng.uniform(-1, 1);
            q[i] = rng.uniform(-1, 1);
        }
        const double x0 = rng.uniform(-1, 1);
        const Jet x = lift_variable(x0, 0, 1, 6);
        const Jet f = ((x * p[3] + p[2]) * x + p[1]) * x + p[0];
        const Jet g = ((x * q[3] + q[2]) * x + q[1]) * x + q[0];
        const Jet fg = f * g;
        // product polynomial evaluated on the jet by Horner
        double prod[7] = {};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) prod[i + j] += p[i] * q[j];
        const Jet direct = [&] {
            Jet r = Jet::constant(prod[6], 1, 6);
            for (int k = 5; k >= 0; --k) r = r * x + prod[k];
            return r;
        }();
        for (int k = 0; k <= 6; ++k) CHECK(fg.coeff({k, 0, 0}) == Approx(direct.coeff({k, 0, 0})).margin(1e-14));
    }
}

TEST_CASE("mixed partials share one table entry", "[jets]") {
    const Jet x = lift_variable(0.3, 0, 3, 4);
    const Jet y = lift_variable(-0.2, 1, 3, 4);
    const Jet z = lift_variable(0.7, 2, 3, 4);
    const Jet f = exp(x * y) * log_abs(z + x * x) / (1.0 + y * z);
    const Jet fxy = derivative(derivative(f, 0), 1);
    const Jet fyx = derivative(derivative(f, 1), 0);
    for (int k = 0; k < fxy.size(); ++k) CHECK(fxy.coeffs()[k] == fyx.coeffs()[k]);
    CHECK(fxy.value() == f.partial({1, 1, 0}));
    // d/dx d/dy of exp(xy) = (1 + xy) exp(xy)
    const Jet g = exp(x * y);
    CHECK(g.partial({1, 1, 0}) == Approx((1 + 0.3 * -0.2) * std::exp(0.3 * -0.2)).epsilon(1e-14));
    CHECK(std::isfinite(f.partial({2, 1, 1})));
}

TEST_CASE("compose, derivative, antiderivative and segment averages", "[jets]") {
    // exp(log(x)) = x
    const Jet x = lift_variable(1.3, 0, 1, 6);
    const Jet id = exp(log_abs(x));
    for (int k = 0; k <= 6; ++k) CHECK(id.coeff({k, 0, 0}) == Approx(x.coeff({k, 0, 0})).margin(1e-14));

    // outer(t) = exp(t) at t0 = 0.5, inner = 0.5 + y^2 with y at 0 in 2 variables
    const Jet outer = exp(lift_variable(0.5, 0, 1, 4));
    const Jet y = lift_variable(0.0, 0, 2, 4);
    const Jet inner = y * y + 0.5;
    const Jet composed = compose(outer, inner);
    const Jet direct = exp(inner);
    for (int k = 0; k < composed.size(); ++k) CHECK(composed.coeffs()[k] == Approx(direct.coeffs()[k]).margin(1e-14));

    const Jet d = derivative(log_abs(x), 0);
    CHECK(d.order() == 5);
    CHECK(d.value() == Approx(1.0 / 1.3).epsilon(1e-15));
    const Jet back = antiderivative(d, std::log(1.3));
    for (int k = 0; k <= 6; ++k) CHECK(back.coeff({k, 0, 0}) == Approx(log_abs(x).coeff({k, 0, 0})).margin(1e-15));

    // integral_0^1 exp(s t) ds = expm1(t)/t; coefficients 1/(k+1)!
    const Jet t = lift_variable(0.0, 0, 1, 5);
    const Jet avg = segment_average(exp(t), 0);
    double fact = 1.0;
    for (int k = 0; k <= 5; ++k) {
        fact *= (k + 1);
        CHECK(avg.coeff({k, 0, 0}) == Approx(1.0 / fact).epsilon(1e-14));
    }
    CHECK(multiply_by_var(avg, 0).coeff({3, 0, 0}) == Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("from_gradient rebuilds a bivariate jet", "[jets]") {
    const Jet x = lift_variable(0.4, 0, 2, 5);
    const Jet y = lift_variable(-0.3, 1, 2, 5);
    const Jet f = exp(x) * log_abs(2.0 + y) + x * y * y;
    const Jet fx = with_order(derivative(f, 0), 4);
    const Jet fy = with_order(derivative(f, 1), 4);
    const Jet rebuilt = from_gradient(f.value(), fx, fy);
    for (int k = 0; k < f.size(); ++k) CHECK(rebuilt.coeffs()[k] == Approx(f.coeffs()[k]).margin(1e-14));
}
