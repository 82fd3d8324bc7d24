#pragma once

// Pointwise residuals of the integrability identities and a seeded sampler that aggregates them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hydropseudo/builder.hpp"
#include "hydropseudo/errors.hpp"
#include "hydropseudo/kernels.hpp"

namespace hydropseudo {

// ---- three-point functional equation ----

/// d1h(xi,w) d2h(xi,v) + d2h(w,v) d2h(xi,w) - d1h(v,w) d2h(xi,v) - nu(xi,v).
/// With `shift_prime` = f', the kernel is h + f(first slot) and nu gains (f'(xi) - f'(v)) d2h(xi,v).
inline double funceq_residual(const Kernel& k, double xi, double w, double v,
                              const std::function<double(double)>& shift_prime = nullptr) {
    const Jet a = k.jet(xi, w, 1, Frame::diagonal, false);
    const Jet b = k.jet(xi, v, 1, Frame::diagonal, false);
    const Jet c = k.jet(w, v, 1, Frame::diagonal, false);
    const Jet d = k.jet(v, w, 1, Frame::diagonal, false);
    double d1a = a.partial({1, 0, 0});
    double d1d = d.partial({1, 0, 0});
    const double d2b = b.partial({0, 1, 0});
    double nu = k.nu(xi, v);
    if (shift_prime) {
        d1a += shift_prime(xi);
        d1d += shift_prime(v);
        nu += (shift_prime(xi) - shift_prime(v)) * d2b;
    }
    return d1a * d2b + c.partial({0, 1, 0}) * a.partial({0, 1, 0}) - d1d * d2b - nu;
}

// ---- pseudopotential compatibility ----

/// Weights w_i of h_i = w_i h(xi, u_i) and the frame for a matrix source (0 = general, k = example k).
struct PseudopotentialForm {
    std::vector<double> weights;
    Frame frame = Frame::diagonal;
};

inline PseudopotentialForm pseudopotential_form(const SystemSpec& spec, int source) {
    PseudopotentialForm f{spec.c, Frame::diagonal};
    if (source != 0) {
        const double s = example_weight_sign(source);
        for (auto& w : f.weights) w *= s;
        f.frame = example_frame(source);
    }
    return f;
}

inline CoeffMatrix build_matrix(const SystemSpec& spec, int source, const std::vector<double>& u) {
    return source == 0 ? build_general(spec, u) : build_example(source, spec, u);
}

/// Residual of  d_i h_i sum_j (lambda_j - lambda_i) h_{j,xi} - sum_j b_ji d_j h_j  for each i.
inline std::vector<double> psecon_residual(const SystemSpec& spec, const CoeffMatrix& m, const PseudopotentialForm& form,
                                           double xi) {
    const Kernel& k = *spec.kernel;
    std::vector<double> hxi(spec.N), hu(spec.N);
    for (int j = 0; j < spec.N; ++j) {
        const Jet h = k.jet(xi, m.point[j], 1, form.frame, false);
        hxi[j] = form.weights[j] * h.partial({1, 0, 0});
        hu[j] = form.weights[j] * h.partial({0, 1, 0});
    }
    std::vector<double> r(spec.N);
    for (int i = 0; i < spec.N; ++i) {
        double lhs = 0.0, rhs = 0.0;
        for (int j = 0; j < spec.N; ++j) {
            lhs += (spec.lambda[j] - spec.lambda[i]) * hxi[j];
            rhs += m(j, i) * hu[j];
        }
        r[i] = hu[i] * lhs - rhs;
    }
    return r;
}

inline std::vector<double> psecon_residual(const SystemSpec& spec, int source, double xi, const std::vector<double>& u) {
    return psecon_residual(spec, build_matrix(spec, source, u), pseudopotential_form(spec, source), xi);
}

/// max_i |d_i f - lambda_i d_i g| for g = sum w_j h(xi, u_j), f = sum lambda_j w_j h(xi, u_j).
inline double psecon1_residual(const SystemSpec& spec, const PseudopotentialForm& form, double xi,
                               const std::vector<double>& u) {
    const Kernel& k = *spec.kernel;
    double worst = 0.0;
    for (int i = 0; i < spec.N; ++i) {
        // only the j = i term of either sum depends on u_i
        const double hu = k.jet(xi, u[i], 1, form.frame, false).partial({0, 1, 0});
        const double dg = form.weights[i] * hu;
        const double df = (spec.lambda[i] * form.weights[i]) * hu;
        worst = std::max(worst, std::abs(df - spec.lambda[i] * dg));
    }
    return worst;
}

// ---- b-kernel functional equation ----

/// b(w,v) b_2(x,w) - b(x,v) b_1(v,w) + b(x,w) b_1(w,v) + b(x,v) b_1(x,w) for b = d2h.
inline double remark4_residual(const Kernel& k, double x, double w, double v) {
    const auto b = [&](double p, double q) { return k.jet(p, q, 2, Frame::diagonal, false); };
    const Jet xv = b(x, v), xw = b(x, w), wv = b(w, v), vw = b(v, w);
    const auto val = [](const Jet& j) { return j.partial({0, 1, 0}); };
    const auto d1 = [](const Jet& j) { return j.partial({1, 1, 0}); };
    const auto d2 = [](const Jet& j) { return j.partial({0, 2, 0}); };
    return val(wv) * d2(xw) - val(xv) * d1(vw) + val(xw) * d1(wv) + val(xv) * d1(xw);
}

/// Same identity for b(x, v) = scale / (x - v).
inline double remark4_residual_reciprocal(double scale, double x, double w, double v) {
    const auto b = [&](double p, double q) { return scale / (p - q); };
    const auto b1 = [&](double p, double q) { return -scale / ((p - q) * (p - q)); };
    const auto b2 = [&](double p, double q) { return scale / ((p - q) * (p - q)); };
    return b(w, v) * b2(x, w) - b(x, v) * b1(v, w) + b(x, w) * b1(w, v) + b(x, v) * b1(x, w);
}

// ---- series constraints ----

enum class SeriesEquation { Eq1, Eq2, Eq3 };

/// a_0..a_3 jets at w with a_3 optionally replaced by -(a_1'' + 2 a_1 a_1' + 4 a_2') / 12.
struct SeriesCoefficients {
    std::vector<Jet> a;  // a[k] univariate in w
};

inline Jet a3_from_polynomial(const Jet& a1, const Jet& a2) {
    const int o = std::min(a1.order() - 2, a2.order() - 1);
    const Jet d1 = with_order(derivative(a1, 0), o);
    const Jet d2 = with_order(derivative(derivative(a1, 0), 0), o);
    const Jet a2p = with_order(derivative(a2, 0), o);
    return -(d2 + 2.0 * with_order(a1, o) * d1 + 4.0 * a2p) / 12.0;
}

inline SeriesCoefficients series_coefficients(const Kernel& k, double w, bool a3_polynomial, double a1_shift = 0.0) {
    SeriesCoefficients s{expansion_jets(k, w, kMaxJetOrder)};
    s.a[1] += a1_shift;
    if (a3_polynomial) s.a[3] = a3_from_polynomial(s.a[1], s.a[2]);
    return s;
}

/// Residual of Eq1-Eq3 for the sign-normalized kernel at (x, v); a_k are taken at v.
inline double series_pde_residual(const Kernel& k, SeriesEquation which, double x, double v,
                                  bool a3_polynomial = true, double a1_shift = 0.0) {
    const Jet h = k.jet(x, v, 5, Frame::diagonal, false) * static_cast<double>(k.asymptotic_sign());
    const auto d = [&](int nx, int nv) { return h.partial({nx, nv, 0}); };
    const SeriesCoefficients s = series_coefficients(k, v, a3_polynomial, a1_shift);
    const auto a = [&](int i, int n) { return s.a[i].partial({n, 0, 0}); };
    const double hv = d(0, 1), h2 = d(0, 2), h3 = d(0, 3), h4 = d(0, 4), h5 = d(0, 5);
    switch (which) {
        case SeriesEquation::Eq1: return h3 - 2.0 * hv * d(1, 1) + 2.0 * a(1, 0) * h2;
        case SeriesEquation::Eq2:
            return h4 - 3.0 * hv * d(1, 2) + 3.0 * a(1, 0) * h3 + 6.0 * (a(1, 1) + 2.0 * a(2, 0)) * h2 +
                   3.0 * (a(1, 2) + 6.0 * a(2, 1) + 12.0 * a(3, 0)) * hv;
        case SeriesEquation::Eq3:
            return h5 - 4.0 * hv * d(1, 3) + 4.0 * a(1, 0) * h4 + 12.0 * (a(1, 1) + 2.0 * a(2, 0)) * h3 +
                   12.0 * (a(1, 2) + 4.0 * a(2, 1) + 6.0 * a(3, 0)) * h2 +
                   4.0 * (a(1, 3) + 6.0 * a(2, 2) + 12.0 * a(3, 1)) * hv;
    }
    return 0.0;
}

// ---- ODE relations for a_1, a_2 ----

enum class SeriesRelation { a2_relation, eq2_relation, a3_relation, dif4, difcub, difkv, aaa2 };

inline const char* to_string(SeriesRelation r) {
    switch (r) {
        case SeriesRelation::a2_relation: return "a2_relation";
        case SeriesRelation::eq2_relation: return "eq2_relation";
        case SeriesRelation::a3_relation: return "a3_relation";
        case SeriesRelation::dif4: return "dif4";
        case SeriesRelation::difcub: return "difcub";
        case SeriesRelation::difkv: return "difkv";
        case SeriesRelation::aaa2: return "aaa2";
    }
    return "?";
}

/// C(x) = 12 a_1 a_2 + a_1'' + 6 a_1 a_1' - 2 a_1^3; constant along the family when the relation holds.
inline double series_constant(const Kernel& k, double x) {
    const auto s = expansion_jets(k, x, 4);
    const auto a = [&](int i, int n) { return s[i].partial({n, 0, 0}); };
    return 12.0 * a(1, 0) * a(2, 0) + a(1, 2) + 6.0 * a(1, 0) * a(1, 1) - 2.0 * std::pow(a(1, 0), 3);
}

/// Residual of a classification relation at x. Without C, a2_relation compares C(x) to C at the
/// middle of the domain, and difcub/difkv use C(x).
inline double classification_ode_residual(const Kernel& k, SeriesRelation which, double x,
                                          std::optional<double> C = std::nullopt) {
    const auto s = expansion_jets(k, x, kMaxJetOrder);
    const auto a = [&](int i, int n) { return s[i].partial({n, 0, 0}); };
    const double a1 = a(1, 0), a1p = a(1, 1), a1pp = a(1, 2), a1ppp = a(1, 3), a1pppp = a(1, 4);
    const double a2 = a(2, 0), a2p = a(2, 1), a2pp = a(2, 2);
    const double scale = 1.0 + std::abs(a2);
    const bool a1_zero = std::abs(a1) <= 1e-10 * scale && std::abs(a1p) <= 1e-10 * scale;
    const auto constant = [&] { return C ? *C : series_constant(k, x); };
    // C is recovered from jets, so the C = 0 branch is only zero to rounding
    const auto c_vanishes = [](double c) { return std::abs(c) <= 1e-10; };
    switch (which) {
        case SeriesRelation::a2_relation: {
            if (a1_zero) throw InapplicableRelationError("a2_relation divides by a_1, which vanishes for this family");
            const double c = C ? *C : series_constant(k, k.domain().mid());
            return 12.0 * a1 * a2 - (c - a1pp - 6.0 * a1 * a1p + 2.0 * a1 * a1 * a1);
        }
        case SeriesRelation::eq2_relation:
            return a1ppp + 6.0 * a1 * a1pp + 6.0 * a1p * a1p - 6.0 * a1 * a1 * a1p + 12.0 * (a2 * a1p + a2p * a1);
        case SeriesRelation::a3_relation:
            return a(3, 0) + (a1pp + 2.0 * a1 * a1p + 4.0 * a2p) / 12.0;
        case SeriesRelation::dif4:
            return a1 * a1 * a1pppp + 2.0 * a1 * (3.0 * a1 * a1 - a1p) * a1ppp - 4.0 * a1 * a1pp * a1pp +
                   2.0 * (a1p * a1p - 9.0 * a1 * a1 * a1p + 4.0 * std::pow(a1, 4)) * a1pp -
                   16.0 * a1 * a1 * a1 * a1p * a1p;
        case SeriesRelation::difcub: {
            const double c = constant();
            if (c_vanishes(c)) throw InapplicableRelationError("difcub belongs to the C != 0 branch");
            return 4.0 * a1p * a1p * a1p + 12.0 * a1 * a1 * a1p * a1p + 12.0 * (std::pow(a1, 4) - c * a1) * a1p +
                   4.0 * std::pow(a1, 6) + 4.0 * c * a1 * a1 * a1 + c * c;
        }
        case SeriesRelation::difkv: {
            const double c = constant();
            if (c_vanishes(c)) throw InapplicableRelationError("difkv belongs to the C != 0 branch");
            const double kk = std::cbrt(c / 2.0);
            return a1p + (a1 + kk) * (a1 + kk);
        }
        case SeriesRelation::aaa2:
            if (!a1_zero) throw InapplicableRelationError("aaa2 applies only when a_1 vanishes identically");
            return a2pp + 36.0 * a2 * a2;
    }
    return 0.0;
}

// ---- sampling ----

struct WorstOffender {
    std::vector<double> point;
    double residual = 0.0;
};

struct ResidualReport {
    std::string identity;
    int samples = 0;
    std::uint64_t seed = 0;
    int skipped = 0;
    double max_abs_residual = 0.0;
    double mean_abs_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    WorstOffender worst;
    std::string note;
};

/// Threads for sample_verify: HYDROPSEUDO_THREADS if set, else hardware concurrency.
inline int verify_threads() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HYDROPSEUDO_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) n = v;
    }
    return std::max(1, n);
}

/// What a named identity is run against.
struct VerifyTarget {
    std::shared_ptr<const Kernel> kernel;
    std::optional<SystemSpec> system;  // psecon identities
    int matrix_source = 0;             // 0 general, k example k
    std::optional<double> series_constant;
    double perturb_b01 = 0.0;  // relative perturbation of b_12 (negative controls)
};

/// Evaluates one sample: returns the absolute residual and the point used.
using SampleFn = std::function<double(std::uint64_t index, std::vector<double>& point)>;

inline SampleFn make_sample_fn(const VerifyTarget& t, const std::string& identity, std::uint64_t seed) {
    const Kernel& k = *t.kernel;
    const auto draw = [&k, seed](std::uint64_t i, int nvars, Frame f) {
        return sample_domain(k, 1, nvars, sample_seed(seed, i), f)[0];
    };
    const auto relation = [&](SeriesRelation r) -> SampleFn {
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = {draw(i, 1, Frame::diagonal)[0]};
            return std::abs(classification_ode_residual(k, r, p[0], t.series_constant));
        };
    };
    if (identity == "funceq") {
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, 2, Frame::diagonal);
            return std::abs(funceq_residual(k, p[0], p[1], p[2]));
        };
    }
    if (identity == "funceq_shift") {
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, 2, Frame::diagonal);
            return std::abs(funceq_residual(k, p[0], p[1], p[2], [](double x) { return 2.0 * x; }));
        };
    }
    if (identity == "remark4") {
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, 2, Frame::diagonal);
            return std::abs(remark4_residual(k, p[0], p[1], p[2]));
        };
    }
    if (identity == "remark4_reciprocal") {
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, 2, Frame::diagonal);
            return std::abs(remark4_residual_reciprocal(1.0, p[0], p[1], p[2]));
        };
    }
    if (identity == "eq1" || identity == "eq2" || identity == "eq3") {
        const SeriesEquation e =
            identity == "eq1" ? SeriesEquation::Eq1 : (identity == "eq2" ? SeriesEquation::Eq2 : SeriesEquation::Eq3);
        return [=, &k](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, 1, Frame::diagonal);
            return std::abs(series_pde_residual(k, e, p[0], p[1]));
        };
    }
    for (SeriesRelation r : {SeriesRelation::a2_relation, SeriesRelation::eq2_relation, SeriesRelation::a3_relation,
                             SeriesRelation::dif4, SeriesRelation::difcub, SeriesRelation::difkv, SeriesRelation::aaa2}) {
        if (identity == to_string(r)) return relation(r);
    }
    if (identity == "psecon2" || identity == "psecon1") {
        if (!t.system) throw ConfigError(identity + " needs a system (N, lambda, c)");
        const SystemSpec& spec = *t.system;
        const int src = t.matrix_source;
        const PseudopotentialForm form = pseudopotential_form(spec, src);
        const double perturb = t.perturb_b01;
        const bool first = identity == "psecon1";
        return [=, &spec](std::uint64_t i, std::vector<double>& p) {
            p = draw(i, spec.N, form.frame);
            const std::vector<double> u(p.begin() + 1, p.end());
            if (first) return psecon1_residual(spec, form, p[0], u);
            CoeffMatrix m = build_matrix(spec, src, u);
            m(0, 1) *= 1.0 + perturb;
            double worst = 0.0;
            for (double r : psecon_residual(spec, m, form, p[0])) worst = std::max(worst, std::abs(r));
            return worst;
        };
    }
    throw ConfigError("unknown identity '" + identity + "'");
}

inline ResidualReport sample_verify(const VerifyTarget& target, const std::string& identity, int n, std::uint64_t seed,
                                    double tolerance, int threads = 0) {
    if (n < 1) throw ConfigError("samples must be >= 1");
    const SampleFn fn = make_sample_fn(target, identity, seed);
    std::vector<double> res(n, 0.0);
    std::vector<char> skipped(n, 0);
    std::vector<std::vector<double>> points(n);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    const auto worker = [&] {
        for (int i = next++; i < n && !failed; i = next++) {
            try {
                res[i] = fn(static_cast<std::uint64_t>(i), points[i]);
            } catch (const DomainError&) {
                skipped[i] = 1;
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    const int nt = std::min(n, threads > 0 ? threads : verify_threads());
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    ResidualReport r;
    r.identity = identity;
    r.samples = n;
    r.seed = seed;
    r.tolerance = tolerance;
    double sum = 0.0;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        if (skipped[i]) {
            ++r.skipped;
            continue;
        }
        ++used;
        const double v = std::isfinite(res[i]) ? res[i] : INFINITY;
        sum += v;
        if (used == 1 || v > r.max_abs_residual) {
            r.max_abs_residual = v;
            r.worst = {points[i], v};
        }
    }
    r.mean_abs_residual = used > 0 ? sum / used : 0.0;
    r.pass = used > 0 && r.max_abs_residual <= tolerance && r.skipped * 10 <= n;
    if (r.skipped * 10 > n) r.note = "more than 10% of samples were inadmissible";
    return r;
}

}  // namespace hydropseudo
