#pragma once

// Coefficient matrices b_ij(u) of  u_it = lambda_i u_ix + sum_j b_ij(u) u_jy.
//
// General construction from a kernel h and weights c:
//   b_ji = (lambda_i - lambda_j) c_i d2h(u_j, u_i)                    (j != i)
//   b_ii = sum_{j != i} (lambda_j - lambda_i) c_j d1h(u_i, u_j)
// where d1, d2 differentiate the first and second slot.

#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hydropseudo/errors.hpp"
#include "hydropseudo/kernels.hpp"

namespace hydropseudo {

struct SystemSpec {
    int N = 0;
    std::vector<double> lambda;
    std::vector<double> c;
    std::shared_ptr<const Kernel> kernel;

    SystemSpec() = default;
    SystemSpec(std::vector<double> lambda_, std::vector<double> c_, std::shared_ptr<const Kernel> kernel_)
        : N(static_cast<int>(lambda_.size())), lambda(std::move(lambda_)), c(std::move(c_)), kernel(std::move(kernel_)) {
        validate();
    }
    SystemSpec(std::vector<double> lambda_, std::vector<double> c_, const HKernelFamily& family)
        : SystemSpec(std::move(lambda_), std::move(c_), std::make_shared<const Kernel>(family)) {}

    void validate() const {
        if (N < 2) throw ConfigError("system needs N >= 2");
        if (static_cast<int>(lambda.size()) != N || static_cast<int>(c.size()) != N) {
            throw ConfigError("lambda and c must both have N entries");
        }
        if (!kernel) throw ConfigError("system has no kernel");
        for (int i = 0; i < N; ++i) {
            if (c[i] == 0.0) throw ConfigError("c[" + std::to_string(i) + "] must be nonzero");
            for (int j = 0; j < i; ++j) {
                if (lambda[i] == lambda[j]) {
                    throw ConfigError("lambda must be pairwise distinct (lambda[" + std::to_string(j) + "] == lambda[" +
                                      std::to_string(i) + "])");
                }
            }
        }
    }
};

struct CoeffMatrix {
    int N = 0;
    std::vector<double> b;  // row-major
    std::vector<double> point;

    CoeffMatrix() = default;
    CoeffMatrix(int n, std::vector<double> u) : N(n), b(static_cast<std::size_t>(n) * n, 0.0), point(std::move(u)) {}

    double& operator()(int i, int j) { return b[static_cast<std::size_t>(i) * N + j]; }
    double operator()(int i, int j) const { return b[static_cast<std::size_t>(i) * N + j]; }
};

namespace detail {

inline void check_point(const SystemSpec& spec, const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != spec.N) {
        throw ConfigError("point has " + std::to_string(u.size()) + " entries, system has N=" + std::to_string(spec.N));
    }
}

inline Jet pair_jet(const Kernel& k, const std::vector<double>& u, int i, int j, int order, Frame f, bool with_value) {
    if (auto msg = k.violation(u[i], u[j], f)) {
        std::ostringstream os;
        os << to_string(k.tag()) << ": pair (u_" << i + 1 << ", u_" << j + 1 << ") inadmissible: " << *msg;
        throw DomainError(os.str());
    }
    return k.jet_unchecked(u[i], u[j], order, f, with_value);
}

}  // namespace detail

inline CoeffMatrix build_general(const SystemSpec& spec, const std::vector<double>& u) {
    detail::check_point(spec, u);
    const Kernel& k = *spec.kernel;
    CoeffMatrix m(spec.N, u);
    for (int i = 0; i < spec.N; ++i) {
        for (int j = 0; j < spec.N; ++j) {
            if (i == j) continue;
            const Jet hij = detail::pair_jet(k, u, i, j, 1, Frame::diagonal, false);
            // b_ij gets d2h(u_i, u_j); b_ii collects d1h(u_i, u_j)
            m(i, j) = (spec.lambda[j] - spec.lambda[i]) * spec.c[j] * hij.partial({0, 1, 0});
            m(i, i) += (spec.lambda[j] - spec.lambda[i]) * spec.c[j] * hij.partial({1, 0, 0});
        }
    }
    return m;
}

/// Sign s such that example k admits the pseudopotential with weights s*c_i for the kernel of
/// its family (the closed-form matrices of examples 2 and 4 correspond to weights -c).
inline double example_weight_sign(int which) {
    switch (which) {
        case 1:
        case 3: return 1.0;
        case 2:
        case 4: return -1.0;
    }
    throw ConfigError("example must be 1, 2, 3 or 4");
}

/// Frame in which example k's pseudopotential lives.
inline Frame example_frame(int which) { return which == 4 ? Frame::example4 : Frame::diagonal; }

/// Closed-form matrix of example 1..4.
inline CoeffMatrix build_example(int which, const SystemSpec& spec, const std::vector<double>& u) {
    detail::check_point(spec, u);
    const Kernel& k = *spec.kernel;
    const HKernelFamily& fam = k.family();
    const auto need = [&](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("example ") + std::to_string(which) + " requires " + what);
    };
    switch (which) {
        case 1: need(fam.tag == KernelTag::LogKappa && fam.kappa == 0.0, "the LogKappa family with kappa = 0"); break;
        case 2: need(fam.tag == KernelTag::ExpKappa, "the ExpKappa family"); break;
        case 3: need(fam.tag == KernelTag::ShiftedLog, "the ShiftedLog family"); break;
        case 4: need(fam.tag == KernelTag::Quadrature, "the Quadrature family"); break;
        default: throw ConfigError("example must be 1, 2, 3 or 4");
    }
    const Frame frame = example_frame(which);
    const double d = k.delta(frame);
    const Interval dom = fam.domain;
    for (int i = 0; i < spec.N; ++i) {
        if (which == 3 && u[i] <= 0.0) {
            throw DomainError("example 3 needs u_j > 0 (u_" + std::to_string(i + 1) + " = " + std::to_string(u[i]) + ")");
        }
        if (which == 4 && !dom.contains(u[i])) {
            std::ostringstream os;
            os << "example 4: u_" << i + 1 << " = " << u[i] << " outside [" << dom.lo << ", " << dom.hi << "]";
            throw DomainError(os.str());
        }
        for (int j = 0; j < i; ++j) {
            if (std::abs(u[i] - u[j]) < d) {
                std::ostringstream os;
                os << "pair (u_" << j + 1 << ", u_" << i + 1 << ") closer than delta = " << d;
                throw DomainError(os.str());
            }
        }
    }

    const auto& lam = spec.lambda;
    const auto& c = spec.c;
    CoeffMatrix m(spec.N, u);
    std::vector<double> mq, bq;
    if (which == 4) {
        const auto& q = k.quadrature().coefficients();
        for (double x : u) {
            mq.push_back(q.m(x));
            bq.push_back(q.b(x));
        }
    }
    for (int i = 0; i < spec.N; ++i) {
        double diag = 0.0;
        for (int j = 0; j < spec.N; ++j) {
            if (i == j) continue;
            const double s = u[i] - u[j];
            double bij = 0.0;
            switch (which) {
                case 1: bij = (lam[i] - lam[j]) / s * c[j]; break;
                case 2: bij = c[j] * (lam[j] - lam[i]) * (fam.kappa + std::exp(s) / std::expm1(s)); break;
                case 3:
                    bij = c[j] * (lam[j] - lam[i]) * (s + 1.0) / s * u[i] / u[j];
                    diag += c[j] * (lam[j] - lam[i]) * (1.0 / (u[j] - u[i]) + std::log(u[j]));
                    break;
                case 4: {
                    const auto& q = k.quadrature().coefficients();
                    bij = (lam[i] - lam[j]) * c[j] * q.P(u[i]) * mq[j] / s;
                    diag -= (lam[i] - lam[j]) * c[j] * (q.P(u[j]) * mq[j] / s + bq[j]);
                    break;
                }
            }
            m(i, j) = bij;
        }
        if (which == 1 || which == 2) {
            for (int j = 0; j < spec.N; ++j) {
                if (j != i) diag -= m(i, j);
            }
        }
        m(i, i) = diag;
    }
    return m;
}

struct ConstraintReport {
    bool needed = false;
    bool satisfied = false;
    double sum_c = 0.0;
    double sum_lambda_c = 0.0;
};

/// Sum c_i = 0 and sum lambda_i c_i = 0 are required when nu is not identically zero
/// (probed at 10 sampled points).
inline ConstraintReport check_constraints(const SystemSpec& spec) {
    ConstraintReport r;
    const Kernel& k = *spec.kernel;
    for (const auto& pt : sample_domain(k, 10, 1, 0x5eedULL)) {
        if (std::abs(k.nu(pt[0], pt[1])) > 1e-14) r.needed = true;
    }
    for (int i = 0; i < spec.N; ++i) {
        r.sum_c += spec.c[i];
        r.sum_lambda_c += spec.lambda[i] * spec.c[i];
    }
    r.satisfied = std::abs(r.sum_c) <= 1e-12 && std::abs(r.sum_lambda_c) <= 1e-12;
    return r;
}

/// Orthogonal projection of c onto {sum c_i = 0, sum lambda_i c_i = 0}.
inline std::vector<double> project_onto_constraints(const std::vector<double>& lambda, std::vector<double> c) {
    const std::size_t n = lambda.size();
    if (c.size() != n) throw ConfigError("lambda and c differ in length");
    std::vector<double> e1(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double mean = 0.0;
    for (double l : lambda) mean += l / n;
    std::vector<double> e2(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e2[i] = lambda[i] - mean;
        norm += e2[i] * e2[i];
    }
    norm = std::sqrt(norm);
    for (auto& x : e2) x /= norm;
    for (const auto* e : {&e1, &e2}) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += c[i] * (*e)[i];
        for (std::size_t i = 0; i < n; ++i) c[i] -= dot * (*e)[i];
    }
    return c;
}

/// sigma_i = sum_{j != i} (lambda_j - lambda_i) c_j h(u_i, u_j), so that u_it = lambda_i u_ix + sigma_iy.
inline std::vector<double> sigma_fluxes(const SystemSpec& spec, const std::vector<double>& u) {
    detail::check_point(spec, u);
    const Kernel& k = *spec.kernel;
    std::vector<double> sigma(spec.N, 0.0);
    for (int i = 0; i < spec.N; ++i) {
        for (int j = 0; j < spec.N; ++j) {
            if (i == j) continue;
            const double h = detail::pair_jet(k, u, i, j, 0, Frame::diagonal, true).value();
            sigma[i] += (spec.lambda[j] - spec.lambda[i]) * spec.c[j] * h;
        }
    }
    return sigma;
}

/// Diagonal entries reconstructed from the off-diagonal ones through the pseudopotential at a fixed xi0:
///   b_ii = sum_j (lambda_j - lambda_i) phi_j(u_j) - sum_{j != i} b_ji s_j(u_j) / s_i(u_i),
/// with h_j = w_j h(xi0, u_j), phi_j = d_xi h_j, s_j = d_u h_j.
inline std::vector<double> diagonal_from_pseudopotential(const SystemSpec& spec, const CoeffMatrix& m, double xi0,
                                                         const std::vector<double>& weights, Frame frame) {
    const Kernel& k = *spec.kernel;
    std::vector<double> phi(spec.N), s(spec.N);
    for (int j = 0; j < spec.N; ++j) {
        const Jet hj = k.jet(xi0, m.point[j], 1, frame, false);
        phi[j] = weights[j] * hj.partial({1, 0, 0});
        s[j] = weights[j] * hj.partial({0, 1, 0});
    }
    std::vector<double> diag(spec.N, 0.0);
    for (int i = 0; i < spec.N; ++i) {
        for (int j = 0; j < spec.N; ++j) {
            diag[i] += (spec.lambda[j] - spec.lambda[i]) * phi[j];
            if (j != i) diag[i] -= m(j, i) * s[j] / s[i];
        }
    }
    return diag;
}

}  // namespace hydropseudo
