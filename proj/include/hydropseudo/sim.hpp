#pragma once

// Method-of-lines evolution of  u_it = lambda_i u_ix + sum_j b_ij(u) u_jy
// on the doubly periodic square [0, 2 pi)^2 with RK4 in time and
// fourth-order central differences in space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hydropseudo/builder.hpp"
#include "hydropseudo/errors.hpp"
#include "hydropseudo/numerics.hpp"

namespace hydropseudo {

enum class Scheme { flux, coefficient };

inline const char* to_string(Scheme s) { return s == Scheme::flux ? "flux-form" : "coefficient-form"; }

inline Scheme parse_scheme(const std::string& s) {
    if (s == "flux-form" || s == "flux") return Scheme::flux;
    if (s == "coefficient-form" || s == "coefficient") return Scheme::coefficient;
    throw ConfigError("unknown scheme '" + s + "' (expected flux-form or coefficient-form)");
}

struct GridState {
    int N = 0;
    int nx = 0;
    int ny = 0;
    double dx = 0.0;
    double dy = 0.0;
    double t = 0.0;
    std::vector<std::vector<double>> u;  // u[i][ix * ny + iy]

    GridState() = default;
    GridState(int n, int nx_, int ny_)
        : N(n), nx(nx_), ny(ny_), dx(2.0 * std::numbers::pi / nx_), dy(2.0 * std::numbers::pi / ny_),
          u(n, std::vector<double>(static_cast<std::size_t>(nx_) * ny_, 0.0)) {}

    std::size_t points() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int ix, int iy) const {
        ix = ((ix % nx) + nx) % nx;
        iy = ((iy % ny) + ny) % ny;
        return static_cast<std::size_t>(ix) * ny + iy;
    }
    double& at(int i, int ix, int iy) { return u[i][index(ix, iy)]; }
    double at(int i, int ix, int iy) const { return u[i][index(ix, iy)]; }
    std::vector<double> point(std::size_t p) const {
        std::vector<double> v(N);
        for (int i = 0; i < N; ++i) v[i] = u[i][p];
        return v;
    }
};

/// Half the sampling guard; fields closer than this abort a run.
inline double evolution_guard(const SystemSpec& spec) { return 0.5 * spec.kernel->delta(Frame::diagonal); }

namespace detail {

inline void check_grid(int nx, int ny) {
    if (nx < 5 || ny < 5) throw ConfigError("grid needs at least 5 points per direction");
}

/// Empty when every pair at grid point p is admissible for evolution.
inline std::optional<std::string> evolution_violation(const SystemSpec& spec, const GridState& s, std::size_t p) {
    const Kernel& k = *spec.kernel;
    const Interval dom = k.domain(Frame::diagonal);
    const double g = evolution_guard(spec);
    std::ostringstream os;
    for (int i = 0; i < spec.N; ++i) {
        const double ui = s.u[i][p];
        if (!std::isfinite(ui) || !dom.contains(ui)) {
            os << "u_" << i + 1 << " = " << ui << " left [" << dom.lo << ", " << dom.hi << "]";
            break;
        }
        for (int j = 0; j < i; ++j) {
            if (std::abs(ui - s.u[j][p]) < g) {
                os << "|u_" << i + 1 << " - u_" << j + 1 << "| = " << std::abs(ui - s.u[j][p]) << " < " << g;
                break;
            }
        }
        if (os.tellp() > 0) break;
    }
    if (os.tellp() == 0) return std::nullopt;
    std::ostringstream loc;
    loc << "admissibility breach at t = " << s.t << ", (ix, iy) = (" << p / s.ny << ", " << p % s.ny
        << "): " << os.str();
    return loc.str();
}

inline void check_admissible(const SystemSpec& spec, const GridState& s) {
    for (std::size_t p = 0; p < s.points(); ++p) {
        if (auto msg = evolution_violation(spec, s, p)) throw DomainError(*msg);
    }
}

/// sigma_i with d sigma_i / d u_j = b_ij, at an already-checked point.
inline void point_sigma(const SystemSpec& spec, const std::vector<double>& u, std::vector<double>& sigma) {
    const Kernel& k = *spec.kernel;
    std::fill(sigma.begin(), sigma.end(), 0.0);
    for (int i = 0; i < spec.N; ++i) {
        for (int j = 0; j < spec.N; ++j) {
            if (i == j) continue;
            const double h = k.jet_unchecked(u[i], u[j], 0, Frame::diagonal, true).value();
            sigma[i] += (spec.lambda[j] - spec.lambda[i]) * spec.c[j] * h;
        }
    }
}

inline void point_b(const SystemSpec& spec, const std::vector<double>& u, std::vector<double>& b) {
    const Kernel& k = *spec.kernel;
    const int n = spec.N;
    std::fill(b.begin(), b.end(), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const Jet h = k.jet_unchecked(u[i], u[j], 1, Frame::diagonal, false);
            const double w = (spec.lambda[j] - spec.lambda[i]) * spec.c[j];
            b[i * n + j] = w * h.partial({0, 1, 0});
            b[i * n + i] += w * h.partial({1, 0, 0});
        }
    }
}

// (-f[+2] + 8 f[+1] - 8 f[-1] + f[-2]) / 12h
inline double dx4(const GridState& s, const std::vector<double>& f, int ix, int iy) {
    // differences first, so a constant field gives exactly zero
    const double d1 = f[s.index(ix + 1, iy)] - f[s.index(ix - 1, iy)];
    const double d2 = f[s.index(ix + 2, iy)] - f[s.index(ix - 2, iy)];
    return (8.0 * d1 - d2) / (12.0 * s.dx);
}

inline double dy4(const GridState& s, const std::vector<double>& f, int ix, int iy) {
    const double d1 = f[s.index(ix, iy + 1)] - f[s.index(ix, iy - 1)];
    const double d2 = f[s.index(ix, iy + 2)] - f[s.index(ix, iy - 2)];
    return (8.0 * d1 - d2) / (12.0 * s.dy);
}

}  // namespace detail

/// Time derivative of every field; throws DomainError on an admissibility breach.
inline std::vector<std::vector<double>> rhs(const SystemSpec& spec, const GridState& s, Scheme scheme) {
    detail::check_admissible(spec, s);
    const int n = spec.N;
    const std::size_t np = s.points();
    std::vector<std::vector<double>> out(n, std::vector<double>(np, 0.0));
    std::vector<double> u(n);

    if (scheme == Scheme::flux) {
        std::vector<std::vector<double>> sigma(n, std::vector<double>(np));
        std::vector<double> sp(n);
        for (std::size_t p = 0; p < np; ++p) {
            for (int i = 0; i < n; ++i) u[i] = s.u[i][p];
            detail::point_sigma(spec, u, sp);
            for (int i = 0; i < n; ++i) sigma[i][p] = sp[i];
        }
        for (int ix = 0; ix < s.nx; ++ix) {
            for (int iy = 0; iy < s.ny; ++iy) {
                const std::size_t p = s.index(ix, iy);
                for (int i = 0; i < n; ++i) {
                    out[i][p] = spec.lambda[i] * detail::dx4(s, s.u[i], ix, iy) + detail::dy4(s, sigma[i], ix, iy);
                }
            }
        }
        return out;
    }

    std::vector<double> b(static_cast<std::size_t>(n) * n), uy(n);
    for (int ix = 0; ix < s.nx; ++ix) {
        for (int iy = 0; iy < s.ny; ++iy) {
            const std::size_t p = s.index(ix, iy);
            for (int i = 0; i < n; ++i) {
                u[i] = s.u[i][p];
                uy[i] = detail::dy4(s, s.u[i], ix, iy);
            }
            detail::point_b(spec, u, b);
            for (int i = 0; i < n; ++i) {
                double v = spec.lambda[i] * detail::dx4(s, s.u[i], ix, iy);
                for (int j = 0; j < n; ++j) v += b[i * n + j] * uy[j];
                out[i][p] = v;
            }
        }
    }
    return out;
}

/// max(|lambda_i|, max over the grid of the largest absolute row sum of b).
inline double max_wave_speed(const SystemSpec& spec, const GridState& s) {
    detail::check_admissible(spec, s);
    double v = 0.0;
    for (double l : spec.lambda) v = std::max(v, std::abs(l));
    const int n = spec.N;
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    for (std::size_t p = 0; p < s.points(); ++p) {
        detail::point_b(spec, s.point(p), b);
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) row += std::abs(b[i * n + j]);
            v = std::max(v, row);
        }
    }
    return v;
}

inline double cfl_limit(const SystemSpec& spec, const GridState& s) {
    const double v = max_wave_speed(spec, s);
    if (v == 0.0) return std::numeric_limits<double>::infinity();
    return 0.4 * std::min(s.dx, s.dy) / v;
}

/// One RK4 step without the CFL check; dt may be negative.
inline GridState rk4_step(const SystemSpec& spec, const GridState& s, double dt, Scheme scheme) {
    const auto axpy = [&](const GridState& base, const std::vector<std::vector<double>>& k, double a) {
        GridState r = base;
        for (int i = 0; i < s.N; ++i) {
            for (std::size_t p = 0; p < s.points(); ++p) r.u[i][p] += a * k[i][p];
        }
        return r;
    };
    const auto k1 = rhs(spec, s, scheme);
    GridState s2 = axpy(s, k1, 0.5 * dt);
    s2.t = s.t + 0.5 * dt;
    const auto k2 = rhs(spec, s2, scheme);
    GridState s3 = axpy(s, k2, 0.5 * dt);
    s3.t = s2.t;
    const auto k3 = rhs(spec, s3, scheme);
    GridState s4 = axpy(s, k3, dt);
    s4.t = s.t + dt;
    const auto k4 = rhs(spec, s4, scheme);

    GridState out = s;
    for (int i = 0; i < s.N; ++i) {
        for (std::size_t p = 0; p < s.points(); ++p) {
            out.u[i][p] += dt / 6.0 * (k1[i][p] + 2.0 * k2[i][p] + 2.0 * k3[i][p] + k4[i][p]);
        }
    }
    out.t = s.t + dt;
    detail::check_admissible(spec, out);
    return out;
}

/// One RK4 step; |dt| must respect the CFL limit of the current state.
inline GridState step(const SystemSpec& spec, const GridState& s, double dt, Scheme scheme) {
    const double lim = cfl_limit(spec, s);
    if (std::abs(dt) > lim) {
        std::ostringstream os;
        os << "CFL violated: |dt| = " << std::abs(dt) << " exceeds 0.4 min(dx, dy) / v_max = " << lim;
        throw ConfigError(os.str());
    }
    return rk4_step(spec, s, dt, scheme);
}

/// Constant levels spaced by 4 amplitude + delta and centred in the domain, plus smooth seeded waves.
inline GridState init_separated(const SystemSpec& spec, int nx, int ny, double amplitude, std::uint64_t seed) {
    spec.validate();
    detail::check_grid(nx, ny);
    const Kernel& k = *spec.kernel;
    const double delta = k.delta(Frame::diagonal);
    if (!(amplitude >= 0.0) || amplitude >= delta / 4.0) {
        std::ostringstream os;
        os << "amplitude " << amplitude << " must lie in [0, delta/4) = [0, " << delta / 4.0 << ")";
        throw ConfigError(os.str());
    }
    const Interval dom = k.domain(Frame::diagonal);
    const double gap = 4.0 * amplitude + delta;
    const double span = (spec.N - 1) * gap;
    const double lo = dom.mid() - 0.5 * span;
    if (lo - amplitude <= dom.lo || lo + span + amplitude >= dom.hi) {
        std::ostringstream os;
        os << "cannot separate " << spec.N << " levels by " << gap << " inside [" << dom.lo << ", " << dom.hi << "]";
        throw DomainError(os.str());
    }

    GridState s(spec.N, nx, ny);
    Rng rng(seed);
    for (int i = 0; i < spec.N; ++i) {
        const double base = lo + i * gap;
        // three unit-bounded modes with weights summing to at most one
        double w[3], ph[3];
        for (int m = 0; m < 3; ++m) {
            w[m] = rng.uniform(-1.0, 1.0) / 3.0;
            ph[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (int ix = 0; ix < nx; ++ix) {
            const double x = ix * s.dx;
            for (int iy = 0; iy < ny; ++iy) {
                const double y = iy * s.dy;
                const double wave = w[0] * std::sin(x + ph[0]) + w[1] * std::sin(y + ph[1]) +
                                    w[2] * std::sin(x + y + ph[2]);
                s.at(i, ix, iy) = base + amplitude * wave;
            }
        }
    }
    return s;
}

/// Grid means of each field.
inline std::vector<double> conserved_integrals(const GridState& s) {
    std::vector<double> I(s.N, 0.0);
    for (int i = 0; i < s.N; ++i) {
        double acc = 0.0;
        for (double v : s.u[i]) acc += v;
        I[i] = acc / static_cast<double>(s.points());
    }
    return I;
}

inline double min_pairwise_gap(const GridState& s) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < s.points(); ++p) {
        for (int i = 0; i < s.N; ++i) {
            for (int j = 0; j < i; ++j) g = std::min(g, std::abs(s.u[i][p] - s.u[j][p]));
        }
    }
    return g;
}

inline double max_abs_value(const GridState& s) {
    double m = 0.0;
    for (const auto& f : s.u) {
        for (double v : f) m = std::max(m, std::abs(v));
    }
    return m;
}

inline double max_pointwise_difference(const GridState& a, const GridState& b) {
    if (a.N != b.N || a.points() != b.points()) throw ConfigError("grid states differ in shape");
    double m = 0.0;
    for (int i = 0; i < a.N; ++i) {
        for (std::size_t p = 0; p < a.points(); ++p) m = std::max(m, std::abs(a.u[i][p] - b.u[i][p]));
    }
    return m;
}

struct RunConfig {
    int nx = 64;
    int ny = 64;
    double dt = 0.0;  // 0 picks the CFL limit of the initial state
    double t_end = 0.5;
    double amplitude = 0.01;
    Scheme scheme = Scheme::flux;
    std::uint64_t seed = 1;
    int log_every = 1;  // steps between log rows
};

struct LogRow {
    double t = 0.0;
    std::vector<double> integrals;
    double min_gap = 0.0;
    double max_abs = 0.0;
};

struct RunResult {
    GridState initial;
    GridState final_state;
    std::vector<LogRow> log;
    int steps = 0;
    double dt = 0.0;
    bool aborted = false;
    std::string abort_reason;

    std::vector<double> drift() const {
        const auto a = conserved_integrals(initial);
        const auto b = conserved_integrals(final_state);
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
        return d;
    }
};

inline LogRow log_row(const GridState& s) { return {s.t, conserved_integrals(s), min_pairwise_gap(s), max_abs_value(s)}; }

/// Uniform steps reaching t_end exactly; an admissibility breach ends the run and is reported.
inline RunResult run(const SystemSpec& spec, const RunConfig& cfg) {
    if (!(cfg.t_end >= 0.0)) throw ConfigError("t_end must be non-negative");
    if (cfg.dt < 0.0) throw ConfigError("dt must be non-negative");
    if (cfg.log_every < 1) throw ConfigError("log_every must be at least 1");
    RunResult r;
    r.initial = init_separated(spec, cfg.nx, cfg.ny, cfg.amplitude, cfg.seed);
    r.final_state = r.initial;
    r.log.push_back(log_row(r.initial));
    if (cfg.t_end == 0.0) return r;

    const double lim = cfl_limit(spec, r.initial);
    const double target = cfg.dt > 0.0 ? cfg.dt : lim;
    const int n = std::isfinite(target) ? std::max(1, static_cast<int>(std::ceil(cfg.t_end / target - 1e-12))) : 1;
    r.dt = cfg.t_end / n;

    GridState s = r.initial;
    for (int k = 0; k < n; ++k) {
        try {
            GridState next = step(spec, s, r.dt, cfg.scheme);
            next.t = (k + 1 == n) ? cfg.t_end : r.initial.t + (k + 1) * r.dt;
            s = std::move(next);
        } catch (const DomainError& e) {
            r.aborted = true;
            r.abort_reason = e.what();
            break;
        }
        ++r.steps;
        if (r.steps % cfg.log_every == 0 || r.steps == n) r.log.push_back(log_row(s));
    }
    r.final_state = std::move(s);
    return r;
}

inline void write_log_csv(std::ostream& os, const RunResult& r) {
    const int n = r.initial.N;
    os << "t";
    for (int i = 0; i < n; ++i) os << ",I_" << i + 1;
    os << ",min_gap,max_abs_u\n";
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : r.log) {
        os << num(row.t);
        for (double v : row.integrals) os << ',' << num(v);
        os << ',' << num(row.min_gap) << ',' << num(row.max_abs) << '\n';
    }
}

/// Fields as row-major little-endian doubles (field, ix, iy) plus a JSON sidecar at path + ".json".
inline void write_snapshot(const GridState& s, const std::string& path) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw ConfigError("cannot open snapshot file " + path);
    for (const auto& f : s.u) {
        for (double v : f) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            unsigned char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
            bin.write(reinterpret_cast<const char*>(bytes), 8);
        }
    }
    std::ofstream meta(path + ".json");
    if (!meta) throw ConfigError("cannot open snapshot sidecar " + path + ".json");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    meta << "{\"dtype\": \"float64\", \"endianness\": \"little\", \"order\": \"row-major\", \"shape\": [" << s.N
         << ", " << s.nx << ", " << s.ny << "], \"t\": " << buf << "}\n";
}

}  // namespace hydropseudo
