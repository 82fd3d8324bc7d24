#pragma once

// JSON spec documents (strict schema) and deterministic JSON output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydropseudo/builder.hpp"
#include "hydropseudo/errors.hpp"
#include "hydropseudo/kernels.hpp"
#include "hydropseudo/sim.hpp"
#include "hydropseudo/verifier.hpp"

namespace hydropseudo {

using ojson = nlohmann::ordered_json;

inline const std::vector<std::string>& known_identities() {
    static const std::vector<std::string> ids{
        "funceq",       "funceq_shift", "remark4",     "remark4_reciprocal", "eq1",    "eq2",    "eq3",
        "a2_relation",  "eq2_relation", "a3_relation", "dif4",               "difcub", "difkv",  "aaa2",
        "psecon2",      "psecon1"};
    return ids;
}

struct VerifySection {
    std::vector<std::string> identities;
    int samples = 1000;
    std::uint64_t seed = 0;
    double tolerance = 1e-9;
    int matrix_source = 0;  // 0 general construction, k example k
    std::optional<double> series_constant;
};

struct SpecDocument {
    HKernelFamily family;
    std::vector<double> lambda;
    std::vector<double> c;
    std::optional<VerifySection> verify;
    std::optional<RunConfig> simulate;

    int N() const { return static_cast<int>(lambda.size()); }
};

namespace detail {

class Node {
public:
    Node(const ojson& j, std::string path) : j_(j), path_(std::move(path)) {}

    const ojson& json() const { return j_; }
    const std::string& path() const { return path_; }
    [[noreturn]] void fail(const std::string& what) const { throw SchemaError(path_, what); }

    void require_object(const std::set<std::string>& allowed) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [key, _] : j_.items()) {
            if (!allowed.count(key)) throw SchemaError(path_ + "." + key, "unknown key");
        }
    }
    bool has(const std::string& key) const { return j_.contains(key); }
    Node at(const std::string& key) const {
        if (!j_.contains(key)) throw SchemaError(path_ + "." + key, "missing required key");
        return {j_.at(key), path_ + "." + key};
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v)) fail("expected a finite number");
        return v;
    }
    double positive() const {
        const double v = number();
        if (!(v > 0.0)) fail("expected a positive number");
        return v;
    }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) const {
        if (!j_.is_number_integer()) fail("expected an integer");
        if (j_.is_number_unsigned() && j_.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
            fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        const std::int64_t v = j_.get<std::int64_t>();
        if (v < lo || v > hi) fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }
    std::uint64_t seed() const {
        if (!j_.is_number_integer() || (!j_.is_number_unsigned() && j_.get<std::int64_t>() < 0)) {
            fail("expected a non-negative integer");
        }
        return j_.get<std::uint64_t>();
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }
    std::vector<double> numbers(std::size_t min_len, std::size_t max_len) const {
        if (!j_.is_array()) fail("expected an array of numbers");
        if (j_.size() < min_len || j_.size() > max_len) {
            fail(min_len == max_len ? "expected " + std::to_string(min_len) + " entries"
                                    : "expected " + std::to_string(min_len) + " to " + std::to_string(max_len) +
                                          " entries");
        }
        std::vector<double> v;
        for (std::size_t i = 0; i < j_.size(); ++i) v.push_back(Node(j_[i], path_ + "[" + std::to_string(i) + "]").number());
        return v;
    }
    Interval interval() const {
        const auto v = numbers(2, 2);
        if (!(v[0] < v[1])) fail("expected [lo, hi] with lo < hi");
        return {v[0], v[1]};
    }

private:
    const ojson& j_;
    std::string path_;
};

inline HKernelFamily parse_family(const Node& n) {
    n.require_object({"tag", "kappa", "P", "Z", "base_point", "m_base", "constants", "domain", "xi_domain", "phi0",
                      "guard_fraction"});
    HKernelFamily f;
    const Node tag = n.at("tag");
    try {
        f.tag = parse_kernel_tag(tag.string());
    } catch (const SchemaError&) {
        throw;
    } catch (const ConfigError& e) {
        tag.fail(e.what());
    }
    const bool kappa_family = f.tag == KernelTag::LogKappa || f.tag == KernelTag::ExpKappa;
    const bool quad = f.tag == KernelTag::Quadrature;
    const auto only = [&](const char* key, bool ok, const char* who) {
        if (n.has(key) && !ok) throw SchemaError(n.path() + "." + key, std::string("only allowed for ") + who);
    };
    only("kappa", kappa_family, "LogKappa and ExpKappa");
    only("constants", f.tag == KernelTag::AffineLogDegenerate, "AffineLogDegenerate");
    for (const char* key : {"P", "Z", "base_point", "m_base", "xi_domain", "phi0"}) only(key, quad, "Quadrature");

    if (kappa_family) f.kappa = n.at("kappa").number();
    if (f.tag == KernelTag::ShiftedLog) f.domain = {0.25, 4.0};
    if (f.tag == KernelTag::AffineLogDegenerate) {
        const Node cn = n.at("constants");
        const auto v = cn.numbers(3, 3);
        if (v[2] == 0.0) throw SchemaError(cn.path() + "[2]", "c3 must be nonzero");
        f.constants = {v[0], v[1], v[2]};
    }
    if (quad) {
        if (n.has("P")) {
            const auto v = n.at("P").numbers(1, 4);
            f.p_coeffs = {0.0, 0.0, 0.0, 0.0};
            for (std::size_t i = 0; i < v.size(); ++i) f.p_coeffs[i] = v[i];
        }
        if (n.has("Z")) {
            const auto v = n.at("Z").numbers(2, 2);
            f.z_coeffs = {v[0], v[1]};
        }
        if (n.has("base_point")) f.base_point = n.at("base_point").number();
        if (n.has("m_base")) f.m_base = n.at("m_base").positive();
        if (n.has("xi_domain")) f.xi_domain = n.at("xi_domain").interval();
        if (n.has("phi0")) f.phi0 = n.at("phi0").number();
    }
    if (n.has("domain")) f.domain = n.at("domain").interval();
    if (f.tag == KernelTag::ShiftedLog && f.domain.lo <= 0.0) {
        throw SchemaError(n.path() + ".domain", "ShiftedLog needs a domain inside v > 0");
    }
    if (n.has("guard_fraction")) {
        const Node g = n.at("guard_fraction");
        const double v = g.number();
        if (!(v > 0.0 && v < 0.5)) g.fail("expected a number in (0, 0.5)");
        f.guard_fraction = v;
    }
    if (quad && !f.domain.contains(f.base_point)) {
        throw SchemaError(n.path() + ".base_point", "must lie inside the domain");
    }
    return f;
}

inline int parse_matrix_source(const Node& n) {
    const std::string s = n.string();
    if (s == "general") return 0;
    for (int k = 1; k <= 4; ++k) {
        if (s == "example" + std::to_string(k)) return k;
    }
    n.fail("expected one of general, example1, example2, example3, example4");
}

inline VerifySection parse_verify(const Node& n) {
    n.require_object({"identities", "samples", "seed", "tolerance", "matrix_source", "series_constant"});
    VerifySection v;
    const Node ids = n.at("identities");
    if (!ids.json().is_array() || ids.json().empty()) ids.fail("expected a non-empty array of identity names");
    const auto& known = known_identities();
    for (std::size_t i = 0; i < ids.json().size(); ++i) {
        const Node e(ids.json()[i], ids.path() + "[" + std::to_string(i) + "]");
        const std::string name = e.string();
        if (std::find(known.begin(), known.end(), name) == known.end()) e.fail("unknown identity '" + name + "'");
        v.identities.push_back(name);
    }
    if (n.has("samples")) v.samples = static_cast<int>(n.at("samples").integer(1, 10000000));
    if (n.has("seed")) v.seed = n.at("seed").seed();
    if (n.has("tolerance")) v.tolerance = n.at("tolerance").positive();
    if (n.has("matrix_source")) v.matrix_source = parse_matrix_source(n.at("matrix_source"));
    if (n.has("series_constant")) v.series_constant = n.at("series_constant").number();
    return v;
}

inline RunConfig parse_simulate(const Node& n) {
    n.require_object({"nx", "ny", "dt", "t_end", "amplitude", "scheme", "seed", "output_interval"});
    RunConfig r;
    r.nx = static_cast<int>(n.at("nx").integer(5, 4096));
    r.ny = static_cast<int>(n.at("ny").integer(5, 4096));
    if (n.has("dt")) {
        const Node d = n.at("dt");
        r.dt = d.number();
        if (r.dt < 0.0) d.fail("expected a non-negative number (0 selects the CFL limit)");
    }
    {
        const Node t = n.at("t_end");
        r.t_end = t.number();
        if (r.t_end < 0.0) t.fail("expected a non-negative number");
    }
    {
        const Node a = n.at("amplitude");
        r.amplitude = a.number();
        if (r.amplitude < 0.0) a.fail("expected a non-negative number");
    }
    if (n.has("scheme")) {
        const Node s = n.at("scheme");
        try {
            r.scheme = parse_scheme(s.string());
        } catch (const SchemaError&) {
            throw;
        } catch (const ConfigError& e) {
            s.fail(e.what());
        }
    }
    if (n.has("seed")) r.seed = n.at("seed").seed();
    if (n.has("output_interval")) r.log_every = static_cast<int>(n.at("output_interval").integer(1, 1000000000));
    return r;
}

}  // namespace detail

/// Parses and validates a document; every violation is a SchemaError naming the key path.
inline SpecDocument parse_spec_document(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("malformed JSON: ") + e.what());
    }
    const detail::Node root(j, "$");
    root.require_object({"family", "N", "lambda", "c", "verify", "simulate"});
    SpecDocument d;
    d.family = detail::parse_family(root.at("family"));
    const int n = static_cast<int>(root.at("N").integer(2, 64));
    const detail::Node ln = root.at("lambda");
    const detail::Node cn = root.at("c");
    d.lambda = ln.numbers(n, n);
    d.c = cn.numbers(n, n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < i; ++k) {
            if (d.lambda[i] == d.lambda[k]) {
                throw SchemaError(ln.path() + "[" + std::to_string(i) + "]",
                                  "lambda must be pairwise distinct (equals lambda[" + std::to_string(k) + "])");
            }
        }
        if (d.c[i] == 0.0) throw SchemaError(cn.path() + "[" + std::to_string(i) + "]", "c must be nonzero");
    }
    if (root.has("verify")) d.verify = detail::parse_verify(root.at("verify"));
    if (root.has("simulate")) d.simulate = detail::parse_simulate(root.at("simulate"));
    return d;
}

inline SystemSpec make_system(const SpecDocument& d) {
    return SystemSpec(d.lambda, d.c, std::make_shared<const Kernel>(d.family));
}

// ---- output ----

inline std::string format_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_json(std::ostream& os, const ojson& j) {
    switch (j.type()) {
        case ojson::value_t::object: {
            os << '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) os << ", ";
                first = false;
                os << ojson(k).dump() << ": ";
                write_json(os, v);
            }
            os << '}';
            return;
        }
        case ojson::value_t::array: {
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << ", ";
                write_json(os, j[i]);
            }
            os << ']';
            return;
        }
        case ojson::value_t::number_float: os << format_number(j.get<double>()); return;
        default: os << j.dump(); return;
    }
}

}  // namespace detail

/// Single-line JSON with stable key order and 17 significant digits for reals.
inline std::string to_text(const ojson& j) {
    std::ostringstream os;
    detail::write_json(os, j);
    return os.str();
}

inline ojson to_json(const ResidualReport& r) {
    ojson j;
    j["identity"] = r.identity;
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    j["skipped"] = r.skipped;
    j["max_abs_residual"] = r.max_abs_residual;
    j["mean_abs_residual"] = r.mean_abs_residual;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["worst"] = {{"point", r.worst.point}, {"residual", r.worst.residual}};
    j["note"] = r.note;
    return j;
}

inline ojson to_json(const CoeffMatrix& m) {
    ojson rows = ojson::array();
    for (int i = 0; i < m.N; ++i) {
        ojson row = ojson::array();
        for (int k = 0; k < m.N; ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

inline ojson to_json(const ConstraintReport& r) {
    return {{"needed", r.needed}, {"satisfied", r.satisfied}, {"sum_c", r.sum_c}, {"sum_lambda_c", r.sum_lambda_c}};
}

}  // namespace hydropseudo
