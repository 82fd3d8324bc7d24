// hydropseudo: verify, build, expand and simulate from a JSON spec document.
// Exit codes: 0 pass, 1 failure or inadmissible input, 2 usage or schema error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hydropseudo/hydropseudo.hpp"

namespace hp = hydropseudo;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string spec_path;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    std::string point;
    std::string out;
    std::string source;
    std::string snapshot;
    double w = 0.0;
    int k = 2;
    bool richardson = false;
};

hp::SpecDocument load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hp::SchemaError("$", "cannot read spec document '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return hp::parse_spec_document(ss.str());
}

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && item[used] == ' ') ++used;
        if (used == 0 || used != item.size()) throw hp::SchemaError("--point", "'" + item + "' is not a number");
        v.push_back(x);
    }
    if (v.empty()) throw hp::SchemaError("--point", "expected comma-separated reals");
    return v;
}

/// Output sink: --out path or stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw hp::SchemaError("--out", "cannot write '" + path + "'");
        }
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

int cmd_verify(const Options& o) {
    const hp::SpecDocument doc = load(o.spec_path);
    if (!doc.verify) throw hp::SchemaError("$.verify", "missing required key");
    hp::VerifySection v = *doc.verify;
    if (o.samples) v.samples = *o.samples;
    if (o.seed) v.seed = *o.seed;
    if (o.tolerance) v.tolerance = *o.tolerance;

    hp::VerifyTarget target;
    target.kernel = std::make_shared<const hp::Kernel>(doc.family);
    target.system = hp::SystemSpec(doc.lambda, doc.c, target.kernel);
    target.matrix_source = v.matrix_source;
    target.series_constant = v.series_constant;

    Sink sink(o.out);
    bool all = true;
    for (const auto& id : v.identities) {
        hp::ResidualReport r;
        try {
            r = hp::sample_verify(target, id, v.samples, v.seed, v.tolerance);
        } catch (const hp::InapplicableRelationError& e) {
            r.identity = id;
            r.samples = v.samples;
            r.seed = v.seed;
            r.tolerance = v.tolerance;
            r.pass = false;
            r.max_abs_residual = r.mean_abs_residual = std::numeric_limits<double>::quiet_NaN();
            r.note = std::string("not applicable: ") + e.what();
        }
        all = all && r.pass;
        sink.os() << hp::to_text(hp::to_json(r)) << '\n';
        sink.os().flush();
    }
    return all ? kExitPass : kExitFail;
}

int cmd_build(const Options& o) {
    const hp::SpecDocument doc = load(o.spec_path);
    const hp::SystemSpec spec = hp::make_system(doc);
    const std::vector<double> u = parse_point(o.point);
    if (static_cast<int>(u.size()) != spec.N) {
        throw hp::SchemaError("--point", "expected " + std::to_string(spec.N) + " values, got " + std::to_string(u.size()));
    }
    int source = doc.verify ? doc.verify->matrix_source : 0;
    if (!o.source.empty()) {
        const hp::ojson j = o.source;
        source = hp::detail::parse_matrix_source(hp::detail::Node(j, "--source"));
    }
    const hp::CoeffMatrix m = hp::build_matrix(spec, source, u);
    hp::ojson out;
    out["source"] = source == 0 ? std::string("general") : "example" + std::to_string(source);
    out["u"] = u;
    out["b"] = hp::to_json(m);
    out["sigma"] = hp::sigma_fluxes(spec, u);
    out["constraints"] = hp::to_json(hp::check_constraints(spec));
    Sink sink(o.out);
    sink.os() << hp::to_text(out) << '\n';
    return kExitPass;
}

int cmd_expand(const Options& o) {
    const hp::SpecDocument doc = load(o.spec_path);
    const hp::Kernel kernel(doc.family);
    const std::vector<double> a =
        o.richardson ? hp::expansion_coeffs_richardson(kernel, o.w, o.k) : hp::expansion_coeffs(kernel, o.w, o.k);
    hp::ojson out;
    out["w"] = o.w;
    out["k"] = o.k;
    out["method"] = o.richardson ? "richardson" : "exact";
    out["a"] = a;
    Sink sink(o.out);
    sink.os() << hp::to_text(out) << '\n';
    return kExitPass;
}

int cmd_simulate(const Options& o) {
    const hp::SpecDocument doc = load(o.spec_path);
    if (!doc.simulate) throw hp::SchemaError("$.simulate", "missing required key");
    hp::RunConfig cfg = *doc.simulate;
    if (o.seed) cfg.seed = *o.seed;
    const hp::SystemSpec spec = hp::make_system(doc);
    const hp::RunResult r = hp::run(spec, cfg);
    Sink sink(o.out);
    hp::write_log_csv(sink.os(), r);
    if (!o.snapshot.empty()) hp::write_snapshot(r.final_state, o.snapshot);
    if (r.aborted) {
        std::cerr << "run aborted after " << r.steps << " steps: " << r.abort_reason << '\n';
        return kExitFail;
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hydrodynamic-type systems with pseudopotentials: verification, construction and simulation"};
    app.require_subcommand(1);
    Options o;

    auto* verify = app.add_subcommand("verify", "sample the identities listed in the document; NDJSON reports");
    auto* build = app.add_subcommand("build", "coefficient matrix, fluxes and constraint report at a point");
    auto* expand = app.add_subcommand("expand", "diagonal expansion coefficients a_0..a_k at w");
    auto* simulate = app.add_subcommand("simulate", "periodic-grid evolution; CSV log of conserved integrals");

    for (auto* sc : {verify, build, expand, simulate}) {
        sc->add_option("--spec", o.spec_path, "spec document (JSON)")->required();
        sc->add_option("--out", o.out, "output file (default stdout)");
    }
    verify->add_option("--samples", o.samples, "override verify.samples")->check(CLI::PositiveNumber);
    verify->add_option("--seed", o.seed, "override verify.seed");
    verify->add_option("--tolerance", o.tolerance, "override verify.tolerance")->check(CLI::PositiveNumber);
    build->add_option("--point", o.point, "u_1,...,u_N")->required();
    build->add_option("--source", o.source, "general or example1..example4 (default from the document)");
    expand->add_option("--w", o.w, "expansion point")->required();
    expand->add_option("--k", o.k, "highest coefficient")->check(CLI::Range(0, 4));
    expand->add_flag("--richardson", o.richardson, "pivot + Richardson route instead of the exact expansion");
    simulate->add_option("--seed", o.seed, "override simulate.seed");
    simulate->add_option("--snapshot", o.snapshot, "write final fields (float64 LE) plus a .json sidecar");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*verify) return cmd_verify(o);
        if (*build) return cmd_build(o);
        if (*expand) return cmd_expand(o);
        if (*simulate) return cmd_simulate(o);
    } catch (const hp::SchemaError& e) {
        std::cerr << "schema error at " << e.what() << '\n';
        return kExitUsage;
    } catch (const hp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
