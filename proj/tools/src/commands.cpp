#include "changediag_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "changediag/boundary.hpp"
#include "changediag/io.hpp"
#include "changediag/parallel.hpp"
#include "changediag/regions.hpp"
#include "changediag/simulator.hpp"
#include "changediag/solver.hpp"
#include "changediag/version.hpp"
#include "json.hpp"

namespace cdiag::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) { return format_double(v); }

std::string vec_str(std::span<const double> v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += num(v[i]);
    }
    return s + "]";
}

class Manifest {
public:
    Manifest(std::string subcommand, std::vector<std::string> argv)
        : start_(Clock::now()),
          doc_{{"tool", "changediag"},
               {"version", kVersion},
               {"subcommand", std::move(subcommand)},
               {"argv", std::move(argv)},
               {"inputs", json::object()},
               {"parameters", json::object()},
               {"outputs", json::array()},
               {"report", json::object()}} {}

    void input(const std::string& key, const std::string& path) { doc_["inputs"][key] = path; }
    template <typename T>
    void param(const std::string& key, const T& v) { doc_["parameters"][key] = v; }
    void output(const std::string& path) { doc_["outputs"].push_back(path); }
    template <typename T>
    void report(const std::string& key, const T& v) { doc_["report"][key] = v; }

    void write(const std::string& path) {
        doc_["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
        write_text(path, doc_.dump(2) + "\n");
    }

private:
    Clock::time_point start_;
    json doc_;
};

// Runs `body`, translating library exceptions into exit code 1.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ModelError& e) {
        err << "error: invalid model: " << e.what() << "\n";
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const InsufficientBoundary& e) {
        err << "error: insufficient boundary: " << e.what() << "\n";
    } catch (const ResourceError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kFailure;
}

std::unique_ptr<Strategy> parse_strategy(const std::string& text, const ProblemSpec& spec, double stop_tol) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind.rfind("stop-at-", 0) == 0 && colon == std::string::npos)
        return std::make_unique<StopAtStep>(std::stoull(kind.substr(8)));
    if (kind == "stop-at") return std::make_unique<StopAtStep>(std::stoull(arg));
    if (kind == "threshold") return std::make_unique<ThresholdStrategy>(std::stod(arg));
    if (kind == "table") {
        auto stored = load_table(arg);
        if (stored.spec.M() != spec.M() || stored.spec.alphabet_size != spec.alphabet_size)
            throw std::invalid_argument("value table was solved for a different model shape");
        return std::make_unique<TableStrategy>(std::make_shared<const ValueTable>(std::move(stored.table)), stop_tol);
    }
    if (kind == "region") {
        auto region = std::make_shared<const StoppingRegion>(load_region_csv(arg));
        if (region->M() != spec.M()) throw std::invalid_argument("region dimension does not match the model");
        return std::make_unique<RegionLabelStrategy>(std::move(region));
    }
    if (kind == "spline") {
        std::vector<SplineBoundary> bs;
        std::stringstream ss(arg);
        for (std::string path; std::getline(ss, path, ',');) bs.push_back(boundary_from_json(read_text(path)));
        std::sort(bs.begin(), bs.end(), [](const auto& a, const auto& b) { return a.corner() < b.corner(); });
        return std::make_unique<SplineStrategy>(std::move(bs));
    }
    throw std::invalid_argument("unknown strategy '" + text + "'");
}

template <typename T>
void push_opt(std::vector<std::string>& v, const std::string& flag, const std::optional<T>& x) {
    if (!x) return;
    v.push_back(flag);
    if constexpr (std::is_same_v<T, double>) v.push_back(num(*x));
    else v.push_back(*x);
}

}  // namespace

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

std::vector<std::string> SolveArgs::argv() const {
    std::vector<std::string> v{"solve", "--model", model, "--Q", std::to_string(Q), "--tol", num(tol),
                               "--max-iter", std::to_string(max_iter), "--out", out};
    if (threads) v.insert(v.end(), {"--threads", std::to_string(threads)});
    return v;
}

std::vector<std::string> RegionsArgs::argv() const {
    std::vector<std::string> v{"regions", "--table", table, "--format", format, "--out", out,
                               "--convexity-pairs", std::to_string(convexity_pairs)};
    push_opt(v, "--compare", compare);
    push_opt(v, "--stop-tol", stop_tol);
    return v;
}

std::vector<std::string> FitBoundaryArgs::argv() const {
    std::vector<std::string> v{"fit-boundary", "--region", region, "--j", std::to_string(j),
                               "--knots", std::to_string(knots), "--out", out};
    v.push_back("--lambda");
    v.push_back(lambda ? num(*lambda) : "cv");
    return v;
}

std::vector<std::string> SimulateArgs::argv() const {
    std::vector<std::string> v{"simulate", "--model", model, "--strategy", strategy, "--runs", std::to_string(runs),
                               "--seed", std::to_string(seed), "--n-max", std::to_string(n_max),
                               "--stop-tol", num(stop_tol), "--out", out};
    push_opt(v, "--trace", trace);
    if (threads) v.insert(v.end(), {"--threads", std::to_string(threads)});
    return v;
}

std::vector<std::string> DiagnoseArgs::argv() const {
    std::vector<std::string> v{"diagnose"};
    if (!model.empty()) v.insert(v.end(), {"--model", model});
    for (const auto& s : strategy) v.insert(v.end(), {"--strategy", s});
    v.insert(v.end(), {"--input", input, "--stop-tol", num(stop_tol)});
    if (echo) v.push_back("--echo");
    push_opt(v, "--manifest", manifest);
    return v;
}

std::vector<std::string> DeriveSaArgs::argv() const { return {"derive-sa", "--input", input, "--out", out}; }

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Manifest man("solve", a.argv());
        man.input("model", a.model);
        man.param("Q", a.Q);
        man.param("tol", a.tol);
        man.param("max_iter", a.max_iter);
        const ProblemSpec spec = load_problem(a.model);
        auto grid = std::make_shared<const SimplexGrid>(spec.M(), a.Q);
        SolverOptions opts;
        opts.tol = a.tol;
        opts.max_iter = a.max_iter;
        opts.threads = a.threads;
        ValueTable table = value_iterate(spec, grid, opts);
        table.labels = extract_region(spec, table).label;

        save_table(a.out, spec, table);
        write_text(a.out + ".json", table_sidecar_json(spec, table) + "\n");
        const auto pi0 = initial_posterior(spec);
        const double v0 = interpolate(table, pi0.view());
        man.output(a.out);
        man.output(a.out + ".json");
        man.param("threads", resolve_threads(a.threads));
        man.report("N", table.iterations);
        man.report("criterion", std::string(to_string(table.criterion)));
        man.report("converged", table.converged);
        man.report("sup_change", table.sup_change);
        man.report("error_bound", table.error_bound);
        man.report("value_at_prior", v0);
        man.write(manifest_path(a.out));

        out << "nodes=" << grid->size() << " N=" << table.iterations << " criterion=" << to_string(table.criterion)
            << " sup_change=" << num(table.sup_change) << " error_bound=" << num(table.error_bound)
            << " value_at_prior=" << num(v0) << "\n";
        if (!table.converged) {
            err << "warning: value iteration did not converge within " << a.max_iter << " sweeps\n";
            return int{kNotConverged};
        }
        return int{kOk};
    });
}

int cmd_regions(const RegionsArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (a.format != "csv") throw std::invalid_argument("unsupported format '" + a.format + "' (expected csv)");
        Manifest man("regions", a.argv());
        man.input("table", a.table);
        const auto stored = load_table(a.table);
        const double tol = a.stop_tol.value_or(-1.0);
        man.param("stop_tol", a.stop_tol ? json(*a.stop_tol) : json("table sup_change"));
        const StoppingRegion region = extract_region(stored.spec, stored.table, tol);
        export_region(stored.spec, stored.table, region, a.out);
        man.output(a.out);

        RegionCheckOptions opts;
        opts.convexity_pairs = a.convexity_pairs;
        RegionReport rep;
        json nested = nullptr;
        if (a.compare) {
            man.input("compare", *a.compare);
            const auto other = load_table(*a.compare);
            if (other.table.grid->M() != region.M() || other.table.grid->resolution() != region.grid->resolution())
                throw std::invalid_argument("tables to compare must share the grid");
            const StoppingRegion second = extract_region(other.spec, other.table, tol);
            const bool this_finer = region.iterations >= second.iterations;
            rep = check_region_properties(this_finer ? region : second, this_finer ? second : region, opts);
            nested = rep.nested;
        } else {
            rep = check_region_properties(region, region, opts);
        }

        json labels = json::array();
        for (std::size_t j = 0; j < rep.nonempty.size(); ++j) {
            const auto& cv = rep.convexity[j];
            labels.push_back({{"label", j + 1},
                              {"nonempty", bool(rep.nonempty[j])},
                              {"contains_corner", bool(rep.contains_corner[j])},
                              {"components", rep.label_components[j]},
                              {"convexity_pairs", cv.pairs_checked},
                              {"convexity_interior_violations", cv.strict_violations},
                              {"convexity_boundary_violations", cv.boundary_violations}});
        }
        json report{{"nested", nested},
                    {"nesting_mismatches", rep.nesting_mismatches},
                    {"labels", labels},
                    {"stop_components", rep.stop_components},
                    {"continue_components", rep.continue_components},
                    {"passed", rep.passed()}};
        const std::string report_path = a.out + ".report.json";
        write_text(report_path, report.dump(2) + "\n");
        man.output(report_path);
        man.report("properties", report);
        man.write(manifest_path(a.out));

        out << "rows=" << region.grid->size() << " stop_components=" << rep.stop_components
            << " continue_components=" << rep.continue_components;
        if (a.compare) out << " nested=" << (rep.nested ? "pass" : "fail");
        out << "\n";
        for (const auto& l : labels)
            out << "label " << l["label"] << ": nonempty=" << l["nonempty"] << " corner=" << l["contains_corner"]
                << " components=" << l["components"] << " convexity_violations="
                << l["convexity_interior_violations"] << "\n";
        return int{kOk};
    });
}

int cmd_fit_boundary(const FitBoundaryArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Manifest man("fit-boundary", a.argv());
        man.input("region", a.region);
        man.param("j", a.j);
        man.param("K", a.knots);
        man.param("lambda", a.lambda ? json(*a.lambda) : json("cv"));
        const StoppingRegion region = load_region_csv(a.region);
        SplineFitOptions opts;
        opts.knots = a.knots;
        opts.lambda = a.lambda;
        const SplineBoundary b = fit_boundary(region, a.j, opts);
        write_text(a.out, boundary_to_json(b) + "\n");
        man.output(a.out);
        man.report("rms", b.rms());
        man.report("cv_score", b.cv_score());
        man.report("lambda", b.lambda());
        man.report("max_second_difference", b.max_second_difference());
        man.write(manifest_path(a.out));
        out << "corner=" << b.corner() << " rms=" << num(b.rms()) << " cv_score=" << num(b.cv_score())
            << " lambda=" << num(b.lambda()) << "\n";
        return int{kOk};
    });
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Manifest man("simulate", a.argv());
        man.input("model", a.model);
        man.param("strategy", a.strategy);
        man.param("runs", a.runs);
        man.param("seed", a.seed);
        man.param("n_max", a.n_max);
        man.param("stop_tol", a.stop_tol);
        const ProblemSpec spec = load_problem(a.model);
        const auto strategy = parse_strategy(a.strategy, spec, a.stop_tol);
        std::vector<SimulationRecord> trace;
        EstimateOptions opts;
        opts.run.n_max = a.n_max;
        opts.threads = a.threads;
        if (a.trace) opts.trace = &trace;
        const RiskEstimate r = estimate_risk(spec, *strategy, a.runs, a.seed, opts);

        json doc = json::parse(risk_to_json(r));
        doc["strategy"] = strategy->name();
        write_text(a.out, doc.dump(2) + "\n");
        man.output(a.out);
        if (a.trace) {
            std::ostringstream csv;
            csv << "run,theta,mu,tau,d,delay_cost,false_alarm_cost,false_isolation_cost,realized_cost,"
                   "posterior_cost,capped\n";
            for (std::size_t i = 0; i < trace.size(); ++i) {
                const auto& t = trace[i];
                csv << i << ',' << t.theta << ',' << t.mu << ',' << t.tau << ',' << t.d << ',' << num(t.delay_cost)
                    << ',' << num(t.false_alarm_cost) << ',' << num(t.false_isolation_cost) << ','
                    << num(t.realized_cost) << ',' << num(t.posterior_cost) << ',' << (t.capped ? 1 : 0) << '\n';
            }
            write_text(*a.trace, csv.str());
            man.output(*a.trace);
        }
        man.param("threads", resolve_threads(a.threads));
        man.report("mean", r.mean);
        man.report("std_error", r.std_error);
        man.write(manifest_path(a.out));
        out << "strategy=" << strategy->name() << " runs=" << r.runs << " mean=" << num(r.mean)
            << " std_error=" << num(r.std_error) << " cap_rate=" << num(r.cap_rate) << "\n";
        return int{kOk};
    });
}

int cmd_diagnose(const DiagnoseArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() -> int {
        if (a.strategy.empty()) throw std::invalid_argument("diagnose needs --strategy");
        Manifest man("diagnose", a.argv());
        ProblemSpec spec;
        std::unique_ptr<Strategy> strategy;
        const bool is_table = a.strategy.size() == 1 && read_text(a.strategy[0]).rfind("CDVTABLE", 0) == 0;
        if (is_table) {
            auto stored = load_table(a.strategy[0]);
            spec = a.model.empty() ? stored.spec : load_problem(a.model);
            if (spec.M() != stored.spec.M() || spec.alphabet_size != stored.spec.alphabet_size)
                throw std::invalid_argument("value table was solved for a different model shape");
            strategy = std::make_unique<TableStrategy>(std::make_shared<const ValueTable>(std::move(stored.table)),
                                                       a.stop_tol);
        } else {
            if (a.model.empty()) throw std::invalid_argument("spline strategies need --model");
            spec = load_problem(a.model);
            std::string joined;
            for (const auto& s : a.strategy) joined += (joined.empty() ? "" : ",") + s;
            strategy = parse_strategy("spline:" + joined, spec, a.stop_tol);
        }
        if (!a.model.empty()) man.input("model", a.model);
        for (std::size_t i = 0; i < a.strategy.size(); ++i) man.input("strategy" + std::to_string(i), a.strategy[i]);
        man.input("stream", a.input);

        std::ifstream file;
        std::istream* src = &in;
        if (a.input != "-") {
            file.open(a.input);
            if (!file) throw std::runtime_error("cannot open " + a.input);
            src = &file;
        }

        auto finish = [&](int code) {
            man.report("exit_code", code);
            if (a.manifest) man.write(*a.manifest);
            return code;
        };

        Posterior pi = initial_posterior(spec);
        std::vector<double> next(spec.M() + 1);
        std::uint64_t n = 0;
        if (a.echo) out << "n=0 pi=" << vec_str(pi.view()) << "\n";
        for (;;) {
            const Action act = strategy->decide(spec, pi.view(), n);
            if (act.is_stop()) {
                out << "ALARM n=" << n << " d=" << act.decision << "\n";
                man.report("tau", n);
                man.report("d", act.decision);
                return finish(kOk);
            }
            std::string line;
            bool got = false;
            while (std::getline(*src, line)) {
                const auto b = line.find_first_not_of(" \t\r");
                if (b == std::string::npos || line[b] == '#') continue;
                line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
                got = true;
                break;
            }
            if (!got) {
                err << "error: stream ended before an alarm at n=" << n << "\n";
                out << "NO_ALARM n=" << n << " pi=" << vec_str(pi.view()) << "\n";
                return finish(kEndOfStream);
            }
            const std::uint64_t step = n + 1;
            std::size_t x = 0;
            std::size_t used = 0;
            try {
                if (line.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument(line);
                x = std::stoull(line, &used);
            } catch (const std::exception&) {
                err << "error: step " << step << ": malformed symbol '" << line << "'\n";
                return finish(kBadObservation);
            }
            if (x >= spec.alphabet_size) {
                err << "error: step " << step << ": symbol " << x << " outside alphabet of size "
                    << spec.alphabet_size << "\n";
                return finish(kBadObservation);
            }
            if (update_into(spec, pi.view(), x, next) == 0.0) {
                err << "error: step " << step << ": impossible observation " << x << "\n";
                return finish(kBadObservation);
            }
            pi.pi = next;
            n = step;
            if (a.echo) out << "n=" << n << " pi=" << vec_str(pi.view()) << "\n";
        }
    });
}

int cmd_derive_sa(const DeriveSaArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        Manifest man("derive-sa", a.argv());
        man.input("input", a.input);
        const auto in = suspended_animation_from_json(read_text(a.input));
        const ProblemSpec spec = derive_suspended_animation(in.sa, in.delay_cost, in.terminal_costs);
        write_text(a.out, problem_to_json(spec) + "\n");
        man.output(a.out);
        man.report("p", spec.p);
        man.report("nu", spec.nu);
        man.write(manifest_path(a.out));
        out << "p=" << num(spec.p) << " nu=" << vec_str(spec.nu) << "\n";
        return int{kOk};
    });
}

int cmd_replay(const std::string& manifest, std::istream& in, std::ostream& out, std::ostream& err) {
    std::vector<std::string> argv;
    const int rc = guarded(err, [&] {
        const json doc = json::parse(read_text(manifest));
        if (doc.value("version", "") != std::string(kVersion))
            err << "warning: manifest written by version " << doc.value("version", "?") << ", running " << kVersion
                << "\n";
        argv = doc.at("argv").get<std::vector<std::string>>();
        if (argv.empty() || argv[0] == "replay") throw FormatError("manifest has no replayable command line");
        return int{kOk};
    });
    if (rc != kOk) return rc;
    return run(argv, in, out, err);
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian sequential change diagnosis", "changediag"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SolveArgs solve;
    auto* s = app.add_subcommand("solve", "Value iteration on the simplex grid");
    s->add_option("--model", solve.model, "Problem JSON")->required();
    s->add_option("--Q", solve.Q, "Grid resolution")->check(CLI::PositiveNumber);
    s->add_option("--tol", solve.tol, "Stopping tolerance");
    s->add_option("--max-iter", solve.max_iter, "Sweep budget")->check(CLI::PositiveNumber);
    s->add_option("--out", solve.out, "Value table output")->required();
    s->add_option("--threads", solve.threads, "Worker threads (0 = all)");

    RegionsArgs regions;
    std::string compare;
    double region_tol = 0.0;
    auto* r = app.add_subcommand("regions", "Export stopping regions and check their structure");
    r->add_option("--table", regions.table)->required();
    auto* cmp = r->add_option("--compare", compare, "Second table for the nestedness check");
    auto* rtol = r->add_option("--stop-tol", region_tol, "Tie slack (default: table sup-change)");
    r->add_option("--format", regions.format)->check(CLI::IsMember({"csv"}));
    r->add_option("--out", regions.out)->required();
    r->add_option("--convexity-pairs", regions.convexity_pairs);

    FitBoundaryArgs fit;
    std::string lambda_text = "cv";
    auto* f = app.add_subcommand("fit-boundary", "Fit a polar spline boundary to a region (M = 2)");
    f->add_option("--region", fit.region, "Region CSV")->required();
    f->add_option("--j", fit.j, "Stopping label")->required();
    f->add_option("--knots,-K", fit.knots);
    f->add_option("--lambda", lambda_text, "Penalty weight or 'cv'");
    f->add_option("--out", fit.out)->required();

    SimulateArgs sim;
    std::string trace;
    auto* m = app.add_subcommand("simulate", "Monte Carlo risk of a strategy");
    m->add_option("--model", sim.model)->required();
    m->add_option("--strategy", sim.strategy, "stop-at-<k> | threshold:<t> | table:<path> | region:<csv> | spline:<json,...>")
        ->required();
    m->add_option("--runs", sim.runs)->check(CLI::PositiveNumber);
    m->add_option("--seed", sim.seed);
    m->add_option("--n-max", sim.n_max)->check(CLI::PositiveNumber);
    m->add_option("--stop-tol", sim.stop_tol);
    m->add_option("--out", sim.out)->required();
    auto* tr = m->add_option("--trace", trace, "Per-run CSV");
    m->add_option("--threads", sim.threads);

    DiagnoseArgs diag;
    std::string diag_manifest;
    auto* d = app.add_subcommand("diagnose", "Online diagnosis of a symbol stream");
    d->add_option("--model", diag.model);
    d->add_option("--strategy", diag.strategy, "Value table, or one boundary JSON per corner")->required();
    d->add_option("--input", diag.input, "Symbol file, one per line ('-' = stdin)");
    d->add_flag("--echo", diag.echo, "Print the posterior after every step");
    d->add_option("--stop-tol", diag.stop_tol);
    auto* dm = d->add_option("--manifest", diag_manifest);

    DeriveSaArgs sa;
    auto* g = app.add_subcommand("derive-sa", "Suspended-animation model to (p, nu)");
    g->add_option("--input", sa.input)->required();
    g->add_option("--out", sa.out)->required();

    std::string replay;
    auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    rp->add_option("manifest", replay)->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? int{kOk} : int{kFailure};
    }

    if (*s) return cmd_solve(solve, out, err);
    if (*r) {
        if (*cmp) regions.compare = compare;
        if (*rtol) regions.stop_tol = region_tol;
        return cmd_regions(regions, out, err);
    }
    if (*f) {
        if (lambda_text != "cv") {
            try {
                fit.lambda = std::stod(lambda_text);
            } catch (const std::exception&) {
                err << "error: --lambda expects a number or 'cv'\n";
                return kFailure;
            }
        }
        return cmd_fit_boundary(fit, out, err);
    }
    if (*m) {
        if (*tr) sim.trace = trace;
        return cmd_simulate(sim, out, err);
    }
    if (*d) {
        if (*dm) diag.manifest = diag_manifest;
        return cmd_diagnose(diag, in, out, err);
    }
    if (*g) return cmd_derive_sa(sa, out, err);
    if (*rp) return cmd_replay(replay, in, out, err);
    return kFailure;
}

}  // namespace cdiag::cli
