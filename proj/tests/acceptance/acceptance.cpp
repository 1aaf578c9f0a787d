// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "changediag/boundary.hpp"
#include "changediag/io.hpp"
#include "changediag/model.hpp"
#include "changediag/posterior.hpp"
#include "changediag/regions.hpp"
#include "changediag/simplex_grid.hpp"
#include "changediag/simulator.hpp"
#include "changediag/solver.hpp"
#include "changediag_cli/commands.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace cdiag;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const char* title, bool ok, const std::string& detail) {
    std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", id, title, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> random_pmf(std::mt19937_64& rng, std::size_t n) {
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = g(rng));
    for (auto& x : v) x /= s;
    return v;
}

ProblemSpec random_spec(std::mt19937_64& rng, std::size_t M, std::size_t alphabet) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ProblemSpec s;
    s.alphabet_size = alphabet;
    s.num_types = M;
    s.p0 = u(rng);
    s.p = 0.001 + 0.998 * u(rng);
    s.nu = random_pmf(rng, M);
    for (std::size_t i = 0; i <= M; ++i) s.densities.push_back(random_pmf(rng, alphabet));
    s.delay_cost = 0.1 + u(rng);
    s.terminal_costs.assign(M + 1, std::vector<double>(M, 0.0));
    for (std::size_t i = 0; i <= M; ++i)
        for (std::size_t j = 1; j <= M; ++j) s.terminal_costs[i][j - 1] = i == j ? 0.0 : 1.0 + 10.0 * u(rng);
    return s;
}

// ---------------------------------------------------------------------------

void posterior_identities() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> pick_m(1, 3), pick_a(1, 8);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto s = random_spec(rng, pick_m(rng), pick_a(rng));
        const auto pi = random_pmf(rng, s.M() + 1);
        std::vector<double> sums(s.M() + 1, 0.0), d(s.M() + 2);
        for (std::size_t x = 0; x < s.alphabet_size; ++x) {
            d_vector_into(s, pi, x, d);
            for (std::size_t i = 0; i <= s.M(); ++i) sums[i] += d[i];
        }
        worst = std::max(worst, std::abs(sums[0] - (1.0 - s.p) * pi[0]));
        for (std::size_t i = 1; i <= s.M(); ++i)
            worst = std::max(worst, std::abs(sums[i] - (pi[i] + pi[0] * s.p * s.nu[i - 1])));
    }
    const double secs = seconds_since(t0);
    report(1, "posterior identities", worst <= 1e-12 && secs < 1.0,
           fmt("1000 random cases, max error %.3g, %.3f s", worst, secs));
}

void push_forward() {
    const auto s = cdtest::connected_a();
    double worst = 0.0;
    for (std::size_t n = 0; n <= 8; ++n) {
        double acc = 0.0;
        std::function<void(const std::vector<double>&, double, std::size_t)> walk =
            [&](const std::vector<double>& pi, double weight, std::size_t depth) {
                if (depth == n) {
                    acc += weight * pi[0];
                    return;
                }
                std::vector<double> next(pi.size());
                for (std::size_t x = 0; x < s.alphabet_size; ++x) {
                    const double dx = update_into(s, pi, x, next);
                    if (dx > 0.0) walk(next, weight * dx, depth + 1);
                }
            };
        walk(initial_posterior(s).pi, 1.0, 0);
        worst = std::max(worst, std::abs(acc - 0.98 * std::pow(0.95, double(n))));
    }
    report(2, "push-forward of E[Pi_n^(0)]", worst <= 1e-10,
           fmt("all 4^n paths for n <= 8, max |E - 0.98*0.95^n| = %.3g", worst));
}

void brute_force_horizon() {
    const auto t0 = Clock::now();
    const std::size_t Q = 400;
    auto grid = std::make_shared<const SimplexGrid>(1, Q);
    std::vector<ProblemSpec> specs{cdtest::shiryaev(0.1, 0.2, 2), cdtest::shiryaev(0.05, 0.05, 2)};
    {
        cdiag::ShiryaevParams sp;
        sp.p0 = 0.3;
        sp.p = 0.2;
        sp.nu = {1.0};
        sp.densities = {{0.6, 0.4}, {0.3, 0.7}};
        sp.delay_cost = 0.1;
        specs.push_back(make_shiryaev(sp));
    }
    bool ok = true;
    double worst_ratio = 0.0;
    for (const auto& s : specs) {
        const double eps = 5.0 * s.delay_cost / double(Q);
        for (std::size_t H = 1; H <= 6; ++H) {
            SolverOptions opt;
            opt.tol = std::numeric_limits<double>::min();
            opt.max_iter = H;
            const auto table = value_iterate(s, grid, opt);
            const double v = interpolate(table, initial_posterior(s).view());
            const double want = oracle::finite_horizon_value(s, H);
            const double err = std::abs(v - want);
            worst_ratio = std::max(worst_ratio, err / (2.0 * eps));
            ok = ok && table.iterations == H && err <= 2.0 * eps;
        }
    }
    const double secs = seconds_since(t0);
    report(3, "brute-force horizon values", ok && secs < 10.0,
           fmt("3 specs, H = 1..6, worst |V - oracle| / (2 eps_grid) = %.3g, %.2f s", worst_ratio, secs));
}

// Shared with criterion 9: the Shiryaev table after 5000 sweeps.
std::shared_ptr<const ValueTable> shiryaev_table;

void truncation_bound_check() {
    const auto t0 = Clock::now();
    const auto s = cdtest::shiryaev(0.05, 1.0);
    const double tol = 1e-6;
    auto grid = std::make_shared<const SimplexGrid>(1, 2000);
    std::vector<std::size_t> horizons{10, 100, 1000};
    // Sweep by hand: the grid iterates can reach an exact fixed point, after
    // which value_iterate stops, but V^N is still defined for every N.
    const BellmanOperator op(s, grid);
    std::vector<std::vector<double>> snaps;
    std::vector<double> v = op.stopping_costs(), next(v.size());
    for (std::size_t n = 1; n <= 5000; ++n) {
        op.apply(v, next);
        v.swap(next);
        if (std::find(horizons.begin(), horizons.end(), n) != horizons.end()) snaps.push_back(v);
    }
    auto table = std::make_shared<ValueTable>();
    table->grid = grid;
    table->values = v;
    table->iterations = 5000;
    table->tol = tol;
    bool ok = snaps.size() == horizons.size() && h_sup_bound(s) == 1.0;
    std::string detail;
    for (std::size_t k = 0; ok && k < horizons.size(); ++k) {
        const double bound = 21.0 / double(horizons[k]) + 2.0 * tol;
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t v = 0; v < grid->size(); ++v) {
            const double diff = snaps[k][v] - table->values[v];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        ok = ok && lo >= 0.0 && hi <= bound;
        detail += fmt("N=%zu diff in [%.3g, %.3g] bound %.4g; ", horizons[k], lo, hi, bound);
    }
    shiryaev_table = table;
    const double secs = seconds_since(t0);
    report(4, "truncation bound", ok && secs < 60.0, detail + fmt("%.2f s", secs));
}

// ---------------------------------------------------------------------------

struct Solved {
    std::string name;
    ProblemSpec spec;
    std::shared_ptr<const ValueTable> table;
    std::vector<std::pair<std::size_t, std::vector<double>>> snapshots;
    bool monotone = true;
    bool bounded = true;
    double worst_increase = -INFINITY;
};

Solved solve_tracked(const std::string& name, const ProblemSpec& s, std::size_t Q, double tol,
                     std::vector<std::size_t> keep = {}) {
    Solved out{name, s, nullptr, {}};
    auto grid = std::make_shared<const SimplexGrid>(s.M(), Q);
    const BellmanOperator op(s, grid);
    const auto& h = op.stopping_costs();
    std::vector<double> prev = h;
    SolverOptions opt;
    opt.tol = tol;
    opt.on_sweep = [&](std::size_t n, std::span<const double> v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.worst_increase = std::max(out.worst_increase, v[i] - prev[i]);
            if (v[i] > prev[i]) out.monotone = false;
            if (v[i] > h[i] || v[i] < 0.0) out.bounded = false;
        }
        prev.assign(v.begin(), v.end());
        if (std::find(keep.begin(), keep.end(), n) != keep.end()) out.snapshots.emplace_back(n, prev);
    };
    out.table = std::make_shared<ValueTable>(value_iterate(s, grid, opt));
    return out;
}

std::vector<Solved> region_solves;

void monotone_and_bounds() {
    const auto t0 = Clock::now();
    std::vector<Solved> all;
    for (const auto& inst : cdtest::region_instances())
        region_solves.push_back(solve_tracked(inst.name, inst.spec, 200, 1e-6, {1, 2, 5, 10, 20}));
    all.push_back(solve_tracked("three types", cdtest::three_type(), 40, 1e-6));
    all.push_back(solve_tracked("shiryaev", cdtest::shiryaev(0.05, 1.0), 2000, 1e-6));
    all.push_back(solve_tracked("shiryaev binary", cdtest::shiryaev(0.1, 0.2, 2), 400, 1e-6));
    {
        HypothesisTestParams hp;
        hp.nu = {0.5, 0.5};
        hp.densities = cdtest::connected_a().densities;
        hp.delay_cost = 0.1;
        hp.isolation_costs = {{0.0, 3.0}, {3.0, 0.0}};
        all.push_back(solve_tracked("hypothesis test", make_hypothesis_testing(hp), 200, 1e-6));
    }
    bool ok = true;
    double worst = -INFINITY;
    std::string bad;
    auto scan = [&](const Solved& s) {
        worst = std::max(worst, s.worst_increase);
        if (!s.monotone || !s.bounded) {
            ok = false;
            bad += " " + s.name;
        }
    };
    for (const auto& s : region_solves) scan(s);
    for (const auto& s : all) scan(s);
    report(5, "monotone and bounded value iterates", ok,
           fmt("%zu instances, largest sweep increase %.3g, %.1f s", region_solves.size() + all.size(), worst,
               seconds_since(t0)) +
               (bad.empty() ? "" : "; violations:" + bad));
}

void region_structure() {
    const auto t0 = Clock::now();
    const auto instances = cdtest::region_instances();
    bool ok = true;
    std::string detail;
    for (std::size_t k = 0; k < instances.size(); ++k) {
        const auto& inst = instances[k];
        const auto& solved = region_solves[k];
        const auto& table = *solved.table;
        const double stop_tol = table.sup_change;
        const auto finer = extract_region(inst.spec, table, stop_tol);
        bool inst_ok = table.converged;
        auto rep = check_region_properties(finer, finer);
        for (std::size_t j = 0; j < inst.spec.M(); ++j) {
            inst_ok = inst_ok && rep.nonempty[j] && rep.contains_corner[j];
        }
        std::size_t strict = 0;
        for (const auto& c : rep.convexity) strict += c.strict_violations;
        inst_ok = inst_ok && strict == 0;
        std::size_t mismatches = 0;
        for (const auto& [n, values] : solved.snapshots) {
            if (n >= table.iterations) continue;
            ValueTable earlier = table;
            earlier.values = values;
            earlier.iterations = n;
            const auto coarser = extract_region(inst.spec, earlier, stop_tol);
            const auto nest = check_region_properties(finer, coarser);
            mismatches += nest.nesting_mismatches;
            inst_ok = inst_ok && nest.nested;
        }
        bool shape = true;
        if (inst.stop_connected) {
            shape = rep.stop_components == 1;
            for (auto c : rep.label_components) shape = shape && c == 1;
        }
        if (inst.stop_disconnected) shape = shape && rep.stop_components >= 2;
        if (inst.continue_disconnected) shape = shape && rep.continue_components >= 2;
        inst_ok = inst_ok && shape;
        ok = ok && inst_ok;
        detail += fmt("[%s: N=%zu stop=%zu cont=%zu strict=%zu nest_mismatch=%zu%s] ", inst.name.c_str(),
                      table.iterations, rep.stop_components, rep.continue_components, strict, mismatches,
                      inst_ok ? "" : " BAD");
    }
    const double secs = seconds_since(t0);
    report(6, "region structure", ok && secs < 600.0, detail + fmt("%.1f s", secs));
}

// ---------------------------------------------------------------------------

RiskEstimate optimal_estimate;

void optimality_cross_check() {
    const auto t0 = Clock::now();
    const auto& solved = region_solves[0];
    const auto& s = solved.spec;
    const double eps_grid = 5.0 * s.delay_cost / 200.0;
    const double tol = solved.table->tol;
    const double v_hat = interpolate(*solved.table, initial_posterior(s).view());
    const std::size_t runs = 100'000;
    const TableStrategy opt_strategy(solved.table, 0.0);
    optimal_estimate = estimate_risk(s, opt_strategy, runs, 7);
    const auto& e = optimal_estimate;
    bool ok = std::abs(e.mean - v_hat) <= 3.0 * e.std_error + eps_grid + tol && e.cap_rate < 1e-3;
    std::string detail = fmt("V(0.98,0.01,0.01)=%.5f MC=%.5f+-%.5f", v_hat, e.mean, e.std_error);
    std::vector<std::unique_ptr<Strategy>> baselines;
    for (std::size_t k : {0, 1, 5, 20}) baselines.push_back(std::make_unique<StopAtStep>(k));
    for (double t : {0.5, 0.8, 0.95}) baselines.push_back(std::make_unique<ThresholdStrategy>(t));
    for (const auto& b : baselines) {
        const auto be = estimate_risk(s, *b, runs, 7);
        const double sigma = std::hypot(e.std_error, be.std_error);
        const bool dominated = e.mean <= be.mean + 3.0 * sigma;
        ok = ok && dominated;
        detail += fmt("; %s %.4f", b->name().c_str(), be.mean) + (dominated ? "" : " (beats optimum)");
    }
    const double secs = seconds_since(t0);
    report(7, "strategy optimality", ok && secs < 300.0, detail + fmt("; %.1f s", secs));
}

void risk_forms() {
    const auto& e = optimal_estimate;
    const auto& s = region_solves[0].spec;
    const auto alt = estimate_risk(s, ThresholdStrategy(0.8), 100'000, 11);
    const bool ok = e.runs == 100'000 && std::abs(e.paired_diff_mean) <= 3.0 * e.paired_diff_stderr &&
                    std::abs(alt.paired_diff_mean) <= 3.0 * alt.paired_diff_stderr;
    report(8, "risk-form equivalence", ok,
           fmt("optimal: diff %.3g +- %.3g; threshold 0.8: diff %.3g +- %.3g", e.paired_diff_mean,
               e.paired_diff_stderr, alt.paired_diff_mean, alt.paired_diff_stderr));
}

void special_cases() {
    // Shiryaev: cost = 1{tau < theta} + c (tau - theta)^+ run by run.
    const auto s = cdtest::shiryaev(0.05, 1.0);
    std::vector<SimulationRecord> trace;
    EstimateOptions eo;
    eo.trace = &trace;
    const auto e = estimate_risk(s, TableStrategy(shiryaev_table, 0.0), 10'000, 3, eo);
    double worst = 0.0, fa = 0.0, delay = 0.0;
    for (const auto& r : trace) {
        const double tau = double(r.tau), theta = double(r.theta);
        const double want = (tau < theta ? 1.0 : 0.0) + s.delay_cost * std::max(0.0, tau - theta);
        worst = std::max(worst, std::abs(r.realized_cost - want));
        worst = std::max(worst, r.false_isolation_cost);
        fa += tau < theta ? 1.0 : 0.0;
        delay += std::max(0.0, tau - theta);
    }
    const double n = double(trace.size());
    const double decomposed = fa / n + s.delay_cost * delay / n;
    const bool shiryaev_ok = trace.size() == 10'000 && worst <= 1e-12 && std::abs(decomposed - e.mean) <= 1e-9;

    // p0 = 1: Pi^(0) stays at 0 and cost = c tau + a_{mu d}.
    HypothesisTestParams hp;
    hp.nu = {0.5, 0.5};
    hp.densities = cdtest::connected_a().densities;
    hp.delay_cost = 0.1;
    hp.isolation_costs = {{0.0, 3.0}, {3.0, 0.0}};
    const auto ht = make_hypothesis_testing(hp);
    auto table = std::make_shared<ValueTable>(value_iterate(ht, std::make_shared<const SimplexGrid>(2, 200)));
    const TableStrategy strategy(table, 0.0);
    RunOptions ro;
    ro.record_path = true;
    bool ht_ok = table->converged;
    double worst_ht = 0.0, max_pi0 = 0.0;
    std::size_t stopped = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        Environment env(ht, 5, i);
        const auto r = run_strategy(ht, strategy, env, ro);
        ht_ok = ht_ok && r.theta == 0 && !r.capped;
        for (const auto& p : r.posterior_path) max_pi0 = std::max(max_pi0, p[0]);
        const double want = ht.delay_cost * double(r.tau) + ht.a(std::size_t(r.mu), std::size_t(r.d));
        worst_ht = std::max(worst_ht, std::abs(r.realized_cost - want));
        stopped += r.capped ? 0 : 1;
    }
    ht_ok = ht_ok && max_pi0 == 0.0 && worst_ht <= 1e-12;
    report(9, "special-case reductions", shiryaev_ok && ht_ok,
           fmt("shiryaev: 10^4 runs, max per-run error %.3g, decomposition %.6f vs mean %.6f; "
               "p0=1: 2000 runs all alarmed=%s, max Pi^(0)=%.3g, max cost error %.3g",
               worst, decomposed, e.mean, stopped == 2000 ? "yes" : "no", max_pi0, worst_ht));
}

void suspended_animation() {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.01, 0.3);
    const std::size_t H = 1000;
    const double fp_slack = 1e-12;
    bool ok = true;
    double worst_law = 0.0, worst_marg = 0.0, worst_fact = 0.0, worst_tail = 0.0;
    std::size_t cases = 0;
    for (std::size_t K : {2, 3}) {
        for (int variant = 0; variant < 3; ++variant) {
            for (int rep = 0; rep < 4; ++rep) {
                SuspendedAnimationSpec sa;
                for (std::size_t k = 0; k < K; ++k) sa.component_failure_probs.push_back(u(rng));
                sa.phi = variant == 0 ? phi_min_index(K) : variant == 1 ? phi_cardinality(K) : phi_binary(K);
                const auto prior = suspended_animation_prior(sa);
                const int labels = sa.max_label();
                const auto law = oracle::suspended_animation_law(
                    sa.component_failure_probs, [&](std::uint32_t A) { return sa.label_of(A); }, labels, H);
                const double trunc = std::pow(1.0 - prior.p, double(H));
                const double tol = trunc + fp_slack;
                ++cases;
                if (prior.nu.size() != std::size_t(labels)) {
                    ok = false;
                    continue;
                }
                worst_tail = std::max(worst_tail, std::abs((1.0 - law.mass) - trunc));
                ok = ok && std::abs((1.0 - law.mass) - trunc) <= fp_slack;
                for (int k = 1; k <= labels; ++k) {
                    const double d = std::abs(law.label_marginal[k] - prior.nu[k - 1]);
                    worst_marg = std::max(worst_marg, d);
                    ok = ok && d <= tol;
                }
                for (std::size_t t = 1; t <= H; ++t) {
                    double theta_t = 0.0;
                    for (int k = 1; k <= labels; ++k) theta_t += law.law[t][k];
                    const double geo = std::pow(1.0 - prior.p, double(t - 1)) * prior.p;
                    for (int k = 1; k <= labels; ++k) {
                        const double d = std::abs(law.law[t][k] - geo * prior.nu[k - 1]);
                        const double f = std::abs(law.law[t][k] - theta_t * law.label_marginal[k] / law.mass);
                        worst_law = std::max(worst_law, d);
                        worst_fact = std::max(worst_fact, f);
                        ok = ok && d <= tol && f <= tol;
                    }
                }
            }
        }
    }
    report(10, "suspended animation prior", ok,
           fmt("%zu cases, max |joint - geometric*nu| %.3g, max |marginal - nu| %.3g, max factorization gap %.3g, "
               "tail error %.3g",
               cases, worst_law, worst_marg, worst_fact, worst_tail));
}

// ---------------------------------------------------------------------------

struct CompressionResult {
    double heldout_agreement = 0.0;
    std::size_t heldout = 0;
    double alarm_agreement = 0.0;
    double max_second_difference = 0.0;
    bool cli_ok = true;
};

CompressionResult compression(const ProblemSpec& s, const std::shared_ptr<const ValueTable>& table,
                              const std::filesystem::path& dir) {
    CompressionResult out;
    const auto region = extract_region(s, *table);
    const auto& grid = *region.grid;
    std::vector<std::size_t> adjacent;
    for (std::size_t v = 0; v < grid.size(); ++v) {
        for (std::size_t nb : grid.neighbors(v)) {
            if (region.label[nb] != region.label[v]) {
                adjacent.push_back(v);
                break;
            }
        }
    }
    std::vector<std::uint8_t> mask(grid.size(), 0);
    for (std::size_t k = 0; k < adjacent.size(); k += 7) mask[adjacent[k]] = 1;
    std::vector<SplineBoundary> heldout_fit;
    for (std::size_t j = 1; j <= 2; ++j) {
        const auto samples = boundary_samples(region, j, BoundarySampling::CutEdges, mask);
        heldout_fit.push_back(fit_spline(samples, j));
    }
    std::size_t agree = 0;
    std::vector<double> pi(3);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        if (!mask[v]) continue;
        grid.point_into(v, pi);
        ++out.heldout;
        agree += fast_member(s, heldout_fit, pi).decision == region.label[v] ? 1 : 0;
    }
    out.heldout_agreement = double(agree) / double(out.heldout);

    // Streams through the command-line diagnose path: grid table vs fitted splines.
    const auto table_path = dir / "table.bin";
    save_table(table_path, s, *table);
    write_text(dir / "model.json", problem_to_json(s));
    std::vector<std::string> spline_paths;
    for (std::size_t j = 1; j <= 2; ++j) {
        const auto b = fit_boundary(region, j);
        out.max_second_difference = std::max(out.max_second_difference, j == 1 ? b.max_second_difference() : -INFINITY);
        spline_paths.push_back((dir / ("g" + std::to_string(j) + ".json")).string());
        write_text(spline_paths.back(), boundary_to_json(b));
    }
    auto alarm_time = [&](std::vector<std::string> strategy, const std::string& stream, bool with_model) {
        cli::DiagnoseArgs a;
        a.strategy = std::move(strategy);
        if (with_model) a.model = (dir / "model.json").string();
        std::istringstream in(stream);
        std::ostringstream o, e;
        const int code = cli::cmd_diagnose(a, in, o, e);
        const auto text = o.str();
        const auto at = text.find("ALARM n=");
        if (code != 0 || at == std::string::npos) return std::string("none:") + std::to_string(code);
        return text.substr(at, text.find('\n', at) - at);
    };
    std::size_t same = 0;
    const std::size_t streams = 1000;
    for (std::uint64_t i = 0; i < streams; ++i) {
        Environment env(s, 23, i);
        std::string stream;
        for (std::uint64_t n = 1; n <= 400; ++n) stream += std::to_string(env.symbol(n)) + "\n";
        const auto g = alarm_time({table_path.string()}, stream, false);
        const auto b = alarm_time(spline_paths, stream, true);
        if (g.rfind("none", 0) == 0 || b.rfind("none", 0) == 0) out.cli_ok = false;
        // Compare the alarm time only.
        auto n_of = [](const std::string& line) { return line.substr(0, line.find(' ', 6)); };
        same += n_of(g) == n_of(b) ? 1 : 0;
    }
    out.alarm_agreement = double(same) / double(streams);
    return out;
}

void boundary_compression() {
    const auto dir = std::filesystem::temp_directory_path() / "changediag_acceptance";
    std::filesystem::create_directories(dir);
    bool heldout = true, alarms = true, concave = true;
    std::string detail;
    for (std::size_t k : {0, 4}) {
        const auto& solved = region_solves[k];
        const auto r = compression(solved.spec, solved.table, dir);
        heldout = heldout && r.heldout_agreement >= 0.99;
        alarms = alarms && r.cli_ok && r.alarm_agreement >= 0.99;
        concave = concave && r.max_second_difference <= 1e-6;
        detail += fmt("[%s: held-out %zu nodes agree %.4f, alarm times agree %.3f, max second difference of g1 %.3g] ",
                      solved.name.c_str(), r.heldout, r.heldout_agreement, r.alarm_agreement,
                      r.max_second_difference);
    }
    std::filesystem::remove_all(dir);
    detail += fmt("held-out %s, alarm times %s, concavity %s", heldout ? "ok" : "below 0.99",
                  alarms ? "ok" : "below 0.99", concave ? "ok" : "violated (eps 1e-6)");
    report(11, "boundary compression", heldout && alarms && concave, detail);
}

void polar_round_trip() {
    std::mt19937_64 rng(29);
    double worst = 0.0;
    for (std::size_t M : {2, 3}) {
        for (int rep = 0; rep < 1000; ++rep) {
            const auto pi = random_pmf(rng, M + 1);
            for (std::size_t i = 0; i <= M; ++i) {
                const auto back = from_polar(to_polar(pi, i), M);
                for (std::size_t c = 0; c <= M; ++c) worst = std::max(worst, std::abs(back[c] - pi[c]));
            }
        }
    }
    double corner_err = 0.0;
    for (std::size_t M : {2, 3}) {
        const double edge = M == 2 ? 2.0 / std::sqrt(3.0) : std::sqrt(1.5);
        for (std::size_t a = 0; a <= M; ++a) {
            for (std::size_t b = 0; b <= M; ++b) {
                if (a == b) continue;
                const auto la = embed(corner(M, a).view()), lb = embed(corner(M, b).view());
                double d2 = 0.0;
                for (std::size_t c = 0; c < la.size(); ++c) d2 += (la[c] - lb[c]) * (la[c] - lb[c]);
                corner_err = std::max(corner_err, std::abs(std::sqrt(d2) - edge));
                corner_err = std::max(corner_err, std::abs(polar_radius(corner(M, b).view(), a) - edge));
            }
        }
    }
    const auto l1 = embed(corner(2, 1).view()), l2 = embed(corner(2, 2).view()), l0 = embed(corner(2, 0).view());
    corner_err = std::max({corner_err, std::abs(l1[0] - 2.0 / std::sqrt(3.0)), std::abs(l1[1]),
                           std::abs(l2[0] - 1.0 / std::sqrt(3.0)), std::abs(l2[1] - 1.0), std::abs(l0[0]),
                           std::abs(l0[1])});
    report(12, "polar round trip", worst <= 1e-9 && corner_err <= 1e-12,
           fmt("max reconstruction error %.3g, max corner distance error %.3g", worst, corner_err));
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    posterior_identities();
    push_forward();
    brute_force_horizon();
    truncation_bound_check();
    monotone_and_bounds();
    region_structure();
    optimality_cross_check();
    risk_forms();
    special_cases();
    suspended_animation();
    boundary_compression();
    polar_round_trip();
    std::printf("%d of 12 criteria failed, %.1f s total\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
