#include "changediag/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "changediag/parallel.hpp"

namespace cdiag {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t run_index) {
    return splitmix64(splitmix64(seed) ^ (run_index * 0xD1B54A32D192ED03ull + 1));
}

Environment::Environment(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t run_index)
    : spec_(&spec), gen_(substream_seed(seed, run_index)) {
    if (uniform() < spec.p0) {
        theta_ = 0;
    } else {
        // Number of failures before the first success, by inversion.
        const double u = 1.0 - uniform();  // (0, 1]
        const double g = std::floor(std::log(u) / std::log1p(-spec.p));
        theta_ = 1 + static_cast<std::uint64_t>(std::min(g, 9.0e18));
    }
    mu_ = static_cast<int>(categorical(spec.nu)) + 1;
}

double Environment::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

std::size_t Environment::categorical(std::span<const double> pmf) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return i;
    }
    // Rounding left u above the total mass: take the last symbol with mass.
    for (std::size_t i = pmf.size(); i-- > 0;)
        if (pmf[i] > 0.0) return i;
    return pmf.size() - 1;
}

std::size_t Environment::symbol(std::uint64_t n) {
    if (n == 0) throw std::out_of_range("observations are indexed from 1");
    while (xs_.size() < n) {
        const std::uint64_t t = xs_.size() + 1;
        const std::size_t row = t < theta_ ? 0 : static_cast<std::size_t>(mu_);
        xs_.push_back(categorical(spec_->densities[row]));
    }
    return xs_[n - 1];
}

Action StopAtStep::decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const {
    if (n < k_) return Action::carry_on();
    int j = 1;
    h_min(spec, pi, &j);
    return Action::stop(j);
}

std::string StopAtStep::name() const { return "stop-at-" + std::to_string(k_); }

Action ThresholdStrategy::decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t) const {
    if (1.0 - pi[0] < t_) return Action::carry_on();
    int j = 1;
    h_min(spec, pi, &j);
    return Action::stop(j);
}

std::string ThresholdStrategy::name() const {
    std::ostringstream os;
    os << "threshold:" << t_;
    return os.str();
}

Action TableStrategy::decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t) const {
    int j = 1;
    const double h = h_min(spec, pi, &j);
    const double cont = running_cost(spec, pi) + apply_T(spec, *table_, pi);
    return h <= cont + stop_tol_ ? Action::stop(j) : Action::carry_on();
}

Action RegionLabelStrategy::decide(const ProblemSpec&, std::span<const double> pi, std::size_t) const {
    return Action{static_cast<int>(region_->label[region_->grid->nearest_node(pi)])};
}

Action SplineStrategy::decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t) const {
    return fast_member(spec, boundaries_, pi);
}

SimulationRecord run_strategy(const ProblemSpec& spec, const Strategy& strategy, Environment& env,
                              const RunOptions& options) {
    SimulationRecord rec;
    rec.theta = env.theta();
    rec.mu = env.mu();
    Posterior pi = initial_posterior(spec);
    std::vector<double> next(spec.M() + 1);
    double running = 0.0;
    std::uint64_t n = 0;
    for (;;) {
        if (options.record_path) rec.posterior_path.push_back(pi);
        const Action act = strategy.decide(spec, pi.view(), n);
        if (act.is_stop()) {
            rec.d = act.decision;
            break;
        }
        if (n >= options.n_max) {
            rec.capped = true;
            h_min(spec, pi.view(), &rec.d);
            break;
        }
        running += running_cost(spec, pi.view());
        const std::size_t x = env.symbol(n + 1);
        if (options.record_observations) rec.observations.push_back(x);
        if (update_into(spec, pi.view(), x, next) == 0.0)
            throw ImpossibleObservation(x, "simulated symbol has zero likelihood");
        pi.pi.swap(next);
        ++n;
    }
    rec.tau = n;
    const auto d = static_cast<std::size_t>(rec.d);
    if (rec.tau >= rec.theta) {
        rec.delay_cost = spec.delay_cost * static_cast<double>(rec.tau - rec.theta);
        rec.false_isolation_cost = spec.a(static_cast<std::size_t>(rec.mu), d);
    } else {
        rec.false_alarm_cost = spec.a(0, d);
    }
    rec.realized_cost = rec.delay_cost + rec.false_alarm_cost + rec.false_isolation_cost;
    rec.posterior_cost = running + h_decision(spec, pi.view(), rec.d);
    return rec;
}

RiskEstimate estimate_risk(const ProblemSpec& spec, const Strategy& strategy, std::size_t runs, std::uint64_t seed,
                           const EstimateOptions& options) {
    if (runs == 0) throw std::invalid_argument("runs must be at least 1");
    std::vector<SimulationRecord> recs(runs);
    RunOptions ro = options.run;
    ro.record_observations = false;
    ro.record_path = false;
    parallel_for(runs, resolve_threads(options.threads), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Environment env(spec, seed, i);
            recs[i] = run_strategy(spec, strategy, env, ro);
        }
    });

    // Reduction in run-index order keeps the result independent of the worker count.
    RiskEstimate out;
    out.runs = runs;
    out.seed = seed;
    const double n = static_cast<double>(runs);
    std::size_t capped = 0;
    for (const auto& r : recs) {
        out.mean += r.realized_cost;
        out.delay += r.delay_cost;
        out.false_alarm += r.false_alarm_cost;
        out.false_isolation += r.false_isolation_cost;
        out.mean_tau += static_cast<double>(r.tau);
        out.posterior_mean += r.posterior_cost;
        out.paired_diff_mean += r.realized_cost - r.posterior_cost;
        capped += r.capped ? 1 : 0;
    }
    out.mean /= n;
    out.delay /= n;
    out.false_alarm /= n;
    out.false_isolation /= n;
    out.mean_tau /= n;
    out.posterior_mean /= n;
    out.paired_diff_mean /= n;
    out.cap_rate = static_cast<double>(capped) / n;
    if (runs > 1) {
        double ss = 0.0, ssd = 0.0;
        for (const auto& r : recs) {
            const double a = r.realized_cost - out.mean;
            const double b = (r.realized_cost - r.posterior_cost) - out.paired_diff_mean;
            ss += a * a;
            ssd += b * b;
        }
        out.std_error = std::sqrt(ss / (n - 1.0) / n);
        out.paired_diff_stderr = std::sqrt(ssd / (n - 1.0) / n);
    }
    if (options.trace) *options.trace = std::move(recs);
    return out;
}

}  // namespace cdiag
