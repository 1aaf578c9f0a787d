#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "changediag/boundary.hpp"
#include "changediag/model.hpp"
#include "changediag/posterior.hpp"
#include "changediag/regions.hpp"
#include "changediag/solver.hpp"

namespace cdiag {

// SplitMix64 finalizer; used to derive per-run substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of run `run_index` under master seed `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t run_index);

// One draw of (theta, mu, X_1, X_2, ...) from the prior model. Observations
// are generated on demand so a run can go on for as long as the strategy
// keeps sampling. Generator: std::mt19937_64 seeded with substream_seed();
// uniforms are the top 53 bits of each output.
class Environment {
public:
    Environment(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t run_index = 0);

    [[nodiscard]] std::uint64_t theta() const noexcept { return theta_; }
    [[nodiscard]] int mu() const noexcept { return mu_; }

    // X_n for n >= 1.
    std::size_t symbol(std::uint64_t n);

    [[nodiscard]] const std::vector<std::size_t>& drawn() const noexcept { return xs_; }

private:
    double uniform();
    std::size_t categorical(std::span<const double> pmf);

    const ProblemSpec* spec_;
    std::mt19937_64 gen_;
    std::uint64_t theta_ = 0;
    int mu_ = 1;
    std::vector<std::size_t> xs_;
};

// Membership oracle plus terminal decision rule. Implementations must be
// safe to call concurrently.
class Strategy {
public:
    virtual ~Strategy() = default;
    [[nodiscard]] virtual Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

// Stops at time k with the best decision for the current posterior.
class StopAtStep final : public Strategy {
public:
    explicit StopAtStep(std::size_t k) : k_(k) {}
    Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const override;
    std::string name() const override;

private:
    std::size_t k_;
};

// Stops once the posterior probability of a change, 1 - pi_0, reaches t.
class ThresholdStrategy final : public Strategy {
public:
    explicit ThresholdStrategy(double threshold) : t_(threshold) {}
    Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const override;
    std::string name() const override;

private:
    double t_;
};

// Optimal rule read off a value table: stop iff h(pi) <= c (1 - pi_0) + (T V)(pi) + stop_tol.
class TableStrategy final : public Strategy {
public:
    explicit TableStrategy(std::shared_ptr<const ValueTable> table, double stop_tol = 0.0)
        : table_(std::move(table)), stop_tol_(stop_tol) {}
    Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const override;
    std::string name() const override { return "table"; }

private:
    std::shared_ptr<const ValueTable> table_;
    double stop_tol_;
};

// Label of the nearest grid node.
class RegionLabelStrategy final : public Strategy {
public:
    explicit RegionLabelStrategy(std::shared_ptr<const StoppingRegion> region) : region_(std::move(region)) {}
    Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const override;
    std::string name() const override { return "region"; }

private:
    std::shared_ptr<const StoppingRegion> region_;
};

// Polar spline boundaries (M = 2).
class SplineStrategy final : public Strategy {
public:
    explicit SplineStrategy(std::vector<SplineBoundary> boundaries) : boundaries_(std::move(boundaries)) {}
    Action decide(const ProblemSpec& spec, std::span<const double> pi, std::size_t n) const override;
    std::string name() const override { return "spline"; }

private:
    std::vector<SplineBoundary> boundaries_;
};

struct SimulationRecord {
    std::uint64_t theta = 0;
    int mu = 1;
    std::uint64_t tau = 0;
    int d = 1;
    double delay_cost = 0.0;
    double false_alarm_cost = 0.0;
    double false_isolation_cost = 0.0;
    double realized_cost = 0.0;
    // Sum_{n < tau} c (1 - Pi_n^(0)) + h_d(Pi_tau).
    double posterior_cost = 0.0;
    bool capped = false;
    std::vector<std::size_t> observations;
    std::vector<Posterior> posterior_path;
};

struct RunOptions {
    std::uint64_t n_max = 100'000;
    bool record_observations = false;
    bool record_path = false;
};

SimulationRecord run_strategy(const ProblemSpec& spec, const Strategy& strategy, Environment& env,
                              const RunOptions& options = {});

struct RiskEstimate {
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double delay = 0.0;
    double false_alarm = 0.0;
    double false_isolation = 0.0;
    double cap_rate = 0.0;
    double mean_tau = 0.0;
    double posterior_mean = 0.0;
    double paired_diff_mean = 0.0;   // mean of realized - posterior-form cost
    double paired_diff_stderr = 0.0;
};

struct EstimateOptions {
    RunOptions run;
    unsigned threads = 0;
    // Optional per-run records (observations and paths are not kept).
    std::vector<SimulationRecord>* trace = nullptr;
};

RiskEstimate estimate_risk(const ProblemSpec& spec, const Strategy& strategy, std::size_t runs, std::uint64_t seed,
                           const EstimateOptions& options = {});

}  // namespace cdiag
