#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdiag {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Full Bayesian change-diagnosis model on a finite observation alphabet.
//
// Row i of `densities` is the pmf f_i (row 0 is the pre-change law).
// Row i of `terminal_costs` holds a_{i1}..a_{iM}; row 0 is the false-alarm row.
// Decisions are 1-based (1..M) everywhere in the public API.
struct ProblemSpec {
    std::size_t alphabet_size = 0;
    std::size_t num_types = 0;
    double p0 = 0.0;
    double p = 0.0;
    std::vector<double> nu;
    std::vector<std::vector<double>> densities;
    double delay_cost = 0.0;
    std::vector<std::vector<double>> terminal_costs;

    [[nodiscard]] std::size_t M() const noexcept { return num_types; }
    [[nodiscard]] double f(std::size_t i, std::size_t x) const { return densities[i][x]; }
    [[nodiscard]] double a(std::size_t i, std::size_t j) const { return terminal_costs[i][j - 1]; }
};

// Returns the list of violated invariants; empty when the spec is valid.
std::vector<std::string> validation_errors(const ProblemSpec& spec);

// Throws ModelError carrying every violation, one per line.
void validate(const ProblemSpec& spec);

// P{theta = t} under the zero-modified geometric prior.
double theta_prior(const ProblemSpec& spec, std::uint64_t t);

// Upper bound on sup_pi h(pi): min_j max_i a_ij.
double h_sup_bound(const ProblemSpec& spec);

struct ShiryaevParams {
    double p0 = 0.0;
    double p = 0.0;
    std::vector<double> nu;
    std::vector<std::vector<double>> densities;
    double delay_cost = 1.0;
};

// a_{0j} = 1, a_{ij} = 0 for i, j >= 1.
ProblemSpec make_shiryaev(const ShiryaevParams& params);

struct HypothesisTestParams {
    std::vector<double> nu;
    std::vector<std::vector<double>> densities;  // f0 row first; unused when p0 = 1
    double delay_cost = 1.0;
    std::vector<std::vector<double>> isolation_costs;  // M x M, a_{ij} for i, j >= 1
    double p = 0.5;                                     // irrelevant once p0 = 1
};

// p0 = 1: the change has already happened and only mu is unknown.
ProblemSpec make_hypothesis_testing(const HypothesisTestParams& params);

// Subsets of {1..K} are bitmasks: bit (k-1) set iff component k is in the subset.
using ComponentSet = std::uint32_t;

struct PhiEntry {
    ComponentSet subset = 0;
    int label = 0;
};

struct SuspendedAnimationSpec {
    std::vector<double> component_failure_probs;
    std::vector<PhiEntry> phi;
    // Row 0 is f0, row k is the post-failure law for label k.
    std::vector<std::vector<double>> label_densities;

    [[nodiscard]] std::size_t K() const noexcept { return component_failure_probs.size(); }
    [[nodiscard]] int max_label() const;
    [[nodiscard]] int label_of(ComponentSet subset) const;
};

std::vector<PhiEntry> phi_min_index(std::size_t K);
std::vector<PhiEntry> phi_cardinality(std::size_t K);
std::vector<PhiEntry> phi_binary(std::size_t K);

void validate(const SuspendedAnimationSpec& sa);

struct SuspendedAnimationPrior {
    double p = 0.0;
    std::vector<double> nu;
};

// First-failure law: p = 1 - prod(1 - p_i), nu_k = P{mu = k} / p.
SuspendedAnimationPrior suspended_animation_prior(const SuspendedAnimationSpec& sa);

ProblemSpec derive_suspended_animation(const SuspendedAnimationSpec& sa, double delay_cost,
                                       const std::vector<std::vector<double>>& terminal_costs);

}  // namespace cdiag
