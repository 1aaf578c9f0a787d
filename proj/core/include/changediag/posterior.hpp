#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "changediag/model.hpp"

namespace cdiag {

// Raised when an observed symbol has zero likelihood under every live
// component of the posterior. The model does not explain the data.
class ImpossibleObservation : public std::runtime_error {
public:
    ImpossibleObservation(std::size_t symbol, const std::string& what)
        : std::runtime_error(what), symbol_(symbol) {}
    [[nodiscard]] std::size_t symbol() const noexcept { return symbol_; }

private:
    std::size_t symbol_;
};

// A point (pi_0, pi_1, ..., pi_M) of the probability simplex: pi_0 is the
// posterior probability that no change has happened yet, pi_i the joint
// posterior probability that it has and that its type is i.
struct Posterior {
    std::vector<double> pi;

    [[nodiscard]] std::size_t M() const noexcept { return pi.size() - 1; }
    [[nodiscard]] double operator[](std::size_t i) const { return pi[i]; }
    [[nodiscard]] std::span<const double> view() const noexcept { return pi; }
};

// e_j: unit vector with mass on component j.
Posterior corner(std::size_t M, std::size_t j);

Posterior initial_posterior(const ProblemSpec& spec);

// Writes (D_0, ..., D_M, D) into `out` (size M + 2) and returns D.
double d_vector_into(const ProblemSpec& spec, std::span<const double> pi, std::size_t x,
                     std::span<double> out);

std::vector<double> d_vector(const ProblemSpec& spec, const Posterior& pi, std::size_t x);

// One step of the posterior recursion, renormalized by the computed sum.
// Returns D(pi, x), the predictive probability of x; 0 means `out` is untouched.
double update_into(const ProblemSpec& spec, std::span<const double> pi, std::size_t x,
                   std::span<double> out);

// Throws ImpossibleObservation when D(pi, x) = 0, std::out_of_range for x
// outside the alphabet.
Posterior update(const ProblemSpec& spec, const Posterior& pi, std::size_t x);

// P{X_{n+1} = x | Pi_n = pi} for every symbol x.
std::vector<double> predictive(const ProblemSpec& spec, const Posterior& pi);

struct TerminalCosts {
    std::vector<double> h_values;  // h_1..h_M, index j-1
    double h = 0.0;
    int argmin = 1;  // smallest index attaining h
};

TerminalCosts h_costs(const ProblemSpec& spec, std::span<const double> pi);
inline TerminalCosts h_costs(const ProblemSpec& spec, const Posterior& pi) { return h_costs(spec, pi.view()); }

// h(pi) and its smallest-index minimizer without allocating.
double h_min(const ProblemSpec& spec, std::span<const double> pi, int* argmin = nullptr);

// Expected terminal cost of a fixed decision j: h_j(pi).
double h_decision(const ProblemSpec& spec, std::span<const double> pi, int j);

// One-period running cost c (1 - pi_0).
inline double running_cost(const ProblemSpec& spec, std::span<const double> pi) {
    return spec.delay_cost * (1.0 - pi[0]);
}

}  // namespace cdiag
