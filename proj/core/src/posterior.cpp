#include "changediag/posterior.hpp"

#include <limits>

namespace cdiag {

Posterior corner(std::size_t M, std::size_t j) {
    Posterior out{std::vector<double>(M + 1, 0.0)};
    out.pi.at(j) = 1.0;
    return out;
}

Posterior initial_posterior(const ProblemSpec& spec) {
    Posterior out{std::vector<double>(spec.M() + 1)};
    out.pi[0] = 1.0 - spec.p0;
    for (std::size_t i = 1; i <= spec.M(); ++i) out.pi[i] = spec.p0 * spec.nu[i - 1];
    return out;
}

double d_vector_into(const ProblemSpec& spec, std::span<const double> pi, std::size_t x,
                     std::span<double> out) {
    const std::size_t M = spec.M();
    const double pi0 = pi[0];
    out[0] = (1.0 - spec.p) * pi0 * spec.densities[0][x];
    double total = out[0];
    for (std::size_t i = 1; i <= M; ++i) {
        out[i] = (pi[i] + pi0 * spec.p * spec.nu[i - 1]) * spec.densities[i][x];
        total += out[i];
    }
    out[M + 1] = total;
    return total;
}

std::vector<double> d_vector(const ProblemSpec& spec, const Posterior& pi, std::size_t x) {
    if (x >= spec.alphabet_size) throw std::out_of_range("symbol outside alphabet");
    std::vector<double> out(spec.M() + 2);
    d_vector_into(spec, pi.view(), x, out);
    return out;
}

double update_into(const ProblemSpec& spec, std::span<const double> pi, std::size_t x,
                   std::span<double> out) {
    const std::size_t M = spec.M();
    const double pi0 = pi[0];
    double d[16];
    std::vector<double> heap;
    double* buf = d;
    if (M + 1 > 16) {
        heap.resize(M + 1);
        buf = heap.data();
    }
    buf[0] = (1.0 - spec.p) * pi0 * spec.densities[0][x];
    double total = buf[0];
    for (std::size_t i = 1; i <= M; ++i) {
        buf[i] = (pi[i] + pi0 * spec.p * spec.nu[i - 1]) * spec.densities[i][x];
        total += buf[i];
    }
    if (!(total > 0.0)) return 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i <= M; ++i) {
        out[i] = buf[i] / total;
        norm += out[i];
    }
    // Second pass absorbs rounding so long streams stay on the simplex.
    for (std::size_t i = 0; i <= M; ++i) out[i] /= norm;
    return total;
}

Posterior update(const ProblemSpec& spec, const Posterior& pi, std::size_t x) {
    if (x >= spec.alphabet_size) throw std::out_of_range("symbol outside alphabet");
    Posterior out{std::vector<double>(spec.M() + 1)};
    if (update_into(spec, pi.view(), x, out.pi) == 0.0)
        throw ImpossibleObservation(x, "symbol " + std::to_string(x) +
                                           " has zero likelihood under the current posterior");
    return out;
}

std::vector<double> predictive(const ProblemSpec& spec, const Posterior& pi) {
    std::vector<double> out(spec.alphabet_size);
    std::vector<double> d(spec.M() + 2);
    for (std::size_t x = 0; x < spec.alphabet_size; ++x) out[x] = d_vector_into(spec, pi.view(), x, d);
    return out;
}

double h_min(const ProblemSpec& spec, std::span<const double> pi, int* argmin) {
    const std::size_t M = spec.M();
    double best = std::numeric_limits<double>::infinity();
    int best_j = 1;
    for (std::size_t j = 1; j <= M; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i <= M; ++i) v += pi[i] * spec.terminal_costs[i][j - 1];
        if (v < best) {
            best = v;
            best_j = static_cast<int>(j);
        }
    }
    if (argmin) *argmin = best_j;
    return best;
}

double h_decision(const ProblemSpec& spec, std::span<const double> pi, int j) {
    double v = 0.0;
    for (std::size_t i = 0; i <= spec.M(); ++i) v += pi[i] * spec.terminal_costs[i][static_cast<std::size_t>(j) - 1];
    return v;
}

TerminalCosts h_costs(const ProblemSpec& spec, std::span<const double> pi) {
    TerminalCosts out;
    out.h_values.resize(spec.M());
    for (std::size_t j = 1; j <= spec.M(); ++j) out.h_values[j - 1] = h_decision(spec, pi, static_cast<int>(j));
    out.h = h_min(spec, pi, &out.argmin);
    return out;
}

}  // namespace cdiag
