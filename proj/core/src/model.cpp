#include "changediag/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace cdiag {

namespace {

constexpr double kSumTol = 1e-12;

template <typename... Args>
std::string cat(Args&&... args) {
    std::ostringstream os;
    os.precision(17);
    (os << ... << args);
    return os.str();
}

}  // namespace

std::vector<std::string> validation_errors(const ProblemSpec& spec) {
    std::vector<std::string> errs;
    const std::size_t M = spec.num_types;
    if (spec.alphabet_size == 0) errs.push_back("alphabet_size must be positive");
    if (M == 0) errs.push_back("num_types must be positive");
    if (!(spec.p0 >= 0.0 && spec.p0 <= 1.0)) errs.push_back(cat("p0 = ", spec.p0, " outside [0, 1]"));
    if (!(spec.p > 0.0 && spec.p < 1.0)) errs.push_back(cat("p = ", spec.p, " outside (0, 1)"));
    if (!(spec.delay_cost > 0.0) || !std::isfinite(spec.delay_cost))
        errs.push_back(cat("delay cost c = ", spec.delay_cost, " must be positive"));

    if (spec.nu.size() != M) {
        errs.push_back(cat("nu has ", spec.nu.size(), " entries, expected ", M));
    } else if (M > 0) {
        for (std::size_t i = 0; i < M; ++i)
            if (!(spec.nu[i] > 0.0)) errs.push_back(cat("nu[", i + 1, "] = ", spec.nu[i], " must be positive"));
        const double s = std::accumulate(spec.nu.begin(), spec.nu.end(), 0.0);
        if (std::abs(s - 1.0) > kSumTol) errs.push_back(cat("nu not normalized (sum = ", s, ")"));
    }

    if (spec.densities.size() != M + 1) {
        errs.push_back(cat("densities has ", spec.densities.size(), " rows, expected ", M + 1));
    } else {
        for (std::size_t i = 0; i <= M; ++i) {
            const auto& row = spec.densities[i];
            if (row.size() != spec.alphabet_size) {
                errs.push_back(cat("density row ", i, " has ", row.size(), " entries, expected ", spec.alphabet_size));
                continue;
            }
            bool negative = false;
            for (double v : row) negative = negative || !(v >= 0.0) || !std::isfinite(v);
            if (negative) errs.push_back(cat("density row ", i, " has a negative or non-finite entry"));
            const double s = std::accumulate(row.begin(), row.end(), 0.0);
            if (std::abs(s - 1.0) > kSumTol) errs.push_back(cat("density row ", i, " not normalized (sum = ", s, ")"));
        }
    }

    if (spec.terminal_costs.size() != M + 1) {
        errs.push_back(cat("terminal_costs has ", spec.terminal_costs.size(), " rows, expected ", M + 1));
    } else {
        for (std::size_t i = 0; i <= M; ++i) {
            const auto& row = spec.terminal_costs[i];
            if (row.size() != M) {
                errs.push_back(cat("terminal cost row ", i, " has ", row.size(), " entries, expected ", M));
                continue;
            }
            for (std::size_t j = 1; j <= M; ++j) {
                const double v = row[j - 1];
                if (!(v >= 0.0) || !std::isfinite(v))
                    errs.push_back(cat("terminal cost a[", i, "][", j, "] = ", v, " must be nonnegative"));
            }
            if (i >= 1 && row[i - 1] != 0.0)
                errs.push_back(cat("diagonal isolation cost nonzero: a[", i, "][", i, "] = ", row[i - 1]));
        }
    }
    return errs;
}

void validate(const ProblemSpec& spec) {
    const auto errs = validation_errors(spec);
    if (errs.empty()) return;
    std::string msg = "invalid problem spec:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw ModelError(msg);
}

double theta_prior(const ProblemSpec& spec, std::uint64_t t) {
    if (t == 0) return spec.p0;
    return (1.0 - spec.p0) * std::pow(1.0 - spec.p, static_cast<double>(t - 1)) * spec.p;
}

double h_sup_bound(const ProblemSpec& spec) {
    // h <= h_j <= max_i a_ij for every j.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= spec.num_types; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i <= spec.num_types; ++i) col = std::max(col, spec.a(i, j));
        best = std::min(best, col);
    }
    return best;
}

ProblemSpec make_shiryaev(const ShiryaevParams& params) {
    ProblemSpec s;
    s.num_types = params.nu.size();
    s.alphabet_size = params.densities.empty() ? 0 : params.densities.front().size();
    s.p0 = params.p0;
    s.p = params.p;
    s.nu = params.nu;
    s.densities = params.densities;
    s.delay_cost = params.delay_cost;
    s.terminal_costs.assign(s.num_types + 1, std::vector<double>(s.num_types, 0.0));
    std::fill(s.terminal_costs[0].begin(), s.terminal_costs[0].end(), 1.0);
    validate(s);
    return s;
}

ProblemSpec make_hypothesis_testing(const HypothesisTestParams& params) {
    ProblemSpec s;
    s.num_types = params.nu.size();
    s.alphabet_size = params.densities.empty() ? 0 : params.densities.front().size();
    s.p0 = 1.0;
    s.p = params.p;
    s.nu = params.nu;
    s.densities = params.densities;
    s.delay_cost = params.delay_cost;
    s.terminal_costs.assign(s.num_types + 1, std::vector<double>(s.num_types, 0.0));
    if (params.isolation_costs.size() != s.num_types)
        throw ModelError("isolation_costs must be an M x M matrix");
    for (std::size_t i = 0; i < s.num_types; ++i) s.terminal_costs[i + 1] = params.isolation_costs[i];
    validate(s);
    return s;
}

int SuspendedAnimationSpec::max_label() const {
    int m = 0;
    for (const auto& e : phi) m = std::max(m, e.label);
    return m;
}

int SuspendedAnimationSpec::label_of(ComponentSet subset) const {
    for (const auto& e : phi)
        if (e.subset == subset) return e.label;
    throw ModelError(cat("phi has no label for subset mask ", subset));
}

std::vector<PhiEntry> phi_min_index(std::size_t K) {
    std::vector<PhiEntry> out;
    for (ComponentSet A = 1; A < (ComponentSet{1} << K); ++A)
        out.push_back({A, std::countr_zero(A) + 1});
    return out;
}

std::vector<PhiEntry> phi_cardinality(std::size_t K) {
    std::vector<PhiEntry> out;
    for (ComponentSet A = 1; A < (ComponentSet{1} << K); ++A)
        out.push_back({A, std::popcount(A)});
    return out;
}

std::vector<PhiEntry> phi_binary(std::size_t K) {
    std::vector<PhiEntry> out;
    for (ComponentSet A = 1; A < (ComponentSet{1} << K); ++A)
        out.push_back({A, static_cast<int>(A)});
    return out;
}

namespace {

void validate_structure(const SuspendedAnimationSpec& sa) {
    const std::size_t K = sa.K();
    if (K == 0 || K > 20) throw ModelError("component count must be in 1..20");
    for (std::size_t k = 0; k < K; ++k) {
        const double pk = sa.component_failure_probs[k];
        if (!(pk > 0.0 && pk < 1.0)) throw ModelError(cat("component ", k + 1, " failure probability outside (0, 1)"));
    }
    const ComponentSet full = (ComponentSet{1} << K) - 1;
    std::vector<int> seen(static_cast<std::size_t>(full) + 1, 0);
    for (const auto& e : sa.phi) {
        if (e.subset == 0 || e.subset > full) throw ModelError(cat("phi subset mask ", e.subset, " not a nonempty subset of components"));
        if (e.label < 1) throw ModelError(cat("phi label ", e.label, " must be a positive integer"));
        if (seen[e.subset]++) throw ModelError(cat("phi lists subset mask ", e.subset, " twice"));
    }
    for (ComponentSet A = 1; A <= full; ++A)
        if (!seen[A]) throw ModelError(cat("phi has no label for subset mask ", A));
    const int M = sa.max_label();
    std::vector<bool> used(static_cast<std::size_t>(M) + 1, false);
    for (const auto& e : sa.phi) used[static_cast<std::size_t>(e.label)] = true;
    for (int k = 1; k <= M; ++k)
        if (!used[static_cast<std::size_t>(k)]) throw ModelError(cat("label ", k, " is not used by any subset"));
}

}  // namespace

void validate(const SuspendedAnimationSpec& sa) {
    validate_structure(sa);
    const int M = sa.max_label();
    if (sa.label_densities.size() != static_cast<std::size_t>(M) + 1)
        throw ModelError(cat("label_densities has ", sa.label_densities.size(), " rows, expected ", M + 1));
}

SuspendedAnimationPrior suspended_animation_prior(const SuspendedAnimationSpec& sa) {
    validate_structure(sa);
    const std::size_t K = sa.K();
    double survive = 1.0;
    for (double pk : sa.component_failure_probs) survive *= 1.0 - pk;
    SuspendedAnimationPrior out;
    out.p = 1.0 - survive;
    out.nu.assign(static_cast<std::size_t>(sa.max_label()), 0.0);
    for (const auto& e : sa.phi) {
        double w = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double pk = sa.component_failure_probs[k];
            w *= (e.subset >> k) & 1u ? pk : 1.0 - pk;
        }
        out.nu[static_cast<std::size_t>(e.label) - 1] += w;
    }
    for (auto& v : out.nu) {
        v /= out.p;
        if (!(v > 0.0)) throw ModelError("derived nu has a zero entry");
    }
    return out;
}

ProblemSpec derive_suspended_animation(const SuspendedAnimationSpec& sa, double delay_cost,
                                       const std::vector<std::vector<double>>& terminal_costs) {
    validate(sa);
    const auto prior = suspended_animation_prior(sa);
    ProblemSpec s;
    s.num_types = prior.nu.size();
    s.alphabet_size = sa.label_densities.front().size();
    s.p0 = 0.0;
    s.p = prior.p;
    s.nu = prior.nu;
    s.densities = sa.label_densities;
    s.delay_cost = delay_cost;
    s.terminal_costs = terminal_costs;
    validate(s);
    return s;
}

}  // namespace cdiag
