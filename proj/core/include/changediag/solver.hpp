#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "changediag/model.hpp"
#include "changediag/posterior.hpp"
#include "changediag/simplex_grid.hpp"

namespace cdiag {

// Continue (decision 0) or Stop(j) with terminal decision j in 1..M.
struct Action {
    int decision = 0;

    static constexpr Action stop(int j) { return Action{j}; }
    static constexpr Action carry_on() { return Action{0}; }
    [[nodiscard]] constexpr bool is_stop() const noexcept { return decision > 0; }
    friend constexpr bool operator==(Action, Action) = default;
};

enum class StopCriterion : std::uint8_t {
    None = 0,
    SupChange = 1,        // sup-norm change between sweeps fell below tol
    TruncationBound = 2,  // (|h|^2 / c + |h| / p) / N fell below tol
    MaxIterations = 3,    // gave up; table flagged as not converged
};

std::string_view to_string(StopCriterion c);

// Per-node values of V^N = M^N h on a simplex lattice.
struct ValueTable {
    std::shared_ptr<const SimplexGrid> grid;
    std::vector<double> values;
    std::size_t iterations = 0;
    double tol = 0.0;
    double sup_change = 0.0;
    double error_bound = 0.0;
    StopCriterion criterion = StopCriterion::None;
    bool converged = false;
    // Largest V^{n+1} - V^n seen over all sweeps (<= 0 when monotone).
    double max_increase = 0.0;
    // Optional per-node labels: 0 = Continue, j = Stop(j).
    std::vector<std::uint8_t> labels;
};

// The horizon-truncation error bound (|h|^2 / c + |h| / p) / N, using
// h_sup_bound() for |h|.
double truncation_bound(const ProblemSpec& spec, std::size_t N);

// One dynamic-programming backup f -> M f restricted to grid nodes. The
// successor posteriors and their interpolation stencils do not depend on f,
// so they are computed once and the backup becomes a sparse product.
class BellmanOperator {
public:
    BellmanOperator(const ProblemSpec& spec, std::shared_ptr<const SimplexGrid> grid, unsigned threads = 0);

    struct SweepStats {
        double sup_change = 0.0;
        double max_increase = 0.0;
    };

    [[nodiscard]] const SimplexGrid& grid() const noexcept { return *grid_; }
    [[nodiscard]] std::shared_ptr<const SimplexGrid> grid_ptr() const noexcept { return grid_; }

    // h at every node: the starting point V^0.
    [[nodiscard]] const std::vector<double>& stopping_costs() const noexcept { return h_; }
    [[nodiscard]] int best_decision(std::size_t node) const noexcept { return argmin_[node]; }
    // h_j at a node for one decision j in 1..M.
    [[nodiscard]] double terminal_cost(std::size_t node, int j) const;

    // c (1 - pi_0) + (T f)(node).
    [[nodiscard]] double continuation(std::size_t node, std::span<const double> f) const;

    // out = M in, node-wise.
    SweepStats apply(std::span<const double> in, std::span<double> out) const;

private:
    std::shared_ptr<const SimplexGrid> grid_;
    unsigned threads_;
    std::vector<double> h_;
    std::vector<int> argmin_;
    std::vector<std::vector<double>> costs_;
    std::vector<double> running_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> weights_;
};

struct SolverOptions {
    double tol = 1e-6;
    std::size_t max_iter = 100'000;
    unsigned threads = 0;
    // Called after every sweep with (N, V^N).
    std::function<void(std::size_t, std::span<const double>)> on_sweep;
};

// Value iteration from V^0 = h until the sup-change or the truncation bound
// drops below tol, or max_iter sweeps. Never throws on non-convergence: the
// returned table has converged = false and criterion = MaxIterations.
ValueTable value_iterate(const ProblemSpec& spec, std::shared_ptr<const SimplexGrid> grid,
                         const SolverOptions& options = {});

// Piecewise-linear interpolation of the table over the triangulation.
double interpolate(const ValueTable& table, std::span<const double> pi);

// (T f)(pi) = sum_x D(pi, x) f(update(pi, x)) with f the interpolated table.
double apply_T(const ProblemSpec& spec, const ValueTable& table, std::span<const double> pi);

struct BackupResult {
    double value = 0.0;
    double continuation = 0.0;
    Action action;
};

// (M f)(pi) = min{h(pi), c (1 - pi_0) + (T f)(pi)}; ties stop.
BackupResult apply_M(const ProblemSpec& spec, const ValueTable& table, std::span<const double> pi);

}  // namespace cdiag
