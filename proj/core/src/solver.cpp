#include "changediag/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "changediag/parallel.hpp"

namespace cdiag {

std::string_view to_string(StopCriterion c) {
    switch (c) {
        case StopCriterion::None: return "none";
        case StopCriterion::SupChange: return "sup_change";
        case StopCriterion::TruncationBound: return "truncation_bound";
        case StopCriterion::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

double truncation_bound(const ProblemSpec& spec, std::size_t N) {
    if (N == 0) return std::numeric_limits<double>::infinity();
    const double hn = h_sup_bound(spec);
    return (hn * hn / spec.delay_cost + hn / spec.p) / static_cast<double>(N);
}

BellmanOperator::BellmanOperator(const ProblemSpec& spec, std::shared_ptr<const SimplexGrid> grid, unsigned threads)
    : grid_(std::move(grid)), threads_(resolve_threads(threads)) {
    if (!grid_) throw std::invalid_argument("null grid");
    if (grid_->M() != spec.M()) throw std::invalid_argument("grid dimension does not match the model");
    validate(spec);
    const std::size_t n = grid_->size();
    const std::size_t M = spec.M();
    const std::size_t E = spec.alphabet_size;
    h_.resize(n);
    argmin_.resize(n);
    costs_ = spec.terminal_costs;
    running_.resize(n);
    offsets_.assign(n + 1, 0);

    // Stencils are built per chunk and spliced in node order afterwards.
    struct Chunk {
        std::size_t begin = 0;
        std::vector<std::size_t> counts;
        std::vector<std::uint32_t> cols;
        std::vector<double> weights;
    };
    std::vector<Chunk> chunks;
    std::mutex mu;
    parallel_for(n, threads_, [&](std::size_t b, std::size_t e) {
        Chunk ch;
        ch.begin = b;
        ch.counts.reserve(e - b);
        std::vector<double> pi(M + 1), next(M + 1);
        for (std::size_t node = b; node < e; ++node) {
            grid_->point_into(node, pi);
            int j = 1;
            h_[node] = h_min(spec, pi, &j);
            argmin_[node] = j;
            running_[node] = running_cost(spec, pi);
            std::size_t cnt = 0;
            for (std::size_t x = 0; x < E; ++x) {
                const double D = update_into(spec, pi, x, next);
                if (D == 0.0) continue;
                const Stencil st = grid_->locate(next);
                for (std::size_t v = 0; v < st.size; ++v) {
                    ch.cols.push_back(static_cast<std::uint32_t>(st.node[v]));
                    ch.weights.push_back(D * st.weight[v]);
                    ++cnt;
                }
            }
            ch.counts.push_back(cnt);
        }
        std::lock_guard lock(mu);
        chunks.push_back(std::move(ch));
    });
    std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) { return a.begin < b.begin; });
    for (auto& ch : chunks) {
        for (std::size_t i = 0; i < ch.counts.size(); ++i)
            offsets_[ch.begin + i + 1] = offsets_[ch.begin + i] + ch.counts[i];
        cols_.insert(cols_.end(), ch.cols.begin(), ch.cols.end());
        weights_.insert(weights_.end(), ch.weights.begin(), ch.weights.end());
    }
}

double BellmanOperator::terminal_cost(std::size_t node, int j) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < costs_.size(); ++i)
        acc += grid_->coordinate(node, i) * costs_[i][static_cast<std::size_t>(j - 1)];
    return acc;
}

double BellmanOperator::continuation(std::size_t node, std::span<const double> f) const {
    double acc = 0.0;
    for (std::size_t e = offsets_[node]; e < offsets_[node + 1]; ++e) acc += weights_[e] * f[cols_[e]];
    return running_[node] + acc;
}

BellmanOperator::SweepStats BellmanOperator::apply(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = grid_->size();
    std::vector<SweepStats> partial;
    std::mutex mu;
    parallel_for(n, threads_, [&](std::size_t b, std::size_t e) {
        SweepStats s;
        s.max_increase = -std::numeric_limits<double>::infinity();
        for (std::size_t node = b; node < e; ++node) {
            const double cont = continuation(node, in);
            const double v = std::min(h_[node], cont);
            out[node] = v;
            const double diff = v - in[node];
            s.sup_change = std::max(s.sup_change, std::abs(diff));
            s.max_increase = std::max(s.max_increase, diff);
        }
        std::lock_guard lock(mu);
        partial.push_back(s);
    });
    SweepStats total;
    total.max_increase = -std::numeric_limits<double>::infinity();
    for (const auto& s : partial) {
        total.sup_change = std::max(total.sup_change, s.sup_change);
        total.max_increase = std::max(total.max_increase, s.max_increase);
    }
    return total;
}

ValueTable value_iterate(const ProblemSpec& spec, std::shared_ptr<const SimplexGrid> grid, const SolverOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const BellmanOperator op(spec, std::move(grid), options.threads);

    ValueTable table;
    table.grid = op.grid_ptr();
    table.tol = options.tol;
    table.values = op.stopping_costs();
    table.max_increase = -std::numeric_limits<double>::infinity();
    std::vector<double> next(table.values.size());

    for (std::size_t N = 1;; ++N) {
        const auto stats = op.apply(table.values, next);
        table.values.swap(next);
        table.iterations = N;
        table.sup_change = stats.sup_change;
        table.max_increase = std::max(table.max_increase, stats.max_increase);
        table.error_bound = truncation_bound(spec, N);
        if (options.on_sweep) options.on_sweep(N, table.values);
        if (stats.sup_change < options.tol) {
            table.criterion = StopCriterion::SupChange;
            table.converged = true;
            break;
        }
        if (table.error_bound < options.tol) {
            table.criterion = StopCriterion::TruncationBound;
            table.converged = true;
            break;
        }
        if (N >= options.max_iter) {
            table.criterion = StopCriterion::MaxIterations;
            table.converged = false;
            break;
        }
    }
    return table;
}

double interpolate(const ValueTable& table, std::span<const double> pi) {
    const Stencil st = table.grid->locate(pi);
    double v = 0.0;
    for (std::size_t i = 0; i < st.size; ++i) v += st.weight[i] * table.values[st.node[i]];
    return v;
}

double apply_T(const ProblemSpec& spec, const ValueTable& table, std::span<const double> pi) {
    std::vector<double> next(spec.M() + 1);
    double acc = 0.0;
    for (std::size_t x = 0; x < spec.alphabet_size; ++x) {
        const double D = update_into(spec, pi, x, next);
        if (D == 0.0) continue;
        acc += D * interpolate(table, next);
    }
    return acc;
}

BackupResult apply_M(const ProblemSpec& spec, const ValueTable& table, std::span<const double> pi) {
    int j = 1;
    const double h = h_min(spec, pi, &j);
    BackupResult out;
    out.continuation = running_cost(spec, pi) + apply_T(spec, table, pi);
    if (h <= out.continuation) {
        out.value = h;
        out.action = Action::stop(j);
    } else {
        out.value = out.continuation;
        out.action = Action::carry_on();
    }
    return out;
}

}  // namespace cdiag
