#include "changediag/regions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "changediag/posterior.hpp"

namespace cdiag {

std::vector<std::size_t> StoppingRegion::nodes_with_label(int j) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] == j) out.push_back(i);
    return out;
}

StoppingRegion extract_region(const BellmanOperator& op, std::span<const double> values,
                              std::size_t iterations, double stop_tol) {
    StoppingRegion region;
    region.grid = op.grid_ptr();
    region.iterations = iterations;
    region.stop_tol = stop_tol;
    const std::size_t n = op.grid().size();
    const std::size_t M = op.grid().M();
    region.label.assign(n, 0);
    region.margin.resize(n);
    region.terminal.resize(n * M);
    const auto& h = op.stopping_costs();
    for (std::size_t node = 0; node < n; ++node) {
        region.margin[node] = op.continuation(node, values) + stop_tol - h[node];
        if (region.margin[node] >= 0.0) region.label[node] = static_cast<std::uint8_t>(op.best_decision(node));
        for (std::size_t j = 1; j <= M; ++j) region.terminal[node * M + j - 1] = op.terminal_cost(node, static_cast<int>(j));
    }
    return region;
}

StoppingRegion extract_region(const ProblemSpec& spec, const ValueTable& table, double stop_tol) {
    if (stop_tol < 0.0) stop_tol = table.sup_change;
    const BellmanOperator op(spec, table.grid);
    return extract_region(op, table.values, table.iterations, stop_tol);
}

bool is_boundary_node(const StoppingRegion& region, std::size_t node, int label) {
    for (std::size_t nb : region.grid->neighbors(node))
        if (region.label[nb] != label) return true;
    return false;
}

std::size_t count_components(const SimplexGrid& grid, const std::vector<bool>& member) {
    std::vector<bool> seen(grid.size(), false);
    std::vector<std::size_t> stack;
    std::size_t comps = 0;
    for (std::size_t s = 0; s < grid.size(); ++s) {
        if (!member[s] || seen[s]) continue;
        ++comps;
        seen[s] = true;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t nb : grid.neighbors(v)) {
                if (member[nb] && !seen[nb]) {
                    seen[nb] = true;
                    stack.push_back(nb);
                }
            }
        }
    }
    return comps;
}

namespace {

ConvexityReport check_convexity(const StoppingRegion& region, int j, const RegionCheckOptions& options) {
    ConvexityReport rep;
    rep.label = j;
    const auto nodes = region.nodes_with_label(j);
    if (nodes.size() < 2) return rep;
    const SimplexGrid& grid = *region.grid;
    const std::size_t M = grid.M();
    std::vector<bool> interior(grid.size(), false);
    for (std::size_t v : nodes) interior[v] = !is_boundary_node(region, v, j);

    std::vector<std::uint32_t> pt(M + 1);
    auto check_pair = [&](std::size_t a, std::size_t b) {
        const auto ka = grid.lattice(a);
        const auto kb = grid.lattice(b);
        std::vector<std::int64_t> d(M + 1);
        std::int64_t g = 0;
        for (std::size_t i = 0; i <= M; ++i) {
            d[i] = static_cast<std::int64_t>(kb[i]) - static_cast<std::int64_t>(ka[i]);
            g = std::gcd(g, std::abs(d[i]));
        }
        ++rep.pairs_checked;
        for (std::int64_t s = 1; s < g; ++s) {
            for (std::size_t i = 0; i <= M; ++i)
                pt[i] = static_cast<std::uint32_t>(static_cast<std::int64_t>(ka[i]) + s * d[i] / g);
            if (region.label[grid.rank(pt)] != j) {
                if (interior[a] && interior[b])
                    ++rep.strict_violations;
                else
                    ++rep.boundary_violations;
                return;
            }
        }
    };

    const std::size_t all_pairs = nodes.size() * (nodes.size() - 1) / 2;
    if (all_pairs <= options.convexity_pairs) {
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a + 1; b < nodes.size(); ++b) check_pair(nodes[a], nodes[b]);
    } else {
        std::mt19937_64 gen(options.seed + static_cast<std::uint64_t>(j));
        for (std::size_t t = 0; t < options.convexity_pairs; ++t) {
            const std::size_t a = nodes[gen() % nodes.size()];
            std::size_t b = nodes[gen() % nodes.size()];
            if (a == b) b = nodes[(std::find(nodes.begin(), nodes.end(), a) - nodes.begin() + 1) % nodes.size()];
            check_pair(a, b);
        }
    }
    return rep;
}

}  // namespace

bool RegionReport::passed() const {
    if (!nested) return false;
    for (bool b : nonempty)
        if (!b) return false;
    for (bool b : contains_corner)
        if (!b) return false;
    for (const auto& c : convexity)
        if (c.strict_violations > 0) return false;
    return true;
}

RegionReport check_region_properties(const StoppingRegion& finer, const StoppingRegion& coarser,
                                     const RegionCheckOptions& options) {
    if (finer.grid->M() != coarser.grid->M() || finer.grid->resolution() != coarser.grid->resolution())
        throw std::invalid_argument("regions live on different grids");
    const SimplexGrid& grid = *finer.grid;
    const std::size_t M = grid.M();
    RegionReport rep;
    for (std::size_t v = 0; v < grid.size(); ++v) {
        if (finer.label[v] != 0 && coarser.label[v] != finer.label[v]) {
            rep.nested = false;
            ++rep.nesting_mismatches;
        }
    }
    std::vector<bool> stop(grid.size()), cont(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) {
        stop[v] = finer.label[v] != 0;
        cont[v] = !stop[v];
    }
    rep.stop_components = count_components(grid, stop);
    rep.continue_components = count_components(grid, cont);
    for (std::size_t j = 1; j <= M; ++j) {
        const int lj = static_cast<int>(j);
        std::vector<bool> member(grid.size());
        bool any = false;
        for (std::size_t v = 0; v < grid.size(); ++v) {
            member[v] = finer.label[v] == lj;
            any = any || member[v];
        }
        rep.nonempty.push_back(any);
        rep.contains_corner.push_back(finer.label[grid.corner_node(j)] == lj);
        rep.label_components.push_back(count_components(grid, member));
        rep.convexity.push_back(check_convexity(finer, lj, options));
    }
    return rep;
}

std::vector<double> embed(std::span<const double> pi) {
    if (pi.size() == 3) {
        const double s3 = std::sqrt(3.0);
        return {2.0 / s3 * pi[1] + 1.0 / s3 * pi[2], pi[2]};
    }
    if (pi.size() == 4) {
        const double a = std::sqrt(1.5);
        const double b = std::sqrt(0.5);
        return {a * pi[1] + 0.5 * a * pi[2] + 0.5 * a * pi[3], 1.5 * b * pi[2] + 0.5 * b * pi[3], pi[3]};
    }
    throw std::invalid_argument("embedding is defined for M = 2 and M = 3 only");
}

std::string region_csv(const ProblemSpec& spec, const ValueTable& table, const StoppingRegion& region) {
    const SimplexGrid& grid = *region.grid;
    const std::size_t M = grid.M();
    const bool embedded = M == 2 || M == 3;
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i <= M; ++i) os << 'k' << i << ',';
    for (std::size_t i = 0; i <= M; ++i) os << "pi" << i << ',';
    if (embedded) os << (M == 2 ? "x,y," : "x,y,z,");
    os << "label,value,h";
    for (std::size_t j = 1; j <= M; ++j) os << ",h" << j;
    const bool with_margin = region.margin.size() == grid.size();
    if (with_margin) os << ",margin";
    os << '\n';
    std::vector<double> pi(M + 1);
    for (std::size_t v = 0; v < grid.size(); ++v) {
        for (auto k : grid.lattice(v)) os << k << ',';
        grid.point_into(v, pi);
        for (double x : pi) os << x << ',';
        if (embedded)
            for (double x : embed(pi)) os << x << ',';
        const auto hc = h_costs(spec, pi);
        os << static_cast<int>(region.label[v]) << ',' << table.values[v] << ',' << hc.h;
        for (double hj : hc.h_values) os << ',' << hj;
        if (with_margin) os << ',' << region.margin[v];
        os << '\n';
    }
    return os.str();
}

void export_region(const ProblemSpec& spec, const ValueTable& table, const StoppingRegion& region,
                   const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << region_csv(spec, table, region);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

StoppingRegion parse_region_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty region CSV");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::size_t kcols = 0;
    while (kcols < header.size() && header[kcols] == "k" + std::to_string(kcols)) ++kcols;
    const auto label_it = std::find(header.begin(), header.end(), "label");
    if (kcols < 2 || label_it == header.end()) throw std::runtime_error("region CSV header not recognized");
    const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
    const std::size_t M = kcols - 1;
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? header.size() : static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t margin_col = column("margin");
    std::vector<std::size_t> h_cols;
    for (std::size_t j = 1; j <= M; ++j) h_cols.push_back(column("h" + std::to_string(j)));
    const bool detail = margin_col < header.size() &&
                        std::all_of(h_cols.begin(), h_cols.end(), [&](std::size_t c) { return c < header.size(); });
    std::vector<double> margins, terminal;

    std::vector<std::vector<std::uint32_t>> ks;
    std::vector<std::uint8_t> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < header.size()) throw std::runtime_error("short row in region CSV");
        std::vector<std::uint32_t> k(M + 1);
        for (std::size_t i = 0; i <= M; ++i) k[i] = static_cast<std::uint32_t>(std::stoul(cells[i]));
        ks.push_back(std::move(k));
        const int lab = std::stoi(cells[label_col]);
        if (lab < 0 || lab > static_cast<int>(M)) throw std::runtime_error("label out of range in region CSV");
        labels.push_back(static_cast<std::uint8_t>(lab));
        if (detail) {
            margins.push_back(std::stod(cells[margin_col]));
            for (std::size_t c : h_cols) terminal.push_back(std::stod(cells[c]));
        }
    }
    if (ks.empty()) throw std::runtime_error("region CSV has no rows");
    std::size_t Q = 0;
    for (auto v : ks.front()) Q += v;
    StoppingRegion region;
    region.grid = std::make_shared<SimplexGrid>(M, Q);
    if (region.grid->size() != ks.size()) throw std::runtime_error("region CSV row count does not match its grid");
    region.label.assign(ks.size(), 0);
    if (detail) {
        region.margin.assign(ks.size(), 0.0);
        region.terminal.assign(ks.size() * M, 0.0);
    }
    for (std::size_t r = 0; r < ks.size(); ++r) {
        const std::size_t node = region.grid->rank(ks[r]);
        region.label[node] = labels[r];
        if (!detail) continue;
        region.margin[node] = margins[r];
        std::copy_n(terminal.begin() + static_cast<std::ptrdiff_t>(r * M), M,
                    region.terminal.begin() + static_cast<std::ptrdiff_t>(node * M));
    }
    return region;
}

StoppingRegion load_region_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_region_csv(ss.str());
}

}  // namespace cdiag
