#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "changediag/model.hpp"
#include "changediag/simplex_grid.hpp"
#include "changediag/solver.hpp"

namespace cdiag {

// Grid approximation of the stopping regions: label 0 = Continue, j = Stop(j).
struct StoppingRegion {
    std::shared_ptr<const SimplexGrid> grid;
    std::vector<std::uint8_t> label;
    std::size_t iterations = 0;  // N of the source table
    double stop_tol = 0.0;
    // Optional per-node detail for placing boundary samples between nodes.
    // margin = c (1 - pi_0) + (T V) + stop_tol - h, >= 0 exactly on stopping
    // nodes; terminal holds h_1..h_M row-major. Both are empty when only the
    // labels are known.
    std::vector<double> margin;
    std::vector<double> terminal;

    [[nodiscard]] std::size_t M() const noexcept { return grid->M(); }
    [[nodiscard]] bool is_stop(std::size_t node, int j) const noexcept { return label[node] == j; }
    [[nodiscard]] std::vector<std::size_t> nodes_with_label(int j) const;
};

// Stop(argmin h_j) iff h(node) <= c (1 - pi_0) + (T V)(node) + stop_tol.
// A negative stop_tol selects the table's achieved sup_change.
StoppingRegion extract_region(const ProblemSpec& spec, const ValueTable& table, double stop_tol = -1.0);

// Same rule, evaluated with an already-built backup operator.
StoppingRegion extract_region(const BellmanOperator& op, std::span<const double> values,
                              std::size_t iterations, double stop_tol);

struct ConvexityReport {
    int label = 0;
    std::size_t pairs_checked = 0;
    std::size_t strict_violations = 0;    // segment between two interior nodes leaves the region
    std::size_t boundary_violations = 0;  // at least one endpoint on the region's boundary
};

struct RegionReport {
    bool nested = true;             // every Stop(j) node of the finer region is Stop(j) in the coarser one
    std::size_t nesting_mismatches = 0;
    std::vector<bool> nonempty;     // per label 1..M (index j - 1)
    std::vector<bool> contains_corner;
    std::vector<ConvexityReport> convexity;
    std::vector<std::size_t> label_components;  // grid components of each Stop(j) set
    std::size_t stop_components = 0;            // components of the whole stopping set
    std::size_t continue_components = 0;

    [[nodiscard]] bool passed() const;
};

struct RegionCheckOptions {
    std::size_t convexity_pairs = 4000;  // sampled pairs per label; all pairs if fewer exist
    std::uint64_t seed = 1;
};

// `finer` is the region for the larger N, `coarser` for the smaller N′ on
// the same grid. Pass the same region twice to skip the nesting check.
RegionReport check_region_properties(const StoppingRegion& finer, const StoppingRegion& coarser,
                                     const RegionCheckOptions& options = {});

// Number of connected components (triangulation adjacency) of the nodes
// satisfying `member`.
std::size_t count_components(const SimplexGrid& grid, const std::vector<bool>& member);

// Nodes of a region with at least one neighbour outside it.
bool is_boundary_node(const StoppingRegion& region, std::size_t node, int label);

// Linear images of S^2 in R^2 and S^3 in R^3 in which pi_i is the distance to
// the face opposite corner i.
std::vector<double> embed(std::span<const double> pi);

// CSV with one row per node in grid order: lattice k, pi, embedded
// coordinates (M = 2, 3), label, value, h, h_1..h_M.
void export_region(const ProblemSpec& spec, const ValueTable& table, const StoppingRegion& region,
                   const std::filesystem::path& path);
std::string region_csv(const ProblemSpec& spec, const ValueTable& table, const StoppingRegion& region);

// Reads back the grid and labels from an exported CSV.
StoppingRegion parse_region_csv(const std::string& text);
StoppingRegion load_region_csv(const std::filesystem::path& path);

}  // namespace cdiag
