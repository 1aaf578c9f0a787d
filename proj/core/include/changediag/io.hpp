#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "changediag/boundary.hpp"
#include "changediag/model.hpp"
#include "changediag/simulator.hpp"
#include "changediag/solver.hpp"

namespace cdiag {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Problem JSON: alphabet_size, num_types, p0, p, nu, densities, delay_cost,
// terminal_costs (+ optional symbol_names, ignored).
ProblemSpec problem_from_json(const std::string& text);
std::string problem_to_json(const ProblemSpec& spec);
ProblemSpec load_problem(const std::filesystem::path& path);

// Suspended-animation JSON: component_failure_probs, phi (array of
// {subset: [1-based components], label} or one of "min_index",
// "cardinality", "binary"), label_densities (row 0 = f0), delay_cost,
// terminal_costs.
struct SuspendedAnimationInput {
    SuspendedAnimationSpec sa;
    double delay_cost = 1.0;
    std::vector<std::vector<double>> terminal_costs;
};
SuspendedAnimationInput suspended_animation_from_json(const std::string& text);

// Binary value table, little-endian:
//   "CDVTABLE" | u32 version | u32 M | u32 Q | u32 alphabet_size | u64 N |
//   f64 tol | u8 criterion | u8 converged | u8 has_labels | u8 0 |
//   f64 sup_change | f64 error_bound | f64 max_increase |
//   u64 model_len | model JSON | u64 node_count | f64 values[node_count] |
//   u8 labels[node_count] (when has_labels)
struct StoredTable {
    ProblemSpec spec;
    ValueTable table;
};
std::string table_to_bytes(const ProblemSpec& spec, const ValueTable& table);
StoredTable table_from_bytes(const std::string& bytes);
void save_table(const std::filesystem::path& path, const ProblemSpec& spec, const ValueTable& table);
StoredTable load_table(const std::filesystem::path& path);
// Header fields (everything except the node values) as JSON.
std::string table_sidecar_json(const ProblemSpec& spec, const ValueTable& table);

std::string boundary_to_json(const SplineBoundary& b);
SplineBoundary boundary_from_json(const std::string& text);

std::string risk_to_json(const RiskEstimate& r);
std::string posterior_to_json(const Posterior& pi);

// 17 significant digits.
std::string format_double(double v);

}  // namespace cdiag
