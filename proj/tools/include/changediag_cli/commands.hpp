#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cdiag::cli {

// Exit codes shared by every subcommand.
enum Exit : int {
    kOk = 0,
    kFailure = 1,         // validation or IO problem, message on stderr
    kNotConverged = 2,    // solve hit max_iter; outputs are still written
    kBadObservation = 3,  // diagnose: symbol outside the alphabet or of zero predictive probability
    kEndOfStream = 4,     // diagnose: input ended before an alarm
};

struct SolveArgs {
    std::string model;
    std::size_t Q = 200;
    double tol = 1e-6;
    std::size_t max_iter = 100'000;
    std::string out;
    unsigned threads = 0;
    [[nodiscard]] std::vector<std::string> argv() const;
};

struct RegionsArgs {
    std::string table;
    std::optional<std::string> compare;  // second table for the nestedness check
    std::optional<double> stop_tol;      // default: the table's final sup-change
    std::string format = "csv";
    std::string out;
    std::size_t convexity_pairs = 4000;
    [[nodiscard]] std::vector<std::string> argv() const;
};

struct FitBoundaryArgs {
    std::string region;
    std::size_t j = 1;
    std::size_t knots = 12;
    std::optional<double> lambda;  // empty: cross-validated
    std::string out;
    [[nodiscard]] std::vector<std::string> argv() const;
};

struct SimulateArgs {
    std::string model;
    // stop-at-<k> | threshold:<t> | table:<path> | region:<csv> | spline:<json>[,<json>...]
    std::string strategy;
    std::size_t runs = 10'000;
    std::uint64_t seed = 1;
    std::uint64_t n_max = 100'000;
    double stop_tol = 0.0;
    std::string out;
    std::optional<std::string> trace;
    unsigned threads = 0;
    [[nodiscard]] std::vector<std::string> argv() const;
};

struct DiagnoseArgs {
    std::string model;                  // optional when the strategy is a value table
    std::vector<std::string> strategy;  // one value table, or one boundary JSON per corner
    std::string input = "-";            // "-" reads standard input
    bool echo = false;
    double stop_tol = 0.0;
    std::optional<std::string> manifest;
    [[nodiscard]] std::vector<std::string> argv() const;
};

struct DeriveSaArgs {
    std::string input;
    std::string out;
    [[nodiscard]] std::vector<std::string> argv() const;
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err);
int cmd_regions(const RegionsArgs& a, std::ostream& out, std::ostream& err);
int cmd_fit_boundary(const FitBoundaryArgs& a, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseArgs& a, std::istream& in, std::ostream& out, std::ostream& err);
int cmd_derive_sa(const DeriveSaArgs& a, std::ostream& out, std::ostream& err);
// Re-executes the command line stored in a manifest.
int cmd_replay(const std::string& manifest, std::istream& in, std::ostream& out, std::ostream& err);

// Full command line without the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

std::string manifest_path(const std::string& output);

}  // namespace cdiag::cli
