#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "changediag/model.hpp"
#include "changediag/regions.hpp"
#include "changediag/solver.hpp"

namespace cdiag {

class DegenerateCorner : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InsufficientBoundary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Local polar coordinates of pi around simplex corner e_i in the embedded
// picture: r is the distance from L(pi) to L(e_i) and each angle satisfies
// sin(beta) = pi_j / r for its coordinate j.
//
// M = 2 keeps the single angle for j = (i + 2) mod 3. M = 3 keeps two of the
// three angles; the one belonging to the largest index j != i is dropped.
struct PolarPoint {
    std::size_t corner = 0;
    double r = 0.0;
    std::vector<double> beta;
};

// Squared-distance constant: 4/3 for M = 2, 3/2 for M = 3.
double polar_constant(std::size_t M);

// r_i(pi) only; defined at the corner itself (r = 0).
double polar_radius(std::span<const double> pi, std::size_t corner);

PolarPoint to_polar(std::span<const double> pi, std::size_t corner);

// Inverse of to_polar for M = 2 and M = 3.
std::vector<double> from_polar(const PolarPoint& pt, std::size_t M);

// Cubic smoothing spline r = g(beta) in a clamped B-spline basis on uniform
// breakpoints. Outside [knots.front(), knots.back()] it continues linearly.
class SplineBoundary {
public:
    SplineBoundary() = default;
    SplineBoundary(std::size_t corner, std::vector<double> knots, std::vector<double> coefficients, double lambda,
                   double rms, double cv_score = 0.0);

    [[nodiscard]] double operator()(double beta) const;
    [[nodiscard]] double derivative(double beta) const;

    [[nodiscard]] std::size_t corner() const noexcept { return corner_; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
    [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return coef_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double rms() const noexcept { return rms_; }
    [[nodiscard]] double cv_score() const noexcept { return cv_score_; }

    // Largest second difference g(k_{i-1}) - 2 g(k_i) + g(k_{i+1}) over
    // interior knots; <= 0 for a concave curve.
    [[nodiscard]] double max_second_difference() const;

private:
    double eval(double beta, int deriv) const;

    std::size_t corner_ = 0;
    std::vector<double> knots_;
    std::vector<double> coef_;
    std::vector<double> clamped_;
    double lambda_ = 0.0;
    double rms_ = 0.0;
    double cv_score_ = 0.0;
};

struct BoundarySample {
    std::size_t node = 0;
    double beta = 0.0;
    double r = 0.0;
};

enum class BoundarySampling : std::uint8_t {
    // Stop(j) nodes with a neighbour outside Stop(j).
    StopNodes,
    // One point on each grid edge joining a Stop(j) node to a node outside
    // Stop(j): where the linear interpolant of the stopping margin crosses
    // zero (against a Continue node), or half an edge past the zero of
    // h_j - h_k (against a Stop(k) node). The midpoint is used when the
    // region carries no margin data.
    CutEdges,
};

// Samples of the edge of Gamma^(j) in polar coordinates around e_j, sorted by
// angle. The edge includes both the Continue interface and the tie line where
// Stop(j) meets another stopping label. Nodes flagged in `held_out` (indexed
// by node) contribute no samples.
std::vector<BoundarySample> boundary_samples(const StoppingRegion& region, std::size_t j,
                                             BoundarySampling sampling = BoundarySampling::CutEdges,
                                             std::span<const std::uint8_t> held_out = {});

struct SplineFitOptions {
    std::size_t knots = 12;
    // Smoothing parameter; nullopt selects it by 5-fold cross-validation.
    std::optional<double> lambda;
    BoundarySampling sampling = BoundarySampling::CutEdges;
};

// Penalized least squares: sum (r - g(beta))^2 + lambda * int g''^2.
SplineBoundary fit_spline(std::span<const BoundarySample> samples, std::size_t corner,
                          const SplineFitOptions& options = {});

SplineBoundary fit_boundary(const StoppingRegion& region, std::size_t j, const SplineFitOptions& options = {});

// Online membership for M = 2: pick i = argmin_j h_j(pi) and stop with
// decision i iff r_i(pi) <= g_i(beta_i(pi)). `boundaries` is indexed by
// corner - 1. Only boundary i is evaluated; its index is written to
// `evaluated` when given (0 if none was needed).
Action fast_member(const ProblemSpec& spec, std::span<const SplineBoundary> boundaries, std::span<const double> pi,
                   std::size_t* evaluated = nullptr);

}  // namespace cdiag
