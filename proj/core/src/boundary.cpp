#include "changediag/boundary.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "changediag/posterior.hpp"

namespace cdiag {

namespace {

constexpr int kDegree = 3;

// Clamped knot vector for uniform-or-not breakpoints.
std::vector<double> clamped(const std::vector<double>& breaks) {
    std::vector<double> U;
    U.reserve(breaks.size() + 2 * kDegree);
    for (int i = 0; i < kDegree; ++i) U.push_back(breaks.front());
    U.insert(U.end(), breaks.begin(), breaks.end());
    for (int i = 0; i < kDegree; ++i) U.push_back(breaks.back());
    return U;
}

std::size_t find_span(const std::vector<double>& U, std::size_t n_basis, double u) {
    if (u >= U[n_basis]) return n_basis - 1;
    if (u <= U[kDegree]) return kDegree;
    const auto it = std::upper_bound(U.begin() + kDegree, U.begin() + static_cast<std::ptrdiff_t>(n_basis) + 1, u);
    return static_cast<std::size_t>(it - U.begin()) - 1;
}

// Nonzero basis functions B_{span-3..span} and their derivatives up to
// order 2 at u (de Boor / Piegl-Tiller recurrence).
std::array<std::array<double, 4>, 3> basis_derivs(const std::vector<double>& U, std::size_t span, double u) {
    constexpr int p = kDegree;
    std::array<std::array<double, 4>, 4> ndu{};
    std::array<double, 4> left{}, right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - U[span + 1 - j];
        right[j] = U[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    std::array<std::array<double, 4>, 3> ders{};
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
    std::array<std::array<double, 4>, 2> a{};
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= 2; ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double fac = p;
    for (int k = 1; k <= 2; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= fac;
        fac *= p - k;
    }
    return ders;
}

std::vector<double> uniform_breaks(double lo, double hi, std::size_t K) {
    std::vector<double> b(K);
    for (std::size_t i = 0; i < K; ++i)
        b[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(K - 1);
    b.back() = hi;
    return b;
}

struct Design {
    std::vector<double> U;
    std::size_t n_basis = 0;
    // Square-root penalty: rows sqrt(w_q) B''(u_q), so that c' R' R c = int g''^2.
    Eigen::MatrixXd root_penalty;
};

Design make_design(const std::vector<double>& breaks) {
    Design d;
    d.U = clamped(breaks);
    d.n_basis = breaks.size() + kDegree - 1;
    const auto nb = static_cast<Eigen::Index>(d.n_basis);
    d.root_penalty = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * (breaks.size() - 1)), nb);
    // g'' is linear on each interval, so 2-point Gauss-Legendre integrates g''^2 exactly.
    const double g = 1.0 / std::sqrt(3.0);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (double t : {-g, g}) {
            const double u = mid + half * t;
            const std::size_t span = find_span(d.U, d.n_basis, u);
            const auto ders = basis_derivs(d.U, span, u);
            for (int i = 0; i <= kDegree; ++i)
                d.root_penalty(row, static_cast<Eigen::Index>(span - kDegree + i)) = std::sqrt(half) * ders[2][i];
            ++row;
        }
    }
    return d;
}

// Minimizes |B c - r|^2 + lambda |R c|^2 by QR on the stacked system, which
// keeps the conditioning of the data term when lambda is large.
Eigen::VectorXd solve_penalized(const Design& d, std::span<const BoundarySample> samples,
                                const std::vector<std::size_t>& use, double lambda) {
    const auto nb = static_cast<Eigen::Index>(d.n_basis);
    const auto nd = static_cast<Eigen::Index>(use.size());
    const auto np = d.root_penalty.rows();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nd + np, nb);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nd + np);
    for (Eigen::Index row = 0; row < nd; ++row) {
        const auto& s = samples[use[static_cast<std::size_t>(row)]];
        const std::size_t span = find_span(d.U, d.n_basis, s.beta);
        const auto ders = basis_derivs(d.U, span, s.beta);
        for (int i = 0; i <= kDegree; ++i) A(row, static_cast<Eigen::Index>(span - kDegree + i)) = ders[0][i];
        rhs(row) = s.r;
    }
    A.bottomRows(np) = std::sqrt(lambda) * d.root_penalty;
    // Column pivoting copes with basis functions that no sample touches.
    return A.colPivHouseholderQr().solve(rhs);
}

}  // namespace

double polar_constant(std::size_t M) {
    if (M == 2) return 4.0 / 3.0;
    if (M == 3) return 1.5;
    throw std::invalid_argument("polar coordinates are defined for M = 2 and M = 3 only");
}

double polar_radius(std::span<const double> pi, std::size_t corner) {
    const std::size_t M = pi.size() - 1;
    const double cM = polar_constant(M);
    if (corner > M) throw std::out_of_range("corner index out of range");
    // Equivalent on the simplex to -pi_i + sum_{j<=k} pi_j pi_k, without the
    // cancellation near the corner.
    double q = 0.0;
    for (std::size_t j = 0; j <= M; ++j) {
        if (j == corner) continue;
        for (std::size_t k = j; k <= M; ++k) {
            if (k == corner) continue;
            q += pi[j] * pi[k];
        }
    }
    return std::sqrt(cM * std::max(q, 0.0));
}

PolarPoint to_polar(std::span<const double> pi, std::size_t corner) {
    const std::size_t M = pi.size() - 1;
    PolarPoint out;
    out.corner = corner;
    out.r = polar_radius(pi, corner);
    if (!(out.r > 0.0)) throw DegenerateCorner("polar angle undefined at the corner itself");
    auto angle = [&](std::size_t j) { return std::asin(std::clamp(pi[j] / out.r, 0.0, 1.0)); };
    if (M == 2) {
        out.beta = {angle((corner + 2) % 3)};
    } else {
        std::size_t dropped = M == corner ? M - 1 : M;
        for (std::size_t j = 0; j <= M; ++j)
            if (j != corner && j != dropped) out.beta.push_back(angle(j));
    }
    return out;
}

std::vector<double> from_polar(const PolarPoint& pt, std::size_t M) {
    const std::size_t i = pt.corner;
    std::vector<double> pi(M + 1, 0.0);
    if (M == 2) {
        const std::size_t j2 = (i + 2) % 3, j1 = (i + 1) % 3;
        pi[j2] = pt.r * std::sin(pt.beta.at(0));
        pi[j1] = pt.r * std::sin(std::numbers::pi / 3.0 - pt.beta.at(0));
        pi[i] = 1.0 - pi[j1] - pi[j2];
        return pi;
    }
    if (M != 3) throw std::invalid_argument("polar coordinates are defined for M = 2 and M = 3 only");
    const std::size_t dropped = M == i ? M - 1 : M;
    std::size_t t = 0;
    double s = 0.0, A = 0.0;
    std::vector<double> kept;
    for (std::size_t j = 0; j <= M; ++j) {
        if (j == i || j == dropped) continue;
        pi[j] = pt.r * std::sin(pt.beta.at(t++));
        kept.push_back(pi[j]);
    }
    s = kept[0] + kept[1];
    A = kept[0] * kept[0] + kept[1] * kept[1] + kept[0] * kept[1];
    // r^2 / c = A + x^2 + x s for the dropped coordinate x >= 0.
    const double disc = s * s - 4.0 * (A - pt.r * pt.r / polar_constant(M));
    pi[dropped] = 0.5 * (-s + std::sqrt(std::max(disc, 0.0)));
    pi[i] = 1.0 - s - pi[dropped];
    return pi;
}

SplineBoundary::SplineBoundary(std::size_t corner, std::vector<double> knots, std::vector<double> coefficients,
                               double lambda, double rms, double cv_score)
    : corner_(corner), knots_(std::move(knots)), coef_(std::move(coefficients)), lambda_(lambda), rms_(rms),
      cv_score_(cv_score) {
    if (knots_.size() < 2) throw std::invalid_argument("spline needs at least two knots");
    if (coef_.size() != knots_.size() + kDegree - 1) throw std::invalid_argument("spline coefficient count mismatch");
    if (!std::is_sorted(knots_.begin(), knots_.end()) || !(knots_.back() > knots_.front()))
        throw std::invalid_argument("spline knots must be increasing");
    clamped_ = clamped(knots_);
}

double SplineBoundary::eval(double beta, int deriv) const {
    const auto& U = clamped_;
    const std::size_t nb = coef_.size();
    auto raw = [&](double u, int d) {
        const std::size_t span = find_span(U, nb, u);
        const auto ders = basis_derivs(U, span, u);
        double v = 0.0;
        for (int i = 0; i <= kDegree; ++i) v += ders[static_cast<std::size_t>(d)][i] * coef_[span - kDegree + i];
        return v;
    };
    const double lo = knots_.front(), hi = knots_.back();
    if (beta < lo || beta > hi) {
        const double edge = beta < lo ? lo : hi;
        const double slope = raw(edge, 1);
        if (deriv == 1) return slope;
        return raw(edge, 0) + slope * (beta - edge);
    }
    return raw(beta, deriv);
}

double SplineBoundary::operator()(double beta) const { return eval(beta, 0); }
double SplineBoundary::derivative(double beta) const { return eval(beta, 1); }

double SplineBoundary::max_second_difference() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k + 1 < knots_.size(); ++k)
        worst = std::max(worst, (*this)(knots_[k - 1]) - 2.0 * (*this)(knots_[k]) + (*this)(knots_[k + 1]));
    return worst;
}

namespace {

// Fraction of the way from Stop(j) node a to node b at which to sample the
// boundary of Stop(j).
double crossing(const StoppingRegion& region, std::size_t a, std::size_t b, int j) {
    const std::size_t M = region.M();
    double fa = 0.0, fb = 0.0;
    const int k = region.label[b];
    if (k == 0 && region.margin.size() == region.label.size()) {
        fa = region.margin[a];
        fb = region.margin[b];
    } else if (k != 0 && region.terminal.size() == region.label.size() * M) {
        fa = region.terminal[a * M + static_cast<std::size_t>(k - 1)] - region.terminal[a * M + static_cast<std::size_t>(j - 1)];
        fb = region.terminal[b * M + static_cast<std::size_t>(k - 1)] - region.terminal[b * M + static_cast<std::size_t>(j - 1)];
    } else {
        return 0.5;
    }
    if (!(fa >= 0.0 && fb < 0.0)) return 0.5;
    const double t = std::clamp(fa / (fa - fb), 0.0, 1.0);
    // Past a tie line the argmin changes and g_j is never consulted, so
    // erring outward there costs nothing; half an edge keeps nodes that sit
    // exactly on the tie from flipping on fitting noise.
    return k == 0 ? t : std::min(1.0, t + 0.5);
}

}  // namespace

std::vector<BoundarySample> boundary_samples(const StoppingRegion& region, std::size_t j, BoundarySampling sampling,
                                             std::span<const std::uint8_t> held_out) {
    const SimplexGrid& grid = *region.grid;
    if (grid.M() != 2) throw std::invalid_argument("boundary fitting supports M = 2 only");
    if (!held_out.empty() && held_out.size() != grid.size()) throw std::invalid_argument("held-out mask size mismatch");
    auto excluded = [&](std::size_t v) { return !held_out.empty() && held_out[v] != 0; };
    std::vector<BoundarySample> out;
    std::vector<double> pi(3), q(3);
    const int lj = static_cast<int>(j);
    auto push = [&](std::size_t node, std::span<const double> at) {
        if (polar_radius(at, j) <= 0.0) return;
        const auto pp = to_polar(at, j);
        out.push_back({node, pp.beta[0], pp.r});
    };
    for (std::size_t v = 0; v < grid.size(); ++v) {
        if (region.label[v] != lj || excluded(v)) continue;
        grid.point_into(v, pi);
        bool edge = false;
        for (std::size_t nb : grid.neighbors(v)) {
            if (region.label[nb] == lj) continue;
            edge = true;
            if (sampling != BoundarySampling::CutEdges || excluded(nb)) continue;
            grid.point_into(nb, q);
            const double t = crossing(region, v, nb, lj);
            for (std::size_t i = 0; i < 3; ++i) q[i] = pi[i] + t * (q[i] - pi[i]);
            push(v, q);
        }
        if (edge && sampling == BoundarySampling::StopNodes) push(v, pi);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.beta < b.beta; });
    return out;
}

SplineBoundary fit_spline(std::span<const BoundarySample> samples, std::size_t corner, const SplineFitOptions& options) {
    const std::size_t K = options.knots;
    if (K < 2) throw std::invalid_argument("at least two knots are required");
    if (samples.size() < K + 4)
        throw InsufficientBoundary("boundary has " + std::to_string(samples.size()) + " samples; " +
                                   std::to_string(K) + " knots need at least " + std::to_string(K + 4));
    double lo = samples.front().beta, hi = lo;
    for (const auto& s : samples) {
        lo = std::min(lo, s.beta);
        hi = std::max(hi, s.beta);
    }
    if (!(hi > lo)) throw InsufficientBoundary("boundary samples span a single angle");
    const auto breaks = uniform_breaks(lo, hi, K);
    const Design design = make_design(breaks);

    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    auto predict = [&](const Eigen::VectorXd& c, double u) {
        const std::size_t span = find_span(design.U, design.n_basis, u);
        const auto ders = basis_derivs(design.U, span, u);
        double v = 0.0;
        for (int i = 0; i <= kDegree; ++i) v += ders[0][i] * c(static_cast<Eigen::Index>(span - kDegree + i));
        return v;
    };

    double lambda = 0.0;
    double cv_score = 0.0;
    if (options.lambda) {
        lambda = *options.lambda;
        if (!(lambda > 0.0)) throw std::invalid_argument("smoothing parameter must be positive");
    } else {
        constexpr std::size_t kFolds = 5;
        double best = std::numeric_limits<double>::infinity();
        for (int e = -24; e <= 8; ++e) {
            const double lam = std::pow(10.0, 0.5 * e);
            double sse = 0.0;
            for (std::size_t f = 0; f < kFolds; ++f) {
                std::vector<std::size_t> train, test;
                for (std::size_t i = 0; i < samples.size(); ++i) (i % kFolds == f ? test : train).push_back(i);
                const auto c = solve_penalized(design, samples, train, lam);
                for (std::size_t i : test) {
                    const double d = samples[i].r - predict(c, samples[i].beta);
                    sse += d * d;
                }
            }
            const double mse = sse / static_cast<double>(samples.size());
            if (mse < best) {
                best = mse;
                lambda = lam;
            }
        }
        cv_score = best;
    }

    const auto c = solve_penalized(design, samples, all, lambda);
    double sse = 0.0;
    for (const auto& s : samples) {
        const double d = s.r - predict(c, s.beta);
        sse += d * d;
    }
    const double rms = std::sqrt(sse / static_cast<double>(samples.size()));
    std::vector<double> coef(c.data(), c.data() + c.size());
    return SplineBoundary(corner, breaks, std::move(coef), lambda, rms, cv_score);
}

SplineBoundary fit_boundary(const StoppingRegion& region, std::size_t j, const SplineFitOptions& options) {
    if (j < 1 || j > region.M()) throw std::out_of_range("corner index out of range");
    const auto samples = boundary_samples(region, j, options.sampling);
    return fit_spline(samples, j, options);
}

Action fast_member(const ProblemSpec& spec, std::span<const SplineBoundary> boundaries, std::span<const double> pi,
                   std::size_t* evaluated) {
    if (spec.M() != 2) throw std::invalid_argument("spline membership supports M = 2 only");
    if (boundaries.size() != 2) throw std::invalid_argument("expected one boundary per corner");
    int i = 1;
    h_min(spec, pi, &i);
    const auto ui = static_cast<std::size_t>(i);
    if (evaluated) *evaluated = 0;
    const double r = polar_radius(pi, ui);
    // e_i belongs to its own stopping region.
    if (!(r > 0.0)) return Action::stop(i);
    const auto pp = to_polar(pi, ui);
    const auto& g = boundaries[ui - 1];
    if (g.corner() != ui) throw std::invalid_argument("boundaries must be ordered by corner");
    if (evaluated) *evaluated = ui;
    return r <= g(pp.beta[0]) ? Action::stop(i) : Action::carry_on();
}

}  // namespace cdiag
