#include "changediag/simplex_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cdiag {

std::size_t SimplexGrid::node_count(std::size_t M, std::size_t Q) {
    // C(Q + M, M) computed incrementally; each partial product is an exact binomial.
    __extension__ using u128 = unsigned __int128;
    u128 c = 1;
    for (std::size_t i = 1; i <= M; ++i) {
        c = c * (Q + i) / i;
        if (c > std::numeric_limits<std::size_t>::max()) return 0;
    }
    return static_cast<std::size_t>(c);
}

SimplexGrid::SimplexGrid(std::size_t M, std::size_t Q, std::size_t node_cap) : M_(M), Q_(Q) {
    if (M < 1 || Q < 1) throw std::invalid_argument("simplex grid needs M >= 1 and Q >= 1");
    if (M + 1 > Stencil::kMaxVertices) throw std::invalid_argument("simplex dimension too large");
    count_ = node_count(M, Q);
    if (count_ == 0 || count_ > node_cap)
        throw ResourceError("simplex grid with M=" + std::to_string(M) + ", Q=" + std::to_string(Q) +
                            " exceeds the node cap of " + std::to_string(node_cap));

    binom_.assign((Q + M + 1) * (M + 1), 0);
    for (std::size_t n = 0; n <= Q + M; ++n) {
        binom_[n * (M + 1)] = 1;
        for (std::size_t k = 1; k <= std::min(n, M); ++k)
            binom_[n * (M + 1) + k] = binom_[(n - 1) * (M + 1) + k - 1] +
                                      (k <= n - 1 ? binom_[(n - 1) * (M + 1) + k] : 0);
    }

    k_.reserve(count_ * (M + 1));
    std::vector<std::uint32_t> cur(M + 1, 0);
    // Descending lexicographic enumeration of compositions of Q into M + 1 parts.
    auto rec = [&](auto&& self, std::size_t pos, std::uint32_t remaining) -> void {
        if (pos == M) {
            cur[pos] = remaining;
            k_.insert(k_.end(), cur.begin(), cur.end());
            return;
        }
        for (std::int64_t v = remaining; v >= 0; --v) {
            cur[pos] = static_cast<std::uint32_t>(v);
            self(self, pos + 1, remaining - static_cast<std::uint32_t>(v));
        }
    };
    rec(rec, 0, static_cast<std::uint32_t>(Q));
}

std::size_t SimplexGrid::binom(std::size_t n, std::size_t k) const {
    if (k > n) return 0;
    return binom_[n * (M_ + 1) + k];
}

std::vector<double> SimplexGrid::point(std::size_t node) const {
    std::vector<double> out(M_ + 1);
    point_into(node, out);
    return out;
}

void SimplexGrid::point_into(std::size_t node, std::span<double> out) const {
    for (std::size_t i = 0; i <= M_; ++i) out[i] = coordinate(node, i);
}

std::size_t SimplexGrid::compositions_before(std::size_t i, std::size_t remaining, std::uint32_t ki) const {
    // Compositions with a larger entry at position i come first:
    // sum_{v = ki+1}^{r} C(r - v + m - 1, m - 1) = C(r - ki - 1 + m, m), m = M - i.
    if (ki >= remaining) return 0;
    const std::size_t m = M_ - i;
    return binom(remaining - ki - 1 + m, m);
}

std::size_t SimplexGrid::rank(std::span<const std::uint32_t> k) const {
    if (k.size() != M_ + 1) throw std::out_of_range("lattice point has wrong dimension");
    std::size_t total = 0;
    for (auto v : k) total += v;
    if (total != Q_) throw std::out_of_range("lattice point not on the simplex");
    std::size_t r = Q_;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < M_; ++i) {
        idx += compositions_before(i, r, k[i]);
        r -= k[i];
    }
    return idx;
}

std::size_t SimplexGrid::corner_node(std::size_t j) const {
    std::vector<std::uint32_t> k(M_ + 1, 0);
    k.at(j) = static_cast<std::uint32_t>(Q_);
    return rank(k);
}

std::size_t SimplexGrid::nearest_node(std::span<const double> pi) const {
    const double Q = static_cast<double>(Q_);
    std::vector<std::uint32_t> k(M_ + 1);
    std::vector<std::pair<double, std::size_t>> rem(M_ + 1);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i <= M_; ++i) {
        const double y = std::clamp(pi[i], 0.0, 1.0) * Q;
        const double fl = std::floor(y);
        k[i] = static_cast<std::uint32_t>(fl);
        assigned += static_cast<std::int64_t>(fl);
        rem[i] = {y - fl, i};
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::int64_t missing = static_cast<std::int64_t>(Q_) - assigned;
    for (std::size_t t = 0; missing > 0; t = (t + 1) % rem.size(), --missing) ++k[rem[t].second];
    // Overshoot only when pi is off the simplex; shave from the largest entries.
    while (missing < 0) {
        auto it = std::max_element(k.begin(), k.end());
        --*it;
        ++missing;
    }
    return rank(k);
}

Stencil SimplexGrid::locate(std::span<const double> pi) const {
    const std::size_t M = M_;
    const double Q = static_cast<double>(Q_);
    // Cumulative coordinates z_i = Q * (pi_i + ... + pi_M), i = 1..M, so that
    // Q >= z_1 >= ... >= z_M >= 0; the Kuhn triangulation of the unit cubes in
    // z-space restricts to the Freudenthal triangulation of the simplex.
    std::array<double, Stencil::kMaxVertices> z{};
    double acc = 0.0;
    for (std::size_t i = M; i >= 1; --i) {
        acc += pi[i];
        z[i] = std::clamp(acc * Q, 0.0, Q);
    }
    for (std::size_t i = M; i >= 2; --i) z[i - 1] = std::max(z[i - 1], z[i]);
    std::array<std::int64_t, Stencil::kMaxVertices> base{};
    std::array<double, Stencil::kMaxVertices> frac{};
    std::array<std::size_t, Stencil::kMaxVertices> order{};
    for (std::size_t i = 1; i <= M; ++i) {
        double zi = z[i];
        const double r = std::round(zi);
        if (std::abs(zi - r) <= 1e-12 * std::max(1.0, Q)) zi = r;
        const double fl = std::floor(zi);
        base[i] = static_cast<std::int64_t>(fl);
        frac[i] = zi - fl;
        order[i - 1] = i;
    }
    std::stable_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(M),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });

    Stencil st;
    std::array<std::int64_t, Stencil::kMaxVertices> vz = base;
    std::array<std::uint32_t, Stencil::kMaxVertices> k{};
    auto emit = [&](double w) {
        if (!(w > 0.0)) return;
        // z -> k: k_0 = Q - z_1, k_i = z_i - z_{i+1}, k_M = z_M.
        k[0] = static_cast<std::uint32_t>(static_cast<std::int64_t>(Q_) - vz[1]);
        for (std::size_t i = 1; i < M; ++i) k[i] = static_cast<std::uint32_t>(vz[i] - vz[i + 1]);
        k[M] = static_cast<std::uint32_t>(vz[M]);
        st.node[st.size] = rank(std::span<const std::uint32_t>(k.data(), M + 1));
        st.weight[st.size] = w;
        ++st.size;
    };
    double prev = 1.0;
    for (std::size_t t = 0; t < M; ++t) {
        const std::size_t c = order[t];
        emit(prev - frac[c]);
        prev = frac[c];
        vz[c] += 1;
    }
    emit(prev);
    return st;
}

std::vector<std::size_t> SimplexGrid::neighbors(std::size_t node) const {
    std::vector<std::size_t> out;
    std::vector<std::uint32_t> k(lattice(node).begin(), lattice(node).end());
    for (std::size_t b = 0; b <= M_; ++b) {
        if (k[b] == 0) continue;
        for (std::size_t a = 0; a <= M_; ++a) {
            if (a == b) continue;
            --k[b];
            ++k[a];
            out.push_back(rank(k));
            --k[a];
            ++k[b];
        }
    }
    return out;
}

}  // namespace cdiag
