#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cdiag {

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Barycentric stencil of a point inside one simplex of the triangulation.
// Only vertices with positive weight are listed.
struct Stencil {
    static constexpr std::size_t kMaxVertices = 16;
    std::array<std::size_t, kMaxVertices> node{};
    std::array<double, kMaxVertices> weight{};
    std::size_t size = 0;
};

// Regular lattice {k / Q : k >= 0, sum k = Q} on the M-simplex with the
// Freudenthal (Kuhn) triangulation. Nodes are enumerated in descending
// lexicographic order of k, so node 0 is e_0 = (Q, 0, ..., 0) / Q.
class SimplexGrid {
public:
    static constexpr std::size_t kDefaultNodeCap = 50'000'000;

    SimplexGrid(std::size_t M, std::size_t Q, std::size_t node_cap = kDefaultNodeCap);

    // C(Q + M, M), or 0 on overflow.
    static std::size_t node_count(std::size_t M, std::size_t Q);

    [[nodiscard]] std::size_t M() const noexcept { return M_; }
    [[nodiscard]] std::size_t resolution() const noexcept { return Q_; }
    [[nodiscard]] std::size_t size() const noexcept { return count_; }

    // Integer coordinates (k_0, ..., k_M) of a node.
    [[nodiscard]] std::span<const std::uint32_t> lattice(std::size_t node) const {
        return {k_.data() + node * (M_ + 1), M_ + 1};
    }
    [[nodiscard]] double coordinate(std::size_t node, std::size_t i) const {
        return static_cast<double>(k_[node * (M_ + 1) + i]) / static_cast<double>(Q_);
    }
    [[nodiscard]] std::vector<double> point(std::size_t node) const;
    void point_into(std::size_t node, std::span<double> out) const;

    // Index of the node with lattice coordinates k; throws std::out_of_range.
    [[nodiscard]] std::size_t rank(std::span<const std::uint32_t> k) const;

    // Node whose lattice point is Q e_j.
    [[nodiscard]] std::size_t corner_node(std::size_t j) const;

    // Lattice point nearest to pi (largest-remainder rounding of Q pi).
    [[nodiscard]] std::size_t nearest_node(std::span<const double> pi) const;

    // Containing simplex and barycentric weights of pi.
    [[nodiscard]] Stencil locate(std::span<const double> pi) const;

    // Triangulation neighbours: k + e_a - e_b for a != b.
    [[nodiscard]] std::vector<std::size_t> neighbors(std::size_t node) const;

private:
    std::size_t compositions_before(std::size_t i, std::size_t remaining, std::uint32_t ki) const;
    std::size_t binom(std::size_t n, std::size_t k) const;

    std::size_t M_;
    std::size_t Q_;
    std::size_t count_;
    std::vector<std::uint32_t> k_;
    // binom_[n * (M_ + 1) + k] = C(n, k) for n <= Q + M, k <= M.
    std::vector<std::size_t> binom_;
};

}  // namespace cdiag
