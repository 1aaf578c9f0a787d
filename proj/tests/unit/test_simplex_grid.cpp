#include <gtest/gtest.h>

#include <random>

#include "changediag/simplex_grid.hpp"
#include "oracles.hpp"

using namespace cdiag;

TEST(SimplexGrid, NodeCounts) {
    EXPECT_EQ(SimplexGrid(1, 4).size(), 5u);
    EXPECT_EQ(SimplexGrid(2, 200).size(), 20301u);
    EXPECT_EQ(SimplexGrid(3, 50).size(), 23426u);
    EXPECT_EQ(SimplexGrid::node_count(2, 4), 15u);
    EXPECT_THROW(SimplexGrid(3, 1000, 1000), ResourceError);
    EXPECT_THROW(SimplexGrid(0, 5), std::invalid_argument);
}

TEST(SimplexGrid, OrderAndRank) {
    for (std::size_t M : {1u, 2u, 3u}) {
        const std::uint32_t Q = 7;
        const SimplexGrid g(M, Q);
        const auto ref = oracle::simplex_lattice(M, Q);
        ASSERT_EQ(ref.size(), g.size());
        for (std::size_t n = 0; n < g.size(); ++n) {
            const auto k = g.lattice(n);
            ASSERT_TRUE(std::equal(k.begin(), k.end(), ref[n].begin())) << "node " << n;
            EXPECT_EQ(g.rank(k), n);
        }
        EXPECT_EQ(g.corner_node(0), 0u);
        for (std::size_t j = 0; j <= M; ++j) EXPECT_EQ(g.lattice(g.corner_node(j))[j], Q);
    }
}

TEST(SimplexGrid, LocateReproducesAffineFunctions) {
    std::mt19937_64 rng(4);
    std::exponential_distribution<double> e(1.0);
    for (std::size_t M : {1u, 2u, 3u}) {
        const SimplexGrid g(M, 13);
        std::vector<double> coef(M + 1);
        for (auto& c : coef) c = e(rng) - 1.0;
        auto f = [&](std::span<const double> pi) {
            double v = 0.0;
            for (std::size_t i = 0; i <= M; ++i) v += coef[i] * pi[i];
            return v;
        };
        std::vector<double> vals(g.size());
        for (std::size_t n = 0; n < g.size(); ++n) vals[n] = f(g.point(n));
        for (int rep = 0; rep < 500; ++rep) {
            std::vector<double> pi(M + 1);
            double s = 0.0;
            for (auto& v : pi) s += (v = e(rng));
            for (auto& v : pi) v /= s;
            const Stencil st = g.locate(pi);
            double interp = 0.0, wsum = 0.0;
            std::vector<double> recon(M + 1, 0.0);
            for (std::size_t i = 0; i < st.size; ++i) {
                EXPECT_GE(st.weight[i], 0.0);
                interp += st.weight[i] * vals[st.node[i]];
                wsum += st.weight[i];
                for (std::size_t c = 0; c <= M; ++c) recon[c] += st.weight[i] * g.coordinate(st.node[i], c);
            }
            EXPECT_NEAR(wsum, 1.0, 1e-12);
            EXPECT_NEAR(interp, f(pi), 1e-12);
            for (std::size_t c = 0; c <= M; ++c) EXPECT_NEAR(recon[c], pi[c], 1e-12);
        }
    }
}

TEST(SimplexGrid, LocateAtNodesAndMidpoints) {
    const SimplexGrid g(2, 10);
    for (std::size_t n = 0; n < g.size(); ++n) {
        const Stencil st = g.locate(g.point(n));
        ASSERT_EQ(st.size, 1u);
        EXPECT_EQ(st.node[0], n);
        EXPECT_EQ(st.weight[0], 1.0);
    }
    const std::size_t a = g.rank(std::vector<std::uint32_t>{5, 3, 2});
    const std::size_t b = g.rank(std::vector<std::uint32_t>{5, 2, 3});
    const Stencil st = g.locate(std::vector<double>{0.5, 0.25, 0.25});
    ASSERT_EQ(st.size, 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_TRUE(st.node[i] == a || st.node[i] == b);
        EXPECT_NEAR(st.weight[i], 0.5, 1e-15);
    }
}

TEST(SimplexGrid, NearestNode) {
    const SimplexGrid g(2, 10);
    EXPECT_EQ(g.nearest_node(std::vector<double>{0.98, 0.01, 0.01}), g.corner_node(0));
    const auto k = g.lattice(g.nearest_node(std::vector<double>{0.34, 0.33, 0.33}));
    EXPECT_EQ(k[0] + k[1] + k[2], 10u);
    EXPECT_EQ(k[0], 4u);
}

TEST(SimplexGrid, Neighbors) {
    const SimplexGrid g(2, 6);
    EXPECT_EQ(g.neighbors(g.corner_node(0)).size(), 2u);
    const std::size_t interior = g.rank(std::vector<std::uint32_t>{2, 2, 2});
    const auto nb = g.neighbors(interior);
    EXPECT_EQ(nb.size(), 6u);
    for (std::size_t m : nb) {
        int dist = 0;
        for (std::size_t i = 0; i < 3; ++i) dist += std::abs(int(g.lattice(m)[i]) - int(g.lattice(interior)[i]));
        EXPECT_EQ(dist, 2);
    }
}
