#include "vdpsync/graph.hpp"

#include <doctest.h>

#include <random>

using namespace vdpsync;

TEST_SUITE("graph") {

TEST_CASE("laplacian of the named generators") {
    SUBCASE("chain of 4") {
        Mat expect(4, 4);
        expect << 1, -1, 0, 0,
                 -1, 2, -1, 0,
                  0, -1, 2, -1,
                  0, 0, -1, 1;
        CHECK(CouplingGraph::chain(4).laplacian().isApprox(expect, 0.0));
    }
    SUBCASE("complete of 3") {
        Mat expect(3, 3);
        expect << 2, -1, -1,
                 -1, 2, -1,
                 -1, -1, 2;
        CHECK(CouplingGraph::complete(3).laplacian().isApprox(expect, 0.0));
    }
    SUBCASE("two nodes") {
        Mat expect(2, 2);
        expect << 1, -1, -1, 1;
        CHECK(CouplingGraph::chain(2).laplacian().isApprox(expect, 0.0));
    }
    SUBCASE("rows sum to zero") {
        for (int n : {2, 3, 5, 8}) {
            CHECK(CouplingGraph::chain(n).laplacian().rowwise().sum().norm() == 0.0);
            CHECK(CouplingGraph::complete(n).laplacian().rowwise().sum().norm() == 0.0);
        }
    }
}

TEST_CASE("strong connectivity predicate") {
    CHECK(is_strongly_connected(4, CouplingGraph::chain(4).edges()));
    CHECK(is_strongly_connected(5, CouplingGraph::complete(5).edges()));
    CHECK_FALSE(is_strongly_connected(2, {{0, 1}}));  // single directed edge
    // directed 3-ring is strongly connected, reversing one edge breaks it
    CHECK(is_strongly_connected(3, {{1, 0}, {2, 1}, {0, 2}}));
    CHECK_FALSE(is_strongly_connected(3, {{1, 0}, {2, 1}, {2, 0}}));
}

TEST_CASE("generators and construction guards") {
    CHECK(CouplingGraph::chain(4).edge_count() == 6);
    CHECK(CouplingGraph::complete(4).edge_count() == 12);
    CHECK(CouplingGraph::chain(2) == CouplingGraph::complete(2));
    CHECK_THROWS_AS(CouplingGraph::chain(1), std::invalid_argument);
    CHECK_THROWS_AS(CouplingGraph::complete(1), std::invalid_argument);
    CHECK_THROWS_AS(CouplingGraph(2, {{0, 0}, {0, 1}, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(CouplingGraph(2, {{0, 1}}), std::invalid_argument);  // not strongly connected
    CHECK_THROWS_AS(CouplingGraph(2, {{0, 2}, {2, 0}}), std::invalid_argument);
}

TEST_CASE("edge lookup follows the (i, j) = flow j -> i convention") {
    CouplingGraph g = CouplingGraph::chain(3);
    CHECK(g.edge_index(0, 1) >= 0);
    CHECK(g.edge_index(1, 0) >= 0);
    CHECK(g.edge_index(0, 2) == -1);
    CHECK(g.in_neighbors(0) == std::vector<int>{1});
    CHECK(g.in_neighbors(1) == std::vector<int>{0, 2});
}

TEST_CASE("EdgeGainSet validates its keys and entries") {
    CouplingGraph g = CouplingGraph::chain(3);
    CHECK_THROWS_AS(EdgeGainSet(g, std::vector<Vec2>(3, Vec2::Zero())), std::invalid_argument);
    CHECK_THROWS_AS(EdgeGainSet(g, std::vector<Vec2>(4, Vec2(-1, 0))), std::invalid_argument);

    auto gains = EdgeGainSet::from_pairs(
        g, {{0, 1, 1.0, 2.0}, {1, 0, 3.0, 4.0}, {1, 2, 5.0, 6.0}, {2, 1, 7.0, 8.0}});
    CHECK(gains[g.edge_index(1, 2)].isApprox(Vec2(5, 6), 0.0));
    CHECK(gains.max_entry() == 8.0);

    CHECK_THROWS_AS(EdgeGainSet::from_pairs(g, {{0, 2, 1.0, 1.0},
                                                {1, 0, 1.0, 1.0},
                                                {1, 2, 1.0, 1.0},
                                                {2, 1, 1.0, 1.0}}),
                    std::invalid_argument);  // (0,2) is not an edge
    CHECK_THROWS_AS(EdgeGainSet::from_pairs(g, {{0, 1, 1.0, 1.0},
                                                {0, 1, 1.0, 1.0},
                                                {1, 2, 1.0, 1.0},
                                                {2, 1, 1.0, 1.0}}),
                    std::invalid_argument);  // duplicate key, (1,0) missing
    CHECK_THROWS_AS(EdgeGainSet::from_pairs(g, {{0, 1, 1.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("build_LK") {
    SUBCASE("uniform gains reduce to k (L kron I2)") {
        for (auto g : {CouplingGraph::chain(4), CouplingGraph::complete(3)}) {
            const double k = 7.25;
            const Mat L = g.laplacian();
            Mat expect = Mat::Zero(2 * g.node_count(), 2 * g.node_count());
            for (int i = 0; i < g.node_count(); ++i)
                for (int j = 0; j < g.node_count(); ++j) {
                    expect(2 * i, 2 * j) = k * L(i, j);
                    expect(2 * i + 1, 2 * j + 1) = k * L(i, j);
                }
            CHECK(build_LK(g, EdgeGainSet::uniform(g, k)).isApprox(expect, 0.0));
        }
    }
    SUBCASE("zero gains give the zero matrix") {
        CouplingGraph g = CouplingGraph::chain(4);
        CHECK(build_LK(g, EdgeGainSet::zero(g)).norm() == 0.0);
    }
    SUBCASE("two-node block structure") {
        CouplingGraph g = CouplingGraph::chain(2);
        auto gains = EdgeGainSet::from_pairs(g, {{0, 1, 2.0, 3.0}, {1, 0, 5.0, 7.0}});
        Mat expect(4, 4);
        expect << 2, 0, -2, 0,
                  0, 3, 0, -3,
                 -5, 0, 5, 0,
                  0, -7, 0, 7;
        CHECK(build_LK(g, gains).isApprox(expect, 0.0));
    }
    SUBCASE("block rows sum to zero and the map is linear in the gains") {
        CouplingGraph g = CouplingGraph::complete(4);
        std::mt19937 rng(21);
        std::uniform_real_distribution<double> d(0.0, 10.0);
        auto random_gains = [&] {
            std::vector<Vec2> entries(static_cast<size_t>(g.edge_count()));
            for (auto& e : entries) e = Vec2(d(rng), d(rng));
            return EdgeGainSet(g, entries);
        };
        for (int trial = 0; trial < 10; ++trial) {
            EdgeGainSet g1 = random_gains();
            EdgeGainSet g2 = random_gains();
            const double a = d(rng), b = d(rng);
            std::vector<Vec2> combo(static_cast<size_t>(g.edge_count()));
            for (int e = 0; e < g.edge_count(); ++e) combo[static_cast<size_t>(e)] = a * g1[e] + b * g2[e];
            const Mat lhs = build_LK(g, EdgeGainSet(g, combo));
            const Mat rhs = a * build_LK(g, g1) + b * build_LK(g, g2);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);

            const Mat M = build_LK(g, g1);
            for (int i = 0; i < g.node_count(); ++i)
                for (int d2 = 0; d2 < 2; ++d2)
                    CHECK(std::abs(M.row(2 * i + d2).sum()) < 1e-12);
        }
    }
    SUBCASE("consensus vectors are annihilated") {
        CouplingGraph g = CouplingGraph::chain(5);
        Vec x(10);
        for (int i = 0; i < 5; ++i) x.segment<2>(2 * i) = Vec2(0.3, -1.1);
        CHECK((build_LK(g, EdgeGainSet::uniform(g, 11.0)) * x).norm() < 1e-12);
    }
    SUBCASE("gain/edge mismatch is a domain error") {
        CouplingGraph g = CouplingGraph::chain(4);
        CHECK_THROWS_AS(build_LK(g, EdgeGainSet::uniform(CouplingGraph::chain(3), 1.0)),
                        std::invalid_argument);
    }
}

}  // TEST_SUITE
