#include "oracles.hpp"
#include "rfim/lattice.hpp"

#include <gtest/gtest.h>

using rfim::Lattice;

TEST(Lattice, SmallCases)
{
    EXPECT_EQ(Lattice(1, 3).volume(), 3u);
    EXPECT_EQ(Lattice(1, 3).edges().size(), 2u);
    EXPECT_EQ(Lattice(2, 2).volume(), 4u);
    EXPECT_EQ(Lattice(2, 2).edges().size(), 4u);
    EXPECT_EQ(Lattice(2, 3).volume(), 9u);
    EXPECT_EQ(Lattice(2, 3).edges().size(), 12u);
}

TEST(Lattice, EdgesMatchBruteForceScan)
{
    for (int d = 1; d <= 3; ++d)
        for (int n = 1; n <= 6; ++n) {
            const Lattice lat(d, n);
            const auto brute = oracle::brute_edges(d, n);
            ASSERT_EQ(lat.edges().size(), brute.size()) << "d=" << d << " n=" << n;
            EXPECT_EQ(lat.edges().size(), lat.expected_edge_count());
            for (std::size_t k = 0; k < brute.size(); ++k) {
                EXPECT_EQ(lat.edges()[k].first, brute[k].first);
                EXPECT_EQ(lat.edges()[k].second, brute[k].second);
            }
        }
}

TEST(Lattice, CoordinatesAreLexicographic)
{
    const Lattice lat(2, 3);
    const auto c0 = lat.coords(0);
    EXPECT_EQ(std::vector<int>(c0.begin(), c0.end()), (std::vector<int>{1, 1}));
    const auto c1 = lat.coords(1);
    EXPECT_EQ(std::vector<int>(c1.begin(), c1.end()), (std::vector<int>{1, 2}));
    const auto c3 = lat.coords(3);
    EXPECT_EQ(std::vector<int>(c3.begin(), c3.end()), (std::vector<int>{2, 1}));
}

TEST(Lattice, Neighbors)
{
    const Lattice path(1, 3);
    auto n1 = path.neighbors(1);
    EXPECT_EQ(std::vector<rfim::SiteIndex>(n1.begin(), n1.end()), (std::vector<rfim::SiteIndex>{0, 2}));
    auto n0 = path.neighbors(0);
    EXPECT_EQ(std::vector<rfim::SiteIndex>(n0.begin(), n0.end()), (std::vector<rfim::SiteIndex>{1}));
    EXPECT_EQ(Lattice(2, 3).neighbors(4).size(), 4u);
    EXPECT_THROW(path.neighbors(3), rfim::Error);
}

TEST(Lattice, NeighborsSymmetricAndDegreeBounded)
{
    for (int d = 1; d <= 3; ++d)
        for (int n = 1; n <= 4; ++n) {
            const Lattice lat(d, n);
            for (std::size_t i = 0; i < lat.volume(); ++i) {
                const auto nb = lat.neighbors(i);
                EXPECT_LE(nb.size(), static_cast<std::size_t>(2 * d));
                EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
                for (auto j : nb) {
                    const auto back = lat.neighbors(j);
                    EXPECT_NE(std::find(back.begin(), back.end(), i), back.end());
                }
            }
            if (n >= 2) EXPECT_EQ(lat.neighbors(0).size(), static_cast<std::size_t>(d));
        }
}

TEST(Lattice, RejectsBadInput)
{
    EXPECT_THROW(Lattice(0, 3), rfim::Error);
    EXPECT_THROW(Lattice(1, 0), rfim::Error);
    EXPECT_THROW(Lattice(3, 1000, 1 << 20), rfim::Error);
    EXPECT_THROW(Lattice(64, 2), rfim::Error);
}
