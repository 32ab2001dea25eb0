#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "dmimo/topology.hpp"

using namespace dmimo;

TEST(Tree, ThreeNodes) {
  const auto t = build_tree(3, 2);
  EXPECT_EQ(t.root(), 0);
  EXPECT_EQ(t.parent(0), TreeTopology::kCcu);
  EXPECT_EQ(t.children(0), (std::vector<int>{1, 2}));
  EXPECT_TRUE(t.children(1).empty());
  EXPECT_EQ(t.n_hops(), 2);
}

TEST(Tree, SingleNode) {
  const auto t = build_tree(1, 2);
  EXPECT_EQ(t.size(), 1);
  EXPECT_EQ(t.n_hops(), 1);
}

TEST(Tree, FullBinaryTreeOf255) {
  const auto t = build_tree(255, 2);
  EXPECT_EQ(t.max_depth(), 7);
  EXPECT_EQ(t.n_hops(), 8);
  for (int n = 127; n < 255; ++n) EXPECT_EQ(t.depth(n), 7);
}

TEST(Tree, RejectsEmpty) {
  EXPECT_THROW(build_tree(0, 2), std::invalid_argument);
  EXPECT_THROW(build_tree(3, 0), std::invalid_argument);
}

TEST(Tree, StructuralInvariants) {
  for (int arity : {1, 2, 3, 4}) {
    for (int m = 1; m <= 300; m += (m < 40 ? 1 : 17)) {
      const auto t = build_tree(m, arity);
      std::size_t kids = 0;
      int roots = 0;
      for (int n = 0; n < m; ++n) {
        kids += t.children(n).size();
        EXPECT_LE(static_cast<int>(t.children(n).size()), arity);
        if (t.parent(n) == TreeTopology::kCcu) ++roots;
        else EXPECT_EQ(t.depth(n), t.depth(t.parent(n)) + 1);
      }
      EXPECT_EQ(kids, static_cast<std::size_t>(m - 1));
      EXPECT_EQ(roots, 1);
      EXPECT_EQ(t.n_hops(), 1 + t.max_depth());
    }
  }
}

TEST(Tree, BinaryHopsAreCeilLog2) {
  int prev = 0;
  for (int m = 1; m <= 2000; ++m) {
    const int hops = build_tree(m, 2).n_hops();
    EXPECT_EQ(hops, static_cast<int>(std::ceil(std::log2(m + 1.0) - 1e-12))) << m;
    EXPECT_GE(hops, prev);
    prev = hops;
  }
}

TEST(Tree, OrdersVisitChildrenAndParentsFirst) {
  const auto t = build_tree(40, 3);
  const auto up = t.bottom_up_order();
  const auto down = t.top_down_order();
  ASSERT_EQ(up.size(), 40u);
  ASSERT_EQ(down.size(), 40u);
  std::vector<int> pos_up(40), pos_down(40);
  for (int i = 0; i < 40; ++i) {
    pos_up[up[i]] = i;
    pos_down[down[i]] = i;
  }
  for (int n = 1; n < 40; ++n) {
    EXPECT_LT(pos_up[n], pos_up[t.parent(n)]);
    EXPECT_GT(pos_down[n], pos_down[t.parent(n)]);
  }
}

TEST(Tree, FromParentsRejectsBadShapes) {
  using V = std::vector<int>;
  EXPECT_THROW(TreeTopology::from_parents(V{}, 2), std::invalid_argument);
  EXPECT_THROW(TreeTopology::from_parents(V{-1, -1}, 2), std::invalid_argument);
  EXPECT_THROW(TreeTopology::from_parents(V{-1, 2, 1}, 2), std::invalid_argument);
  EXPECT_THROW(TreeTopology::from_parents(V{-1, 0, 0, 0}, 2), std::invalid_argument);
  EXPECT_THROW(TreeTopology::from_parents(V{-1, 7}, 2), std::invalid_argument);
  EXPECT_NO_THROW(TreeTopology::from_parents(V{1, -1, 1}, 2));
}

TEST(Tree, NonCompleteTreeUsesDeepestNode) {
  // A chain hanging off one side of the root.
  const auto t = TreeTopology::from_parents({-1, 0, 0, 1, 3, 4}, 2);
  EXPECT_EQ(t.n_hops(), 5);
}

TEST(Tree, EdgeListRoundTrip) {
  const auto t = build_tree(10, 2);
  const std::string text = t.to_edge_list();
  EXPECT_NE(text.find("0 CCU"), std::string::npos);
  EXPECT_NE(text.find("9 4"), std::string::npos);
  std::istringstream in(text);
  const auto back = TreeTopology::from_edge_list(in, 2);
  ASSERT_EQ(back.size(), 10);
  for (int n = 0; n < 10; ++n) EXPECT_EQ(back.parent(n), t.parent(n));
}

TEST(Hops, SixtyFourNodes) {
  const auto h = hops_comparison(64);
  EXPECT_EQ(h.array_corner, 12);
  EXPECT_EQ(h.array_center, 8);
  EXPECT_EQ(h.tree, 7);
}

TEST(Hops, SingleNode) {
  const auto h = hops_comparison(1);
  EXPECT_EQ(h.array_corner, 2);
  EXPECT_EQ(h.array_center, 1);
  EXPECT_EQ(h.tree, 1);
}

TEST(Hops, LargeTree) { EXPECT_EQ(hops_comparison(255).tree, 8); }

TEST(Hops, AgreesWithFloatingPointFormula) {
  for (int m = 1; m <= 5000; ++m) {
    const auto h = hops_comparison(m);
    EXPECT_EQ(h.array_center, static_cast<int>(std::ceil(std::sqrt(m) - 1e-12))) << m;
    EXPECT_EQ(h.array_corner, static_cast<int>(std::ceil(1.5 * std::sqrt(m) - 1e-12))) << m;
  }
}
