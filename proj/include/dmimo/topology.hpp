#pragma once

// Node interconnect. Nodes form a rooted tree whose root attaches to the CCU;
// values accumulate upwards and broadcasts travel downwards along it.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmimo {

class TreeTopology {
 public:
  static constexpr int kCcu = -1;

  /// Builds a tree from a parent list (kCcu marks the root). Throws on
  /// multiple roots, cycles, out-of-range parents or an arity overflow.
  static TreeTopology from_parents(std::vector<int> parents, int arity) {
    const int m = static_cast<int>(parents.size());
    if (m == 0) throw std::invalid_argument("tree needs at least one node");
    if (arity < 1) throw std::invalid_argument("tree arity must be >= 1");
    TreeTopology t;
    t.arity_ = arity;
    t.parent_ = std::move(parents);
    t.children_.assign(m, {});
    int roots = 0;
    for (int i = 0; i < m; ++i) {
      int p = t.parent_[i];
      if (p == kCcu) {
        t.root_ = i;
        ++roots;
        continue;
      }
      if (p < 0 || p >= m || p == i)
        throw std::invalid_argument("node " + std::to_string(i) + " has invalid parent");
      t.children_[p].push_back(i);
    }
    if (roots != 1) throw std::invalid_argument("tree must have exactly one root");
    for (int i = 0; i < m; ++i)
      if (static_cast<int>(t.children_[i].size()) > arity)
        throw std::invalid_argument("node " + std::to_string(i) + " exceeds tree arity");

    // Depths by BFS from the root; unreached nodes mean a cycle.
    t.depth_.assign(m, -1);
    std::vector<int> queue{t.root_};
    t.depth_[t.root_] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int n = queue[q];
      for (int c : t.children_[n]) {
        t.depth_[c] = t.depth_[n] + 1;
        queue.push_back(c);
      }
    }
    if (static_cast<int>(queue.size()) != m)
      throw std::invalid_argument("tree contains a cycle or unreachable nodes");
    t.max_depth_ = *std::max_element(t.depth_.begin(), t.depth_.end());
    return t;
  }

  int size() const { return static_cast<int>(parent_.size()); }
  int root() const { return root_; }
  int arity() const { return arity_; }
  int parent(int n) const { return parent_.at(n); }
  const std::vector<int>& children(int n) const { return children_.at(n); }
  int depth(int n) const { return depth_.at(n); }
  int max_depth() const { return max_depth_; }
  /// Hops from the furthest node to the CCU, counting the root->CCU link.
  int n_hops() const { return max_depth_ + 1; }

  /// Deepest nodes first, ties by id. Every child precedes its parent.
  std::vector<int> bottom_up_order() const {
    std::vector<int> order(size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return depth_[a] > depth_[b]; });
    return order;
  }

  std::vector<int> top_down_order() const {
    auto order = bottom_up_order();
    std::reverse(order.begin(), order.end());
    return order;
  }

  /// `child parent` per line; the root's parent is written as CCU.
  std::string to_edge_list() const {
    std::ostringstream os;
    for (int i = 0; i < size(); ++i) {
      os << i << ' ';
      if (parent_[i] == kCcu) os << "CCU";
      else os << parent_[i];
      os << '\n';
    }
    return os.str();
  }

  static TreeTopology from_edge_list(std::istream& in, int arity) {
    std::vector<std::pair<int, int>> edges;
    int child = 0;
    std::string parent;
    while (in >> child >> parent) {
      edges.emplace_back(child, parent == "CCU" ? kCcu : std::stoi(parent));
    }
    std::vector<int> parents(edges.size(), -2);
    for (auto [c, p] : edges) {
      if (c < 0 || c >= static_cast<int>(parents.size()) || parents[c] != -2)
        throw std::invalid_argument("edge list node ids must be 0..M-1, each once");
      parents[c] = p;
    }
    return from_parents(std::move(parents), arity);
  }

 private:
  TreeTopology() = default;

  int arity_ = 2;
  int root_ = 0;
  int max_depth_ = 0;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<int> depth_;
};

/// Complete, level-filled arity-ary tree with breadth-first ids; node 0 is the root.
inline TreeTopology build_tree(int m, int arity) {
  if (m < 1) throw std::invalid_argument("build_tree: M must be >= 1");
  if (arity < 1) throw std::invalid_argument("build_tree: arity must be >= 1");
  std::vector<int> parents(m);
  parents[0] = TreeTopology::kCcu;
  for (int i = 1; i < m; ++i) parents[i] = (i - 1) / arity;
  return TreeTopology::from_parents(std::move(parents), arity);
}

struct HopComparison {
  int tree = 0;
  int array_corner = 0;
  int array_center = 0;
};

namespace detail {

// Smallest n with n*n*den >= num (integer ceil of sqrt(num/den)).
inline std::int64_t ceil_sqrt_ratio(std::int64_t num, std::int64_t den) {
  std::int64_t n = 0;
  while (n * n * den < num) ++n;
  return n;
}

}  // namespace detail

/// Hop counts of the three interconnects with proportionality constants of one:
/// ceil(3/2 sqrt(M)) for a corner-fed array, ceil(sqrt(M)) for a center-fed array,
/// and the exact N_hops of the complete binary tree.
inline HopComparison hops_comparison(int m) {
  if (m < 1) throw std::invalid_argument("hops_comparison: M must be >= 1");
  HopComparison h;
  h.tree = build_tree(m, 2).n_hops();
  // 3/2 sqrt(M) = sqrt(9M/4)
  h.array_corner = static_cast<int>(detail::ceil_sqrt_ratio(9LL * m, 4));
  h.array_center = static_cast<int>(detail::ceil_sqrt_ratio(m, 1));
  return h;
}

}  // namespace dmimo
