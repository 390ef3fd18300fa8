#include "octforest/search.hpp"

namespace octforest {

namespace {

void search_descend(Dimension dm, std::span<const Octant> leaves, const Octant& a,
                    const std::vector<int>& queries, const MatchCallback& match,
                    SearchStats* stats) {
  if (leaves.empty()) return;
  bool is_leaf = leaves.size() == 1 && leaves[0] == a;
  if (stats && !is_leaf) stats->octant_visits++;

  std::vector<int> retained;
  retained.reserve(queries.size());
  for (int q : queries) {
    if (stats) (is_leaf ? stats->leaf_match_calls : stats->match_calls)++;
    if (match(a, is_leaf, q)) retained.push_back(q);
  }
  if (retained.empty() || is_leaf) return;

  std::array<size_t, 9> k{};
  split_array(dm, leaves, a, std::span<size_t>(k.data(), size_t(dm.children()) + 1));
  if (stats) stats->split_calls++;
  for (int i = 0; i < dm.children(); ++i) {
    search_descend(dm, leaves.subspan(k[size_t(i)], k[size_t(i) + 1] - k[size_t(i)]),
                   child(dm, a, i), retained, match, stats);
  }
}

}  // namespace

void search(const Forest& forest, int num_queries, const MatchCallback& match,
            SearchStats* stats) {
  OF_CHECK(num_queries >= 0);
  std::vector<int> queries(static_cast<size_t>(num_queries), 0);
  for (int q = 0; q < num_queries; ++q) queries[size_t(q)] = q;
  for (uint32_t t = 0; t < forest.num_trees(); ++t) {
    const auto& leaves = forest.leaves[t];
    if (leaves.empty()) continue;
    search_descend(forest.dim, leaves, root_octant(t), queries, match, stats);
  }
}

}  // namespace octforest
