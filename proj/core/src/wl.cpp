#include "gcn/wl.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace gcn {

std::size_t Coloring::distinct() const {
  std::size_t m = 0;
  for (std::size_t c : colors) m = std::max(m, c + 1);
  return m;
}

Coloring Coloring::uniform(std::size_t n) { return {std::vector<std::size_t>(n, 0), 0}; }

Coloring Coloring::canonical(const std::vector<std::size_t>& ids, std::size_t round) {
  std::map<std::size_t, std::size_t> remap;
  Coloring c;
  c.round = round;
  c.colors.reserve(ids.size());
  for (std::size_t id : ids) {
    auto [it, inserted] = remap.try_emplace(id, remap.size());
    c.colors.push_back(it->second);
  }
  return c;
}

bool partition_refines(const Coloring& coarser, const Coloring& finer) {
  if (coarser.colors.size() != finer.colors.size()) {
    throw std::invalid_argument("partition_refines: colorings differ in size");
  }
  // Each fine class must map to exactly one coarse class.
  std::map<std::size_t, std::size_t> parent;
  for (std::size_t i = 0; i < finer.colors.size(); ++i) {
    auto [it, inserted] = parent.try_emplace(finer.colors[i], coarser.colors[i]);
    if (!inserted && it->second != coarser.colors[i]) return false;
  }
  return true;
}

bool same_partition(const Coloring& a, const Coloring& b) {
  return partition_refines(a, b) && partition_refines(b, a);
}

std::vector<Coloring> wl1_refine(const SparseGraph& g, const Coloring& initial,
                                 std::size_t max_rounds) {
  const std::size_t n = g.node_count();
  if (initial.colors.size() != n) {
    throw std::invalid_argument("wl1_refine: initial coloring has the wrong size");
  }
  if (max_rounds == 0) throw std::invalid_argument("wl1_refine: max_rounds must be >= 1");

  std::vector<Coloring> history;
  history.push_back(Coloring::canonical(initial.colors, 0));

  using Signature = std::pair<std::size_t, std::vector<std::size_t>>;
  for (std::size_t round = 1; round <= max_rounds; ++round) {
    const Coloring& prev = history.back();
    std::map<Signature, std::size_t> table;
    std::vector<std::size_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      Signature sig{prev.colors[i], {}};
      for (std::size_t j : g.neighbors(i)) sig.second.push_back(prev.colors[j]);
      std::sort(sig.second.begin(), sig.second.end());
      auto [it, inserted] = table.try_emplace(std::move(sig), table.size());
      next[i] = it->second;
    }
    Coloring c = Coloring::canonical(next, round);
    // The own color is part of the signature, so c always refines prev;
    // equal class counts therefore mean an identical partition.
    const bool stable = c.distinct() == prev.distinct();
    history.push_back(std::move(c));
    if (stable) break;
  }
  return history;
}

}  // namespace gcn
