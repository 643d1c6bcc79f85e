#pragma once

#include <cstddef>
#include <vector>

#include "gcn/graph.hpp"

namespace gcn {

/// Node coloring with dense ids numbered by first occurrence in node order.
struct Coloring {
  std::vector<std::size_t> colors;
  std::size_t round = 0;

  std::size_t distinct() const;
  static Coloring uniform(std::size_t n);
  /// Renumbers arbitrary ids into canonical first-occurrence order.
  static Coloring canonical(const std::vector<std::size_t>& ids, std::size_t round = 0);

  friend bool operator==(const Coloring&, const Coloring&) = default;
};

/// 1-dimensional Weisfeiler-Lehman refinement. Each round recolors node i
/// by the signature (own color, sorted neighbor colors), numbered through an
/// exact signature table. Stops once a round no longer splits any class, or
/// after `max_rounds`. The returned history starts with the canonicalized
/// initial coloring and ends with the stable one.
std::vector<Coloring> wl1_refine(const SparseGraph& g, const Coloring& initial,
                                 std::size_t max_rounds);

/// True iff every color class of `finer` lies inside one class of `coarser`.
bool partition_refines(const Coloring& coarser, const Coloring& finer);

/// True iff both colorings induce the same partition.
bool same_partition(const Coloring& a, const Coloring& b);

}  // namespace gcn
