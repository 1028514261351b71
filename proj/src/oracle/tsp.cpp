#include "skyherd/tsp.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <limits>
#include <string>

#include "skyherd/errors.hpp"

namespace skyherd {

int manhattan(GridPos a, GridPos b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

PathCostTable::PathCostTable(std::vector<GridPos> cities, int exact_limit)
    : cities_(std::move(cities)) {
  const int n = size();
  if (n > exact_limit || n > 31) {
    throw CapacityError("exact solver limited to " + std::to_string(exact_limit) +
                        " cities, got " + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (cities_[static_cast<std::size_t>(i)] == cities_[static_cast<std::size_t>(j)]) {
        throw ContractViolation("duplicate city at index " + std::to_string(j));
      }
    }
  }
  if (n == 0) return;

  std::vector<int> dist(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      dist[static_cast<std::size_t>(i * n + j)] =
          manhattan(cities_[static_cast<std::size_t>(i)], cities_[static_cast<std::size_t>(j)]);
    }
  }

  const std::uint32_t subsets = 1u << n;
  suffix_.assign(static_cast<std::size_t>(subsets) * static_cast<std::size_t>(n), 0);
  // Subsets are visited in increasing numeric order, so S \ {k} is always
  // final before S.
  for (std::uint32_t set = 1; set < subsets; ++set) {
    for (int j = 0; j < n; ++j) {
      if (set & (1u << j)) continue;
      int best = std::numeric_limits<int>::max();
      for (std::uint32_t rest = set; rest != 0; rest &= rest - 1) {
        const int k = std::countr_zero(rest);
        const int candidate = dist[static_cast<std::size_t>(j * n + k)] + suffix(set & ~(1u << k), k);
        best = std::min(best, candidate);
      }
      suffix_[static_cast<std::size_t>(set) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
          static_cast<std::uint16_t>(best);
    }
  }
}

int PathCostTable::cost_from(GridPos from, std::uint32_t remaining) const {
  if (remaining == 0) return 0;
  int best = std::numeric_limits<int>::max();
  for (std::uint32_t rest = remaining; rest != 0; rest &= rest - 1) {
    const int k = std::countr_zero(rest);
    best = std::min(best, manhattan(from, cities_[static_cast<std::size_t>(k)]) +
                              suffix(remaining & ~(1u << k), k));
  }
  return best;
}

std::vector<int> PathCostTable::best_order(GridPos from, std::uint32_t remaining) const {
  std::vector<int> order;
  int budget = cost_from(from, remaining);
  while (remaining != 0) {
    // Smallest index that still completes an optimal path.
    for (std::uint32_t rest = remaining; rest != 0; rest &= rest - 1) {
      const int k = std::countr_zero(rest);
      const int leg = manhattan(from, cities_[static_cast<std::size_t>(k)]);
      if (leg + suffix(remaining & ~(1u << k), k) == budget) {
        order.push_back(k);
        budget -= leg;
        from = cities_[static_cast<std::size_t>(k)];
        remaining &= ~(1u << k);
        break;
      }
    }
  }
  return order;
}

Tour solve_open_tsp(const TspInstance& instance, int exact_limit) {
  const PathCostTable table(instance.cities, exact_limit);
  Tour tour;
  tour.length = table.cost_from(instance.start, table.full_mask());
  tour.order = table.best_order(instance.start, table.full_mask());
  return tour;
}

}  // namespace skyherd
