#pragma once

#include <cstdint>
#include <vector>

#include "skyherd/grid_world.hpp"

namespace skyherd {

int manhattan(GridPos a, GridPos b);

struct TspInstance {
  GridPos start;
  std::vector<GridPos> cities;  // distinct
};

// Open path from the start through every city, not returning.
struct Tour {
  std::vector<int> order;
  int length = 0;
};

inline constexpr int kExactCityLimit = 17;

// Held-Karp table over suffixes of an open tour. Entry (S, j) holds the
// length of the shortest path that starts at city j (j not in S) and visits
// every city in S. Because no entry depends on where the agent stands, one
// table answers "optimal remaining length from any cell, for any remaining
// subset" in O(|subset|).
class PathCostTable {
 public:
  // Throws CapacityError above `exact_limit` cities and ContractViolation on
  // duplicate cities.
  explicit PathCostTable(std::vector<GridPos> cities, int exact_limit = kExactCityLimit);

  int size() const { return static_cast<int>(cities_.size()); }
  const std::vector<GridPos>& cities() const { return cities_; }
  std::uint32_t full_mask() const { return size() == 0 ? 0u : (1u << size()) - 1u; }

  // Shortest open path from `from` visiting every city whose bit is set.
  int cost_from(GridPos from, std::uint32_t remaining) const;

  // Lexicographically smallest optimal visiting order from `from`.
  std::vector<int> best_order(GridPos from, std::uint32_t remaining) const;

 private:
  int suffix(std::uint32_t set, int city) const {
    return suffix_[static_cast<std::size_t>(set) * cities_.size() + static_cast<std::size_t>(city)];
  }

  std::vector<GridPos> cities_;
  std::vector<std::uint16_t> suffix_;
};

// Exact minimum-length open tour; ties go to the lexicographically smallest
// order. Throws CapacityError above `exact_limit` cities.
Tour solve_open_tsp(const TspInstance& instance, int exact_limit = kExactCityLimit);

}  // namespace skyherd
