#pragma once

#include <cstdint>
#include <vector>

namespace seg {

/// Disjoint train / validation / test node index sets, each sorted ascending.
struct Split {
  std::vector<std::int32_t> train;
  std::vector<std::int32_t> val;
  std::vector<std::int32_t> test;

  /// Throws ConfigError on overlap, duplicates, or out-of-range indices.
  void validate(std::int64_t num_nodes) const;
};

}  // namespace seg
