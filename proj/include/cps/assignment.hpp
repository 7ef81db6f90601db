#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "cps/criticality.hpp"
#include "cps/model.hpp"
#include "cps/safety.hpp"

namespace cps {

struct AssignOptions {
  SlopeOrder order = SlopeOrder::sorted;
  bool injective = false;  // forbid assigning one architecture twice
};

// Cost-minimal catalog mapping. `arch_of[i]` indexes model.architectures;
// cost ties resolve to the lexicographically smallest id sequence. `found`
// false means no mapping keeps the aggregate margin nonnegative.
struct Assignment {
  bool found = false;
  std::vector<int> arch_of;
  double total_cost = 0.0;
  SafetyVerdict verdict;
  std::vector<double> contributions;  // worst-case drop D_i at the assigned time
  SlopeOrder order = SlopeOrder::sorted;
  long long nodes = 0;  // architecture placements explored
};

// Try every mapping, subsystem 0 outermost, candidates in id order. Throws
// std::runtime_error when the catalog admits more than 1e8 mappings; use
// branch_and_bound for those.
Assignment enumerate_optimal(const Model& m, const SciTable& sci,
                             const AssignOptions& opts = {});

// Same result contract without the size guard. Prunes with per-subsystem
// dominance (skipped in injective mode, where a dominated entry may still
// be needed) and an additive cost lower bound over the remaining
// subsystems, each held to the margin budget left by the best case of the
// others.
Assignment branch_and_bound(const Model& m, const SciTable& sci,
                            const AssignOptions& opts = {});

// Mapping ids, cost, margin, per-subsystem contributions, and a content
// fingerprint of the rate table the search ran against (timing excluded).
nlohmann::json to_json(const Assignment& a, const Model& m, const SciTable& sci);

}  // namespace cps
