#pragma once

#include <string>
#include <vector>

namespace zsl::gradcheck {

struct GradCheckConfig {
  int seeds = 20;
  int d = 16;
  int k = 8;
  int hidden = 12;
  int embed_dim = 16;
  double eps = 1e-6;
  // Scales one analytic gradient by 2; the check must then fail. Testing aid.
  bool inject_fault = false;
};

struct GradCheckResult {
  std::string name;
  double max_rel_err;
};

// Finite-difference check of every analytic gradient in the system, one
// entry per loss, in a fixed order:
//   proto_cross_entropy, prototype_embedding, simple_ranking,
//   bidirectional_ranking, structure_triplet.
// Each loss is checked against every parameter matrix it depends on, across
// the given number of random seeds.
std::vector<GradCheckResult> run_gradcheck(const GradCheckConfig& cfg);

}  // namespace zsl::gradcheck
