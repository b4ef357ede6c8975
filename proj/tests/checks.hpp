#pragma once

// Measurements shared by the doctest suites and the acceptance harness. Each
// function builds a small fixed instance, runs the library against an oracle
// and reports the discrepancy; the callers decide what counts as passing.

#include <cstdint>
#include <string>
#include <vector>

namespace checks {

struct GradientCheck {
  std::string loss;
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
};

// Triplet, InfoNCE, visual, text alignment, supervised contrastive and the
// SMGCN objective, each on an instance with at most 64 parameters.
std::vector<GradientCheck> gradient_checks();

struct SpatialCheck {
  double max_d_error = 0.0;
  double max_f_error = 0.0;
  double max_s_error = 0.0;
  bool topk_equal = false;
};
SpatialCheck spatial_check(std::size_t n, std::size_t k, std::uint64_t seed);

struct GraphCheck {
  bool same_edge_set = false;
  double max_weight_error = 0.0;
  double max_laplacian_error = 0.0;
  bool symmetric = false;
  double spectral_radius = 0.0;
  std::size_t intra = 0;
  std::size_t inter = 0;
};
GraphCheck graph_check(std::size_t n, std::size_t k, std::uint64_t seed);

struct DegeneracyCheck {
  double alpha_one_max_diff = 0.0;  // output change after perturbing P
  double plain_gcn_max_diff = 0.0;  // alpha = eta = 0 against sigmoid(P H)
};
DegeneracyCheck degeneracy_check(std::uint64_t seed);

}  // namespace checks
