#pragma once

#include <span>
#include <vector>

#include "curegraph/linalg.hpp"
#include "curegraph/types.hpp"

namespace curegraph {

inline constexpr double kEarthRadiusKm = 6371.0;
// Replaces a zero distance inside ln(D + 1) so that coincident circles get a
// large but finite coefficient.
inline constexpr double kZeroDistanceGuard = 1e-6;

double haversine_km(LatLon a, LatLon b);

/// Pairwise great-circle distances divided by the largest one. Throws
/// DegenerateInputError when every circle sits on the same point.
Mat normalized_distance_matrix(std::span<const LatLon> points);

struct TfidfVector {
  Vec weights;  // one entry per category
};

/// tf = count / circle total; idf = ln((1 + n) / (1 + df)) + 1.
std::vector<TfidfVector> tfidf_vectors(const std::vector<std::vector<std::size_t>>& category_counts);

/// Cosine similarity; 0 when either vector is zero.
double functional_similarity(const TfidfVector& u, const TfidfVector& v);
Mat functional_similarity_matrix(const std::vector<TfidfVector>& vectors);

/// S_ij = F_ij / ln(D_ij + 1) off the diagonal, S_ii = 0.
double autocorrelation_coefficient(double similarity, double distance);
Mat spatial_autocorrelation(const Mat& F, const Mat& D);

/// For every row i, the (at most) K column indices j != i with the largest
/// S_ij, descending, ties broken by ascending index.
std::vector<std::vector<std::size_t>> top_k_candidates(const Mat& S, std::size_t k);

struct SpatialContext {
  std::size_t n = 0;
  Mat D;
  Mat F;
  Mat S;
  std::size_t k = 0;  // list length requested for topk
  std::vector<std::vector<std::size_t>> topk;
};

SpatialContext build_spatial_context(const Dataset& ds, std::size_t k);
SpatialContext build_spatial_context(std::span<const LatLon> points,
                                     const std::vector<std::vector<std::size_t>>& category_counts,
                                     std::size_t k);

}  // namespace curegraph
