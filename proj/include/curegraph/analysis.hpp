#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "curegraph/linalg.hpp"

namespace curegraph {

struct StreetEmbeddings {
  std::vector<std::string> street_ids;  // sorted
  Mat means;                            // one row per street
  std::vector<std::size_t> counts;
  std::vector<std::string> warnings;  // streets skipped for having no circle
};

/// Per-street mean of member-circle embeddings. `streets` lists every known
/// street; those without members are skipped with a warning. Every circle
/// must be assigned.
StreetEmbeddings aggregate_streets(const Mat& embeddings, const std::vector<std::string>& circle_ids,
                                   const std::map<std::string, std::string>& assignment,
                                   const std::vector<std::string>& streets = {});

struct SimilarCircle {
  std::string id;
  std::size_t index = 0;
  double score = 0.0;
};

/// The `top_n` circles most cosine-similar to `query_id`, self excluded,
/// ties broken by ascending id.
std::vector<SimilarCircle> similar_circles(const std::string& query_id,
                                           const std::vector<std::string>& circle_ids,
                                           const Mat& embeddings, std::size_t top_n);

struct KMeansResult {
  std::vector<std::size_t> assignments;
  Mat centroids;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each Lloyd assignment step
  std::size_t iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until the assignment stops
/// changing or max_iter is reached.
KMeansResult kmeans(const Mat& x, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

/// Final inertia for every k in [k_min, k_max].
std::vector<double> elbow(const Mat& x, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                          std::size_t max_iter = 300);

struct PcaResult {
  Mat projected;   // rows x dims
  Mat components;  // dims x cols, unit rows
  Vec eigenvalues;
  Vec explained_ratio;
};

/// Projection onto the top `dims` principal axes of the mean-centred data.
/// Each axis is signed so that its largest-magnitude loading is positive.
PcaResult pca_project(const Mat& x, std::size_t dims = 2);

struct Correlation {
  double pcc = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation with a two-sided p-value from Student's t with N - 2
/// degrees of freedom.
Correlation pearson(const Vec& x, const Vec& y);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace curegraph
