#include "curegraph/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "curegraph/error.hpp"

namespace curegraph {
namespace {

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double haversine_km(LatLon a, LatLon b) {
  const double phi1 = radians(a.lat);
  const double phi2 = radians(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = radians(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

Mat normalized_distance_matrix(std::span<const LatLon> points) {
  const std::size_t n = points.size();
  if (n < 2) throw ArgumentError("distance matrix needs at least 2 circles");
  Mat D = Mat::Zero(n, n);
  double max_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = haversine_km(points[i], points[j]);
      D(i, j) = d;
      D(j, i) = d;
      max_d = std::max(max_d, d);
    }
  }
  if (max_d <= 0.0) throw DegenerateInputError("all circles share one location");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = D(i, j) / max_d;
      D(i, j) = v;
      D(j, i) = v;
    }
  return D;
}

std::vector<TfidfVector> tfidf_vectors(
    const std::vector<std::vector<std::size_t>>& category_counts) {
  const std::size_t n = category_counts.size();
  const std::size_t C = n == 0 ? 0 : category_counts.front().size();
  std::vector<std::size_t> df(C, 0);
  for (const auto& counts : category_counts) {
    if (counts.size() != C) throw ArgumentError("tfidf: ragged category count table");
    for (std::size_t c = 0; c < C; ++c)
      if (counts[c] > 0) ++df[c];
  }
  Vec idf(C);
  for (std::size_t c = 0; c < C; ++c)
    idf[c] = std::log((1.0 + static_cast<double>(n)) / (1.0 + static_cast<double>(df[c]))) + 1.0;

  std::vector<TfidfVector> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& counts = category_counts[i];
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    out[i].weights = Vec::Zero(C);
    if (total == 0) continue;
    for (std::size_t c = 0; c < C; ++c)
      out[i].weights[c] = static_cast<double>(counts[c]) / static_cast<double>(total) * idf[c];
  }
  return out;
}

double functional_similarity(const TfidfVector& u, const TfidfVector& v) {
  if (u.weights.size() != v.weights.size())
    throw ArgumentError("functional_similarity: vectors over different vocabularies");
  const double nu = u.weights.norm();
  const double nv = v.weights.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.weights.dot(v.weights) / (nu * nv), -1.0, 1.0);
}

Mat functional_similarity_matrix(const std::vector<TfidfVector>& vectors) {
  const std::size_t n = vectors.size();
  Mat F = Mat::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    F(i, i) = vectors[i].weights.norm() > 0.0 ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = functional_similarity(vectors[i], vectors[j]);
      F(i, j) = s;
      F(j, i) = s;
    }
  }
  return F;
}

double autocorrelation_coefficient(double similarity, double distance) {
  const double d = distance > 0.0 ? distance : kZeroDistanceGuard;
  return similarity / std::log(d + 1.0);
}

Mat spatial_autocorrelation(const Mat& F, const Mat& D) {
  if (F.rows() != D.rows() || F.cols() != D.cols() || F.rows() != F.cols())
    throw ArgumentError("spatial_autocorrelation: F and D must be square and equal-shaped");
  const auto n = F.rows();
  Mat S = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = autocorrelation_coefficient(F(i, j), D(i, j));
      S(i, j) = s;
      S(j, i) = s;
    }
  return S;
}

std::vector<std::vector<std::size_t>> top_k_candidates(const Mat& S, std::size_t k) {
  if (k < 1) throw ArgumentError("top_k_candidates: K must be at least 1");
  const auto n = static_cast<std::size_t>(S.rows());
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx;
    idx.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    const std::size_t take = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (S(i, a) != S(i, b)) return S(i, a) > S(i, b);
                        return a < b;
                      });
    idx.resize(take);
    out[i] = std::move(idx);
  }
  return out;
}

SpatialContext build_spatial_context(std::span<const LatLon> points,
                                     const std::vector<std::vector<std::size_t>>& category_counts,
                                     std::size_t k) {
  if (points.size() != category_counts.size())
    throw ArgumentError("spatial context: one category count row per circle required");
  SpatialContext ctx;
  ctx.n = points.size();
  ctx.D = normalized_distance_matrix(points);
  ctx.F = functional_similarity_matrix(tfidf_vectors(category_counts));
  ctx.S = spatial_autocorrelation(ctx.F, ctx.D);
  ctx.k = k;
  ctx.topk = top_k_candidates(ctx.S, k);
  return ctx;
}

SpatialContext build_spatial_context(const Dataset& ds, std::size_t k) {
  const auto points = ds.locations();
  return build_spatial_context(points, ds.category_counts(), k);
}

}  // namespace curegraph
