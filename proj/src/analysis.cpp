#include "curegraph/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "curegraph/error.hpp"
#include "curegraph/rng.hpp"

namespace curegraph {

StreetEmbeddings aggregate_streets(const Mat& embeddings, const std::vector<std::string>& circle_ids,
                                   const std::map<std::string, std::string>& assignment,
                                   const std::vector<std::string>& streets) {
  if (static_cast<std::size_t>(embeddings.rows()) != circle_ids.size())
    throw ArgumentError("aggregate_streets: one embedding row per circle is required");
  std::map<std::string, std::vector<std::size_t>> members;
  for (const auto& s : streets) members[s];
  for (std::size_t i = 0; i < circle_ids.size(); ++i) {
    const auto it = assignment.find(circle_ids[i]);
    if (it == assignment.end())
      throw ArgumentError("aggregate_streets: circle '" + circle_ids[i] + "' has no street");
    members[it->second].push_back(i);
  }
  for (const auto& [circle, street] : assignment) members[street];

  StreetEmbeddings out;
  for (const auto& [street, rows] : members) {
    if (rows.empty()) {
      out.warnings.push_back("street '" + street + "' has no circles; skipped");
      continue;
    }
    out.street_ids.push_back(street);
    out.counts.push_back(rows.size());
  }
  out.means = Mat::Zero(static_cast<Eigen::Index>(out.street_ids.size()), embeddings.cols());
  for (std::size_t s = 0; s < out.street_ids.size(); ++s) {
    const auto& rows = members[out.street_ids[s]];
    for (std::size_t i : rows) out.means.row(static_cast<Eigen::Index>(s)) += embeddings.row(i);
    out.means.row(static_cast<Eigen::Index>(s)) /= static_cast<double>(rows.size());
  }
  return out;
}

std::vector<SimilarCircle> similar_circles(const std::string& query_id,
                                           const std::vector<std::string>& circle_ids,
                                           const Mat& embeddings, std::size_t top_n) {
  const auto it = std::find(circle_ids.begin(), circle_ids.end(), query_id);
  if (it == circle_ids.end()) throw ArgumentError("unknown circle id '" + query_id + "'");
  const auto q = static_cast<std::size_t>(it - circle_ids.begin());
  const Vec qv = embeddings.row(q).transpose();
  const double qn = qv.norm();
  std::vector<SimilarCircle> all;
  for (std::size_t i = 0; i < circle_ids.size(); ++i) {
    if (i == q) continue;
    const double n = embeddings.row(i).norm();
    double score = (qn == 0.0 || n == 0.0) ? 0.0 : embeddings.row(i).dot(qv) / (qn * n);
    score = std::clamp(score, -1.0, 1.0);
    all.push_back({circle_ids[i], i, score});
  }
  std::sort(all.begin(), all.end(), [](const SimilarCircle& a, const SimilarCircle& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (all.size() > top_n) all.resize(top_n);
  return all;
}

namespace {

double assign(const Mat& x, const Mat& c, std::vector<std::size_t>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
      const double d = (x.row(i) - c.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<std::size_t>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

Mat plus_plus_init(const Mat& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Mat c(static_cast<Eigen::Index>(k), x.cols());
  c.row(0) = x.row(rng.index(n));
  Vec d2(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x.row(i) - c.row(0)).squaredNorm();
  for (std::size_t j = 1; j < k; ++j) {
    const double total = d2.sum();
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      double r = rng.uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= d2[pick];
        if (r < 0.0) break;
      }
    }
    c.row(j) = x.row(pick);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (x.row(i) - c.row(j)).squaredNorm());
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const Mat& x, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k == 0 || k > n)
    throw ArgumentError("kmeans: k = " + std::to_string(k) + " for " + std::to_string(n) +
                        " points");
  Rng rng(seed);
  KMeansResult r;
  r.centroids = plus_plus_init(x, k, rng);
  r.assignments.assign(n, 0);
  r.inertia = assign(x, r.centroids, r.assignments);
  r.inertia_history.push_back(r.inertia);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    Mat sums = Mat::Zero(static_cast<Eigen::Index>(k), x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(r.assignments[i]) += x.row(i);
      ++counts[r.assignments[i]];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] > 0) r.centroids.row(j) = sums.row(j) / static_cast<double>(counts[j]);

    std::vector<std::size_t> next(n);
    const double inertia = assign(x, r.centroids, next);
    if (inertia > r.inertia * (1.0 + 1e-12) + 1e-12)
      throw NumericError("kmeans: inertia increased during a Lloyd step");
    r.inertia_history.push_back(inertia);
    r.inertia = inertia;
    const bool fixpoint = next == r.assignments;
    r.assignments = std::move(next);
    if (fixpoint) break;
  }
  return r;
}

std::vector<double> elbow(const Mat& x, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                          std::size_t max_iter) {
  if (k_min == 0 || k_min > k_max) throw ArgumentError("elbow: empty k range");
  std::vector<double> out;
  for (std::size_t k = k_min; k <= k_max; ++k)
    out.push_back(kmeans(x, k, derive_seed(seed, k), max_iter).inertia);
  return out;
}

PcaResult pca_project(const Mat& x, std::size_t dims) {
  const auto n = x.rows();
  if (dims == 0 || static_cast<std::size_t>(n) < dims ||
      static_cast<std::size_t>(x.cols()) < dims)
    throw ArgumentError("pca_project: need at least " + std::to_string(dims) +
                        " rows and columns");
  const Mat centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov =
      (centred.transpose() * centred) / static_cast<double>(n > 1 ? n - 1 : 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericError("pca_project: eigensolver failed");
  const Vec ev = es.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
  const double total = ev.cwiseMax(0.0).sum();
  const double tol = std::max(total, 1.0) * 1e-12 * static_cast<double>(x.cols());
  if (total <= 0.0 || ev[static_cast<Eigen::Index>(dims) - 1] <= tol)
    throw DegenerateInputError("pca_project: data rank is below " + std::to_string(dims));

  PcaResult r;
  r.eigenvalues = ev.head(static_cast<Eigen::Index>(dims));
  r.explained_ratio = r.eigenvalues / total;
  r.components.resize(static_cast<Eigen::Index>(dims), x.cols());
  for (std::size_t k = 0; k < dims; ++k) {
    Vec v = vecs.col(static_cast<Eigen::Index>(k));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    r.components.row(static_cast<Eigen::Index>(k)) = v.transpose();
  }
  r.projected = centred * r.components.transpose();
  return r;
}

// Continued fraction for the incomplete beta, evaluated with the modified
// Lentz method.
namespace {
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}
}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ArgumentError("incomplete_beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw ArgumentError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

Correlation pearson(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: inputs differ in length");
  if (x.size() < 3) throw ArgumentError("pearson: need at least three samples");
  const Vec dx = x.array() - x.mean();
  const Vec dy = y.array() - y.mean();
  const double sxx = dx.squaredNorm();
  const double syy = dy.squaredNorm();
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateInputError("pearson: correlation is undefined for a constant input");
  Correlation c;
  c.pcc = std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size() - 2);
  const double one_minus = 1.0 - c.pcc * c.pcc;
  if (one_minus <= 0.0) {
    c.p_value = 0.0;
  } else {
    const double t2 = c.pcc * c.pcc * df / one_minus;
    c.p_value = incomplete_beta(0.5 * df, 0.5, df / (df + t2));
  }
  return c;
}

}  // namespace curegraph
