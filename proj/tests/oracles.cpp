#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "curegraph/rng.hpp"

namespace oracle {

namespace {

// Unit vector on the sphere for a latitude/longitude pair in degrees.
std::array<double, 3> unit(curegraph::LatLon p) {
  const double lat = p.lat * std::numbers::pi / 180.0;
  const double lon = p.lon * std::numbers::pi / 180.0;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

double cosine(const std::map<std::size_t, double>& a, const std::map<std::size_t, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, v] : a) {
    na += v * v;
    const auto it = b.find(k);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [k, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double guarded_log1p(double d) { return std::log((d > 0.0 ? d : 1e-6) + 1.0); }

// The cosine uses Eigen's reductions so that its rounding matches the
// library bit for bit; edge membership is what this oracle decides on its own.
double angular(const Vec& a, const Vec& b) {
  const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return 1.0 - std::acos(c) / std::numbers::pi;
}

}  // namespace

Spatial brute_spatial(const std::vector<curegraph::LatLon>& points,
                      const std::vector<std::vector<std::size_t>>& counts, std::size_t k) {
  const std::size_t n = points.size();
  Spatial s;
  s.D = Mat::Zero(n, n);
  double longest = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto a = unit(points[i]);
      const auto b = unit(points[j]);
      const double chord = std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
      s.D(i, j) = 2.0 * curegraph::kEarthRadiusKm * std::asin(std::min(1.0, chord / 2.0));
      longest = std::max(longest, s.D(i, j));
    }
  s.D /= longest;

  std::map<std::size_t, std::size_t> df;
  for (const auto& row : counts)
    for (std::size_t c = 0; c < row.size(); ++c)
      if (row[c] > 0) ++df[c];
  std::vector<std::map<std::size_t, double>> tfidf(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t v : counts[i]) total += static_cast<double>(v);
    for (std::size_t c = 0; c < counts[i].size(); ++c) {
      if (counts[i][c] == 0) continue;
      const double idf =
          std::log(static_cast<double>(n + 1) / static_cast<double>(df[c] + 1)) + 1.0;
      tfidf[i][c] = static_cast<double>(counts[i][c]) / total * idf;
    }
  }

  s.F = Mat::Zero(n, n);
  s.S = Mat::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      s.F(i, j) = i == j ? (tfidf[i].empty() ? 0.0 : 1.0) : cosine(tfidf[i], tfidf[j]);
      if (i != j) s.S(i, j) = s.F(i, j) / guarded_log1p(s.D(i, j));
    }

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(-s.S(i, j), j);
    std::sort(cand.begin(), cand.end());
    std::vector<std::size_t> list;
    for (std::size_t r = 0; r < std::min(k, cand.size()); ++r) list.push_back(cand[r].second);
    s.topk.push_back(list);
  }
  return s;
}

std::vector<EdgeRecord> enumerate_edges(const Mat& ht, const Mat& hv, const Mat& hp,
                                        const Mat& D,
                                        const std::vector<std::vector<std::size_t>>& topk) {
  const std::size_t n = static_cast<std::size_t>(ht.rows());
  const Mat* feats[3] = {&ht, &hv, &hp};
  auto feature = [&](std::size_t node) -> Vec {
    return feats[node / n]->row(static_cast<Eigen::Index>(node % n)).transpose();
  };
  auto selected = [&](std::size_t i, std::size_t j) {
    return std::find(topk[i].begin(), topk[i].end(), j) != topk[i].end();
  };
  std::vector<EdgeRecord> out;
  for (std::size_t u = 0; u < 3 * n; ++u)
    for (std::size_t v = u + 1; v < 3 * n; ++v) {
      const std::size_t cu = u % n, cv = v % n, mu = u / n, mv = v / n;
      if (cu == cv && mu != mv) {
        out.push_back({u, v, angular(feature(u), feature(v)), false});
      } else if (mu == mv && cu != cv && (selected(cu, cv) || selected(cv, cu))) {
        const double w1 = angular(feature(u), feature(v));
        out.push_back({u, v, w1 / guarded_log1p(D(cu, cv)), true});
      }
    }
  return out;
}

Mat laplacian(std::size_t nodes, const std::vector<EdgeRecord>& edges) {
  Mat a = Mat::Identity(nodes, nodes);
  for (const auto& e : edges) {
    a(e.u, e.v) += e.weight;
    a(e.v, e.u) += e.weight;
  }
  std::vector<double> deg(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) deg[i] += a(i, j);
  Mat p(nodes, nodes);
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) p(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
  return p;
}

Mat gcn_layer(const Mat& p, const Mat& h, const Mat& h0, const Mat& w, double alpha,
              double beta_k) {
  const auto n = h.rows(), d = h.cols();
  Mat mixed(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < d; ++c) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) acc += p(i, j) * h(j, c);
      mixed(i, c) = (1.0 - alpha) * acc + alpha * h0(i, c);
    }
  Mat out(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < d; ++c) {
      double acc = 0.0;
      for (Eigen::Index r = 0; r < d; ++r)
        acc += mixed(i, r) * ((r == c ? 1.0 - beta_k : 0.0) + beta_k * w(r, c));
      out(i, c) = 1.0 / (1.0 + std::exp(-acc));
    }
  return out;
}

double spectral_radius(const Mat& m, std::size_t iters) {
  Vec x = Vec::Ones(m.rows());
  double lambda = 0.0;
  for (std::size_t t = 0; t < iters; ++t) {
    const Vec y = m * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    lambda = x.dot(y) / x.squaredNorm();
    x = y / norm;
  }
  return std::abs(lambda);
}

Mat central_difference(Mat& x, const std::function<double()>& f, double h) {
  Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double keep = x(i, j);
      x(i, j) = keep + h;
      const double up = f();
      x(i, j) = keep - h;
      const double down = f();
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  return g;
}

double max_relative_error(const Mat& analytic, const Mat& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i)
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j), n = numeric(i, j);
      const double scale = std::max({1.0, std::abs(a), std::abs(n)});
      worst = std::max(worst, std::abs(a - n) / scale);
    }
  return worst;
}

std::vector<curegraph::LatLon> random_points(std::size_t n, std::uint64_t seed) {
  curegraph::Rng rng(seed);
  std::vector<curegraph::LatLon> out(n);
  for (auto& p : out) p = {rng.uniform(30.5, 30.7), rng.uniform(114.2, 114.4)};
  return out;
}

std::vector<std::vector<std::size_t>> random_counts(std::size_t n, std::size_t categories,
                                                    std::uint64_t seed) {
  curegraph::Rng rng(seed);
  std::vector<std::vector<std::size_t>> out(n, std::vector<std::size_t>(categories, 0));
  for (auto& row : out) {
    for (auto& c : row) c = rng.bernoulli(0.5) ? rng.range(1, 6) : 0;
    if (std::all_of(row.begin(), row.end(), [](std::size_t c) { return c == 0; })) row[0] = 1;
  }
  return out;
}

Mat random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale) {
  curegraph::Rng rng(seed);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace oracle
