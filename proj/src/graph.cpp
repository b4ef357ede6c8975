#include "curegraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "curegraph/error.hpp"

namespace curegraph {

std::size_t MultiModalGraph::n_modalities() const {
  return static_cast<std::size_t>(std::count(modalities.begin(), modalities.end(), true));
}

std::size_t MultiModalGraph::node(std::size_t circle, Modality m) const {
  const auto mi = static_cast<std::size_t>(m);
  if (!modalities[mi]) return npos;
  std::size_t block = 0;
  for (std::size_t k = 0; k < mi; ++k)
    if (modalities[k]) ++block;
  return block * n_circles + circle;
}

Modality MultiModalGraph::modality_of(std::size_t node) const {
  return present().at(node / n_circles);
}

std::vector<Modality> MultiModalGraph::present() const {
  std::vector<Modality> out;
  for (Modality m : kModalities)
    if (modalities[static_cast<std::size_t>(m)]) out.push_back(m);
  return out;
}

double angular_weight(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ArgumentError("angular_weight: dimension mismatch");
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw DegenerateInputError("angular_weight: zero vector");
  const double c = std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
  return 1.0 - std::acos(c) / std::numbers::pi;
}

double inter_weight(double w1, double distance) {
  const double d = distance > 0.0 ? distance : kZeroDistanceGuard;
  return w1 / std::log(d + 1.0);
}

MultiModalGraph build_graph(const Mat& h_text, const Mat& h_visual, const Mat& h_poi,
                            const SpatialContext& ctx, const GraphOptions& opts) {
  const std::array<const Mat*, 3> feats = {&h_text, &h_visual, &h_poi};
  const std::size_t n = ctx.n;
  MultiModalGraph g;
  g.n_circles = n;
  g.modalities = opts.modalities;
  if (g.n_modalities() == 0) throw ArgumentError("build_graph: every modality is masked");
  for (std::size_t m = 0; m < 3; ++m) {
    if (!opts.modalities[m]) continue;
    if (static_cast<std::size_t>(feats[m]->rows()) != n)
      throw IntegrityError("build_graph: " + std::string(to_string(static_cast<Modality>(m))) +
                           " features have " + std::to_string(feats[m]->rows()) +
                           " rows for " + std::to_string(n) + " circles");
  }
  auto row = [&](Modality m, std::size_t i) -> Vec {
    return feats[static_cast<std::size_t>(m)]->row(i).transpose();
  };

  const auto mods = g.present();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < mods.size(); ++a)
      for (std::size_t b = a + 1; b < mods.size(); ++b) {
        const double w = angular_weight(row(mods[a], i), row(mods[b], i));
        g.edges.push_back({g.node(i, mods[a]), g.node(i, mods[b]), w, EdgeKind::intra});
      }
  }

  if (opts.inter_edges && n > 1) {
    const bool reuse = ctx.k == opts.top_k && ctx.topk.size() == n;
    const auto topk = reuse ? ctx.topk : top_k_candidates(ctx.S, opts.top_k);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j : topk[i]) pairs.emplace(std::min(i, j), std::max(i, j));
    for (Modality m : mods) {
      for (const auto& [i, j] : pairs) {
        const double w1 = angular_weight(row(m, i), row(m, j));
        g.edges.push_back({g.node(i, m), g.node(j, m), inter_weight(w1, ctx.D(i, j)),
                           EdgeKind::inter});
      }
    }
  }
  return g;
}

Mat renormalized_laplacian(const MultiModalGraph& g) {
  const std::size_t N = g.node_count();
  Mat a = Mat::Identity(N, N);
  for (const auto& e : g.edges) {
    a(e.u, e.v) += e.weight;
    a(e.v, e.u) += e.weight;
  }
  Vec dinv(N);
  for (std::size_t i = 0; i < N; ++i) dinv[i] = 1.0 / std::sqrt(a.row(i).sum());
  Mat p(N, N);
  for (std::size_t i = 0; i < N; ++i) {
    p(i, i) = a(i, i) * dinv[i] * dinv[i];
    for (std::size_t j = i + 1; j < N; ++j) {
      const double v = a(i, j) * dinv[i] * dinv[j];
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return p;
}

Mat stack_node_features(const MultiModalGraph& g, const Mat& h_text, const Mat& h_visual,
                        const Mat& h_poi) {
  const std::array<const Mat*, 3> feats = {&h_text, &h_visual, &h_poi};
  const auto mods = g.present();
  const auto d = feats[static_cast<std::size_t>(mods.front())]->cols();
  Mat h(g.node_count(), d);
  for (std::size_t b = 0; b < mods.size(); ++b)
    h.middleRows(static_cast<Eigen::Index>(b * g.n_circles), g.n_circles) =
        *feats[static_cast<std::size_t>(mods[b])];
  return h;
}

std::string edges_to_csv(const MultiModalGraph& g) {
  std::string out = "# n_circles=" + std::to_string(g.n_circles) + " modalities=";
  const char tags[3] = {'t', 'v', 'p'};
  for (std::size_t m = 0; m < 3; ++m)
    if (g.modalities[m]) out += tags[m];
  out += "\nu,v,weight,kind\n";
  char buf[64];
  for (const auto& e : g.edges) {
    std::snprintf(buf, sizeof buf, "%.17g", e.weight);
    out += std::to_string(e.u) + "," + std::to_string(e.v) + "," + buf + "," +
           (e.kind == EdgeKind::intra ? "intra" : "inter") + "\n";
  }
  return out;
}

MultiModalGraph edges_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  MultiModalGraph g;
  if (!std::getline(in, line) || line.rfind("# n_circles=", 0) != 0)
    throw FormatError("edge list: missing '# n_circles=' header", 0);
  {
    const auto sp = line.find(" modalities=");
    if (sp == std::string::npos) throw FormatError("edge list: missing modalities", 0);
    g.n_circles = std::stoull(line.substr(12, sp - 12));
    const std::string tags = line.substr(sp + 12);
    g.modalities = {tags.find('t') != std::string::npos, tags.find('v') != std::string::npos,
                    tags.find('p') != std::string::npos};
  }
  std::uint64_t offset = line.size() + 1;
  if (!std::getline(in, line) || line != "u,v,weight,kind")
    throw FormatError("edge list: expected column header u,v,weight,kind", offset);
  offset += line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    Edge e;
    char kind[16] = {0};
    unsigned long long u = 0, v = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf,%15s", &u, &v, &e.weight, kind) != 4)
      throw FormatError("edge list: malformed row", offset);
    e.u = u;
    e.v = v;
    const std::string k = kind;
    if (k == "intra") {
      e.kind = EdgeKind::intra;
    } else if (k == "inter") {
      e.kind = EdgeKind::inter;
    } else {
      throw FormatError("edge list: unknown edge kind '" + k + "'", offset);
    }
    if (e.u >= g.node_count() || e.v >= g.node_count())
      throw IntegrityError("edge list: node id out of range");
    g.edges.push_back(e);
    offset += line.size() + 1;
  }
  return g;
}

}  // namespace curegraph
