#pragma once

#include <array>
#include <string>
#include <vector>

#include "curegraph/linalg.hpp"
#include "curegraph/spatial.hpp"
#include "curegraph/types.hpp"

namespace curegraph {

enum class EdgeKind { intra, inter };

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;  // u < v
  double weight = 0.0;
  EdgeKind kind = EdgeKind::intra;
};

/// Which parts of the full graph are built. Masking a modality removes its
/// nodes and every edge touching them.
struct GraphOptions {
  std::array<bool, 3> modalities = {true, true, true};
  bool inter_edges = true;
  std::size_t top_k = 20;
};

/// Nodes are laid out in modality blocks of n circles each, in text, visual,
/// POI order, skipping masked modalities.
struct MultiModalGraph {
  std::size_t n_circles = 0;
  std::array<bool, 3> modalities = {true, true, true};
  std::vector<Edge> edges;

  std::size_t n_modalities() const;
  std::size_t node_count() const { return n_circles * n_modalities(); }
  /// Node id of (circle, modality), or npos when the modality is masked.
  std::size_t node(std::size_t circle, Modality m) const;
  std::size_t circle_of(std::size_t node) const { return node % n_circles; }
  Modality modality_of(std::size_t node) const;
  /// Present modalities in block order.
  std::vector<Modality> present() const;
};

/// 1 - arccos(clamp(cos(x, y), -1, 1)) / pi. Zero vectors are rejected.
double angular_weight(const Vec& x, const Vec& y);

/// w1 / ln(D + 1), with D = 0 replaced by the zero-distance guard.
double inter_weight(double w1, double distance);

/// Intra edges join the modalities of one circle; inter edges join the same
/// modality of circles i and j for every j in top-K(i). A pair selected from
/// both ends is stored once. The context's top-K lists are used when they
/// were built for opts.top_k; otherwise they are recomputed from S.
MultiModalGraph build_graph(const Mat& h_text, const Mat& h_visual, const Mat& h_poi,
                            const SpatialContext& ctx, const GraphOptions& opts);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
Mat renormalized_laplacian(const MultiModalGraph& g);

/// Node features stacked in block order: the H0 of the propagation.
Mat stack_node_features(const MultiModalGraph& g, const Mat& h_text, const Mat& h_visual,
                        const Mat& h_poi);

std::string edges_to_csv(const MultiModalGraph& g);
/// Inverse of edges_to_csv; the header carries n_circles and the modality mask.
MultiModalGraph edges_from_csv(const std::string& text);

}  // namespace curegraph
