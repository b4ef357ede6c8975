#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "curegraph/config.hpp"
#include "curegraph/encoders.hpp"
#include "curegraph/graph.hpp"
#include "curegraph/linalg.hpp"

namespace curegraph {

/// Identity-mapping strength of layer k: ln(eta / k + 1), k >= 1.
double beta(std::size_t k, double eta);

inline constexpr std::size_t kReadoutLayers = 4;

struct GcnParams {
  std::vector<Mat> layers;  // L matrices, d x d
  // Readout MLP: affine maps in order, weight is out x in.
  std::array<Mat, kReadoutLayers> readout_w;
  std::array<Vec, kReadoutLayers> readout_b;

  std::size_t parameter_count() const;
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere.
  static GcnParams init(std::size_t n_layers, std::size_t d, std::size_t n_modalities,
                        std::size_t hidden, std::uint64_t seed);
};

struct GcnHyper {
  double alpha = 0.2;
  double eta = 0.5;
  double lambda = 0.1;
  double dropout = 0.3;
};

enum class Mode { train, eval };

/// Per-layer values kept for the backward pass.
struct GcnCache {
  std::vector<Mat> h;      // h[0] = H0 ... h[L]
  std::vector<Mat> input;  // layer input after dropout, per layer
  std::vector<Mat> mixed;  // (1 - alpha) P input + alpha H0, per layer
  std::vector<Mat> masks;  // dropout keep-scale per layer (empty in eval mode)
};

/// H(k) = sigmoid(((1 - alpha) P X(k-1) + alpha H0)((1 - beta_k) I + beta_k W_k)),
/// where X(k-1) is H(k-1) after dropout (train mode only). Throws
/// NumericError naming the layer when a value turns non-finite.
GcnCache gcn_forward(const Mat& p, const Mat& h0, const std::vector<Mat>& weights,
                     double alpha, double eta, double dropout, Mode mode, std::uint64_t seed);

/// Per-circle rows [e_t, e_v, e_p] of the last layer, concatenated.
Mat concat_modalities(const Mat& h_last, std::size_t n_circles, std::size_t n_modalities);

struct ReadoutCache {
  Mat input;
  std::array<Mat, kReadoutLayers> pre;  // pre-activations
  Mat output() const { return pre.back(); }
};
/// Four affine layers, rectifier between them, linear output.
ReadoutCache fuse_readout(const GcnParams& params, const Mat& fused_input);

struct EmbeddingTable {
  Mat fused;                    // n x d
  std::array<Mat, 3> modality;  // post-GCN rows per modality; empty when masked
};

struct ObjectiveValue {
  double value = 0.0;
  double reconstruction = 0.0;
  double alignment = 0.0;
  Mat grad_fused;
  std::array<Mat, 3> grad_modality;
};

/// sum_{i != j} (S_ij - e_i . e_j)^2
///   + lambda * sum_{m in {v, p}} (1/n) sum_i |e_t,i - e_m,i|
/// Alignment terms whose modalities are absent are skipped.
ObjectiveValue objective(const EmbeddingTable& e, const Mat& s, double lambda);

struct GcnGrad {
  std::vector<Mat> layers;
  std::array<Mat, kReadoutLayers> readout_w;
  std::array<Vec, kReadoutLayers> readout_b;
  Mat h0;
};

/// Full forward pass of the model.
struct ModelForward {
  GcnCache gcn;
  ReadoutCache readout;
  EmbeddingTable table;
};
ModelForward model_forward(const MultiModalGraph& g, const Mat& p, const Mat& h0,
                           const GcnParams& params, const GcnHyper& hyper, Mode mode,
                           std::uint64_t seed);

/// Exact gradients of the objective for every trainable tensor and for H0.
GcnGrad backward(const MultiModalGraph& g, const Mat& p, const GcnParams& params,
                 const GcnHyper& hyper, const ModelForward& fwd, const ObjectiveValue& obj);

struct AdamMoments {
  std::vector<Mat> m, v;  // one pair per parameter tensor, flattened order
};

struct ModelState {
  GcnParams params;
  AdamMoments moments;
  std::uint64_t step = 0;
};

/// Optional projection heads refined jointly with the graph model (visual
/// and POI heads, fed from raw circle features).
struct HeadTraining {
  std::array<ProjectionHead, 3> heads;
  CircleModalFeatures raw;
};

struct TrainResult {
  ModelState state;
  EmbeddingTable embeddings;  // eval mode, after the last update
  std::vector<double> train_loss;
  std::vector<double> eval_loss;  // eval_loss[0] is before any update
  std::optional<HeadTraining> heads;
};

/// Full-graph Adam training of the objective for cfg.epochs steps.
TrainResult train_smgcn(const MultiModalGraph& g, const Mat& h0, const Mat& s,
                        const RunConfig& cfg, std::optional<HeadTraining> heads = std::nullopt);

GcnHyper hyper_from(const RunConfig& cfg);

}  // namespace curegraph
