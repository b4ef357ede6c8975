#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curegraph/config.hpp"
#include "curegraph/linalg.hpp"
#include "curegraph/rng.hpp"
#include "curegraph/types.hpp"

namespace curegraph {

/// Affine map from raw backbone features into the shared latent space.
struct ProjectionHead {
  Modality modality = Modality::text;
  Mat weight;  // d x F
  Vec bias;    // d

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }

  /// Uniform(-1/sqrt(F), 1/sqrt(F)) for weights and bias.
  static ProjectionHead init(Modality m, std::size_t in_dim, std::size_t out_dim, Rng& rng);
};

/// W x + b. Throws ArgumentError on a dimension mismatch.
Vec project(const ProjectionHead& head, const Vec& x);
/// Row-wise projection of a batch: X W^T + 1 b^T.
Mat project_rows(const ProjectionHead& head, const Mat& x);

struct HeadGrad {
  Mat weight;
  Vec bias;
};
/// Gradient of a loss w.r.t. the head given dL/dY for Y = project_rows(head, X).
HeadGrad head_backward(const Mat& x, const Mat& grad_out);

/// Two inverted-dropout views x * mask / (1 - p) with independent masks.
std::pair<Vec, Vec> augment_feature(const Vec& x, double p, std::uint64_t seed);

/// Mean of the given feature rows (projected or raw).
Vec aggregate_visual(std::span<const std::uint32_t> image_rows, const Mat& features);
Vec aggregate_visual(const LivingCircle& circle, const RawFeatureMatrix& images);

/// One POI as seen by aggregation: its category row and its review rows.
struct PoiReviews {
  std::size_t category = 0;
  std::vector<std::uint32_t> review_rows;
};

/// Sum over the categories present of the mean, over that category's
/// reviews, of [review ; category] vectors. Throws IntegrityError when there
/// is no review at all.
Vec aggregate_poi(std::span<const PoiReviews> pois, const Mat& reviews, const Mat& categories);
Vec aggregate_poi(const Dataset& ds, std::size_t circle);

/// Raw per-circle inputs of the three modalities.
struct CircleModalFeatures {
  Mat text;    // n x F
  Mat visual;  // n x F, mean of the circle's raw image rows
  Mat poi;     // n x 2F
};
CircleModalFeatures circle_modal_features(const Dataset& ds);

struct StageLog {
  std::string name;
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;
  double initial_probe = 0.0;  // loss on a fixed probe set before training
  double final_probe = 0.0;    // same probe set after training
};

struct EncoderResult {
  std::array<ProjectionHead, 3> heads;  // indexed by Modality
  CircleModalFeatures raw;
  Mat h_text, h_visual, h_poi;  // n x d projected circle features
  std::array<StageLog, 3> logs;  // visual, text, poi
};

/// Trains the three projection heads in sequence: visual (triplet plus
/// augmented InfoNCE over image features), text (cross-modal InfoNCE
/// against the frozen visual projection), then POI (supervised contrastive
/// over dropout views of reviews labelled by rating).
EncoderResult train_encoders(const Dataset& ds, const RunConfig& cfg);

/// The heads as seeded before any update.
std::array<ProjectionHead, 3> initial_heads(std::size_t feature_dim, std::size_t embed_dim,
                                            std::uint64_t root_seed);

}  // namespace curegraph
