#pragma once

#include <vector>

#include "curegraph/linalg.hpp"

namespace curegraph {

// Every loss returns its value together with the gradient with respect to
// each input, laid out like the input.

struct TripletLoss {
  double value = 0.0;
  Vec grad_anchor, grad_positive, grad_negative;
};

/// max(0, m + |x - x_p| - |x - x_n|). A zero-length difference contributes
/// a zero subgradient.
TripletLoss triplet_geo_loss(const Vec& x, const Vec& x_pos, const Vec& x_neg, double margin);

struct BatchTripletLoss {
  double value = 0.0;  // mean over rows
  Mat grad_anchor, grad_positive, grad_negative;
};
BatchTripletLoss triplet_geo_loss(const Mat& x, const Mat& x_pos, const Mat& x_neg,
                                  double margin);

struct PairLoss {
  double value = 0.0;
  Mat grad_anchors, grad_positives;
};

/// Mean over rows i of -log softmax_j(cos(a_i, p_j) / tau)[i]. Rows must be
/// non-zero (DegenerateInputError otherwise).
PairLoss infonce_loss(const Mat& anchors, const Mat& positives, double tau);

struct SupConLoss {
  double value = 0.0;
  Mat grad;
};

/// Supervised contrastive loss summed over anchors. For anchor i,
/// A(i) = all other rows and P(i) = other rows with the same label. Throws
/// ArgumentError when some anchor has no positive.
SupConLoss supcon_loss(const Mat& embeddings, const std::vector<int>& labels, double tau);

struct VisualLoss {
  double value = 0.0;
  double triplet = 0.0;
  double augment = 0.0;
  BatchTripletLoss triplet_terms;
  PairLoss augment_terms;
};

/// Mean triplet loss plus InfoNCE over augmented pairs.
VisualLoss visual_encoder_loss(const Mat& x, const Mat& x_pos, const Mat& x_neg,
                               const Mat& view_a, const Mat& view_b, double margin, double tau);

/// Row-wise cosine similarity matrix and the norms it was built from.
struct CosineTable {
  Mat sim;
  Vec norm_a, norm_b;
};
CosineTable cosine_table(const Mat& a, const Mat& b);

/// Backpropagates dL/dsim through sim = cos(a_i, b_j).
void cosine_backward(const Mat& a, const Mat& b, const CosineTable& table, const Mat& grad_sim,
                     Mat& grad_a, Mat& grad_b);

}  // namespace curegraph
