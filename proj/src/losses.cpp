#include "curegraph/losses.hpp"

#include <cmath>

#include "curegraph/error.hpp"

namespace curegraph {
namespace {

Vec unit_or_zero(const Vec& v, double norm) {
  return norm > 0.0 ? Vec(v / norm) : Vec(Vec::Zero(v.size()));
}

void check_rows(const Mat& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (m.row(i).norm() == 0.0)
      throw DegenerateInputError(std::string(what) + ": row " + std::to_string(i) +
                                 " has zero norm");
}

// log(sum_j exp(x_j)) over entries where mask is true.
double masked_logsumexp(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        const std::vector<bool>& mask) {
  double hi = -INFINITY;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (mask[j]) hi = std::max(hi, x[j]);
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (mask[j]) s += std::exp(x[j] - hi);
  return hi + std::log(s);
}

}  // namespace

TripletLoss triplet_geo_loss(const Vec& x, const Vec& x_pos, const Vec& x_neg, double margin) {
  if (x.size() != x_pos.size() || x.size() != x_neg.size())
    throw ArgumentError("triplet_geo_loss: dimension mismatch");
  TripletLoss out;
  out.grad_anchor = Vec::Zero(x.size());
  out.grad_positive = Vec::Zero(x.size());
  out.grad_negative = Vec::Zero(x.size());
  const Vec dp = x - x_pos;
  const Vec dn = x - x_neg;
  const double np = dp.norm();
  const double nn = dn.norm();
  const double v = margin + (np - nn);
  if (v <= 0.0) return out;
  out.value = v;
  const Vec up = unit_or_zero(dp, np);
  const Vec un = unit_or_zero(dn, nn);
  out.grad_anchor = up - un;
  out.grad_positive = -up;
  out.grad_negative = un;
  return out;
}

BatchTripletLoss triplet_geo_loss(const Mat& x, const Mat& x_pos, const Mat& x_neg,
                                  double margin) {
  if (x.rows() != x_pos.rows() || x.rows() != x_neg.rows() || x.rows() == 0)
    throw ArgumentError("triplet_geo_loss: batch shapes disagree or batch is empty");
  const auto n = x.rows();
  BatchTripletLoss out;
  out.grad_anchor = Mat::Zero(n, x.cols());
  out.grad_positive = Mat::Zero(n, x.cols());
  out.grad_negative = Mat::Zero(n, x.cols());
  const double inv = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const TripletLoss t = triplet_geo_loss(Vec(x.row(i).transpose()), Vec(x_pos.row(i).transpose()),
                                           Vec(x_neg.row(i).transpose()), margin);
    out.value += t.value * inv;
    out.grad_anchor.row(i) = t.grad_anchor.transpose() * inv;
    out.grad_positive.row(i) = t.grad_positive.transpose() * inv;
    out.grad_negative.row(i) = t.grad_negative.transpose() * inv;
  }
  return out;
}

CosineTable cosine_table(const Mat& a, const Mat& b) {
  CosineTable t;
  t.norm_a = a.rowwise().norm();
  t.norm_b = b.rowwise().norm();
  Mat an = a;
  Mat bn = b;
  for (Eigen::Index i = 0; i < a.rows(); ++i) an.row(i) /= t.norm_a[i];
  for (Eigen::Index j = 0; j < b.rows(); ++j) bn.row(j) /= t.norm_b[j];
  t.sim = an * bn.transpose();
  return t;
}

void cosine_backward(const Mat& a, const Mat& b, const CosineTable& t, const Mat& g,
                     Mat& grad_a, Mat& grad_b) {
  Mat an = a;
  Mat bn = b;
  for (Eigen::Index i = 0; i < a.rows(); ++i) an.row(i) /= t.norm_a[i];
  for (Eigen::Index j = 0; j < b.rows(); ++j) bn.row(j) /= t.norm_b[j];
  const Mat gs = g.cwiseProduct(t.sim);
  const Vec row_w = gs.rowwise().sum();
  const Vec col_w = gs.colwise().sum().transpose();
  grad_a = g * bn;
  grad_b = g.transpose() * an;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    grad_a.row(i) = (grad_a.row(i) - row_w[i] * an.row(i)) / t.norm_a[i];
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    grad_b.row(j) = (grad_b.row(j) - col_w[j] * bn.row(j)) / t.norm_b[j];
}

PairLoss infonce_loss(const Mat& anchors, const Mat& positives, double tau) {
  if (anchors.rows() != positives.rows() || anchors.cols() != positives.cols() ||
      anchors.rows() == 0)
    throw ArgumentError("infonce_loss: anchors and positives must be equal-shaped and non-empty");
  if (!(tau > 0.0)) throw ArgumentError("infonce_loss: tau must be positive");
  check_rows(anchors, "infonce_loss anchors");
  check_rows(positives, "infonce_loss positives");

  const auto n = anchors.rows();
  const CosineTable t = cosine_table(anchors, positives);
  const Mat logits = t.sim / tau;
  Mat g(n, n);
  PairLoss out;
  const double inv = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - hi).exp();
    const double z = e.sum();
    out.value += (hi + std::log(z) - logits(i, i)) * inv;
    g.row(i) = e / z;
    g(i, i) -= 1.0;
  }
  g *= inv / tau;
  cosine_backward(anchors, positives, t, g, out.grad_anchors, out.grad_positives);
  return out;
}

SupConLoss supcon_loss(const Mat& embeddings, const std::vector<int>& labels, double tau) {
  const auto n = embeddings.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ArgumentError("supcon_loss: one label per embedding row required");
  if (!(tau > 0.0)) throw ArgumentError("supcon_loss: tau must be positive");
  check_rows(embeddings, "supcon_loss");

  const CosineTable t = cosine_table(embeddings, embeddings);
  const Mat logits = t.sim / tau;
  Mat g = Mat::Zero(n, n);
  SupConLoss out;
  std::vector<bool> others(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t n_pos = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      others[j] = j != i;
      if (j != i && labels[j] == labels[i]) ++n_pos;
    }
    if (n_pos == 0)
      throw ArgumentError("supcon_loss: sample " + std::to_string(i) +
                          " has no positive in the batch");
    const double lse = masked_logsumexp(logits.row(i), others);
    const double inv_pos = 1.0 / static_cast<double>(n_pos);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double gij = std::exp(logits(i, j) - lse);
      if (labels[j] == labels[i]) {
        out.value -= inv_pos * (logits(i, j) - lse);
        gij -= inv_pos;
      }
      g(i, j) = gij;
    }
  }
  g /= tau;
  Mat ga, gb;
  cosine_backward(embeddings, embeddings, t, g, ga, gb);
  out.grad = ga + gb;
  return out;
}

VisualLoss visual_encoder_loss(const Mat& x, const Mat& x_pos, const Mat& x_neg,
                               const Mat& view_a, const Mat& view_b, double margin, double tau) {
  VisualLoss out;
  out.triplet_terms = triplet_geo_loss(x, x_pos, x_neg, margin);
  out.augment_terms = infonce_loss(view_a, view_b, tau);
  out.triplet = out.triplet_terms.value;
  out.augment = out.augment_terms.value;
  out.value = out.triplet + out.augment;
  return out;
}

}  // namespace curegraph
