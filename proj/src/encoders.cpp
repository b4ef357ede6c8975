#include "curegraph/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "curegraph/adam.hpp"
#include "curegraph/error.hpp"
#include "curegraph/losses.hpp"
#include "curegraph/spatial.hpp"

namespace curegraph {

ProjectionHead ProjectionHead::init(Modality m, std::size_t in_dim, std::size_t out_dim,
                                    Rng& rng) {
  ProjectionHead h;
  h.modality = m;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  h.weight.resize(out_dim, in_dim);
  for (std::size_t i = 0; i < out_dim; ++i)
    for (std::size_t j = 0; j < in_dim; ++j) h.weight(i, j) = rng.uniform(-bound, bound);
  h.bias.resize(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i) h.bias[i] = rng.uniform(-bound, bound);
  return h;
}

Vec project(const ProjectionHead& head, const Vec& x) {
  if (static_cast<std::size_t>(x.size()) != head.in_dim())
    throw ArgumentError("project: input has dimension " + std::to_string(x.size()) +
                        ", head expects " + std::to_string(head.in_dim()));
  return head.weight * x + head.bias;
}

Mat project_rows(const ProjectionHead& head, const Mat& x) {
  if (static_cast<std::size_t>(x.cols()) != head.in_dim())
    throw ArgumentError("project_rows: input has dimension " + std::to_string(x.cols()) +
                        ", head expects " + std::to_string(head.in_dim()));
  Mat y = x * head.weight.transpose();
  y.rowwise() += head.bias.transpose();
  return y;
}

HeadGrad head_backward(const Mat& x, const Mat& grad_out) {
  return {grad_out.transpose() * x, grad_out.colwise().sum().transpose()};
}

std::pair<Vec, Vec> augment_feature(const Vec& x, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("augment_feature: p must be in [0, 1)");
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  Vec a = x, b = x;
  if (p == 0.0) return {a, b};
  for (Eigen::Index k = 0; k < x.size(); ++k) a[k] = rng.bernoulli(p) ? 0.0 : x[k] * keep_scale;
  for (Eigen::Index k = 0; k < x.size(); ++k) b[k] = rng.bernoulli(p) ? 0.0 : x[k] * keep_scale;
  return {a, b};
}

Vec aggregate_visual(std::span<const std::uint32_t> image_rows, const Mat& features) {
  if (image_rows.empty()) throw IntegrityError("aggregate_visual: circle has no images");
  Vec sum = Vec::Zero(features.cols());
  for (auto r : image_rows) {
    if (r >= features.rows()) throw IntegrityError("aggregate_visual: image row out of range");
    sum += features.row(r).transpose();
  }
  return sum / static_cast<double>(image_rows.size());
}

Vec aggregate_visual(const LivingCircle& circle, const RawFeatureMatrix& images) {
  if (circle.image_row_ids.empty())
    throw IntegrityError("circle '" + circle.id + "' has no images");
  Vec sum = Vec::Zero(images.dim);
  for (auto r : circle.image_row_ids) {
    if (r >= images.rows)
      throw IntegrityError("circle '" + circle.id + "' references missing image row " +
                           std::to_string(r));
    sum += images.row_vec(r);
  }
  return sum / static_cast<double>(circle.image_row_ids.size());
}

Vec aggregate_poi(std::span<const PoiReviews> pois, const Mat& reviews, const Mat& categories) {
  const auto F = reviews.cols();
  if (categories.cols() != F)
    throw ArgumentError("aggregate_poi: review and category features differ in dimension");
  // Per category: running sum of concatenated vectors and review count.
  std::map<std::size_t, std::pair<Vec, std::size_t>> per_category;
  for (const auto& poi : pois) {
    if (poi.category >= static_cast<std::size_t>(categories.rows()))
      throw IntegrityError("aggregate_poi: category index out of range");
    for (auto r : poi.review_rows) {
      if (r >= reviews.rows()) throw IntegrityError("aggregate_poi: review row out of range");
      auto [it, inserted] =
          per_category.try_emplace(poi.category, Vec::Zero(2 * F), std::size_t{0});
      it->second.first.head(F) += reviews.row(r).transpose();
      it->second.first.tail(F) += categories.row(poi.category).transpose();
      ++it->second.second;
    }
  }
  if (per_category.empty()) throw IntegrityError("aggregate_poi: circle has no POI reviews");
  Vec out = Vec::Zero(2 * F);
  for (const auto& [cat, acc] : per_category) out += acc.first / static_cast<double>(acc.second);
  return out;
}

namespace {

std::vector<PoiReviews> circle_poi_reviews(const Dataset& ds, std::size_t circle) {
  std::vector<PoiReviews> out;
  for (std::size_t j : ds.circle_pois[circle])
    out.push_back({ds.poi_category_index[j], ds.pois[j].review_row_ids});
  return out;
}

}  // namespace

Vec aggregate_poi(const Dataset& ds, std::size_t circle) {
  const auto pois = circle_poi_reviews(ds, circle);
  try {
    return aggregate_poi(pois, ds.poi_reviews.to_mat(), ds.poi_categories.to_mat());
  } catch (const IntegrityError&) {
    throw IntegrityError("circle '" + ds.circles[circle].id + "' has POIs but no reviews");
  }
}

CircleModalFeatures circle_modal_features(const Dataset& ds) {
  const std::size_t n = ds.circles.size();
  const std::size_t F = ds.feature_dim();
  const Mat images = ds.images.to_mat();
  const Mat reviews = ds.poi_reviews.to_mat();
  const Mat categories = ds.poi_categories.to_mat();
  CircleModalFeatures f;
  f.text.resize(n, F);
  f.visual.resize(n, F);
  f.poi.resize(n, 2 * F);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = ds.circles[i];
    f.text.row(i) = ds.circle_texts.row_vec(c.text_row_id).transpose();
    f.visual.row(i) = aggregate_visual(c.image_row_ids, images).transpose();
    const auto pois = circle_poi_reviews(ds, i);
    try {
      f.poi.row(i) = aggregate_poi(pois, reviews, categories).transpose();
    } catch (const IntegrityError&) {
      throw IntegrityError("circle '" + c.id + "' has no POI reviews");
    }
  }
  return f;
}

std::array<ProjectionHead, 3> initial_heads(std::size_t feature_dim, std::size_t embed_dim,
                                            std::uint64_t root_seed) {
  Rng rng(derive_seed(root_seed, stream::kEncoderInit));
  std::array<ProjectionHead, 3> heads;
  heads[0] = ProjectionHead::init(Modality::text, feature_dim, embed_dim, rng);
  heads[1] = ProjectionHead::init(Modality::visual, feature_dim, embed_dim, rng);
  heads[2] = ProjectionHead::init(Modality::poi, 2 * feature_dim, embed_dim, rng);
  return heads;
}

namespace {

struct HeadOptimizer {
  AdamConfig cfg;
  Mat m_w, v_w;
  Vec m_b, v_b;
  std::uint64_t step = 0;

  HeadOptimizer(const ProjectionHead& h, AdamConfig c)
      : cfg(c),
        m_w(Mat::Zero(h.weight.rows(), h.weight.cols())),
        v_w(Mat::Zero(h.weight.rows(), h.weight.cols())),
        m_b(Vec::Zero(h.bias.size())),
        v_b(Vec::Zero(h.bias.size())) {}

  void apply(ProjectionHead& h, const HeadGrad& g) {
    ++step;
    adam_update(h.weight, g.weight, m_w, v_w, cfg, step);
    adam_update(h.bias, g.bias, m_b, v_b, cfg, step);
  }
};

void accumulate(HeadGrad& acc, const HeadGrad& g) {
  acc.weight += g.weight;
  acc.bias += g.bias;
}

HeadGrad zero_grad(const ProjectionHead& h) {
  return {Mat::Zero(h.weight.rows(), h.weight.cols()), Vec::Zero(h.bias.size())};
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch)
    out.emplace_back(order.begin() + s, order.begin() + std::min(n, s + batch));
  return out;
}

void check_finite(double loss, const char* stage, std::size_t step) {
  if (!std::isfinite(loss)) throw TrainingDivergedError(stage, step);
}

// ---- visual stage --------------------------------------------------------

struct VisualBatch {
  Mat anchor, positive, negative, view_a, view_b;  // raw features
};

class VisualSampler {
 public:
  VisualSampler(const Dataset& ds, const Mat& images, double radius_km, double dropout)
      : images_(images), dropout_(dropout) {
    const std::size_t n = ds.circles.size();
    owner_.resize(images.rows());
    members_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (auto r : ds.circles[i].image_row_ids) {
        owner_[r] = i;
        members_[i].push_back(r);
      }
    near_.resize(n);
    far_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = haversine_km(ds.circles[i].location(), ds.circles[j].location());
        auto& bucket = d <= radius_km ? near_[i] : far_[i];
        bucket.insert(bucket.end(), members_[j].begin(), members_[j].end());
      }
  }

  std::size_t size() const { return static_cast<std::size_t>(images_.rows()); }

  VisualBatch make(const std::vector<std::size_t>& idx, Rng& rng) const {
    const auto B = static_cast<Eigen::Index>(idx.size());
    const auto F = images_.cols();
    VisualBatch b{Mat(B, F), Mat(B, F), Mat(B, F), Mat(B, F), Mat(B, F)};
    for (Eigen::Index k = 0; k < B; ++k) {
      const std::size_t a = idx[k];
      const std::size_t c = owner_[a];
      b.anchor.row(k) = images_.row(a);

      // Positive: another photo of the same circle, else of a circle within
      // the radius, else an augmented copy of the anchor.
      std::vector<std::size_t> same;
      for (auto r : members_[c])
        if (r != a) same.push_back(r);
      if (!same.empty()) {
        b.positive.row(k) = images_.row(same[rng.index(same.size())]);
      } else if (!near_[c].empty()) {
        b.positive.row(k) = images_.row(near_[c][rng.index(near_[c].size())]);
      } else {
        b.positive.row(k) =
            augment_feature(images_.row(a).transpose(), dropout_, rng.next()).first.transpose();
      }

      // Negative: a photo from outside the radius when one exists.
      const auto& pool = !far_[c].empty() ? far_[c] : near_[c];
      if (!pool.empty()) {
        b.negative.row(k) = images_.row(pool[rng.index(pool.size())]);
      } else {
        std::size_t r = rng.index(size());
        if (r == a) r = (r + 1) % size();
        b.negative.row(k) = images_.row(r);
      }

      auto [va, vb] = augment_feature(images_.row(a).transpose(), dropout_, rng.next());
      b.view_a.row(k) = va.transpose();
      b.view_b.row(k) = vb.transpose();
    }
    return b;
  }

 private:
  const Mat& images_;
  double dropout_;
  std::vector<std::size_t> owner_;
  std::vector<std::vector<std::size_t>> members_, near_, far_;
};

double visual_step(const ProjectionHead& head, const VisualBatch& b, const RunConfig& cfg,
                   HeadGrad* grad) {
  const Mat ya = project_rows(head, b.anchor);
  const Mat yp = project_rows(head, b.positive);
  const Mat yn = project_rows(head, b.negative);
  const Mat va = project_rows(head, b.view_a);
  const Mat vb = project_rows(head, b.view_b);
  const auto loss = visual_encoder_loss(ya, yp, yn, va, vb, cfg.margin, cfg.tau_visual);
  if (grad) {
    *grad = zero_grad(head);
    accumulate(*grad, head_backward(b.anchor, loss.triplet_terms.grad_anchor));
    accumulate(*grad, head_backward(b.positive, loss.triplet_terms.grad_positive));
    accumulate(*grad, head_backward(b.negative, loss.triplet_terms.grad_negative));
    accumulate(*grad, head_backward(b.view_a, loss.augment_terms.grad_anchors));
    accumulate(*grad, head_backward(b.view_b, loss.augment_terms.grad_positives));
  }
  return loss.value;
}

// ---- POI stage -----------------------------------------------------------

struct ReviewSample {
  std::uint32_t review_row;
  std::size_t category;
  int rating;
};

struct PoiBatch {
  Mat views;  // 2B x 2F, rows 2k and 2k+1 are the two views of sample k
  std::vector<int> labels;
};

PoiBatch make_poi_batch(const std::vector<ReviewSample>& samples,
                        const std::vector<std::size_t>& idx, const Mat& reviews,
                        const Mat& categories, double dropout, Rng& rng) {
  const auto F = reviews.cols();
  PoiBatch b{Mat(2 * idx.size(), 2 * F), {}};
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& s = samples[idx[k]];
    Vec x(2 * F);
    x.head(F) = reviews.row(s.review_row).transpose();
    x.tail(F) = categories.row(s.category).transpose();
    auto [va, vb] = augment_feature(x, dropout, rng.next());
    b.views.row(2 * k) = va.transpose();
    b.views.row(2 * k + 1) = vb.transpose();
    b.labels.push_back(s.rating);
    b.labels.push_back(s.rating);
  }
  return b;
}

double poi_step(const ProjectionHead& head, const PoiBatch& b, double tau, HeadGrad* grad) {
  const Mat y = project_rows(head, b.views);
  const auto loss = supcon_loss(y, b.labels, tau);
  if (grad) *grad = head_backward(b.views, loss.grad);
  return loss.value;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EncoderResult train_encoders(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  const std::size_t F = ds.feature_dim();
  const std::size_t d = cfg.embed_dim;
  const std::size_t batch = cfg.batch_size;
  EncoderResult out;
  out.heads = initial_heads(F, d, cfg.rng_seed);
  out.raw = circle_modal_features(ds);

  auto& text_head = out.heads[static_cast<int>(Modality::text)];
  auto& visual_head = out.heads[static_cast<int>(Modality::visual)];
  auto& poi_head = out.heads[static_cast<int>(Modality::poi)];

  // Visual stage.
  {
    StageLog& log = out.logs[0];
    log.name = "visual";
    const Mat images = ds.images.to_mat();
    VisualSampler sampler(ds, images, cfg.geo_radius_km, cfg.augment_dropout);
    Rng rng(derive_seed(cfg.rng_seed, stream::kEncoderVisual));

    Rng probe_rng(rng.next());
    std::vector<VisualBatch> probe;
    for (const auto& idx : make_batches(sampler.size(), batch, probe_rng))
      probe.push_back(sampler.make(idx, probe_rng));
    auto probe_loss = [&] {
      std::vector<double> v;
      for (const auto& b : probe) v.push_back(visual_step(visual_head, b, cfg, nullptr));
      return mean(v);
    };
    log.initial_probe = probe_loss();

    HeadOptimizer opt(visual_head, {.lr = cfg.lr_visual, .weight_decay = cfg.weight_decay});
    for (std::uint64_t epoch = 0; epoch < cfg.encoder_epochs; ++epoch) {
      std::vector<double> losses;
      for (const auto& idx : make_batches(sampler.size(), batch, rng)) {
        const auto b = sampler.make(idx, rng);
        HeadGrad g;
        const double loss = visual_step(visual_head, b, cfg, &g);
        check_finite(loss, "visual", log.step_losses.size());
        opt.apply(visual_head, g);
        log.step_losses.push_back(loss);
        losses.push_back(loss);
      }
      log.epoch_losses.push_back(mean(losses));
    }
    log.final_probe = probe_loss();
  }

  // Text stage: align text projections with the frozen visual projections.
  const Mat h_visual = project_rows(visual_head, out.raw.visual);
  {
    StageLog& log = out.logs[1];
    log.name = "text";
    const std::size_t n = ds.circles.size();
    Rng rng(derive_seed(cfg.rng_seed, stream::kEncoderText));
    auto gather = [](const Mat& m, const std::vector<std::size_t>& idx) {
      Mat out(idx.size(), m.cols());
      for (std::size_t k = 0; k < idx.size(); ++k) out.row(k) = m.row(idx[k]);
      return out;
    };
    auto step = [&](const std::vector<std::size_t>& idx, HeadGrad* grad) {
      const Mat xt = gather(out.raw.text, idx);
      const Mat ht = project_rows(text_head, xt);
      const auto loss = infonce_loss(ht, gather(h_visual, idx), cfg.tau_text);
      if (grad) *grad = head_backward(xt, loss.grad_anchors);
      return loss.value;
    };

    Rng probe_rng(rng.next());
    const auto probe = make_batches(n, batch, probe_rng);
    auto probe_loss = [&] {
      std::vector<double> v;
      for (const auto& idx : probe) v.push_back(step(idx, nullptr));
      return mean(v);
    };
    log.initial_probe = probe_loss();

    HeadOptimizer opt(text_head, {.lr = cfg.lr_text, .weight_decay = cfg.weight_decay});
    for (std::uint64_t epoch = 0; epoch < cfg.encoder_epochs; ++epoch) {
      std::vector<double> losses;
      for (const auto& idx : make_batches(n, batch, rng)) {
        HeadGrad g;
        const double loss = step(idx, &g);
        check_finite(loss, "text", log.step_losses.size());
        opt.apply(text_head, g);
        log.step_losses.push_back(loss);
        losses.push_back(loss);
      }
      log.epoch_losses.push_back(mean(losses));
    }
    log.final_probe = probe_loss();
  }

  // POI stage.
  {
    StageLog& log = out.logs[2];
    log.name = "poi";
    const Mat reviews = ds.poi_reviews.to_mat();
    const Mat categories = ds.poi_categories.to_mat();
    std::vector<ReviewSample> samples;
    for (std::size_t j = 0; j < ds.pois.size(); ++j)
      for (std::size_t r = 0; r < ds.pois[j].review_row_ids.size(); ++r)
        samples.push_back({ds.pois[j].review_row_ids[r], ds.poi_category_index[j],
                           ds.pois[j].rating_labels[r]});
    Rng rng(derive_seed(cfg.rng_seed, stream::kEncoderPoi));
    const std::size_t per_batch = std::max<std::size_t>(1, batch / 2);

    Rng probe_rng(rng.next());
    std::vector<PoiBatch> probe;
    for (const auto& idx : make_batches(samples.size(), per_batch, probe_rng))
      probe.push_back(
          make_poi_batch(samples, idx, reviews, categories, cfg.augment_dropout, probe_rng));
    auto probe_loss = [&] {
      std::vector<double> v;
      for (const auto& b : probe) v.push_back(poi_step(poi_head, b, cfg.tau_poi, nullptr));
      return mean(v);
    };
    log.initial_probe = samples.empty() ? 0.0 : probe_loss();

    HeadOptimizer opt(poi_head, {.lr = cfg.lr_poi, .weight_decay = cfg.weight_decay});
    for (std::uint64_t epoch = 0; epoch < cfg.encoder_epochs && !samples.empty(); ++epoch) {
      std::vector<double> losses;
      for (const auto& idx : make_batches(samples.size(), per_batch, rng)) {
        const auto b =
            make_poi_batch(samples, idx, reviews, categories, cfg.augment_dropout, rng);
        HeadGrad g;
        const double loss = poi_step(poi_head, b, cfg.tau_poi, &g);
        check_finite(loss, "poi", log.step_losses.size());
        opt.apply(poi_head, g);
        log.step_losses.push_back(loss);
        losses.push_back(loss);
      }
      log.epoch_losses.push_back(mean(losses));
    }
    log.final_probe = samples.empty() ? 0.0 : probe_loss();
  }

  out.h_text = project_rows(text_head, out.raw.text);
  out.h_visual = project_rows(visual_head, out.raw.visual);
  out.h_poi = project_rows(poi_head, out.raw.poi);
  return out;
}

}  // namespace curegraph
