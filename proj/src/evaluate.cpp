#include "curegraph/evaluate.hpp"

#include <cmath>
#include <cstdio>

#include "curegraph/adam.hpp"
#include "curegraph/error.hpp"
#include "curegraph/rng.hpp"
#include "curegraph/split.hpp"

namespace curegraph {

Metrics metrics(const Vec& y_true, const Vec& y_pred) {
  if (y_true.size() != y_pred.size())
    throw ArgumentError("metrics: y_true and y_pred differ in length");
  if (y_true.size() < 2) throw ArgumentError("metrics: need at least two samples");
  const double n = static_cast<double>(y_true.size());
  const Vec r = y_true - y_pred;
  const double ss_tot = (y_true.array() - y_true.mean()).square().sum();
  if (ss_tot == 0.0) throw DegenerateInputError("metrics: R2 is undefined for a constant target");
  Metrics m;
  m.mae = r.cwiseAbs().sum() / n;
  m.rmse = std::sqrt(r.squaredNorm() / n);
  m.r2 = 1.0 - r.squaredNorm() / ss_tot;
  return m;
}

RegressorConfig regressor_from(const RunConfig& cfg) {
  RegressorConfig r;
  r.kind = cfg.regressor;
  r.hidden = cfg.regressor_hidden;
  r.epochs = cfg.regressor_epochs;
  r.lr = cfg.regressor_lr;
  r.weight_decay = cfg.regressor_weight_decay;
  r.ridge_lambda = cfg.ridge_lambda;
  return r;
}

namespace {

struct Standardizer {
  Eigen::RowVectorXd mean, scale;

  static Standardizer fit(const Mat& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.scale = ((x.rowwise() - s.mean).array().square().colwise().sum() /
               static_cast<double>(x.rows()))
                  .sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
      if (s.scale[j] < 1e-12) s.scale[j] = 1.0;
    return s;
  }
  Mat apply(const Mat& x) const {
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }
};

Vec ridge_fit_predict(const Mat& x, const Vec& y, const Mat& xt, double lambda) {
  Mat gram = x.transpose() * x;
  gram.diagonal().array() += lambda;
  const Vec w = gram.ldlt().solve(x.transpose() * y);
  return xt * w;
}

Vec mlp_fit_predict(const Mat& x, const Vec& y, const Mat& xt, const RegressorConfig& cfg,
                    std::uint64_t seed) {
  const auto f = x.cols();
  const auto h = static_cast<Eigen::Index>(cfg.hidden);
  Rng rng(seed);
  auto uniform_init = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    return m;
  };
  const double b1 = 1.0 / std::sqrt(static_cast<double>(f));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(h));
  Mat w1 = uniform_init(h, f, b1);
  Mat c1 = uniform_init(h, 1, b1);
  Mat w2 = uniform_init(1, h, b2);
  Mat c2 = uniform_init(1, 1, b2);
  Mat mw1 = Mat::Zero(h, f), vw1 = mw1, mc1 = Mat::Zero(h, 1), vc1 = mc1;
  Mat mw2 = Mat::Zero(1, h), vw2 = mw2, mc2 = Mat::Zero(1, 1), vc2 = mc2;

  AdamConfig wcfg{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamConfig bcfg{cfg.lr, 0.9, 0.999, 1e-8, 0.0};
  const double n = static_cast<double>(x.rows());
  for (std::size_t step = 1; step <= cfg.epochs; ++step) {
    const Mat pre = (x * w1.transpose()).rowwise() + c1.col(0).transpose();
    const Mat act = pre.cwiseMax(0.0);
    const Vec out = (act * w2.transpose()).col(0).array() + c2(0, 0);
    const Vec g_out = 2.0 * (out - y) / n;
    const Mat gw2 = g_out.transpose() * act;
    Mat gc2(1, 1);
    gc2(0, 0) = g_out.sum();
    Mat g_act = g_out * w2;
    g_act = g_act.array() * (pre.array() > 0.0).cast<double>();
    const Mat gw1 = g_act.transpose() * x;
    const Mat gc1 = g_act.colwise().sum().transpose();
    adam_update(w1, gw1, mw1, vw1, wcfg, step);
    adam_update(c1, gc1, mc1, vc1, bcfg, step);
    adam_update(w2, gw2, mw2, vw2, wcfg, step);
    adam_update(c2, gc2, mc2, vc2, bcfg, step);
  }
  const Mat act = ((xt * w1.transpose()).rowwise() + c1.col(0).transpose()).cwiseMax(0.0);
  return (act * w2.transpose()).col(0).array() + c2(0, 0);
}

Mat take_rows(const Mat& m, const std::vector<std::size_t>& idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

Vec take(const Vec& v, const std::vector<std::size_t>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

}  // namespace

Vec fit_predict(const Mat& x_train, const Vec& y_train, const Mat& x_test,
                const RegressorConfig& cfg, std::uint64_t seed) {
  if (x_train.rows() != y_train.size() || x_train.cols() != x_test.cols())
    throw ArgumentError("fit_predict: shape mismatch");
  const auto sx = Standardizer::fit(x_train);
  const double y_mean = y_train.mean();
  double y_scale = std::sqrt((y_train.array() - y_mean).square().mean());
  if (y_scale < 1e-12) y_scale = 1.0;
  const Vec y = (y_train.array() - y_mean) / y_scale;
  const Mat x = sx.apply(x_train);
  const Mat xt = sx.apply(x_test);
  const Vec z = cfg.kind == RegressorKind::ridge ? ridge_fit_predict(x, y, xt, cfg.ridge_lambda)
                                                 : mlp_fit_predict(x, y, xt, cfg, seed);
  return (z.array() * y_scale + y_mean).matrix();
}

DiseaseReport predict_disease(const Mat& embeddings, const Vec& labels, Disease disease,
                              std::size_t k, std::uint64_t seed, const RegressorConfig& cfg) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (static_cast<std::size_t>(labels.size()) != n)
    throw ArgumentError("predict_disease: one label per embedding row is required");
  if (n < k)
    throw ArgumentError("predict_disease: " + std::to_string(n) + " labeled circles for " +
                        std::to_string(k) + " folds");
  const auto folds = kfold_split(n, k, seed);
  DiseaseReport rep;
  rep.disease = disease;
  rep.predictions = Vec::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    const Vec pred = fit_predict(take_rows(embeddings, train), take(labels, train),
                                 take_rows(embeddings, folds[f]), cfg, derive_seed(seed, f + 1));
    for (std::size_t i = 0; i < folds[f].size(); ++i)
      rep.predictions[static_cast<Eigen::Index>(folds[f][i])] = pred[static_cast<Eigen::Index>(i)];
    const Metrics m = metrics(take(labels, folds[f]), pred);
    if (m.mae > m.rmse * (1.0 + 1e-12))
      throw NumericError("predict_disease: MAE exceeds RMSE on fold " + std::to_string(f));
    rep.folds.push_back(m);
  }
  for (const auto& m : rep.folds) {
    rep.mean.mae += m.mae / static_cast<double>(k);
    rep.mean.rmse += m.rmse / static_cast<double>(k);
    rep.mean.r2 += m.r2 / static_cast<double>(k);
  }
  return rep;
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_text: return "w/o T";
    case Ablation::no_visual: return "w/o V";
    case Ablation::no_poi: return "w/o P";
    case Ablation::no_topk: return "w/o top-k sc";
    case Ablation::text_only: return "T-only";
    case Ablation::visual_only: return "V-only";
    case Ablation::poi_only: return "P-only";
  }
  return "full";
}

Ablation parse_ablation(std::string_view tag) {
  for (Ablation a : kAblations)
    if (to_string(a) == tag) return a;
  throw ArgumentError("unknown ablation tag '" + std::string(tag) + "'");
}

GraphOptions graph_options(Ablation a, std::size_t top_k) {
  GraphOptions o;
  o.top_k = top_k;
  switch (a) {
    case Ablation::full: break;
    case Ablation::no_text: o.modalities = {false, true, true}; break;
    case Ablation::no_visual: o.modalities = {true, false, true}; break;
    case Ablation::no_poi: o.modalities = {true, true, false}; break;
    case Ablation::no_topk: o.inter_edges = false; break;
    case Ablation::text_only: o.modalities = {true, false, false}; break;
    case Ablation::visual_only: o.modalities = {false, true, false}; break;
    case Ablation::poi_only: o.modalities = {false, false, true}; break;
  }
  return o;
}

double EvalReport::mean_r2() const {
  if (diseases.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : diseases) s += d.mean.r2;
  return s / static_cast<double>(diseases.size());
}

namespace {
nlohmann::json metrics_json(const Metrics& m) {
  return {{"mae", m.mae}, {"rmse", m.rmse}, {"r2", m.r2}};
}
}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["ablation"] = ablation;
  j["config_hash"] = config_hash;
  j["kfolds"] = kfolds;
  j["diseases"] = nlohmann::json::object();
  for (const auto& d : diseases) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& m : d.folds) folds.push_back(metrics_json(m));
    j["diseases"][std::string(to_string(d.disease))] = {{"folds", folds},
                                                        {"mean", metrics_json(d.mean)}};
  }
  j["mean_r2"] = mean_r2();
  return j;
}

std::string EvalReport::predictions_csv(const std::vector<std::string>& circle_ids,
                                        const std::vector<Vec>& truth) const {
  std::string out = "circle_id";
  for (const auto& d : diseases) {
    const std::string name(to_string(d.disease));
    out += "," + name + "_true," + name + "_pred";
  }
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < circle_ids.size(); ++i) {
    out += circle_ids[i];
    for (std::size_t k = 0; k < diseases.size(); ++k) {
      std::snprintf(buf, sizeof buf, ",%.10g", truth[k][static_cast<Eigen::Index>(i)]);
      out += buf;
      std::snprintf(buf, sizeof buf, ",%.10g",
                    diseases[k].predictions[static_cast<Eigen::Index>(i)]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

EvalReport evaluate_embeddings(const Mat& embeddings, const Dataset& ds, const RunConfig& cfg,
                               Ablation tag) {
  if (static_cast<std::size_t>(embeddings.rows()) != ds.circles.size())
    throw IntegrityError("evaluate: " + std::to_string(embeddings.rows()) +
                         " embedding rows for " + std::to_string(ds.circles.size()) + " circles");
  EvalReport rep;
  rep.ablation = std::string(to_string(tag));
  rep.config_hash = cfg.hash();
  rep.kfolds = cfg.kfolds;
  const auto rcfg = regressor_from(cfg);
  const auto seed = derive_seed(cfg.rng_seed, stream::kEvaluate);
  for (Disease d : kDiseases)
    rep.diseases.push_back(
        predict_disease(embeddings, ds.label_vector(d), d, cfg.kfolds, seed, rcfg));
  return rep;
}

}  // namespace curegraph
