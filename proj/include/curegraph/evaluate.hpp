#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "curegraph/config.hpp"
#include "curegraph/graph.hpp"
#include "curegraph/linalg.hpp"
#include "curegraph/types.hpp"

namespace curegraph {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

/// MAE, RMSE and the coefficient of determination 1 - SS_res / SS_tot.
/// Needs N >= 2 and a non-constant y_true.
Metrics metrics(const Vec& y_true, const Vec& y_pred);

struct RegressorConfig {
  RegressorKind kind = RegressorKind::mlp;
  std::size_t hidden = 64;
  std::size_t epochs = 300;
  double lr = 1e-2;
  double weight_decay = 1e-3;
  double ridge_lambda = 1.0;
};
RegressorConfig regressor_from(const RunConfig& cfg);

/// Fits on (x_train, y_train) and predicts x_test. Inputs and target are
/// standardized with training statistics. The MLP is one rectifier hidden
/// layer trained full-batch with Adam; ridge solves the normal equations.
Vec fit_predict(const Mat& x_train, const Vec& y_train, const Mat& x_test,
                const RegressorConfig& cfg, std::uint64_t seed);

struct DiseaseReport {
  Disease disease = Disease::mci;
  std::vector<Metrics> folds;
  Metrics mean;
  Vec predictions;  // out-of-fold, one per circle
};

DiseaseReport predict_disease(const Mat& embeddings, const Vec& labels, Disease disease,
                              std::size_t k, std::uint64_t seed, const RegressorConfig& cfg);

enum class Ablation { full, no_text, no_visual, no_poi, no_topk, text_only, visual_only, poi_only };
inline constexpr std::array<Ablation, 8> kAblations = {
    Ablation::full,      Ablation::no_text,   Ablation::no_visual,   Ablation::no_poi,
    Ablation::no_topk,   Ablation::text_only, Ablation::visual_only, Ablation::poi_only};

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view tag);
GraphOptions graph_options(Ablation a, std::size_t top_k);

struct EvalReport {
  std::string ablation = "full";
  std::string config_hash;
  std::size_t kfolds = 0;
  std::vector<DiseaseReport> diseases;

  double mean_r2() const;
  nlohmann::json to_json() const;
  /// circle_id, then y_true and y_pred per disease.
  std::string predictions_csv(const std::vector<std::string>& circle_ids,
                              const std::vector<Vec>& truth) const;
};

/// K-fold prediction of all four diseases from one embedding row per circle.
EvalReport evaluate_embeddings(const Mat& embeddings, const Dataset& ds, const RunConfig& cfg,
                               Ablation tag);

}  // namespace curegraph
