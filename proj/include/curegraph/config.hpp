#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace curegraph {

enum class RegressorKind { mlp, ridge };

/// Every tunable of a run. Defaults follow the published training setup
/// where one exists.
struct RunConfig {
  // Contrastive encoders.
  double tau_visual = 0.05;
  double tau_text = 1.0;
  double tau_poi = 0.005;
  double margin = 1.0;
  double augment_dropout = 0.1;
  double geo_radius_km = 1.0;
  double lr_visual = 5e-3;
  double lr_text = 1e-5;
  double lr_poi = 1e-5;
  std::uint64_t encoder_epochs = 5;

  // Graph and SMGCN.
  double alpha = 0.2;
  double eta = 0.5;
  double lambda = 0.1;
  std::uint64_t gcn_layers = 3;
  std::uint64_t top_k = 20;
  double dropout = 0.3;
  std::uint64_t embed_dim = 128;
  std::uint64_t readout_hidden = 128;
  double lr_gcn = 5e-4;
  bool gcn_train_heads = true;

  // Shared optimizer settings.
  std::uint64_t batch_size = 32;
  std::uint64_t epochs = 60;
  double weight_decay = 3e-3;

  // Downstream prediction.
  std::uint64_t kfolds = 5;
  RegressorKind regressor = RegressorKind::mlp;
  std::uint64_t regressor_hidden = 64;
  std::uint64_t regressor_epochs = 300;
  double regressor_lr = 1e-3;
  double regressor_weight_decay = 1e-3;
  double ridge_lambda = 1.0;

  // Analysis.
  std::uint64_t cluster_k = 3;

  std::uint64_t rng_seed = 7;

  /// Canonical `key = value` listing, sorted by key, doubles in %.17g.
  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
  /// FNV-1a 64 of to_text(), as 16 lowercase hex digits.
  std::string hash() const;

  /// Applies one key/value pair. Unknown keys and unparsable values throw
  /// ArgumentError.
  void set(const std::string& key, const std::string& value);
  void validate() const;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace curegraph
