#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "curegraph/types.hpp"

namespace curegraph {

/// Size and noise parameters of a generated city.
struct SyntheticSpec {
  std::size_t n_circles = 50;
  std::size_t feature_dim = 768;
  std::size_t latent_dim = 4;
  double noise_scale = 0.1;      // label noise, relative to each disease's signal scale
  double feature_noise = 1.0;    // per-entry Gaussian noise on raw features
  double local_noise = 0.25;     // circle-level deviation of observed features from the latent field
  std::vector<std::string> categories = default_categories();
  std::size_t images_min = 2, images_max = 5;
  std::size_t pois_min = 2, pois_max = 6;
  std::size_t reviews_min = 1, reviews_max = 4;
  double zero_rating_prob = 0.05;
  double extent_km = 20.0;
  std::size_t n_streets = 0;  // 0 picks max(2, n_circles / 8)
};

/// Disease counts are an affine function of the latent factors, clamped to
/// [0, elderly_pop]:
///   count_d = clamp(base_d + scale_d * weights_d . z, 0, elderly_pop)
struct PlantedSignal {
  std::array<double, 4> base{};
  std::array<double, 4> scale{};
  std::array<std::vector<double>, 4> weights;

  double evaluate(Disease d, const Vec& z, double elderly_pop) const;
};

struct SyntheticCity {
  Dataset dataset;
  std::vector<std::pair<std::string, std::string>> streets;  // circle -> street
  std::vector<double> housing_price;                         // per circle
  std::vector<Vec> latents;                                  // per circle
  PlantedSignal signal;
};

/// Pure function of (spec, seed). Throws ArgumentError when n_circles < 2.
SyntheticCity generate_synthetic_city(const SyntheticSpec& spec, std::uint64_t seed);

/// Writes the dataset plus sidecars: latents.jsonl, signal.json,
/// streets.jsonl, covariates.jsonl.
void write_synthetic_city(const std::filesystem::path& dir, const SyntheticCity& city);

struct GroundTruth {
  std::vector<std::string> circle_ids;
  std::vector<Vec> latents;
  PlantedSignal signal;
};
GroundTruth load_ground_truth(const std::filesystem::path& dir);

}  // namespace curegraph
