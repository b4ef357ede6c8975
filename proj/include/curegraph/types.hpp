#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "curegraph/linalg.hpp"

namespace curegraph {

enum class Modality : int { text = 0, visual = 1, poi = 2 };
inline constexpr std::array<Modality, 3> kModalities = {Modality::text, Modality::visual,
                                                        Modality::poi};
std::string_view to_string(Modality m);

enum class Disease : int { mci = 0, hypertension = 1, diabetes = 2, mdd = 3 };
inline constexpr std::array<Disease, 4> kDiseases = {Disease::mci, Disease::hypertension,
                                                     Disease::diabetes, Disease::mdd};
std::string_view to_string(Disease d);

enum class FeatureKind { image, circle_text, poi_review, poi_category };
std::string_view to_string(FeatureKind k);

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// One residential area and its 15-minute activity zone.
struct LivingCircle {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::uint64_t households = 0;
  std::uint64_t elderly_pop = 0;
  std::vector<std::uint32_t> image_row_ids;
  std::uint32_t text_row_id = 0;
  std::vector<std::string> poi_ids;

  LatLon location() const { return {lat, lon}; }
};

struct Poi {
  std::string id;
  std::string circle_id;
  std::string category;
  std::vector<std::uint32_t> review_row_ids;
  std::vector<int> rating_labels;
};

/// Backbone-emitted feature vectors, one per row.
struct RawFeatureMatrix {
  FeatureKind kind = FeatureKind::image;
  std::uint32_t rows = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  Vec row_vec(std::size_t i) const;
  Mat to_mat() const;
  static RawFeatureMatrix from_mat(const Mat& m, FeatureKind kind);
};

struct DiseaseLabels {
  std::string circle_id;
  double mci = 0.0;
  double hypertension = 0.0;
  double diabetes = 0.0;
  double mdd = 0.0;

  double value(Disease d) const;
  double& value(Disease d);
};

/// The ten major POI categories.
const std::vector<std::string>& default_categories();

/// A fully loaded and cross-referenced dataset.
struct Dataset {
  std::vector<std::string> categories;
  std::vector<LivingCircle> circles;
  std::vector<Poi> pois;
  std::vector<DiseaseLabels> labels;
  RawFeatureMatrix images{FeatureKind::image, 0, 0, {}};
  RawFeatureMatrix circle_texts{FeatureKind::circle_text, 0, 0, {}};
  RawFeatureMatrix poi_reviews{FeatureKind::poi_review, 0, 0, {}};
  // One row per category, in `categories` order.
  RawFeatureMatrix poi_categories{FeatureKind::poi_category, 0, 0, {}};

  // Derived indices, filled by index().
  std::unordered_map<std::string, std::size_t> circle_index;
  std::unordered_map<std::string, std::size_t> poi_index;
  std::vector<std::vector<std::size_t>> circle_pois;
  std::vector<std::size_t> poi_category_index;
  std::vector<std::size_t> label_of_circle;  // npos when unlabeled

  void index();
  std::size_t category_index(const std::string& name) const;
  std::size_t feature_dim() const { return images.dim; }
  // Per-circle counts per category, in `categories` order.
  std::vector<std::vector<std::size_t>> category_counts() const;
  std::vector<std::string> circle_ids() const;
  std::vector<LatLon> locations() const;
  // Labels for disease d in circle order. Throws if any circle is unlabeled.
  Vec label_vector(Disease d) const;
};

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

}  // namespace curegraph
