#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curegraph/types.hpp"

namespace curegraph {

namespace fs = std::filesystem;

// CGF1 feature matrix: "CGF1", rows (u32 LE), dim (u32 LE), rows*dim f32 LE,
// row-major, no padding.
void write_feature_matrix(const fs::path& path, const RawFeatureMatrix& m);
RawFeatureMatrix read_feature_matrix(const fs::path& path, FeatureKind kind);
std::vector<char> encode_feature_matrix(const RawFeatureMatrix& m);
RawFeatureMatrix decode_feature_matrix(const std::vector<char>& bytes, FeatureKind kind);

// Convenience wrappers for derived double matrices (stored as f32).
void write_matrix(const fs::path& path, const Mat& m);
Mat read_matrix(const fs::path& path);

/// File names inside a dataset directory.
struct DatasetPaths {
  fs::path circles, pois, labels, categories;
  fs::path images, circle_texts, poi_reviews, poi_categories;

  static DatasetPaths in(const fs::path& dir);
};

/// Loads and cross-checks a dataset. Reviews rated 0 are dropped. The
/// categories file is optional; without it the default vocabulary is used.
Dataset load_dataset(const DatasetPaths& paths);
inline Dataset load_dataset(const fs::path& dir) { return load_dataset(DatasetPaths::in(dir)); }

/// Re-runs the load-time integrity checks on an in-memory dataset.
void validate_dataset(const Dataset& ds);

void save_dataset(const fs::path& dir, const Dataset& ds);

// circle_id -> street_id, streets.jsonl lines {"circle_id": .., "street_id": ..}
std::map<std::string, std::string> load_street_assignment(const fs::path& path);
void save_street_assignment(const fs::path& path,
                            const std::vector<std::pair<std::string, std::string>>& rows);

// circle_id -> value, lines {"circle_id": .., "value": ..}
std::map<std::string, double> load_covariate(const fs::path& path);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace curegraph
