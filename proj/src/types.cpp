#include "curegraph/types.hpp"

#include "curegraph/error.hpp"

namespace curegraph {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::visual: return "visual";
    case Modality::poi: return "poi";
  }
  return "?";
}

std::string_view to_string(Disease d) {
  switch (d) {
    case Disease::mci: return "mci";
    case Disease::hypertension: return "hypertension";
    case Disease::diabetes: return "diabetes";
    case Disease::mdd: return "mdd";
  }
  return "?";
}

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::image: return "image";
    case FeatureKind::circle_text: return "circle_text";
    case FeatureKind::poi_review: return "poi_review";
    case FeatureKind::poi_category: return "poi_category";
  }
  return "?";
}

Vec RawFeatureMatrix::row_vec(std::size_t i) const {
  Vec v(dim);
  const auto r = row(i);
  for (std::uint32_t k = 0; k < dim; ++k) v[k] = r[k];
  return v;
}

Mat RawFeatureMatrix::to_mat() const {
  Mat m(rows, dim);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t k = 0; k < dim; ++k) m(i, k) = data[std::size_t(i) * dim + k];
  return m;
}

RawFeatureMatrix RawFeatureMatrix::from_mat(const Mat& m, FeatureKind kind) {
  RawFeatureMatrix out;
  out.kind = kind;
  out.rows = static_cast<std::uint32_t>(m.rows());
  out.dim = static_cast<std::uint32_t>(m.cols());
  out.data.resize(std::size_t(out.rows) * out.dim);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      out.data[std::size_t(i) * out.dim + k] = static_cast<float>(m(i, k));
  return out;
}

double DiseaseLabels::value(Disease d) const {
  switch (d) {
    case Disease::mci: return mci;
    case Disease::hypertension: return hypertension;
    case Disease::diabetes: return diabetes;
    case Disease::mdd: return mdd;
  }
  return 0.0;
}

double& DiseaseLabels::value(Disease d) {
  switch (d) {
    case Disease::mci: return mci;
    case Disease::hypertension: return hypertension;
    case Disease::diabetes: return diabetes;
    case Disease::mdd: break;
  }
  return mdd;
}

const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> kCategories = {
      "food",         "shopping",           "sports_fitness", "tourist_attraction",
      "leisure_entertainment", "life_services", "education_training", "culture_media",
      "transportation", "stores"};
  return kCategories;
}

void Dataset::index() {
  circle_index.clear();
  poi_index.clear();
  for (std::size_t i = 0; i < circles.size(); ++i) circle_index.emplace(circles[i].id, i);
  for (std::size_t j = 0; j < pois.size(); ++j) poi_index.emplace(pois[j].id, j);

  circle_pois.assign(circles.size(), {});
  for (std::size_t i = 0; i < circles.size(); ++i) {
    for (const auto& pid : circles[i].poi_ids) {
      auto it = poi_index.find(pid);
      if (it != poi_index.end()) circle_pois[i].push_back(it->second);
    }
  }
  poi_category_index.assign(pois.size(), npos);
  for (std::size_t j = 0; j < pois.size(); ++j) {
    for (std::size_t c = 0; c < categories.size(); ++c) {
      if (categories[c] == pois[j].category) {
        poi_category_index[j] = c;
        break;
      }
    }
  }
  label_of_circle.assign(circles.size(), npos);
  for (std::size_t l = 0; l < labels.size(); ++l) {
    auto it = circle_index.find(labels[l].circle_id);
    if (it != circle_index.end()) label_of_circle[it->second] = l;
  }
}

std::size_t Dataset::category_index(const std::string& name) const {
  for (std::size_t c = 0; c < categories.size(); ++c)
    if (categories[c] == name) return c;
  return npos;
}

std::vector<std::vector<std::size_t>> Dataset::category_counts() const {
  std::vector<std::vector<std::size_t>> counts(circles.size(),
                                               std::vector<std::size_t>(categories.size(), 0));
  for (std::size_t i = 0; i < circles.size(); ++i)
    for (std::size_t j : circle_pois[i]) ++counts[i][poi_category_index[j]];
  return counts;
}

std::vector<std::string> Dataset::circle_ids() const {
  std::vector<std::string> ids;
  ids.reserve(circles.size());
  for (const auto& c : circles) ids.push_back(c.id);
  return ids;
}

std::vector<LatLon> Dataset::locations() const {
  std::vector<LatLon> out;
  out.reserve(circles.size());
  for (const auto& c : circles) out.push_back(c.location());
  return out;
}

Vec Dataset::label_vector(Disease d) const {
  Vec y(circles.size());
  for (std::size_t i = 0; i < circles.size(); ++i) {
    if (label_of_circle.size() != circles.size() || label_of_circle[i] == npos)
      throw IntegrityError("circle '" + circles[i].id + "' has no disease labels");
    y[i] = labels[label_of_circle[i]].value(d);
  }
  return y;
}

}  // namespace curegraph
