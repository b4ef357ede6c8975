#include "curegraph/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "curegraph/error.hpp"

namespace curegraph {
namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "feature file I/O assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'G', 'F', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::uint32_t read_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

void append_u32(std::vector<char>& out, std::uint32_t v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + 4);
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct JsonLine {
  json value;
  std::uint64_t offset;
};

// One parsed record per non-empty line.
std::vector<JsonLine> read_jsonl(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<JsonLine> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      try {
        out.push_back({json::parse(line), pos});
      } catch (const json::parse_error& e) {
        throw FormatError(path.filename().string() + ": malformed JSON line",
                          pos + (e.byte > 0 ? e.byte - 1 : 0));
      }
      if (!out.back().value.is_object())
        throw FormatError(path.filename().string() + ": record is not an object", pos);
    }
    pos = end + 1;
  }
  return out;
}

template <typename T>
T field(const JsonLine& line, const char* name, const fs::path& path) {
  auto it = line.value.find(name);
  if (it == line.value.end())
    throw FormatError(path.filename().string() + ": missing field '" + name + "'", line.offset);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(path.filename().string() + ": field '" + name + "' has the wrong type",
                      line.offset);
  }
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::string text;
  for (const auto& r : records) {
    text += r.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << text;
}

std::vector<char> encode_feature_matrix(const RawFeatureMatrix& m) {
  if (m.data.size() != std::size_t(m.rows) * m.dim)
    throw ArgumentError("feature matrix data size does not match rows*dim");
  std::vector<char> out;
  out.reserve(kHeaderBytes + m.data.size() * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u32(out, m.rows);
  append_u32(out, m.dim);
  const char* p = reinterpret_cast<const char*>(m.data.data());
  out.insert(out.end(), p, p + m.data.size() * 4);
  return out;
}

RawFeatureMatrix decode_feature_matrix(const std::vector<char>& bytes, FeatureKind kind) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("feature file: bad magic, expected CGF1", 0);
  if (bytes.size() < kHeaderBytes)
    throw FormatError("feature file: truncated header", bytes.size());
  RawFeatureMatrix m;
  m.kind = kind;
  m.rows = read_u32(bytes.data() + 4);
  m.dim = read_u32(bytes.data() + 8);
  const std::uint64_t expected = kHeaderBytes + std::uint64_t(m.rows) * m.dim * 4;
  if (bytes.size() != expected)
    throw FormatError("feature file: payload size " + std::to_string(bytes.size()) +
                          " does not match header (expected " + std::to_string(expected) + ")",
                      std::min<std::uint64_t>(bytes.size(), expected));
  m.data.resize(std::size_t(m.rows) * m.dim);
  std::memcpy(m.data.data(), bytes.data() + kHeaderBytes, m.data.size() * 4);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (!std::isfinite(m.data[i]))
      throw FormatError("feature file: non-finite value", kHeaderBytes + i * 4);
  return m;
}

void write_feature_matrix(const fs::path& path, const RawFeatureMatrix& m) {
  write_bytes(path, encode_feature_matrix(m));
}

RawFeatureMatrix read_feature_matrix(const fs::path& path, FeatureKind kind) {
  try {
    return decode_feature_matrix(read_bytes(path), kind);
  } catch (const FormatError& e) {
    throw FormatError(path.filename().string() + ": " + e.what(), e.byte_offset());
  }
}

void write_matrix(const fs::path& path, const Mat& m) {
  write_feature_matrix(path, RawFeatureMatrix::from_mat(m, FeatureKind::image));
}

Mat read_matrix(const fs::path& path) {
  return read_feature_matrix(path, FeatureKind::image).to_mat();
}

DatasetPaths DatasetPaths::in(const fs::path& dir) {
  DatasetPaths p;
  p.circles = dir / "circles.jsonl";
  p.pois = dir / "pois.jsonl";
  p.labels = dir / "labels.jsonl";
  p.categories = dir / "categories.json";
  p.images = dir / "images.cgf";
  p.circle_texts = dir / "circle_texts.cgf";
  p.poi_reviews = dir / "poi_reviews.cgf";
  p.poi_categories = dir / "poi_categories.cgf";
  return p;
}

void validate_dataset(const Dataset& ds) {
  const std::uint32_t dim = ds.images.dim;
  for (const RawFeatureMatrix* m : {&ds.images, &ds.circle_texts, &ds.poi_reviews,
                                    &ds.poi_categories}) {
    if (m->dim != dim)
      throw IntegrityError("feature matrices disagree on dimension (" + std::to_string(m->dim) +
                           " vs " + std::to_string(dim) + ")");
  }
  if (ds.poi_categories.rows != ds.categories.size())
    throw IntegrityError("poi_categories has " + std::to_string(ds.poi_categories.rows) +
                         " rows but the vocabulary has " +
                         std::to_string(ds.categories.size()) + " categories");

  std::set<std::string> seen;
  for (const auto& c : ds.circles) {
    if (!seen.insert(c.id).second) throw IntegrityError("duplicate circle id '" + c.id + "'");
    if (!(c.lat >= -90 && c.lat <= 90 && c.lon >= -180 && c.lon <= 180))
      throw IntegrityError("circle '" + c.id + "' has out-of-range coordinates");
    if (c.image_row_ids.empty()) throw IntegrityError("circle '" + c.id + "' has no images");
    for (auto r : c.image_row_ids)
      if (r >= ds.images.rows)
        throw IntegrityError("circle '" + c.id + "' references missing image row " +
                             std::to_string(r));
    if (c.text_row_id >= ds.circle_texts.rows)
      throw IntegrityError("circle '" + c.id + "' references missing text row " +
                           std::to_string(c.text_row_id));
    for (const auto& pid : c.poi_ids) {
      auto it = ds.poi_index.find(pid);
      if (it == ds.poi_index.end())
        throw IntegrityError("circle '" + c.id + "' references missing poi '" + pid + "'");
      if (ds.pois[it->second].circle_id != c.id)
        throw IntegrityError("poi '" + pid + "' is listed by circle '" + c.id +
                             "' but belongs to '" + ds.pois[it->second].circle_id + "'");
    }
  }
  seen.clear();
  for (std::size_t j = 0; j < ds.pois.size(); ++j) {
    const auto& p = ds.pois[j];
    if (!seen.insert(p.id).second) throw IntegrityError("duplicate poi id '" + p.id + "'");
    if (!ds.circle_index.contains(p.circle_id))
      throw IntegrityError("poi '" + p.id + "' references missing circle '" + p.circle_id + "'");
    if (ds.poi_category_index[j] == npos)
      throw IntegrityError("poi '" + p.id + "' has unknown category '" + p.category + "'");
    if (p.review_row_ids.size() != p.rating_labels.size())
      throw IntegrityError("poi '" + p.id + "' has mismatched review and rating counts");
    for (auto r : p.review_row_ids)
      if (r >= ds.poi_reviews.rows)
        throw IntegrityError("poi '" + p.id + "' references missing review row " +
                             std::to_string(r));
    for (int rating : p.rating_labels)
      if (rating < 1 || rating > 5)
        throw IntegrityError("poi '" + p.id + "' has rating " + std::to_string(rating) +
                             " outside 1..5");
  }
  for (const auto& l : ds.labels) {
    auto it = ds.circle_index.find(l.circle_id);
    if (it == ds.circle_index.end())
      throw IntegrityError("labels reference missing circle '" + l.circle_id + "'");
    const double pop = static_cast<double>(ds.circles[it->second].elderly_pop);
    for (Disease d : kDiseases) {
      const double v = l.value(d);
      if (!(v >= 0.0 && v <= pop))
        throw IntegrityError("label " + std::string(to_string(d)) + " of circle '" +
                             l.circle_id + "' is outside [0, elderly_pop]");
    }
  }
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  if (fs::exists(paths.categories)) {
    try {
      ds.categories = json::parse(read_text_file(paths.categories)).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw FormatError(paths.categories.filename().string() + ": " + e.what(), 0);
    }
  } else {
    ds.categories = default_categories();
  }

  for (const auto& line : read_jsonl(paths.circles)) {
    LivingCircle c;
    c.id = field<std::string>(line, "id", paths.circles);
    c.lat = field<double>(line, "lat", paths.circles);
    c.lon = field<double>(line, "lon", paths.circles);
    c.households = field<std::uint64_t>(line, "households", paths.circles);
    c.elderly_pop = field<std::uint64_t>(line, "elderly_pop", paths.circles);
    c.image_row_ids = field<std::vector<std::uint32_t>>(line, "image_row_ids", paths.circles);
    c.text_row_id = field<std::uint32_t>(line, "text_row_id", paths.circles);
    c.poi_ids = field<std::vector<std::string>>(line, "poi_ids", paths.circles);
    ds.circles.push_back(std::move(c));
  }
  for (const auto& line : read_jsonl(paths.pois)) {
    Poi p;
    p.id = field<std::string>(line, "id", paths.pois);
    p.circle_id = field<std::string>(line, "circle_id", paths.pois);
    p.category = field<std::string>(line, "category", paths.pois);
    const auto rows = field<std::vector<std::uint32_t>>(line, "review_row_ids", paths.pois);
    const auto ratings = field<std::vector<int>>(line, "rating_labels", paths.pois);
    if (rows.size() != ratings.size())
      throw IntegrityError("poi '" + p.id + "' has mismatched review and rating counts");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (ratings[k] == 0) continue;  // unrated check-ins carry no sentiment label
      p.review_row_ids.push_back(rows[k]);
      p.rating_labels.push_back(ratings[k]);
    }
    ds.pois.push_back(std::move(p));
  }
  if (fs::exists(paths.labels)) {
    for (const auto& line : read_jsonl(paths.labels)) {
      DiseaseLabels l;
      l.circle_id = field<std::string>(line, "circle_id", paths.labels);
      l.mci = field<double>(line, "mci", paths.labels);
      l.hypertension = field<double>(line, "hypertension", paths.labels);
      l.diabetes = field<double>(line, "diabetes", paths.labels);
      l.mdd = field<double>(line, "mdd", paths.labels);
      ds.labels.push_back(std::move(l));
    }
  }
  ds.images = read_feature_matrix(paths.images, FeatureKind::image);
  ds.circle_texts = read_feature_matrix(paths.circle_texts, FeatureKind::circle_text);
  ds.poi_reviews = read_feature_matrix(paths.poi_reviews, FeatureKind::poi_review);
  ds.poi_categories = read_feature_matrix(paths.poi_categories, FeatureKind::poi_category);

  ds.index();
  validate_dataset(ds);
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  const auto paths = DatasetPaths::in(dir);
  write_text_file(paths.categories, json(ds.categories).dump() + "\n");

  std::vector<json> records;
  for (const auto& c : ds.circles) {
    records.push_back(json{{"id", c.id},
                           {"lat", c.lat},
                           {"lon", c.lon},
                           {"households", c.households},
                           {"elderly_pop", c.elderly_pop},
                           {"image_row_ids", c.image_row_ids},
                           {"text_row_id", c.text_row_id},
                           {"poi_ids", c.poi_ids}});
  }
  write_jsonl(paths.circles, records);

  records.clear();
  for (const auto& p : ds.pois) {
    records.push_back(json{{"id", p.id},
                           {"circle_id", p.circle_id},
                           {"category", p.category},
                           {"review_row_ids", p.review_row_ids},
                           {"rating_labels", p.rating_labels}});
  }
  write_jsonl(paths.pois, records);

  records.clear();
  for (const auto& l : ds.labels) {
    records.push_back(json{{"circle_id", l.circle_id},
                           {"mci", l.mci},
                           {"hypertension", l.hypertension},
                           {"diabetes", l.diabetes},
                           {"mdd", l.mdd}});
  }
  write_jsonl(paths.labels, records);

  write_feature_matrix(paths.images, ds.images);
  write_feature_matrix(paths.circle_texts, ds.circle_texts);
  write_feature_matrix(paths.poi_reviews, ds.poi_reviews);
  write_feature_matrix(paths.poi_categories, ds.poi_categories);
}

std::map<std::string, std::string> load_street_assignment(const fs::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& line : read_jsonl(path)) {
    auto circle = field<std::string>(line, "circle_id", path);
    auto street = field<std::string>(line, "street_id", path);
    if (!out.emplace(circle, street).second)
      throw IntegrityError("circle '" + circle + "' is assigned to more than one street");
  }
  return out;
}

void save_street_assignment(const fs::path& path,
                            const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<json> records;
  for (const auto& [c, s] : rows) records.push_back(json{{"circle_id", c}, {"street_id", s}});
  write_jsonl(path, records);
}

std::map<std::string, double> load_covariate(const fs::path& path) {
  std::map<std::string, double> out;
  for (const auto& line : read_jsonl(path))
    out[field<std::string>(line, "circle_id", path)] = field<double>(line, "value", path);
  return out;
}

}  // namespace curegraph
