#include "curegraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "curegraph/error.hpp"
#include "curegraph/io.hpp"
#include "curegraph/rng.hpp"

namespace curegraph {
namespace {

using json = nlohmann::json;

constexpr double kKmPerDegree = 111.32;
constexpr double kOriginLat = 39.9;
constexpr double kOriginLon = 116.4;

// Prevalence among a reference population of 1000 elderly residents.
constexpr std::array<double, 4> kBaseRate = {0.15, 0.45, 0.20, 0.08};
constexpr double kReferencePop = 1000.0;
constexpr double kSignalFraction = 0.3;

std::string make_id(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

Mat gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

double PlantedSignal::evaluate(Disease d, const Vec& z, double elderly_pop) const {
  const auto k = static_cast<std::size_t>(d);
  double dot = 0.0;
  for (std::size_t q = 0; q < weights[k].size(); ++q) dot += weights[k][q] * z[q];
  return std::clamp(base[k] + scale[k] * dot, 0.0, elderly_pop);
}

SyntheticCity generate_synthetic_city(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_circles < 2) throw ArgumentError("synthetic city needs at least 2 circles");
  if (spec.feature_dim < 1 || spec.latent_dim < 1 || spec.categories.empty())
    throw ArgumentError("synthetic city needs positive feature/latent dims and categories");
  if (spec.images_min < 1 || spec.images_min > spec.images_max || spec.pois_min < 1 ||
      spec.pois_min > spec.pois_max || spec.reviews_min < 1 ||
      spec.reviews_min > spec.reviews_max)
    throw ArgumentError("synthetic city item ranges must satisfy 1 <= min <= max");

  Rng rng(derive_seed(seed, stream::kGenerate));
  const std::size_t n = spec.n_circles;
  const std::size_t F = spec.feature_dim;
  const std::size_t q = spec.latent_dim;
  const std::size_t C = spec.categories.size();

  SyntheticCity city;
  Dataset& ds = city.dataset;
  ds.categories = spec.categories;

  // Model parameters.
  const Mat text_mix = gaussian_matrix(rng, F, q);
  const Mat image_mix = gaussian_matrix(rng, F, q);
  const Mat review_mix = gaussian_matrix(rng, F, q);
  const Mat category_logits = gaussian_matrix(rng, C, q);
  Vec sentiment_dir(F);
  for (std::size_t k = 0; k < F; ++k) sentiment_dir[k] = rng.normal();
  Vec sentiment_w(q);
  for (std::size_t k = 0; k < q; ++k) sentiment_w[k] = rng.normal();
  sentiment_w /= sentiment_w.norm();
  Vec price_w(q);
  for (std::size_t k = 0; k < q; ++k) price_w[k] = rng.normal();
  price_w /= price_w.norm();

  // Smooth latent field over the city: one plane wave per factor.
  std::vector<std::array<double, 4>> waves(q);
  for (auto& w : waves) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double wavelength = rng.uniform(spec.extent_km / 1.5, spec.extent_km);
    w = {std::cos(angle), std::sin(angle), wavelength, rng.uniform(0.0, 2.0 * std::numbers::pi)};
  }

  for (Disease d : kDiseases) {
    const auto k = static_cast<std::size_t>(d);
    city.signal.base[k] = kBaseRate[k] * kReferencePop;
    city.signal.scale[k] = kSignalFraction * city.signal.base[k];
    std::vector<double> w(q);
    double norm = 0.0;
    for (auto& x : w) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : w) x /= norm;
    city.signal.weights[k] = std::move(w);
  }

  Mat categories_raw = gaussian_matrix(rng, C, F);
  ds.poi_categories = RawFeatureMatrix::from_mat(categories_raw, FeatureKind::poi_category);

  std::vector<std::vector<double>> image_rows, text_rows, review_rows;
  std::vector<std::pair<double, double>> xy(n);

  // Circles sit in distinct cells of a jittered grid so that no two
  // activity zones share a centre.
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double cell = spec.extent_km / static_cast<double>(side);
  std::vector<std::size_t> cells(side * side);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  rng.shuffle(cells);

  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(cells[i] % side) + rng.uniform(0.25, 0.75)) * cell;
    const double y = (static_cast<double>(cells[i] / side) + rng.uniform(0.25, 0.75)) * cell;
    xy[i] = {x, y};
    Vec z(q);
    for (std::size_t k = 0; k < q; ++k) {
      const auto& w = waves[k];
      const double phase = 2.0 * std::numbers::pi * (w[0] * x + w[1] * y) / w[2] + w[3];
      z[k] = std::sin(phase);
    }
    city.latents.push_back(z);
    // What the circle's own photos, texts and reviews reveal: the field plus
    // a local deviation that the disease counts do not follow.
    Vec obs(q);
    for (std::size_t k = 0; k < q; ++k) obs[k] = z[k] + spec.local_noise * rng.normal();

    LivingCircle c;
    c.id = make_id("c", i, 4);
    c.lat = kOriginLat + y / kKmPerDegree;
    c.lon = kOriginLon + x / (kKmPerDegree * std::cos(kOriginLat * std::numbers::pi / 180.0));
    c.households = rng.range(500, 3000);
    c.elderly_pop = static_cast<std::uint64_t>(kReferencePop) + c.households / 2;

    // Text description.
    {
      const Vec t = text_mix * obs;
      std::vector<double> row(F);
      for (std::size_t k = 0; k < F; ++k) row[k] = t[k] + spec.feature_noise * rng.normal();
      c.text_row_id = static_cast<std::uint32_t>(text_rows.size());
      text_rows.push_back(std::move(row));
    }

    // Photos share a per-circle offset so that same-circle images are closer.
    {
      const Vec base = image_mix * obs;
      Vec offset(F);
      for (std::size_t k = 0; k < F; ++k) offset[k] = 0.5 * rng.normal();
      const std::size_t m = rng.range(spec.images_min, spec.images_max);
      for (std::size_t j = 0; j < m; ++j) {
        std::vector<double> row(F);
        for (std::size_t k = 0; k < F; ++k)
          row[k] = base[k] + offset[k] + spec.feature_noise * rng.normal();
        c.image_row_ids.push_back(static_cast<std::uint32_t>(image_rows.size()));
        image_rows.push_back(std::move(row));
      }
    }

    // POIs: category mix and review sentiment both follow the latents.
    {
      Vec logits = category_logits * obs;
      Vec probs = (logits.array() - logits.maxCoeff()).exp();
      probs /= probs.sum();
      const Vec review_base = review_mix * obs;
      const std::size_t n_pois = rng.range(spec.pois_min, spec.pois_max);
      for (std::size_t j = 0; j < n_pois; ++j) {
        Poi p;
        p.id = make_id("p", ds.pois.size(), 5);
        p.circle_id = c.id;
        double u = rng.uniform();
        std::size_t cat = C - 1;
        for (std::size_t k = 0; k < C; ++k) {
          if (u < probs[k]) {
            cat = k;
            break;
          }
          u -= probs[k];
        }
        p.category = spec.categories[cat];
        const std::size_t n_reviews = rng.range(spec.reviews_min, spec.reviews_max);
        for (std::size_t r = 0; r < n_reviews; ++r) {
          const double sentiment = sentiment_w.dot(obs) + 0.5 * rng.normal();
          int rating = static_cast<int>(std::lround(3.0 + 1.2 * sentiment));
          rating = std::clamp(rating, 1, 5);
          if (rng.bernoulli(spec.zero_rating_prob) && r > 0) rating = 0;
          const double s = (rating - 3) / 2.0;
          std::vector<double> row(F);
          for (std::size_t k = 0; k < F; ++k)
            row[k] = review_base[k] + s * sentiment_dir[k] + spec.feature_noise * rng.normal();
          p.review_row_ids.push_back(static_cast<std::uint32_t>(review_rows.size()));
          p.rating_labels.push_back(rating);
          review_rows.push_back(std::move(row));
        }
        c.poi_ids.push_back(p.id);
        ds.pois.push_back(std::move(p));
      }
    }

    DiseaseLabels l;
    l.circle_id = c.id;
    for (Disease d : kDiseases) {
      const auto k = static_cast<std::size_t>(d);
      const double noise = spec.noise_scale * city.signal.scale[k] * rng.normal();
      const double pop = static_cast<double>(c.elderly_pop);
      l.value(d) = spec.noise_scale == 0.0
                       ? city.signal.evaluate(d, z, pop)
                       : std::clamp(city.signal.evaluate(d, z, pop) + noise, 0.0, pop);
    }
    ds.labels.push_back(std::move(l));

    city.housing_price.push_back(60000.0 - 8000.0 * price_w.dot(z) + 2000.0 * rng.normal());
    ds.circles.push_back(std::move(c));
  }

  auto to_matrix = [F](const std::vector<std::vector<double>>& rows, FeatureKind kind) {
    Mat m(rows.size(), F);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t k = 0; k < F; ++k) m(i, k) = rows[i][k];
    return RawFeatureMatrix::from_mat(m, kind);
  };
  ds.images = to_matrix(image_rows, FeatureKind::image);
  ds.circle_texts = to_matrix(text_rows, FeatureKind::circle_text);
  ds.poi_reviews = to_matrix(review_rows, FeatureKind::poi_review);

  // Streets: nearest of a few randomly chosen seed circles.
  const std::size_t n_streets =
      std::min(n, spec.n_streets > 0 ? spec.n_streets : std::max<std::size_t>(2, n / 8));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t s = 0; s < n_streets; ++s) {
      const auto& a = xy[i];
      const auto& b = xy[order[s]];
      const double d = std::hypot(a.first - b.first, a.second - b.second);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    city.streets.emplace_back(ds.circles[i].id, make_id("s", best, 3));
  }

  // Reviews with rating 0 stay in the files; the loader drops them.
  ds.index();
  return city;
}

void write_synthetic_city(const std::filesystem::path& dir, const SyntheticCity& city) {
  save_dataset(dir, city.dataset);
  save_street_assignment(dir / "streets.jsonl", city.streets);

  std::string latents, covariates;
  for (std::size_t i = 0; i < city.latents.size(); ++i) {
    const auto& id = city.dataset.circles[i].id;
    std::vector<double> z(city.latents[i].data(), city.latents[i].data() + city.latents[i].size());
    latents += json{{"circle_id", id}, {"z", z}}.dump() + "\n";
    covariates += json{{"circle_id", id}, {"value", city.housing_price[i]}}.dump() + "\n";
  }
  write_text_file(dir / "latents.jsonl", latents);
  write_text_file(dir / "covariates.jsonl", covariates);

  json signal;
  for (Disease d : kDiseases) {
    const auto k = static_cast<std::size_t>(d);
    signal[std::string(to_string(d))] = json{{"base", city.signal.base[k]},
                                             {"scale", city.signal.scale[k]},
                                             {"weights", city.signal.weights[k]}};
  }
  write_text_file(dir / "signal.json", signal.dump(2) + "\n");
}

GroundTruth load_ground_truth(const std::filesystem::path& dir) {
  GroundTruth gt;
  const std::string text = read_text_file(dir / "latents.jsonl");
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (end > pos) {
      const json rec = json::parse(text.substr(pos, end - pos));
      gt.circle_ids.push_back(rec.at("circle_id").get<std::string>());
      const auto z = rec.at("z").get<std::vector<double>>();
      gt.latents.emplace_back(Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(z.size())));
    }
    pos = end + 1;
  }
  const json signal = json::parse(read_text_file(dir / "signal.json"));
  for (Disease d : kDiseases) {
    const auto k = static_cast<std::size_t>(d);
    const auto& s = signal.at(std::string(to_string(d)));
    gt.signal.base[k] = s.at("base").get<double>();
    gt.signal.scale[k] = s.at("scale").get<double>();
    gt.signal.weights[k] = s.at("weights").get<std::vector<double>>();
  }
  return gt;
}

}  // namespace curegraph
