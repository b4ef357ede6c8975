#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "curegraph/checkpoint.hpp"
#include "curegraph/config.hpp"
#include "curegraph/error.hpp"
#include "curegraph/io.hpp"
#include "curegraph/split.hpp"
#include "curegraph/synthetic.hpp"
#include "oracles.hpp"

using namespace curegraph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "curegraph_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

RawFeatureMatrix features(FeatureKind kind, std::size_t rows, std::uint64_t seed) {
  return RawFeatureMatrix::from_mat(oracle::random_matrix(rows, 4, seed), kind);
}

// Two circles, three images and two POIs; one review of the second POI is
// unrated.
Dataset fixture() {
  Dataset ds;
  ds.categories = {"food", "shop"};
  ds.circles = {
      {"c1", 30.50, 114.30, 100, 40, {0, 1}, 0, {"p1"}},
      {"c2", 30.52, 114.33, 80, 30, {2}, 1, {"p2"}},
  };
  ds.pois = {
      {"p1", "c1", "food", {0}, {4}},
      {"p2", "c2", "shop", {1, 2}, {5, 0}},
  };
  ds.labels = {{"c1", 1, 2, 3, 4}, {"c2", 2, 3, 4, 5}};
  ds.images = features(FeatureKind::image, 3, 1);
  ds.circle_texts = features(FeatureKind::circle_text, 2, 2);
  ds.poi_reviews = features(FeatureKind::poi_review, 3, 3);
  ds.poi_categories = features(FeatureKind::poi_category, 2, 4);
  return ds;
}

}  // namespace

TEST_CASE("feature matrix round trip") {
  const auto m = features(FeatureKind::image, 5, 9);
  const auto bytes = encode_feature_matrix(m);
  CHECK(bytes.size() == 12 + 5 * 4 * 4);
  CHECK(std::string(bytes.data(), 4) == "CGF1");
  const auto back = decode_feature_matrix(bytes, FeatureKind::image);
  CHECK(back.rows == 5);
  CHECK(back.dim == 4);
  CHECK(back.data == m.data);

  const fs::path dir = scratch("cgf");
  write_feature_matrix(dir / "m.cgf", m);
  CHECK(read_feature_matrix(dir / "m.cgf", FeatureKind::image).data == m.data);
  const Mat x = oracle::random_matrix(3, 7, 10);
  write_matrix(dir / "x.cgf", x);
  const Mat y = read_matrix(dir / "x.cgf");
  CHECK(y.rows() == 3);
  CHECK((y - x.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature matrix errors") {
  auto bytes = encode_feature_matrix(features(FeatureKind::image, 2, 11));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_feature_matrix(bad, FeatureKind::image), FormatError);
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_feature_matrix(truncated, FeatureKind::image), FormatError);
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(decode_feature_matrix(longer, FeatureKind::image), FormatError);
}

TEST_CASE("dataset fixture loads") {
  const fs::path dir = scratch("fixture");
  save_dataset(dir, fixture());
  const auto ds = load_dataset(dir);
  REQUIRE(ds.circles.size() == 2);
  CHECK(ds.circles[0].image_row_ids.size() == 2);
  CHECK(ds.circles[1].image_row_ids.size() == 1);
  CHECK(ds.circle_pois[0].size() == 1);
  CHECK(ds.circle_pois[1].size() == 1);
  // The unrated review is dropped.
  CHECK(ds.pois[1].review_row_ids == std::vector<std::uint32_t>{1});
  CHECK(ds.pois[1].rating_labels == std::vector<int>{5});
}

TEST_CASE("dataset with a corrupt feature file") {
  const fs::path dir = scratch("corrupt");
  save_dataset(dir, fixture());
  {
    std::fstream f(dir / "images.cgf", std::ios::in | std::ios::out | std::ios::binary);
    f.write("JUNK", 4);
  }
  CHECK_THROWS_AS(load_dataset(dir), FormatError);
}

TEST_CASE("dataset integrity") {
  const fs::path dir = scratch("integrity");
  auto ds = fixture();
  ds.circles[0].image_row_ids = {0, 7};
  save_dataset(dir, ds);
  CHECK_THROWS_AS(load_dataset(dir), IntegrityError);
}

TEST_CASE("k-fold split") {
  const auto f = kfold_split(10, 5, 1);
  REQUIRE(f.size() == 5);
  for (const auto& fold : f) CHECK(fold.size() == 2);
  const auto g = kfold_split(11, 5, 3);
  std::multiset<std::size_t> sizes;
  std::vector<std::size_t> all;
  for (const auto& fold : g) {
    sizes.insert(fold.size());
    all.insert(all.end(), fold.begin(), fold.end());
  }
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 2, 3});
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(kfold_split(11, 5, 3) == g);
  CHECK_THROWS_AS(kfold_split(3, 5, 1), ArgumentError);
}

TEST_CASE("synthetic city determinism and seed sensitivity") {
  SyntheticSpec spec;
  spec.n_circles = 50;
  spec.feature_dim = 16;
  const fs::path a = scratch("city_a"), b = scratch("city_b"), c = scratch("city_c");
  write_synthetic_city(a, generate_synthetic_city(spec, 7));
  write_synthetic_city(b, generate_synthetic_city(spec, 7));
  write_synthetic_city(c, generate_synthetic_city(spec, 8));
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK(slurp(a / "labels.jsonl") != slurp(c / "labels.jsonl"));
  CHECK(load_dataset(a).circles.size() == 50);
}

TEST_CASE("noise-free labels equal the planted function") {
  SyntheticSpec spec;
  spec.n_circles = 30;
  spec.feature_dim = 8;
  spec.noise_scale = 0.0;
  const fs::path dir = scratch("noise_free");
  write_synthetic_city(dir, generate_synthetic_city(spec, 3));
  const auto ds = load_dataset(dir);
  const auto truth = load_ground_truth(dir);
  for (std::size_t i = 0; i < truth.circle_ids.size(); ++i) {
    const std::size_t c = ds.circle_index.at(truth.circle_ids[i]);
    const auto& labels = ds.labels[ds.label_of_circle[c]];
    for (Disease d : kDiseases) {
      const double g = truth.signal.evaluate(d, truth.latents[i],
                                             static_cast<double>(ds.circles[c].elderly_pop));
      CHECK(labels.value(d) == doctest::Approx(g).epsilon(1e-12));
    }
  }
}

TEST_CASE("run config") {
  RunConfig cfg;
  CHECK(cfg.tau_visual == 0.05);
  CHECK(cfg.tau_text == 1.0);
  CHECK(cfg.tau_poi == 0.005);
  CHECK(cfg.gcn_layers == 3);
  CHECK(cfg.lr_gcn == 5e-4);
  CHECK(cfg.dropout == 0.3);
  CHECK(cfg.top_k == 20);
  CHECK(cfg.alpha == 0.2);
  CHECK(cfg.eta == 0.5);
  CHECK(cfg.lambda == 0.1);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.embed_dim == 128);
  CHECK(cfg.weight_decay == 3e-3);
  CHECK(cfg.epochs == 60);
  CHECK(cfg.kfolds == 5);
  CHECK(cfg.cluster_k == 3);

  const auto back = RunConfig::parse(cfg.to_text());
  CHECK(back.hash() == cfg.hash());
  RunConfig other = cfg;
  other.set("alpha", "0.3");
  CHECK(other.alpha == 0.3);
  CHECK(other.hash() != cfg.hash());
  CHECK_THROWS_AS(other.set("no_such_key", "1"), ArgumentError);
  other.set("dropout", "1.5");
  CHECK_THROWS_AS(other.validate(), ArgumentError);
}

TEST_CASE("tensor archive round trip") {
  const fs::path dir = scratch("cgm");
  TensorArchive a = {{"x", oracle::random_matrix(2, 3, 1)}, {"y", oracle::random_matrix(4, 1, 2)}};
  write_archive(dir / "a.cgm", a);
  const auto b = read_archive(dir / "a.cgm");
  REQUIRE(b.size() == 2);
  CHECK(b[0].first == "x");
  CHECK(b[0].second == a[0].second);
  CHECK(b[1].second == a[1].second);

  std::string bytes = slurp(dir / "a.cgm");
  write_text_file(dir / "bad.cgm", "XGM1" + bytes.substr(4));
  CHECK_THROWS_AS(read_archive(dir / "bad.cgm"), FormatError);
  write_text_file(dir / "short.cgm", bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_archive(dir / "short.cgm"), FormatError);
  write_text_file(dir / "long.cgm", bytes + "z");
  CHECK_THROWS_AS(read_archive(dir / "long.cgm"), FormatError);

  ModelState st;
  st.params = GcnParams::init(2, 3, 3, 5, 9);
  st.step = 17;
  for (const auto& w : st.params.layers) {
    st.moments.m.push_back(w * 0.5);
    st.moments.v.push_back(w.cwiseAbs());
  }
  write_archive(dir / "model.cgm", to_archive(st));
  const auto st2 = model_state_from_archive(read_archive(dir / "model.cgm"));
  CHECK(st2.step == 17);
  REQUIRE(st2.params.layers.size() == 2);
  CHECK(st2.params.layers[1] == st.params.layers[1]);
  CHECK(st2.params.readout_b[2] == st.params.readout_b[2]);
  CHECK(st2.moments.v[0] == st.moments.v[0]);

  const auto heads = initial_heads(6, 3, 4);
  const auto heads2 = heads_from_archive(to_archive(heads));
  for (int m = 0; m < 3; ++m) {
    CHECK(heads2[m].weight == heads[m].weight);
    CHECK(heads2[m].bias == heads[m].bias);
  }
}
