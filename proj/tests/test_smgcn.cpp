#include <cmath>

#include "doctest.h"

#include "checks.hpp"
#include "curegraph/error.hpp"
#include "curegraph/graph.hpp"
#include "curegraph/rng.hpp"
#include "curegraph/smgcn.hpp"
#include "oracles.hpp"

using namespace curegraph;

namespace {

struct Fixture {
  MultiModalGraph g;
  Mat p, h0;
  Mat s;
};

Fixture small_model(std::size_t n, std::size_t d, std::uint64_t seed) {
  const Mat ht = oracle::random_matrix(n, d, seed), hv = oracle::random_matrix(n, d, seed + 1),
            hp = oracle::random_matrix(n, d, seed + 2);
  const auto ctx = build_spatial_context(oracle::random_points(n, seed + 3),
                                         oracle::random_counts(n, 5, seed + 4), 2);
  Fixture f;
  f.g = build_graph(ht, hv, hp, ctx, {.top_k = 2});
  f.p = renormalized_laplacian(f.g);
  f.h0 = stack_node_features(f.g, ht, hv, hp);
  f.s = ctx.S;
  return f;
}

}  // namespace

TEST_CASE("beta schedule") {
  for (std::size_t k = 1; k < 6; ++k) CHECK(beta(k, 0.0) == 0.0);
  CHECK(std::abs(beta(1, 0.5) - 0.405465) < 1e-6);
  CHECK(beta(3, 0.5) < beta(2, 0.5));
  CHECK_THROWS_AS(beta(0, 0.5), ArgumentError);
}

TEST_CASE("propagation against a straight-line implementation") {
  const Mat p = [] {
    Mat a = oracle::random_matrix(4, 4, 70).cwiseAbs();
    a = (a + a.transpose()).eval();
    return Mat(a / a.sum());
  }();
  const Mat h0 = oracle::random_matrix(4, 3, 71);
  const std::vector<Mat> w = {oracle::random_matrix(3, 3, 72), oracle::random_matrix(3, 3, 73)};
  const auto c = gcn_forward(p, h0, w, 0.2, 0.5, 0.0, Mode::eval, 0);
  Mat h = h0;
  for (std::size_t k = 1; k <= 2; ++k) {
    h = oracle::gcn_layer(p, h, h0, w[k - 1], 0.2, std::log(0.5 / static_cast<double>(k) + 1.0));
    CHECK((c.h[k] - h).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("degenerate settings reduce exactly") {
  const auto c = checks::degeneracy_check(90);
  CHECK(c.alpha_one_max_diff == 0.0);
  CHECK(c.plain_gcn_max_diff == 0.0);
}

TEST_CASE("dropout masks depend only on the seed") {
  const auto f = small_model(3, 4, 80);
  const std::vector<Mat> w = {oracle::random_matrix(4, 4, 81)};
  const auto a = gcn_forward(f.p, f.h0, w, 0.2, 0.5, 0.3, Mode::train, 5);
  const auto b = gcn_forward(f.p, f.h0, w, 0.2, 0.5, 0.3, Mode::train, 5);
  const auto e = gcn_forward(f.p, f.h0, w, 0.2, 0.5, 0.3, Mode::eval, 5);
  CHECK(a.h.back() == b.h.back());
  CHECK(e.masks.empty());
  CHECK(a.h.back() != e.h.back());
}

TEST_CASE("readout") {
  auto params = GcnParams::init(1, 2, 3, 4, 3);
  for (std::size_t l = 0; l < kReadoutLayers; ++l) params.readout_w[l].setZero();
  const Mat in = oracle::random_matrix(5, 6, 4);
  const Mat out = fuse_readout(params, in).output();
  for (int i = 0; i < 5; ++i) CHECK(Vec(out.row(i).transpose()) == params.readout_b.back());

  params = GcnParams::init(1, 2, 3, 4, 5);
  const Mat one = oracle::random_matrix(1, 6, 6);
  Vec a = one.row(0).transpose();
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    Vec z = params.readout_w[l] * a + params.readout_b[l];
    if (l + 1 < kReadoutLayers) z = z.cwiseMax(0.0);
    a = z;
  }
  CHECK((fuse_readout(params, one).output().row(0).transpose() - a).cwiseAbs().maxCoeff() <= 1e-10);

  Mat swapped = in;
  swapped.row(0) = in.row(3);
  swapped.row(3) = in.row(0);
  const Mat o1 = fuse_readout(params, in).output(), o2 = fuse_readout(params, swapped).output();
  CHECK(o1.row(0) == o2.row(3));
  CHECK(o1.row(3) == o2.row(0));
  CHECK(o1.row(1) == o2.row(1));
}

TEST_CASE("objective hand cases") {
  EmbeddingTable e;
  e.fused = oracle::random_matrix(3, 2, 7);
  Mat s = e.fused * e.fused.transpose();
  for (std::size_t m = 0; m < 3; ++m) e.modality[m] = oracle::random_matrix(3, 2, 8);
  const auto zero = objective(e, s, 0.1);
  CHECK(zero.value <= 1e-24);

  EmbeddingTable two;
  two.fused = Mat{{1.0, 2.0}, {0.5, -1.0}};
  const Mat s2{{0.0, 0.8}, {0.8, 0.0}};
  const double dot = 1.0 * 0.5 + 2.0 * -1.0;
  CHECK(std::abs(objective(two, s2, 0.0).value - 2.0 * (0.8 - dot) * (0.8 - dot)) <= 1e-12);
}

TEST_CASE("alignment gradient closed form") {
  EmbeddingTable e;
  e.fused = Mat{{0.3, 0.1}};
  e.modality[0] = Mat{{1.0, 2.0}};
  e.modality[1] = Mat{{0.0, 1.0}};
  e.modality[2] = Mat{{2.0, -1.0}};
  const double lambda = 0.1;
  const auto obj = objective(e, Mat::Zero(1, 1), lambda);
  const Eigen::RowVectorXd dv = e.modality[0].row(0) - e.modality[1].row(0);
  const Eigen::RowVectorXd dp = e.modality[0].row(0) - e.modality[2].row(0);
  const Eigen::RowVectorXd expect = lambda * dv / dv.norm() + lambda * dp / dp.norm();
  CHECK((obj.grad_modality[0].row(0) - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zero loss has zero gradients") {
  const auto f = small_model(3, 2, 30);
  const auto params = GcnParams::init(2, 2, 3, 4, 31);
  const GcnHyper hyper{.alpha = 0.2, .eta = 0.5, .lambda = 0.0, .dropout = 0.0};
  const auto fw = model_forward(f.g, f.p, f.h0, params, hyper, Mode::eval, 0);
  const Mat s = fw.table.fused * fw.table.fused.transpose();
  const auto obj = objective(fw.table, s, 0.0);
  const auto grad = backward(f.g, f.p, params, hyper, fw, obj);
  for (const auto& w : grad.layers) CHECK(w.cwiseAbs().maxCoeff() <= 1e-12);
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    CHECK(grad.readout_w[l].cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(grad.readout_b[l].cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(grad.h0.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("training loop") {
  const auto f = small_model(6, 4, 40);
  RunConfig cfg;
  cfg.readout_hidden = 8;
  cfg.epochs = 0;
  const auto none = train_smgcn(f.g, f.h0, f.s, cfg);
  const auto init = GcnParams::init(cfg.gcn_layers, 4, 3, 8, derive_seed(cfg.rng_seed, stream::kGcnInit));
  const auto fw = model_forward(f.g, f.p, f.h0, init, hyper_from(cfg), Mode::eval, 0);
  CHECK(none.embeddings.fused == fw.table.fused);
  CHECK(none.eval_loss.size() == 1);

  cfg.epochs = 40;
  cfg.lr_gcn = 1e-2;
  const auto a = train_smgcn(f.g, f.h0, f.s, cfg);
  const auto b = train_smgcn(f.g, f.h0, f.s, cfg);
  CHECK(a.eval_loss.size() == 41);
  CHECK(a.eval_loss == b.eval_loss);
  CHECK(a.embeddings.fused == b.embeddings.fused);
  CHECK(a.eval_loss.back() < a.eval_loss.front());
}
