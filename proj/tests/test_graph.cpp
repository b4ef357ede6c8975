#include <cmath>
#include <numbers>

#include "doctest.h"

#include "checks.hpp"
#include "curegraph/error.hpp"
#include "curegraph/evaluate.hpp"
#include "curegraph/graph.hpp"
#include "oracles.hpp"

using namespace curegraph;

namespace {

SpatialContext two_circles() {
  SpatialContext ctx;
  ctx.n = 2;
  ctx.D = Mat{{0, 1}, {1, 0}};
  ctx.F = Mat{{1, 0.5}, {0.5, 1}};
  ctx.S = spatial_autocorrelation(ctx.F, ctx.D);
  ctx.topk = top_k_candidates(ctx.S, 1);
  ctx.k = 1;
  return ctx;
}

}  // namespace

TEST_CASE("angular weight") {
  const Vec x = Vec::Unit(3, 0), y = Vec::Unit(3, 1);
  CHECK(angular_weight(x, x) == 1.0);
  CHECK(angular_weight(x, y) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(angular_weight(x, -x) == 0.0);
  CHECK_THROWS_AS(angular_weight(x, Vec::Zero(3)), DegenerateInputError);
}

TEST_CASE("inter weight") {
  CHECK(std::abs(inter_weight(0.8, std::numbers::e - 1.0) - 0.8) < 1e-9);
  CHECK(inter_weight(0.0, 0.4) == 0.0);
  CHECK(inter_weight(0.6, 0.1) > inter_weight(0.6, 0.2));
  CHECK(inter_weight(0.6, 0.0) > inter_weight(0.6, 1e-3));
}

TEST_CASE("edge counts on tiny graphs") {
  const auto ctx = two_circles();
  const Mat h = oracle::random_matrix(2, 3, 5);
  const auto g = build_graph(h, h * 2.0 + Mat::Ones(2, 3), -h, ctx, {.top_k = 1});
  std::size_t intra = 0, inter = 0;
  for (const auto& e : g.edges) (e.kind == EdgeKind::intra ? intra : inter)++;
  CHECK(intra == 6);
  CHECK(inter == 3);

  SpatialContext one;
  one.n = 1;
  one.D = one.F = one.S = Mat::Zero(1, 1);
  const auto g1 = build_graph(h.topRows(1), h.topRows(1), h.topRows(1) * -1.0, one, {.top_k = 1});
  CHECK(g1.edges.size() == 3);
  CHECK(g1.node_count() == 3);
}

TEST_CASE("missing modality row is an integrity error") {
  const auto ctx = two_circles();
  const Mat h = oracle::random_matrix(2, 3, 6);
  CHECK_THROWS_AS(build_graph(h, h.topRows(1), h, ctx, {.top_k = 1}), IntegrityError);
}

TEST_CASE("edge structure invariants") {
  const auto pts = oracle::random_points(7, 8);
  const auto ctx = build_spatial_context(pts, oracle::random_counts(7, 5, 9), 3);
  const auto g = build_graph(oracle::random_matrix(7, 4, 1), oracle::random_matrix(7, 4, 2),
                             oracle::random_matrix(7, 4, 3), ctx, {.top_k = 3});
  for (const auto& e : g.edges) {
    CHECK(e.u < e.v);
    CHECK(e.weight >= 0.0);
    if (e.kind == EdgeKind::intra) {
      CHECK(g.circle_of(e.u) == g.circle_of(e.v));
      CHECK(g.modality_of(e.u) != g.modality_of(e.v));
    } else {
      CHECK(g.circle_of(e.u) != g.circle_of(e.v));
      CHECK(g.modality_of(e.u) == g.modality_of(e.v));
    }
  }
}

TEST_CASE("four-circle graph against exhaustive enumeration") {
  for (std::uint64_t seed : {3u, 17u, 29u}) {
    const auto c = checks::graph_check(4, 2, seed);
    CHECK(c.same_edge_set);
    CHECK(c.max_weight_error == 0.0);
    CHECK(c.max_laplacian_error < 1e-14);
    CHECK(c.symmetric);
    CHECK(c.spectral_radius <= 1.0 + 1e-9);
    CHECK(c.intra == 12);
  }
}

TEST_CASE("renormalized laplacian hand cases") {
  MultiModalGraph single;
  single.n_circles = 1;
  single.modalities = {true, false, false};
  CHECK(renormalized_laplacian(single) == Mat::Ones(1, 1));

  MultiModalGraph pair;
  pair.n_circles = 1;
  pair.modalities = {true, true, false};
  pair.edges.push_back({0, 1, 1.0, EdgeKind::intra});
  const Mat p = renormalized_laplacian(pair);
  CHECK((p - Mat::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("permuting circles conjugates the adjacency") {
  const std::size_t n = 5;
  const auto pts = oracle::random_points(n, 40);
  const auto counts = oracle::random_counts(n, 5, 41);
  const Mat ht = oracle::random_matrix(n, 3, 42), hv = oracle::random_matrix(n, 3, 43),
            hp = oracle::random_matrix(n, 3, 44);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};  // new row r holds old circle perm[r]
  std::vector<LatLon> pts2(n);
  std::vector<std::vector<std::size_t>> counts2(n);
  Mat ht2(n, 3), hv2(n, 3), hp2(n, 3);
  for (std::size_t r = 0; r < n; ++r) {
    pts2[r] = pts[perm[r]];
    counts2[r] = counts[perm[r]];
    ht2.row(r) = ht.row(perm[r]);
    hv2.row(r) = hv.row(perm[r]);
    hp2.row(r) = hp.row(perm[r]);
  }
  const auto g1 = build_graph(ht, hv, hp, build_spatial_context(pts, counts, 2), {.top_k = 2});
  const auto g2 = build_graph(ht2, hv2, hp2, build_spatial_context(pts2, counts2, 2), {.top_k = 2});
  const Mat p1 = renormalized_laplacian(g1);
  const Mat p2 = renormalized_laplacian(g2);
  auto node = [&](std::size_t r) { return (r / n) * n + perm[r % n]; };
  double worst = 0.0;
  for (std::size_t a = 0; a < 3 * n; ++a)
    for (std::size_t b = 0; b < 3 * n; ++b)
      worst = std::max(worst, std::abs(p2(a, b) - p1(node(a), node(b))));
  CHECK(worst <= 1e-12);
}

TEST_CASE("ablation graph shapes") {
  const std::size_t n = 6;
  const auto ctx = build_spatial_context(oracle::random_points(n, 50), oracle::random_counts(n, 5, 51), 2);
  const Mat ht = oracle::random_matrix(n, 3, 52), hv = oracle::random_matrix(n, 3, 53),
            hp = oracle::random_matrix(n, 3, 54);
  const auto no_topk = build_graph(ht, hv, hp, ctx, graph_options(Ablation::no_topk, 2));
  CHECK(no_topk.node_count() == 3 * n);
  CHECK(no_topk.edges.size() == 3 * n);
  const auto t_only = build_graph(ht, hv, hp, ctx, graph_options(Ablation::text_only, 2));
  CHECK(t_only.node_count() == n);
  for (const auto& e : t_only.edges) CHECK(e.kind == EdgeKind::inter);
  CHECK(!t_only.edges.empty());
  const auto no_v = build_graph(ht, hv, hp, ctx, graph_options(Ablation::no_visual, 2));
  CHECK(no_v.node_count() == 2 * n);
}

TEST_CASE("edge list csv round trip") {
  const auto ctx = build_spatial_context(oracle::random_points(4, 60), oracle::random_counts(4, 5, 61), 2);
  const auto g = build_graph(oracle::random_matrix(4, 3, 62), oracle::random_matrix(4, 3, 63),
                             oracle::random_matrix(4, 3, 64), ctx, {.top_k = 2});
  const auto back = edges_from_csv(edges_to_csv(g));
  REQUIRE(back.edges.size() == g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(back.edges[i].u == g.edges[i].u);
    CHECK(back.edges[i].v == g.edges[i].v);
    CHECK(back.edges[i].weight == g.edges[i].weight);
    CHECK(back.edges[i].kind == g.edges[i].kind);
  }
  CHECK_THROWS_AS(edges_from_csv("u,v\n"), FormatError);
}
