#include "curegraph/smgcn.hpp"

#include <cmath>

#include "curegraph/adam.hpp"
#include "curegraph/error.hpp"
#include "curegraph/rng.hpp"

namespace curegraph {

double beta(std::size_t k, double eta) {
  if (k < 1) throw ArgumentError("beta: layer index starts at 1");
  return std::log(eta / static_cast<double>(k) + 1.0);
}

std::size_t GcnParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : layers) n += static_cast<std::size_t>(w.size());
  for (std::size_t l = 0; l < kReadoutLayers; ++l)
    n += static_cast<std::size_t>(readout_w[l].size() + readout_b[l].size());
  return n;
}

GcnParams GcnParams::init(std::size_t n_layers, std::size_t d, std::size_t n_modalities,
                          std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  GcnParams p;
  auto fill = [&rng](Eigen::Index rows, Eigen::Index cols, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
    return m;
  };
  for (std::size_t k = 0; k < n_layers; ++k)
    p.layers.push_back(fill(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d),
                            static_cast<double>(d)));
  const std::array<std::size_t, kReadoutLayers + 1> dims = {n_modalities * d, hidden, hidden,
                                                             hidden, d};
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    p.readout_w[l] = fill(out, in, static_cast<double>(in));
    p.readout_b[l] = fill(out, 1, static_cast<double>(in)).col(0);
  }
  return p;
}

namespace {

Mat sigmoid(const Mat& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

}  // namespace

GcnCache gcn_forward(const Mat& p, const Mat& h0, const std::vector<Mat>& weights, double alpha,
                     double eta, double dropout, Mode mode, std::uint64_t seed) {
  if (p.rows() != p.cols() || p.rows() != h0.rows())
    throw ArgumentError("gcn_forward: propagation matrix and node features disagree");
  const auto d = h0.cols();
  GcnCache c;
  c.h.push_back(h0);
  Rng rng(seed);
  for (std::size_t k = 1; k <= weights.size(); ++k) {
    const Mat& w = weights[k - 1];
    if (w.rows() != d || w.cols() != d)
      throw ArgumentError("gcn_forward: layer weight must be d x d");
    Mat x = c.h.back();
    if (mode == Mode::train && dropout > 0.0) {
      Mat mask(x.rows(), x.cols());
      const double keep = 1.0 / (1.0 - dropout);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) mask(i, j) = rng.bernoulli(dropout) ? 0.0 : keep;
      x = x.cwiseProduct(mask);
      c.masks.push_back(std::move(mask));
    }
    const double b = beta(k, eta);
    Mat mixed = (1.0 - alpha) * (p * x) + alpha * h0;
    const Mat pre = (1.0 - b) * mixed + b * (mixed * w);
    Mat h = sigmoid(pre);
    if (!h.allFinite())
      throw NumericError("gcn_forward: non-finite value in layer " + std::to_string(k));
    c.input.push_back(std::move(x));
    c.mixed.push_back(std::move(mixed));
    c.h.push_back(std::move(h));
  }
  return c;
}

Mat concat_modalities(const Mat& h_last, std::size_t n, std::size_t m) {
  const auto d = h_last.cols();
  Mat out(n, static_cast<Eigen::Index>(m) * d);
  for (std::size_t b = 0; b < m; ++b)
    out.middleCols(static_cast<Eigen::Index>(b) * d, d) =
        h_last.middleRows(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n));
  return out;
}

ReadoutCache fuse_readout(const GcnParams& params, const Mat& fused_input) {
  ReadoutCache c;
  c.input = fused_input;
  Mat a = fused_input;
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    Mat z = a * params.readout_w[l].transpose();
    z.rowwise() += params.readout_b[l].transpose();
    c.pre[l] = z;
    if (l + 1 < kReadoutLayers) a = z.cwiseMax(0.0);
  }
  return c;
}

ObjectiveValue objective(const EmbeddingTable& e, const Mat& s, double lambda) {
  const Mat& E = e.fused;
  const auto n = E.rows();
  if (s.rows() != n || s.cols() != n)
    throw ArgumentError("objective: S must be n x n for n embedded circles");
  ObjectiveValue out;
  Mat r = s - E * E.transpose();
  r.diagonal().setZero();
  out.reconstruction = r.squaredNorm();
  out.grad_fused = -2.0 * (r + r.transpose()) * E;

  for (std::size_t m = 0; m < 3; ++m)
    out.grad_modality[m] = Mat::Zero(e.modality[m].rows(), e.modality[m].cols());
  const Mat& et = e.modality[0];
  if (et.size() > 0 && n > 0) {
    const double w = lambda / static_cast<double>(n);
    for (std::size_t m = 1; m < 3; ++m) {
      const Mat& em = e.modality[m];
      if (em.size() == 0) continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd diff = et.row(i) - em.row(i);
        const double len = diff.norm();
        out.alignment += w * len;
        if (len > 0.0) {
          out.grad_modality[0].row(i) += w * diff / len;
          out.grad_modality[m].row(i) -= w * diff / len;
        }
      }
    }
  }
  out.value = out.reconstruction + out.alignment;
  return out;
}

ModelForward model_forward(const MultiModalGraph& g, const Mat& p, const Mat& h0,
                           const GcnParams& params, const GcnHyper& hyper, Mode mode,
                           std::uint64_t seed) {
  ModelForward f;
  f.gcn = gcn_forward(p, h0, params.layers, hyper.alpha, hyper.eta, hyper.dropout, mode, seed);
  const Mat& last = f.gcn.h.back();
  const std::size_t n = g.n_circles;
  f.readout = fuse_readout(params, concat_modalities(last, n, g.n_modalities()));
  f.table.fused = f.readout.output();
  const auto mods = g.present();
  for (std::size_t b = 0; b < mods.size(); ++b)
    f.table.modality[static_cast<std::size_t>(mods[b])] =
        last.middleRows(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n));
  return f;
}

GcnGrad backward(const MultiModalGraph& g, const Mat& p, const GcnParams& params,
                 const GcnHyper& hyper, const ModelForward& fwd, const ObjectiveValue& obj) {
  const auto& gc = fwd.gcn;
  const std::size_t L = params.layers.size();
  if (gc.h.size() != L + 1 || gc.mixed.size() != L || gc.input.size() != L)
    throw std::logic_error("backward: forward cache is incomplete");
  const std::size_t n = g.n_circles;
  const auto d = gc.h[0].cols();
  GcnGrad grad;

  // Readout.
  const auto& rc = fwd.readout;
  Mat dz = obj.grad_fused;
  for (std::size_t l = kReadoutLayers; l-- > 0;) {
    const Mat a_in = l == 0 ? rc.input : Mat(rc.pre[l - 1].cwiseMax(0.0));
    grad.readout_w[l] = dz.transpose() * a_in;
    grad.readout_b[l] = dz.colwise().sum().transpose();
    Mat da = dz * params.readout_w[l];
    if (l > 0) {
      const Mat& z_prev = rc.pre[l - 1];
      for (Eigen::Index i = 0; i < da.rows(); ++i)
        for (Eigen::Index j = 0; j < da.cols(); ++j)
          if (z_prev(i, j) <= 0.0) da(i, j) = 0.0;
    }
    dz = std::move(da);
  }
  const Mat& d_fused_input = dz;

  // Last-layer node rows: readout input plus direct alignment terms.
  Mat dh = Mat::Zero(gc.h.back().rows(), d);
  const auto mods = g.present();
  for (std::size_t b = 0; b < mods.size(); ++b) {
    auto block = dh.middleRows(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n));
    block = d_fused_input.middleCols(static_cast<Eigen::Index>(b) * d, d);
    const Mat& ga = obj.grad_modality[static_cast<std::size_t>(mods[b])];
    if (ga.size() > 0) block += ga;
  }

  grad.layers.resize(L);
  grad.h0 = Mat::Zero(gc.h[0].rows(), d);
  for (std::size_t k = L; k >= 1; --k) {
    const Mat& h = gc.h[k];
    const Mat da = dh.cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
    const double b = beta(k, hyper.eta);
    const Mat& w = params.layers[k - 1];
    grad.layers[k - 1] = b * gc.mixed[k - 1].transpose() * da;
    const Mat dmixed = (1.0 - b) * da + b * (da * w.transpose());
    grad.h0 += hyper.alpha * dmixed;
    Mat dx = (1.0 - hyper.alpha) * (p.transpose() * dmixed);
    if (!gc.masks.empty()) dx = dx.cwiseProduct(gc.masks[k - 1]);
    dh = std::move(dx);
  }
  grad.h0 += dh;
  return grad;
}

GcnHyper hyper_from(const RunConfig& cfg) {
  return {cfg.alpha, cfg.eta, cfg.lambda, cfg.dropout};
}

namespace {

void init_moments(AdamMoments& m, const GcnParams& p) {
  auto add = [&m](Eigen::Index r, Eigen::Index c) {
    m.m.push_back(Mat::Zero(r, c));
    m.v.push_back(Mat::Zero(r, c));
  };
  for (const auto& w : p.layers) add(w.rows(), w.cols());
  for (const auto& w : p.readout_w) add(w.rows(), w.cols());
  for (const auto& b : p.readout_b) add(b.size(), 1);
}

Mat initial_features(const MultiModalGraph& g, const HeadTraining& h) {
  return stack_node_features(g, project_rows(h.heads[0], h.raw.text),
                             project_rows(h.heads[1], h.raw.visual),
                             project_rows(h.heads[2], h.raw.poi));
}

}  // namespace

TrainResult train_smgcn(const MultiModalGraph& g, const Mat& h0_in, const Mat& s,
                        const RunConfig& cfg, std::optional<HeadTraining> heads) {
  cfg.validate();
  const GcnHyper hyper = hyper_from(cfg);
  const Mat p = renormalized_laplacian(g);
  const bool train_heads = cfg.gcn_train_heads && heads.has_value();
  Mat h0 = train_heads ? initial_features(g, *heads) : h0_in;
  if (h0.rows() != static_cast<Eigen::Index>(g.node_count()))
    throw ArgumentError("train_smgcn: H0 must have one row per graph node");

  TrainResult out;
  out.state.params = GcnParams::init(cfg.gcn_layers, static_cast<std::size_t>(h0.cols()),
                                     g.n_modalities(), cfg.readout_hidden,
                                     derive_seed(cfg.rng_seed, stream::kGcnInit));
  init_moments(out.state.moments, out.state.params);
  const AdamConfig adam{.lr = cfg.lr_gcn, .weight_decay = cfg.weight_decay};

  // Adam state for the optional heads: visual and POI weight and bias.
  std::array<Mat, 4> head_m, head_v;
  if (train_heads) {
    for (int k = 0; k < 2; ++k) {
      const auto& h = heads->heads[1 + k];
      head_m[2 * k] = head_v[2 * k] = Mat::Zero(h.weight.rows(), h.weight.cols());
      head_m[2 * k + 1] = head_v[2 * k + 1] = Mat::Zero(h.bias.size(), 1);
    }
  }

  auto eval_loss = [&] {
    const auto f = model_forward(g, p, h0, out.state.params, hyper, Mode::eval, 0);
    return objective(f.table, s, hyper.lambda).value;
  };
  out.eval_loss.push_back(eval_loss());
  if (!std::isfinite(out.eval_loss.back())) throw TrainingDivergedError("smgcn", 0);

  const std::uint64_t dropout_root = derive_seed(cfg.rng_seed, stream::kGcnDropout);
  for (std::uint64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto f =
        model_forward(g, p, h0, out.state.params, hyper, Mode::train, derive_seed(dropout_root, epoch));
    const auto obj = objective(f.table, s, hyper.lambda);
    if (!std::isfinite(obj.value)) throw TrainingDivergedError("smgcn", epoch + 1);
    out.train_loss.push_back(obj.value);
    const auto grad = backward(g, p, out.state.params, hyper, f, obj);

    ++out.state.step;
    auto& st = out.state;
    std::size_t slot = 0;
    for (std::size_t k = 0; k < st.params.layers.size(); ++k, ++slot)
      adam_update(st.params.layers[k], grad.layers[k], st.moments.m[slot], st.moments.v[slot],
                  adam, st.step);
    for (std::size_t l = 0; l < kReadoutLayers; ++l, ++slot)
      adam_update(st.params.readout_w[l], grad.readout_w[l], st.moments.m[slot],
                  st.moments.v[slot], adam, st.step);
    for (std::size_t l = 0; l < kReadoutLayers; ++l, ++slot) {
      Mat b = st.params.readout_b[l];
      adam_update(b, Mat(grad.readout_b[l]), st.moments.m[slot], st.moments.v[slot], adam,
                  st.step);
      st.params.readout_b[l] = b.col(0);
    }

    if (train_heads) {
      const std::size_t n = g.n_circles;
      for (int k = 0; k < 2; ++k) {
        const Modality m = k == 0 ? Modality::visual : Modality::poi;
        const std::size_t node0 = g.node(0, m);
        if (node0 == npos) continue;
        auto& head = heads->heads[static_cast<std::size_t>(m)];
        const Mat& raw = k == 0 ? heads->raw.visual : heads->raw.poi;
        const auto hg = head_backward(
            raw, grad.h0.middleRows(static_cast<Eigen::Index>(node0), static_cast<Eigen::Index>(n)));
        adam_update(head.weight, hg.weight, head_m[2 * k], head_v[2 * k], adam, st.step);
        Mat b = head.bias;
        adam_update(b, Mat(hg.bias), head_m[2 * k + 1], head_v[2 * k + 1], adam, st.step);
        head.bias = b.col(0);
      }
      h0 = initial_features(g, *heads);
    }
    out.eval_loss.push_back(eval_loss());
    if (!std::isfinite(out.eval_loss.back())) throw TrainingDivergedError("smgcn", epoch + 1);
  }

  out.embeddings = model_forward(g, p, h0, out.state.params, hyper, Mode::eval, 0).table;
  if (train_heads) out.heads = std::move(heads);
  return out;
}

}  // namespace curegraph
