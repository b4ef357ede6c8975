#include "curegraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "curegraph/checkpoint.hpp"
#include "curegraph/error.hpp"
#include "curegraph/io.hpp"

namespace curegraph {

ModelRun run_model(const Dataset& ds, const ModalFeatures& features, const SpatialContext& ctx,
                   const RunConfig& cfg, Ablation tag, const std::optional<HeadTraining>& heads) {
  ModelRun run;
  run.graph = build_graph(features.text, features.visual, features.poi, ctx,
                          graph_options(tag, cfg.top_k));
  run.laplacian = renormalized_laplacian(run.graph);
  const Mat h0 = stack_node_features(run.graph, features.text, features.visual, features.poi);
  run.train = train_smgcn(run.graph, h0, ctx.S, cfg, heads);
  run.report = evaluate_embeddings(run.train.embeddings.fused, ds, cfg, tag);
  return run;
}

nlohmann::json StageRecord::to_json() const {
  return {{"name", name},          {"inputs", inputs}, {"outputs", outputs},
          {"config_hash", config_hash}, {"seed", seed},     {"wall_time", wall_time}};
}

void require_input(const fs::path& path, const std::string& stage) {
  if (!fs::exists(path))
    throw ArgumentError(stage + ": missing input " + path.string());
}

namespace {

class StageTimer {
 public:
  StageTimer(std::string name, const RunConfig& cfg) {
    rec_.name = std::move(name);
    rec_.config_hash = cfg.hash();
    rec_.seed = cfg.rng_seed;
  }
  void input(const fs::path& p) { rec_.inputs.push_back(p.string()); }
  void output(const fs::path& p) { rec_.outputs.push_back(p.string()); }
  StageRecord finish() {
    rec_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return rec_;
  }

 private:
  StageRecord rec_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte);
  }
}

Mat read_checked(const fs::path& path, const std::string& stage) {
  require_input(path, stage);
  return read_matrix(path);
}

nlohmann::json stage_log_json(const StageLog& log) {
  return {{"name", log.name},
          {"epoch_losses", log.epoch_losses},
          {"step_losses", log.step_losses},
          {"initial_probe", log.initial_probe},
          {"final_probe", log.final_probe}};
}

std::string modality_file(Modality m) {
  return "modality_" + std::string(to_string(m)) + ".cgf";
}

}  // namespace

ModalFeatures load_modal_features(const fs::path& features) {
  ModalFeatures f;
  f.text = read_checked(features / artifact::kTextFeatures, "features");
  f.visual = read_checked(features / artifact::kVisualFeatures, "features");
  f.poi = read_checked(features / artifact::kPoiFeatures, "features");
  return f;
}

SpatialContext load_spatial_context(const fs::path& spatial) {
  SpatialContext ctx;
  ctx.S = read_checked(spatial / artifact::kS, "spatial");
  ctx.D = read_checked(spatial / artifact::kD, "spatial");
  ctx.F = read_checked(spatial / artifact::kF, "spatial");
  ctx.n = static_cast<std::size_t>(ctx.S.rows());
  if (ctx.S.cols() != ctx.S.rows() || ctx.D.rows() != ctx.S.rows() || ctx.F.rows() != ctx.S.rows())
    throw IntegrityError("spatial: S, D and F disagree in shape");
  require_input(spatial / artifact::kTopK, "spatial");
  const auto j = read_json(spatial / artifact::kTopK);
  ctx.k = j.at("k").get<std::size_t>();
  ctx.topk = j.at("lists").get<std::vector<std::vector<std::size_t>>>();
  if (ctx.topk.size() != ctx.n) throw IntegrityError("spatial: top-K lists do not match S");
  return ctx;
}

StageRecord stage_generate(const SyntheticSpec& spec, std::uint64_t seed, const fs::path& out) {
  RunConfig cfg;
  cfg.rng_seed = seed;
  StageTimer t("gen", cfg);
  const auto city = generate_synthetic_city(spec, derive_seed(seed, stream::kGenerate));
  fs::create_directories(out);
  write_synthetic_city(out, city);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(out)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) t.output(p);
  return t.finish();
}

StageRecord stage_encode(const fs::path& data, const RunConfig& cfg, const fs::path& out) {
  StageTimer t("encode", cfg);
  require_input(data / "circles.jsonl", "encode");
  t.input(data);
  const Dataset ds = load_dataset(data);
  const EncoderResult enc = train_encoders(ds, cfg);
  fs::create_directories(out);
  write_matrix(out / artifact::kTextFeatures, enc.h_text);
  write_matrix(out / artifact::kVisualFeatures, enc.h_visual);
  write_matrix(out / artifact::kPoiFeatures, enc.h_poi);
  write_archive(out / artifact::kHeads, to_archive(enc.heads));
  nlohmann::json log;
  log["config_hash"] = cfg.hash();
  log["stages"] = nlohmann::json::array();
  for (const auto& s : enc.logs) log["stages"].push_back(stage_log_json(s));
  write_json(out / artifact::kEncoderLog, log);
  for (const char* f : {artifact::kTextFeatures, artifact::kVisualFeatures, artifact::kPoiFeatures,
                        artifact::kHeads, artifact::kEncoderLog})
    t.output(out / f);
  return t.finish();
}

StageRecord stage_spatial(const fs::path& data, const RunConfig& cfg, const fs::path& out) {
  StageTimer t("spatial", cfg);
  require_input(data / "circles.jsonl", "spatial");
  t.input(data);
  const Dataset ds = load_dataset(data);
  const SpatialContext ctx = build_spatial_context(ds, cfg.top_k);
  fs::create_directories(out);
  write_matrix(out / artifact::kS, ctx.S);
  write_matrix(out / artifact::kD, ctx.D);
  write_matrix(out / artifact::kF, ctx.F);
  write_json(out / artifact::kTopK,
             {{"k", ctx.k}, {"circle_ids", ds.circle_ids()}, {"lists", ctx.topk}});
  for (const char* f : {artifact::kS, artifact::kD, artifact::kF, artifact::kTopK})
    t.output(out / f);
  return t.finish();
}

StageRecord stage_graph(const fs::path& features, const fs::path& spatial, const RunConfig& cfg,
                        Ablation tag, const fs::path& out) {
  StageTimer t("graph", cfg);
  const ModalFeatures f = load_modal_features(features);
  const SpatialContext ctx = load_spatial_context(spatial);
  t.input(features);
  t.input(spatial);
  const auto g = build_graph(f.text, f.visual, f.poi, ctx, graph_options(tag, cfg.top_k));
  fs::create_directories(out);
  write_text_file(out / artifact::kEdges, edges_to_csv(g));
  write_matrix(out / artifact::kLaplacian, renormalized_laplacian(g));
  t.output(out / artifact::kEdges);
  t.output(out / artifact::kLaplacian);
  return t.finish();
}

StageRecord stage_train(const fs::path& features, const fs::path& spatial, const fs::path& graph,
                        const fs::path& data, const RunConfig& cfg, const fs::path& out) {
  StageTimer t("train", cfg);
  const ModalFeatures f = load_modal_features(features);
  const SpatialContext ctx = load_spatial_context(spatial);
  require_input(graph / artifact::kEdges, "train");
  const MultiModalGraph g = edges_from_csv(read_text_file(graph / artifact::kEdges));
  if (g.n_circles != ctx.n)
    throw IntegrityError("train: graph has " + std::to_string(g.n_circles) +
                         " circles but S has " + std::to_string(ctx.n));
  t.input(features);
  t.input(spatial);
  t.input(graph / artifact::kEdges);

  std::optional<HeadTraining> heads;
  if (cfg.gcn_train_heads) {
    require_input(features / artifact::kHeads, "train");
    require_input(data / "circles.jsonl", "train");
    t.input(data);
    t.input(features / artifact::kHeads);
    const Dataset ds = load_dataset(data);
    heads = HeadTraining{heads_from_archive(read_archive(features / artifact::kHeads)),
                         circle_modal_features(ds)};
  }
  const Mat h0 = stack_node_features(g, f.text, f.visual, f.poi);
  const TrainResult r = train_smgcn(g, h0, ctx.S, cfg, heads);

  fs::create_directories(out);
  write_matrix(out / artifact::kEmbeddings, r.embeddings.fused);
  t.output(out / artifact::kEmbeddings);
  for (Modality m : g.present()) {
    write_matrix(out / modality_file(m), r.embeddings.modality[static_cast<std::size_t>(m)]);
    t.output(out / modality_file(m));
  }
  auto archive = to_archive(r.state);
  if (r.heads) {
    const auto extra = to_archive(r.heads->heads);
    archive.insert(archive.end(), extra.begin(), extra.end());
  }
  write_archive(out / artifact::kModel, archive);
  write_json(out / artifact::kLossLog, {{"config_hash", cfg.hash()},
                                        {"train_loss", r.train_loss},
                                        {"eval_loss", r.eval_loss}});
  t.output(out / artifact::kModel);
  t.output(out / artifact::kLossLog);
  return t.finish();
}

StageRecord stage_eval(const fs::path& data, const fs::path& train, const RunConfig& cfg,
                       Ablation tag, const fs::path& out) {
  StageTimer t("eval", cfg);
  require_input(data / "circles.jsonl", "eval");
  const Mat e = read_checked(train / artifact::kEmbeddings, "eval");
  t.input(data);
  t.input(train / artifact::kEmbeddings);
  const Dataset ds = load_dataset(data);
  const EvalReport rep = evaluate_embeddings(e, ds, cfg, tag);
  std::vector<Vec> truth;
  for (Disease d : kDiseases) truth.push_back(ds.label_vector(d));
  fs::create_directories(out);
  write_json(out / artifact::kReport, rep.to_json());
  write_text_file(out / artifact::kPredictions, rep.predictions_csv(ds.circle_ids(), truth));
  t.output(out / artifact::kReport);
  t.output(out / artifact::kPredictions);
  return t.finish();
}

StageRecord stage_ablate(const fs::path& data, const fs::path& features, const fs::path& spatial,
                         const RunConfig& cfg, const std::vector<Ablation>& tags,
                         const fs::path& out) {
  StageTimer t("ablate", cfg);
  require_input(data / "circles.jsonl", "ablate");
  const Dataset ds = load_dataset(data);
  const ModalFeatures f = load_modal_features(features);
  const SpatialContext ctx = load_spatial_context(spatial);
  t.input(data);
  t.input(features);
  t.input(spatial);
  std::optional<HeadTraining> heads;
  if (cfg.gcn_train_heads) {
    require_input(features / artifact::kHeads, "ablate");
    heads = HeadTraining{heads_from_archive(read_archive(features / artifact::kHeads)),
                         circle_modal_features(ds)};
  }
  nlohmann::json reports = nlohmann::json::array();
  std::string csv = "ablation,disease,mae,rmse,r2\n";
  char buf[128];
  for (Ablation tag : tags) {
    const ModelRun run = run_model(ds, f, ctx, cfg, tag, heads);
    reports.push_back(run.report.to_json());
    for (const auto& d : run.report.diseases) {
      std::snprintf(buf, sizeof buf, ",%s,%.10g,%.10g,%.10g\n",
                    std::string(to_string(d.disease)).c_str(), d.mean.mae, d.mean.rmse, d.mean.r2);
      csv += std::string(to_string(tag)) + buf;
    }
  }
  fs::create_directories(out);
  write_json(out / "ablation.json", {{"config_hash", cfg.hash()}, {"reports", reports}});
  write_text_file(out / "ablation.csv", csv);
  t.output(out / "ablation.json");
  t.output(out / "ablation.csv");
  return t.finish();
}

std::vector<StageRecord> run_pipeline(const RunConfig& cfg, const PipelineOptions& opts,
                                      const fs::path& out) {
  cfg.validate();
  std::vector<StageRecord> stages;
  fs::path data = out / "data";
  if (opts.data) {
    data = *opts.data;
  } else {
    stages.push_back(stage_generate(opts.synthetic, cfg.rng_seed, data));
  }
  const fs::path features = out / "features";
  const fs::path spatial = out / "spatial";
  const fs::path graph = out / "graph";
  const fs::path train = out / "train";
  stages.push_back(stage_encode(data, cfg, features));
  stages.push_back(stage_spatial(data, cfg, spatial));
  stages.push_back(stage_graph(features, spatial, cfg, Ablation::full, graph));
  stages.push_back(stage_train(features, spatial, graph, data, cfg, train));
  stages.push_back(stage_eval(data, train, cfg, Ablation::full, out / "eval"));

  nlohmann::json manifest;
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = cfg.rng_seed;
  manifest["stages"] = nlohmann::json::array();
  for (const auto& s : stages) manifest["stages"].push_back(s.to_json());
  write_json(out / artifact::kManifest, manifest);
  write_text_file(out / "run.cfg", cfg.to_text());
  return stages;
}

}  // namespace curegraph
