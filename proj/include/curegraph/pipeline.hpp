#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curegraph/config.hpp"
#include "curegraph/encoders.hpp"
#include "curegraph/evaluate.hpp"
#include "curegraph/graph.hpp"
#include "curegraph/smgcn.hpp"
#include "curegraph/spatial.hpp"
#include "curegraph/synthetic.hpp"

namespace curegraph {

namespace fs = std::filesystem;

// ---- In-memory runs -------------------------------------------------------

struct ModalFeatures {
  Mat text, visual, poi;  // n x d projected per-circle features
};

struct ModelRun {
  MultiModalGraph graph;
  Mat laplacian;
  TrainResult train;
  EvalReport report;
};

/// Graph build, training and evaluation for one ablation tag.
ModelRun run_model(const Dataset& ds, const ModalFeatures& features, const SpatialContext& ctx,
                   const RunConfig& cfg, Ablation tag,
                   const std::optional<HeadTraining>& heads = std::nullopt);

// ---- File-backed stages ---------------------------------------------------

/// Names of the files each stage writes inside its output directory.
namespace artifact {
inline constexpr const char* kTextFeatures = "h_text.cgf";
inline constexpr const char* kVisualFeatures = "h_visual.cgf";
inline constexpr const char* kPoiFeatures = "h_poi.cgf";
inline constexpr const char* kHeads = "heads.cgm";
inline constexpr const char* kEncoderLog = "encoder_log.json";
inline constexpr const char* kS = "S.cgf";
inline constexpr const char* kD = "D.cgf";
inline constexpr const char* kF = "F.cgf";
inline constexpr const char* kTopK = "topk.json";
inline constexpr const char* kEdges = "edges.csv";
inline constexpr const char* kLaplacian = "laplacian.cgf";
inline constexpr const char* kEmbeddings = "embeddings.cgf";
inline constexpr const char* kModel = "model.cgm";
inline constexpr const char* kLossLog = "loss.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kPredictions = "predictions.csv";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

struct StageRecord {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds

  nlohmann::json to_json() const;
};

/// Throws ArgumentError naming the stage and file when `path` is absent.
void require_input(const fs::path& path, const std::string& stage);

StageRecord stage_generate(const SyntheticSpec& spec, std::uint64_t seed, const fs::path& out);
StageRecord stage_encode(const fs::path& data, const RunConfig& cfg, const fs::path& out);
StageRecord stage_spatial(const fs::path& data, const RunConfig& cfg, const fs::path& out);
StageRecord stage_graph(const fs::path& features, const fs::path& spatial, const RunConfig& cfg,
                        Ablation tag, const fs::path& out);
/// `data` is only read when cfg.gcn_train_heads is set.
StageRecord stage_train(const fs::path& features, const fs::path& spatial, const fs::path& graph,
                        const fs::path& data, const RunConfig& cfg, const fs::path& out);
StageRecord stage_eval(const fs::path& data, const fs::path& train, const RunConfig& cfg,
                       Ablation tag, const fs::path& out);
/// One graph/train/eval run per tag; writes ablation.json and ablation.csv.
StageRecord stage_ablate(const fs::path& data, const fs::path& features, const fs::path& spatial,
                         const RunConfig& cfg, const std::vector<Ablation>& tags,
                         const fs::path& out);

// Readers shared by the CLI.
ModalFeatures load_modal_features(const fs::path& features);
SpatialContext load_spatial_context(const fs::path& spatial);

struct PipelineOptions {
  std::optional<fs::path> data;  // existing dataset; generated when empty
  SyntheticSpec synthetic;
};

/// Runs gen (unless a dataset is given), encode, spatial, graph, train and
/// eval into subdirectories of `out` and writes manifest.json.
std::vector<StageRecord> run_pipeline(const RunConfig& cfg, const PipelineOptions& opts,
                                      const fs::path& out);

}  // namespace curegraph
