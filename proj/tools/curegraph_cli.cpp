// curegraph: command-line driver for the living-circle health embedding
// pipeline. Every subcommand reads its inputs from explicit directories and
// writes only inside its --out directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "curegraph/analysis.hpp"
#include "curegraph/config.hpp"
#include "curegraph/error.hpp"
#include "curegraph/io.hpp"
#include "curegraph/pipeline.hpp"

namespace fs = std::filesystem;
using namespace curegraph;

namespace {

fs::path out_root() {
  const char* env = std::getenv("CUREGRAPH_OUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("out");
}

std::string dashed(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

/// Collects --config and one flag per RunConfig key for a subcommand.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    for (const auto& [key, value] : RunConfig{}.to_map()) {
      app->add_option("--" + dashed(key), overrides[key], "default " + value);
    }
    app->add_option("--seed", overrides["rng_seed"], "alias for --rng-seed");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_file.empty() ? RunConfig{} : RunConfig::load(config_file);
    for (const auto& [key, value] : overrides)
      if (!value.empty()) cfg.set(key, value);
    cfg.validate();
    return cfg;
  }
};

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  write_text_file(path, j.dump(2) + "\n");
}

void print_record(const StageRecord& r) {
  std::cout << r.name << ": wrote";
  for (const auto& o : r.outputs) std::cout << " " << o;
  std::cout << "\n";
}

Mat load_embeddings(const fs::path& train) {
  require_input(train / artifact::kEmbeddings, "analysis");
  return read_matrix(train / artifact::kEmbeddings);
}

Dataset load_data(const fs::path& data, const std::string& stage) {
  require_input(data / "circles.jsonl", stage);
  return load_dataset(data);
}

std::string matrix_csv(const std::vector<std::string>& ids, const Mat& m, const std::string& head) {
  std::string out = head + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + csv_double(m(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curegraph: multi-modal living-circle embeddings for geriatric health"};
  app.require_subcommand(1);
  const fs::path root = out_root();

  // gen
  SyntheticSpec spec;
  std::uint64_t gen_seed = 7;
  fs::path gen_out = root / "data";
  auto* gen = app.add_subcommand("gen", "Generate a synthetic city with planted disease signal");
  gen->add_option("--n-circles", spec.n_circles, "number of living circles");
  gen->add_option("--feature-dim", spec.feature_dim, "raw feature dimension");
  gen->add_option("--latent-dim", spec.latent_dim, "latent factor dimension");
  gen->add_option("--noise-scale", spec.noise_scale, "label noise relative to signal");
  gen->add_option("--local-noise", spec.local_noise, "circle deviation from the latent field");
  gen->add_option("--seed", gen_seed, "root seed");
  gen->add_option("--out", gen_out, "output directory");

  // Shared path options with defaults under the output root.
  fs::path data = root / "data", features = root / "features", spatial = root / "spatial",
           graph = root / "graph", train = root / "train";

  ConfigFlags encode_cfg;
  fs::path encode_out = root / "features";
  auto* encode = app.add_subcommand("encode", "Train projection heads; write circle features");
  encode->add_option("--data", data, "dataset directory");
  encode->add_option("--out", encode_out, "output directory");
  encode_cfg.attach(encode);

  ConfigFlags spatial_cfg;
  fs::path spatial_out = root / "spatial";
  auto* spatial_cmd = app.add_subcommand("spatial", "Distance, functional similarity and S");
  spatial_cmd->add_option("--data", data, "dataset directory");
  spatial_cmd->add_option("--out", spatial_out, "output directory");
  spatial_cfg.attach(spatial_cmd);

  ConfigFlags graph_cfg;
  fs::path graph_out = root / "graph";
  std::string graph_tag = "full";
  auto* graph_cmd = app.add_subcommand("graph", "Build the multi-modal graph");
  graph_cmd->add_option("--features", features, "encode output directory");
  graph_cmd->add_option("--spatial", spatial, "spatial output directory");
  graph_cmd->add_option("--ablation", graph_tag, "ablation tag");
  graph_cmd->add_option("--out", graph_out, "output directory");
  graph_cfg.attach(graph_cmd);

  ConfigFlags train_cfg;
  fs::path train_out = root / "train";
  auto* train_cmd = app.add_subcommand("train", "Train the graph model");
  train_cmd->add_option("--features", features, "encode output directory");
  train_cmd->add_option("--spatial", spatial, "spatial output directory");
  train_cmd->add_option("--graph", graph, "graph output directory");
  train_cmd->add_option("--data", data, "dataset directory (for joint head training)");
  train_cmd->add_option("--out", train_out, "output directory");
  train_cfg.attach(train_cmd);

  ConfigFlags eval_cfg;
  fs::path eval_out = root / "eval";
  std::string eval_tag = "full";
  std::string covariates;
  auto* eval_cmd = app.add_subcommand("eval", "K-fold disease prediction from embeddings");
  eval_cmd->add_option("--data", data, "dataset directory");
  eval_cmd->add_option("--train", train, "train output directory");
  eval_cmd->add_option("--ablation", eval_tag, "tag recorded in the report");
  eval_cmd->add_option("--covariates", covariates,
                       "circle covariate file; correlates predictions with it");
  eval_cmd->add_option("--out", eval_out, "output directory");
  eval_cfg.attach(eval_cmd);

  ConfigFlags ablate_cfg;
  fs::path ablate_out = root / "ablate";
  std::vector<std::string> ablate_tags;
  auto* ablate = app.add_subcommand("ablate", "Graph, train and eval per ablation tag");
  ablate->add_option("--data", data, "dataset directory");
  ablate->add_option("--features", features, "encode output directory");
  ablate->add_option("--spatial", spatial, "spatial output directory");
  ablate->add_option("--tag", ablate_tags, "ablation tags (default: all)");
  ablate->add_option("--out", ablate_out, "output directory");
  ablate_cfg.attach(ablate);

  ConfigFlags cluster_cfg;
  fs::path cluster_out = root / "cluster";
  std::string streets_file;
  std::size_t elbow_max = 8;
  bool circle_level = false;
  auto* cluster = app.add_subcommand("cluster", "k-means over street (or circle) embeddings");
  cluster->add_option("--data", data, "dataset directory");
  cluster->add_option("--train", train, "train output directory");
  cluster->add_option("--streets", streets_file, "street assignment (default: data/streets.jsonl)");
  cluster->add_flag("--circles", circle_level, "cluster circles instead of streets");
  cluster->add_option("--elbow-max", elbow_max, "largest k of the elbow curve");
  cluster->add_option("--out", cluster_out, "output directory");
  cluster_cfg.attach(cluster);

  fs::path similar_out = root / "similar";
  std::string query;
  std::size_t top_n = 5;
  auto* similar = app.add_subcommand("similar", "Most similar circles by cosine");
  similar->add_option("--data", data, "dataset directory");
  similar->add_option("--train", train, "train output directory");
  similar->add_option("--query", query, "circle id")->required();
  similar->add_option("--top", top_n, "number of results");
  similar->add_option("--out", similar_out, "output directory");

  fs::path pca_out = root / "pca";
  std::string pca_input;
  std::size_t pca_dims = 2;
  auto* pca = app.add_subcommand("pca", "Principal-component projection of a matrix");
  pca->add_option("--data", data, "dataset directory (row ids)");
  pca->add_option("--input", pca_input, "CGF1 matrix (default: train/embeddings.cgf)");
  pca->add_option("--dims", pca_dims, "number of components");
  pca->add_option("--out", pca_out, "output directory");

  fs::path streets_out = root / "streets";
  auto* streets = app.add_subcommand("streets", "Average circle embeddings per street");
  streets->add_option("--data", data, "dataset directory");
  streets->add_option("--train", train, "train output directory");
  streets->add_option("--streets", streets_file, "street assignment (default: data/streets.jsonl)");
  streets->add_option("--out", streets_out, "output directory");

  ConfigFlags pipeline_cfg;
  fs::path pipeline_out = root / "pipeline";
  std::string pipeline_data;
  auto* pipeline = app.add_subcommand("pipeline", "Run gen, encode, spatial, graph, train, eval");
  pipeline->add_option("--data", pipeline_data, "existing dataset (default: generate one)");
  pipeline->add_option("--n-circles", spec.n_circles, "circles when generating");
  pipeline->add_option("--noise-scale", spec.noise_scale, "label noise when generating");
  pipeline->add_option("--local-noise", spec.local_noise, "circle deviation when generating");
  pipeline->add_option("--out", pipeline_out, "output directory");
  pipeline_cfg.attach(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const auto streets_path = [&] {
    return streets_file.empty() ? data / "streets.jsonl" : fs::path(streets_file);
  };

  try {
    if (*gen) {
      print_record(stage_generate(spec, gen_seed, gen_out));
    } else if (*encode) {
      print_record(stage_encode(data, encode_cfg.resolve(), encode_out));
    } else if (*spatial_cmd) {
      print_record(stage_spatial(data, spatial_cfg.resolve(), spatial_out));
    } else if (*graph_cmd) {
      print_record(stage_graph(features, spatial, graph_cfg.resolve(), parse_ablation(graph_tag),
                               graph_out));
    } else if (*train_cmd) {
      print_record(stage_train(features, spatial, graph, data, train_cfg.resolve(), train_out));
    } else if (*eval_cmd) {
      const RunConfig cfg = eval_cfg.resolve();
      print_record(stage_eval(data, train, cfg, parse_ablation(eval_tag), eval_out));
      if (!covariates.empty()) {
        require_input(covariates, "eval");
        const Dataset ds = load_data(data, "eval");
        const auto cov = load_covariate(covariates);
        const EvalReport rep = evaluate_embeddings(load_embeddings(train), ds, cfg,
                                                   parse_ablation(eval_tag));
        Vec x(static_cast<Eigen::Index>(ds.circles.size()));
        for (std::size_t i = 0; i < ds.circles.size(); ++i) {
          const auto it = cov.find(ds.circles[i].id);
          if (it == cov.end())
            throw IntegrityError("covariates: no value for circle '" + ds.circles[i].id + "'");
          x[static_cast<Eigen::Index>(i)] = it->second;
        }
        nlohmann::json j = nlohmann::json::object();
        for (const auto& d : rep.diseases) {
          const Correlation c = pearson(d.predictions, x);
          j[std::string(to_string(d.disease))] = {{"pcc", c.pcc}, {"p_value", c.p_value}};
        }
        write_json(eval_out / "correlation.json", j);
        std::cout << "eval: wrote " << (eval_out / "correlation.json").string() << "\n";
      }
    } else if (*ablate) {
      std::vector<Ablation> tags;
      for (const auto& t : ablate_tags) tags.push_back(parse_ablation(t));
      if (tags.empty()) tags.assign(kAblations.begin(), kAblations.end());
      print_record(stage_ablate(data, features, spatial, ablate_cfg.resolve(), tags, ablate_out));
    } else if (*cluster) {
      const RunConfig cfg = cluster_cfg.resolve();
      const Dataset ds = load_data(data, "cluster");
      const Mat e = load_embeddings(train);
      std::vector<std::string> ids = ds.circle_ids();
      Mat x = e;
      if (!circle_level) {
        require_input(streets_path(), "cluster");
        const auto agg = aggregate_streets(e, ids, load_street_assignment(streets_path()));
        for (const auto& w : agg.warnings) std::cerr << "warning: " << w << "\n";
        ids = agg.street_ids;
        x = agg.means;
      }
      const auto seed = derive_seed(cfg.rng_seed, stream::kCluster);
      const auto km = kmeans(x, cfg.cluster_k, seed);
      const std::size_t kmax = std::min<std::size_t>(elbow_max, static_cast<std::size_t>(x.rows()));
      const auto curve = elbow(x, 1, kmax, seed);
      std::string csv = "id,cluster\n";
      for (std::size_t i = 0; i < ids.size(); ++i)
        csv += ids[i] + "," + std::to_string(km.assignments[i]) + "\n";
      std::string elbow_csv = "k,inertia\n";
      for (std::size_t k = 0; k < curve.size(); ++k)
        elbow_csv += std::to_string(k + 1) + "," + csv_double(curve[k]) + "\n";
      write_json(cluster_out / "cluster.json", {{"k", cfg.cluster_k},
                                                {"level", circle_level ? "circle" : "street"},
                                                {"inertia", km.inertia},
                                                {"iterations", km.iterations},
                                                {"elbow", curve}});
      write_text_file(cluster_out / "clusters.csv", csv);
      write_text_file(cluster_out / "elbow.csv", elbow_csv);
      std::cout << "cluster: wrote " << cluster_out.string() << "\n";
    } else if (*similar) {
      const Dataset ds = load_data(data, "similar");
      const auto ranked = similar_circles(query, ds.circle_ids(), load_embeddings(train), top_n);
      nlohmann::json j = nlohmann::json::array();
      std::string csv = "rank,circle_id,score\n";
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        j.push_back({{"rank", r + 1}, {"circle_id", ranked[r].id}, {"score", ranked[r].score}});
        csv += std::to_string(r + 1) + "," + ranked[r].id + "," + csv_double(ranked[r].score) + "\n";
      }
      write_json(similar_out / "similar.json", {{"query", query}, {"results", j}});
      write_text_file(similar_out / "similar.csv", csv);
      for (const auto& s : ranked) std::cout << s.id << " " << csv_double(s.score) << "\n";
    } else if (*pca) {
      const fs::path input = pca_input.empty() ? train / artifact::kEmbeddings : fs::path(pca_input);
      require_input(input, "pca");
      const Mat x = read_matrix(input);
      std::vector<std::string> ids;
      if (fs::exists(data / "circles.jsonl") &&
          load_dataset(data).circles.size() == static_cast<std::size_t>(x.rows())) {
        ids = load_dataset(data).circle_ids();
      } else {
        for (Eigen::Index i = 0; i < x.rows(); ++i) ids.push_back(std::to_string(i));
      }
      const auto r = pca_project(x, pca_dims);
      std::string head = "id";
      for (std::size_t k = 0; k < pca_dims; ++k) head += ",pc" + std::to_string(k + 1);
      fs::create_directories(pca_out);
      write_text_file(pca_out / "pca.csv", matrix_csv(ids, r.projected, head));
      write_json(pca_out / "pca.json",
                 {{"explained_ratio", std::vector<double>(r.explained_ratio.begin(),
                                                          r.explained_ratio.end())},
                  {"eigenvalues",
                   std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.end())}});
      std::cout << "pca: wrote " << pca_out.string() << "\n";
    } else if (*streets) {
      const Dataset ds = load_data(data, "streets");
      require_input(streets_path(), "streets");
      const auto agg = aggregate_streets(load_embeddings(train), ds.circle_ids(),
                                         load_street_assignment(streets_path()));
      for (const auto& w : agg.warnings) std::cerr << "warning: " << w << "\n";
      std::string head = "street_id";
      for (Eigen::Index j = 0; j < agg.means.cols(); ++j) head += ",e" + std::to_string(j);
      fs::create_directories(streets_out);
      write_text_file(streets_out / "streets.csv", matrix_csv(agg.street_ids, agg.means, head));
      write_json(streets_out / "streets.json",
                 {{"streets", agg.street_ids}, {"counts", agg.counts}, {"warnings", agg.warnings}});
      std::cout << "streets: wrote " << streets_out.string() << "\n";
    } else if (*pipeline) {
      PipelineOptions opts;
      opts.synthetic = spec;
      if (!pipeline_data.empty()) opts.data = fs::path(pipeline_data);
      for (const auto& r : run_pipeline(pipeline_cfg.resolve(), opts, pipeline_out))
        print_record(r);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
