#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

#include "curegraph/config.hpp"
#include "curegraph/io.hpp"

#ifndef CUREGRAPH_CLI
#error "CUREGRAPH_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CUREGRAPH_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "curegraph_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("gen output loads through the dataset loader") {
  const fs::path out = scratch("gen");
  const auto r = run("gen --n-circles 50 --seed 7 --out " + out.string());
  INFO(r.output);
  REQUIRE(r.code == 0);
  const auto ds = curegraph::load_dataset(out);
  CHECK(ds.circles.size() == 50);
  CHECK(ds.labels.size() == 50);
}

TEST_CASE("eval without train artifacts") {
  const fs::path out = scratch("eval_missing");
  REQUIRE(run("gen --n-circles 12 --feature-dim 16 --seed 2 --out " + (out / "data").string()).code == 0);
  const auto r = run("eval --data " + (out / "data").string() + " --train " +
                     (out / "nothing").string() + " --out " + (out / "eval").string());
  CHECK(r.code == 1);
  CHECK(r.output.find("missing input") != std::string::npos);
}

TEST_CASE("argument errors") {
  CHECK(run("gen --no-such-flag 3").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("--help").code == 0);
  CHECK(run("pipeline --alpha 2.0 --out " + scratch("bad_alpha").string()).code == 1);
}

TEST_CASE("staged commands chain through their artifacts") {
  const fs::path root = scratch("stages");
  const std::string d = (root / "data").string(), f = (root / "features").string(),
                    s = (root / "spatial").string(), g = (root / "graph").string(),
                    t = (root / "train").string();
  const std::string quick = " --epochs 3 --encoder-epochs 1 --kfolds 3";
  REQUIRE(run("gen --n-circles 16 --feature-dim 24 --seed 4 --out " + d).code == 0);
  REQUIRE(run("encode --data " + d + " --out " + f + quick).code == 0);
  REQUIRE(run("spatial --data " + d + " --out " + s + quick).code == 0);
  REQUIRE(run("graph --features " + f + " --spatial " + s + " --out " + g + quick).code == 0);
  const auto tr = run("train --features " + f + " --spatial " + s + " --graph " + g + " --data " +
                      d + " --out " + t + quick);
  INFO(tr.output);
  REQUIRE(tr.code == 0);
  const auto ev = run("eval --data " + d + " --train " + t + " --out " + (root / "eval").string() +
                      " --covariates " + (root / "data" / "covariates.jsonl").string() + quick);
  INFO(ev.output);
  REQUIRE(ev.code == 0);
  CHECK(fs::exists(root / "eval" / "report.json"));
  CHECK(fs::exists(root / "eval" / "correlation.json"));

  const std::string common = " --data " + d + " --train " + t;
  CHECK(run("similar" + common + " --query " + "c0000 --top 3 --out " + (root / "sim").string()).code == 0);
  CHECK(run("cluster" + common + " --circles --out " + (root / "cluster").string()).code == 0);
  CHECK(run("cluster" + common + " --out " + (root / "too_few").string()).code == 1);
  CHECK(run("streets" + common + " --out " + (root / "streets").string()).code == 0);
  CHECK(run("pca --data " + d + " --input " + t + "/embeddings.cgf --out " + (root / "pca").string()).code == 0);
  CHECK(fs::exists(root / "cluster" / "cluster.json"));
  CHECK(fs::exists(root / "pca" / "pca.csv"));
}

TEST_CASE("pipeline twice with one config") {
  const fs::path root = scratch("pipeline");
  curegraph::RunConfig cfg;
  cfg.epochs = 5;
  cfg.encoder_epochs = 1;
  cfg.save(root / "defaults.cfg");
  const std::string base = "pipeline --n-circles 12 --config " + (root / "defaults.cfg").string() +
                           " --seed 7 --out ";
  REQUIRE(run(base + (root / "a").string()).code == 0);
  REQUIRE(run(base + (root / "b").string()).code == 0);
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    if (rel == "manifest.json") continue;  // holds wall times
    INFO(rel.string());
    CHECK(curegraph::read_text_file(entry.path()) == curegraph::read_text_file(root / "b" / rel));
  }
}
