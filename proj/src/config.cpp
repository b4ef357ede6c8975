#include "curegraph/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <variant>
#include <vector>

#include "curegraph/error.hpp"

namespace curegraph {
namespace {

using FieldRef = std::variant<double*, std::uint64_t*, bool*, RegressorKind*>;

struct Field {
  const char* name;
  FieldRef ref;
};

std::vector<Field> fields(RunConfig& c) {
  return {
      {"alpha", &c.alpha},
      {"augment_dropout", &c.augment_dropout},
      {"batch_size", &c.batch_size},
      {"cluster_k", &c.cluster_k},
      {"dropout", &c.dropout},
      {"embed_dim", &c.embed_dim},
      {"encoder_epochs", &c.encoder_epochs},
      {"epochs", &c.epochs},
      {"eta", &c.eta},
      {"gcn_layers", &c.gcn_layers},
      {"gcn_train_heads", &c.gcn_train_heads},
      {"geo_radius_km", &c.geo_radius_km},
      {"kfolds", &c.kfolds},
      {"lambda", &c.lambda},
      {"lr_gcn", &c.lr_gcn},
      {"lr_poi", &c.lr_poi},
      {"lr_text", &c.lr_text},
      {"lr_visual", &c.lr_visual},
      {"margin", &c.margin},
      {"readout_hidden", &c.readout_hidden},
      {"regressor", &c.regressor},
      {"regressor_epochs", &c.regressor_epochs},
      {"regressor_hidden", &c.regressor_hidden},
      {"regressor_lr", &c.regressor_lr},
      {"regressor_weight_decay", &c.regressor_weight_decay},
      {"ridge_lambda", &c.ridge_lambda},
      {"rng_seed", &c.rng_seed},
      {"tau_poi", &c.tau_poi},
      {"tau_text", &c.tau_text},
      {"tau_visual", &c.tau_visual},
      {"top_k", &c.top_k},
      {"weight_decay", &c.weight_decay},
  };
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  auto& self = const_cast<RunConfig&>(*this);
  for (const auto& f : fields(self)) {
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, double>) {
            out[f.name] = format_double(*p);
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            out[f.name] = std::to_string(*p);
          } else if constexpr (std::is_same_v<T, bool>) {
            out[f.name] = *p ? "true" : "false";
          } else {
            out[f.name] = *p == RegressorKind::mlp ? "mlp" : "ridge";
          }
        },
        f.ref);
  }
  return out;
}

std::string RunConfig::to_text() const {
  std::string text;
  for (const auto& [k, v] : to_map()) text += k + " = " + v + "\n";
  return text;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_text())));
  return buf;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields(*this)) {
    if (key != f.name) continue;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          const char* s = value.c_str();
          char* end = nullptr;
          errno = 0;
          if constexpr (std::is_same_v<T, double>) {
            const double v = std::strtod(s, &end);
            if (end == s || *end != '\0' || errno != 0 || !std::isfinite(v))
              throw ArgumentError("config key '" + key + "': not a real number: " + value);
            *p = v;
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (value.empty() || value[0] == '-')
              throw ArgumentError("config key '" + key + "': not a count: " + value);
            const unsigned long long v = std::strtoull(s, &end, 10);
            if (end == s || *end != '\0' || errno != 0)
              throw ArgumentError("config key '" + key + "': not a count: " + value);
            *p = v;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") {
              *p = true;
            } else if (value == "false" || value == "0") {
              *p = false;
            } else {
              throw ArgumentError("config key '" + key + "': not a boolean: " + value);
            }
          } else {
            if (value == "mlp") {
              *p = RegressorKind::mlp;
            } else if (value == "ridge") {
              *p = RegressorKind::ridge;
            } else {
              throw ArgumentError("config key '" + key + "': expected mlp or ridge: " + value);
            }
          }
        },
        f.ref);
    return;
  }
  throw ArgumentError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("invalid config: ") + what);
  };
  require(tau_visual > 0 && tau_text > 0 && tau_poi > 0, "temperatures must be positive");
  require(margin > 0, "margin must be positive");
  require(augment_dropout >= 0 && augment_dropout < 1, "augment_dropout must be in [0,1)");
  require(dropout >= 0 && dropout < 1, "dropout must be in [0,1)");
  require(alpha >= 0 && alpha <= 1, "alpha must be in [0,1]");
  require(eta >= 0, "eta must be non-negative");
  require(gcn_layers >= 1, "gcn_layers must be >= 1");
  require(top_k >= 1, "top_k must be >= 1");
  require(embed_dim >= 1 && readout_hidden >= 1, "dimensions must be >= 1");
  require(batch_size >= 2, "batch_size must be >= 2");
  require(kfolds >= 2, "kfolds must be >= 2");
  require(cluster_k >= 1, "cluster_k must be >= 1");
  require(regressor_hidden >= 1, "regressor_hidden must be >= 1");
  require(weight_decay >= 0 && regressor_weight_decay >= 0 && ridge_lambda >= 0,
          "decay terms must be non-negative");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write config file " + path.string());
  out << to_text();
}

}  // namespace curegraph
