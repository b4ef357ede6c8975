#include "curegraph/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "curegraph/error.hpp"

namespace curegraph {
namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + 4);
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size())
      throw FormatError(std::string("checkpoint: truncated ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void doubles(double* out, std::size_t n) {
    need(n * 8, "tensor data");
    std::memcpy(out, bytes_.data() + pos_, n * 8);
    pos_ += n * 8;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

const Mat& find(const TensorArchive& a, const std::string& name) {
  for (const auto& [k, v] : a)
    if (k == name) return v;
  throw IntegrityError("checkpoint: missing tensor '" + name + "'");
}

bool has(const TensorArchive& a, const std::string& name) {
  for (const auto& [k, v] : a)
    if (k == name) return true;
  return false;
}

Mat column(const Vec& v) { return Mat(v); }

}  // namespace

void write_archive(const std::filesystem::path& path, const TensorArchive& tensors) {
  std::vector<char> out = {'C', 'G', 'M', '1'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const char* p = reinterpret_cast<const char*>(m.data());
    out.insert(out.end(), p, p + m.size() * 8);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ArgumentError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArgumentError("cannot open " + path.string());
  Reader r({std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()});
  r.need(4, "magic");
  if (r.str(4) != "CGM1") throw FormatError("checkpoint: bad magic, expected CGM1", 0);
  const auto version = r.u32("version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);
  const auto count = r.u32("count");
  TensorArchive out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = r.u32("name length");
    std::string name = r.str(len);
    const auto rows = r.u32("rows");
    const auto cols = r.u32("cols");
    Mat m(rows, cols);
    r.doubles(m.data(), std::size_t(rows) * cols);
    out.emplace_back(std::move(name), std::move(m));
  }
  if (r.pos() != r.size()) throw FormatError("checkpoint: trailing bytes", r.pos());
  return out;
}

TensorArchive to_archive(const ModelState& s) {
  TensorArchive a;
  Mat step(1, 1);
  step(0, 0) = static_cast<double>(s.step);
  a.emplace_back("step", step);
  for (std::size_t k = 0; k < s.params.layers.size(); ++k)
    a.emplace_back("gcn.w" + std::to_string(k + 1), s.params.layers[k]);
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    a.emplace_back("readout.w" + std::to_string(l), s.params.readout_w[l]);
    a.emplace_back("readout.b" + std::to_string(l), column(s.params.readout_b[l]));
  }
  for (std::size_t k = 0; k < s.moments.m.size(); ++k) {
    a.emplace_back("adam.m" + std::to_string(k), s.moments.m[k]);
    a.emplace_back("adam.v" + std::to_string(k), s.moments.v[k]);
  }
  return a;
}

ModelState model_state_from_archive(const TensorArchive& a) {
  ModelState s;
  s.step = static_cast<std::uint64_t>(find(a, "step")(0, 0));
  for (std::size_t k = 1; has(a, "gcn.w" + std::to_string(k)); ++k)
    s.params.layers.push_back(find(a, "gcn.w" + std::to_string(k)));
  for (std::size_t l = 0; l < kReadoutLayers; ++l) {
    s.params.readout_w[l] = find(a, "readout.w" + std::to_string(l));
    s.params.readout_b[l] = find(a, "readout.b" + std::to_string(l)).col(0);
  }
  for (std::size_t k = 0; has(a, "adam.m" + std::to_string(k)); ++k) {
    s.moments.m.push_back(find(a, "adam.m" + std::to_string(k)));
    s.moments.v.push_back(find(a, "adam.v" + std::to_string(k)));
  }
  return s;
}

TensorArchive to_archive(const std::array<ProjectionHead, 3>& heads) {
  TensorArchive a;
  for (const auto& h : heads) {
    const std::string tag(to_string(h.modality));
    a.emplace_back("head." + tag + ".w", h.weight);
    a.emplace_back("head." + tag + ".b", column(h.bias));
  }
  return a;
}

std::array<ProjectionHead, 3> heads_from_archive(const TensorArchive& a) {
  std::array<ProjectionHead, 3> heads;
  for (Modality m : kModalities) {
    auto& h = heads[static_cast<std::size_t>(m)];
    const std::string tag(to_string(m));
    h.modality = m;
    h.weight = find(a, "head." + tag + ".w");
    h.bias = find(a, "head." + tag + ".b").col(0);
  }
  return heads;
}

}  // namespace curegraph
