#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "curegraph/encoders.hpp"
#include "curegraph/linalg.hpp"
#include "curegraph/smgcn.hpp"

namespace curegraph {

// CGM1 archive of named double tensors:
//   "CGM1", version (u32 LE), count (u32 LE), then per tensor
//   name length (u32), name bytes, rows (u32), cols (u32), rows*cols f64 LE.
inline constexpr std::uint32_t kCheckpointVersion = 1;

using TensorArchive = std::vector<std::pair<std::string, Mat>>;

void write_archive(const std::filesystem::path& path, const TensorArchive& tensors);
TensorArchive read_archive(const std::filesystem::path& path);

TensorArchive to_archive(const ModelState& state);
ModelState model_state_from_archive(const TensorArchive& a);

TensorArchive to_archive(const std::array<ProjectionHead, 3>& heads);
std::array<ProjectionHead, 3> heads_from_archive(const TensorArchive& a);

}  // namespace curegraph
