#include "curegraph/error.hpp"

namespace curegraph {

FormatError::FormatError(const std::string& what, std::uint64_t byte_offset)
    : Error(what + " (at byte " + std::to_string(byte_offset) + ")"),
      offset_(byte_offset) {}

TrainingDivergedError::TrainingDivergedError(const std::string& stage, std::size_t step)
    : NumericError("training diverged in stage '" + stage + "' at step " +
                   std::to_string(step)),
      stage_(stage),
      step_(step) {}

}  // namespace curegraph
