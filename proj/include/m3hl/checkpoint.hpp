#pragma once

#include <filesystem>

#include "m3hl/net.hpp"
#include "m3hl/trainer.hpp"

namespace m3hl {

/// Directory holding `checkpoint.txt` (network geometry and parameter index)
/// and one float64 container per parameter.
void save_checkpoint(const std::filesystem::path& dir, const SegNetwork& net);
SegNetwork load_checkpoint(const std::filesystem::path& dir);

}  // namespace m3hl
