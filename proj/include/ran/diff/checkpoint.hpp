// Parameter checkpoint container.
//
// Layout (all integers little-endian uint32, all values little-endian IEEE-754
// binary32):
//
//   magic    8 bytes  "RANCKPT1"
//   count    u32      number of tensors
//   repeated count times:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rows u32, cols u32
//     rows*cols f32 values, row-major
//
// Values are stored at 32-bit precision, so a loaded set equals the saved one
// only up to float rounding.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "ran/diff/params.hpp"

namespace ran::diff {

void save_checkpoint(std::ostream& out, const ParamSet& params);
ParamSet load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace ran::diff
