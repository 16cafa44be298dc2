#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffkg/tensor.hpp"

namespace diffkg {

/// Flat named-array container behind the checkpoint file format:
///   magic "DKGC" | u32 version | u8 float width | u32 entry count,
/// then per entry: u32 name length | name bytes | u32 rank | u64 dims...
/// | raw little-endian float payload.
struct CheckpointEntry {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<real> data;
};

void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries);

/// Throws DataError on missing file, bad magic, version or float-width
/// mismatch, or truncation; never returns partial state.
std::vector<CheckpointEntry> read_checkpoint(const std::string& path);

}  // namespace diffkg
