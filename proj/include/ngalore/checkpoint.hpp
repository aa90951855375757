#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ngalore/optimizer.hpp"

namespace ngalore {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::int64_t step = 0;  // index of the next optimizer step
  std::vector<ParamSlot> slots;
};

/// Binary layout (all integers and doubles little-endian):
///   "NGLRCKPT" u32 version  i64 step  u64 slot_count  slot*
/// Each slot stores its name, theta, gradient buffer, slot config, optional
/// projector, optional history ring buffer and Adam state. Matrices are
/// written as u64 rows, u64 cols, then rows*cols f64 values.
void write_checkpoint(std::ostream& out, std::span<const ParamSlot> slots, std::int64_t step);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, std::span<const ParamSlot> slots,
                     std::int64_t step);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ngalore
