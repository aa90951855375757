#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ngalore/optimizer.hpp"

namespace ngalore {

/// Element counts per state category.
struct MemoryCounts {
  std::size_t parameters = 0;
  std::size_t gradients = 0;
  std::size_t projector = 0;
  std::size_t moments = 0;
  std::size_t history = 0;

  /// Everything except the parameters themselves.
  std::size_t optimizer_state() const noexcept { return gradients + projector + moments + history; }
  std::size_t total() const noexcept { return parameters + optimizer_state(); }

  MemoryCounts& operator+=(const MemoryCounts& other) noexcept;
  friend bool operator==(const MemoryCounts&, const MemoryCounts&) = default;
};

struct SlotMemory {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;  // 0 for full-space slots
  std::size_t history = 0;
  MemoryCounts counts;
  MemoryCounts adam_baseline;
};

struct MemoryReport {
  std::vector<SlotMemory> slots;
  MemoryCounts total;
  MemoryCounts adam_baseline;

  double moment_ratio() const noexcept;
  double state_ratio() const noexcept;
  double total_ratio() const noexcept;

  /// `[section]` blocks of key=value element counts, one section per slot
  /// plus `total`, `adam_baseline` and `ratios`.
  std::string to_text() const;
  /// Human-readable table with byte estimates at 2- and 4-byte widths.
  std::string render() const;
};

/// Counts implied by a slot layout:
///   full space: grad n*m, moments 2*n*m
///   projected (left): factor n*r, grad r*m, moments 2*r*m, history s*r*m
/// (right projection swaps the roles of n and m).
MemoryCounts slot_memory_formula(std::size_t rows, std::size_t cols, std::size_t rank, Side side,
                                 std::size_t history);
MemoryCounts adam_baseline_memory(std::size_t rows, std::size_t cols);

/// Counts read directly off the slot's live containers.
MemoryCounts measured_slot_memory(const ParamSlot& slot);

MemoryReport memory_report(std::span<const ParamSlot> slots);

}  // namespace ngalore
