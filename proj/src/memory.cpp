#include "ngalore/memory.hpp"

#include <cstdio>
#include <sstream>

namespace ngalore {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void write_counts(std::ostringstream& os, const MemoryCounts& c) {
  os << "parameters=" << c.parameters << '\n'
     << "gradients=" << c.gradients << '\n'
     << "projector=" << c.projector << '\n'
     << "moments=" << c.moments << '\n'
     << "history=" << c.history << '\n'
     << "optimizer_state=" << c.optimizer_state() << '\n'
     << "total=" << c.total() << '\n';
}

std::string format_bytes(std::size_t elements, std::size_t width) {
  char buf[64];
  const double mib = static_cast<double>(elements * width) / (1024.0 * 1024.0);
  std::snprintf(buf, sizeof buf, "%.3f MiB", mib);
  return buf;
}

}  // namespace

MemoryCounts& MemoryCounts::operator+=(const MemoryCounts& other) noexcept {
  parameters += other.parameters;
  gradients += other.gradients;
  projector += other.projector;
  moments += other.moments;
  history += other.history;
  return *this;
}

MemoryCounts slot_memory_formula(std::size_t rows, std::size_t cols, std::size_t rank, Side side,
                                 std::size_t history) {
  MemoryCounts c;
  c.parameters = rows * cols;
  if (rank == 0) {
    c.gradients = rows * cols;
    c.moments = 2 * rows * cols;
    return c;
  }
  const std::size_t kept = side == Side::left ? rows : cols;  // dimension being compressed
  const std::size_t other = side == Side::left ? cols : rows;
  c.projector = kept * rank;
  c.gradients = rank * other;
  c.moments = 2 * rank * other;
  c.history = history * rank * other;
  return c;
}

MemoryCounts adam_baseline_memory(std::size_t rows, std::size_t cols) {
  return slot_memory_formula(rows, cols, 0, Side::left, 0);
}

MemoryCounts measured_slot_memory(const ParamSlot& slot) {
  MemoryCounts c;
  c.parameters = slot.theta.size();
  c.gradients = slot.grad_buffer.size();
  c.projector = slot.projector ? slot.projector->factor().size() : 0;
  c.moments = slot.adam.allocated_elements();
  c.history = slot.history ? slot.history->allocated_elements() : 0;
  return c;
}

double MemoryReport::moment_ratio() const noexcept {
  return ratio(total.moments, adam_baseline.moments);
}

double MemoryReport::state_ratio() const noexcept {
  return ratio(total.optimizer_state(), adam_baseline.optimizer_state());
}

double MemoryReport::total_ratio() const noexcept {
  return ratio(total.total(), adam_baseline.total());
}

MemoryReport memory_report(std::span<const ParamSlot> slots) {
  MemoryReport report;
  for (const ParamSlot& slot : slots) {
    SlotMemory entry;
    entry.name = slot.name;
    entry.rows = slot.theta.rows();
    entry.cols = slot.theta.cols();
    const Side side = slot.projector ? slot.projector->side() : Side::left;
    entry.rank = slot.projector ? slot.projector->rank() : 0;
    entry.history = slot.history ? slot.history->capacity() : 0;
    entry.counts = slot_memory_formula(entry.rows, entry.cols, entry.rank, side, entry.history);
    entry.adam_baseline = adam_baseline_memory(entry.rows, entry.cols);
    report.total += entry.counts;
    report.adam_baseline += entry.adam_baseline;
    report.slots.push_back(std::move(entry));
  }
  return report;
}

std::string MemoryReport::to_text() const {
  std::ostringstream os;
  for (const SlotMemory& s : slots) {
    os << '[' << s.name << "]\n"
       << "rows=" << s.rows << '\n'
       << "cols=" << s.cols << '\n'
       << "rank=" << s.rank << '\n'
       << "history_columns=" << s.history << '\n';
    write_counts(os, s.counts);
    os << '\n';
  }
  os << "[total]\n";
  write_counts(os, total);
  os << "\n[adam_baseline]\n";
  write_counts(os, adam_baseline);
  os << "\n[ratios]\n"
     << "moments=" << moment_ratio() << '\n'
     << "optimizer_state=" << state_ratio() << '\n'
     << "total=" << total_ratio() << '\n';
  return os.str();
}

std::string MemoryReport::render() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %14s %14s %14s\n", "category", "elements", "bf16/fp16",
                "fp32");
  os << line;
  const auto row = [&](const char* label, std::size_t n) {
    std::snprintf(line, sizeof line, "%-12s %14zu %14s %14s\n", label, n, format_bytes(n, 2).c_str(),
                  format_bytes(n, 4).c_str());
    os << line;
  };
  row("parameters", total.parameters);
  row("gradients", total.gradients);
  row("projector", total.projector);
  row("moments", total.moments);
  row("history", total.history);
  row("total", total.total());
  row("adam total", adam_baseline.total());

  std::snprintf(line, sizeof line,
                "moment ratio vs adam: %.6f\noptimizer-state ratio vs adam: %.6f\n"
                "total ratio vs adam: %.6f\n",
                moment_ratio(), state_ratio(), total_ratio());
  os << line;
  if (total.history > 0) {
    std::snprintf(line, sizeof line,
                  "note: gradient history holds %zu elements, %.3fx the moment storage\n",
                  total.history, ratio(total.history, total.moments));
    os << line;
  }
  if (state_ratio() >= 1.0) {
    os << "warning: optimizer state is not smaller than full-space Adam at this rank\n";
  }
  return os.str();
}

}  // namespace ngalore
