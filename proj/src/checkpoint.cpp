#include "ngalore/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'G', 'L', 'R', 'C', 'K', 'P', 'T'};
// Guards against absurd sizes from corrupt headers before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u64(std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    out_.write(bytes, 8);
  }

  void u32(std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    out_.write(bytes, 4);
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void doubles(std::span<const double> values) {
    u64(values.size());
    for (double v : values) f64(v);
  }

  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double v : m.data()) f64(v);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::uint8_t u8(const char* what) {
    char c;
    bytes(&c, 1, what);
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  std::int64_t i64(const char* what) { return static_cast<std::int64_t>(u64(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  bool flag(const char* what) {
    const std::uint8_t v = u8(what);
    if (v > 1) throw FormatError(std::string("checkpoint: invalid flag for ") + what);
    return v == 1;
  }

  std::uint64_t count(const char* what) {
    const std::uint64_t n = u64(what);
    if (n > kMaxElements) throw FormatError(std::string("checkpoint: implausible size for ") + what);
    return n;
  }

  std::string str(const char* what) {
    std::string s(count(what), '\0');
    if (!s.empty()) bytes(s.data(), s.size(), what);
    return s;
  }

  std::vector<double> doubles(const char* what) {
    std::vector<double> v(count(what));
    for (double& x : v) x = f64(what);
    return v;
  }

  Matrix matrix(const char* what) {
    const std::uint64_t rows = count(what);
    const std::uint64_t cols = count(what);
    if (rows == 0 || cols == 0) {
      if (rows != 0 || cols != 0) throw FormatError(std::string("checkpoint: bad shape for ") + what);
      return {};
    }
    if (rows * cols > kMaxElements) throw FormatError(std::string("checkpoint: bad shape for ") + what);
    std::vector<double> data(rows * cols);
    for (double& x : data) x = f64(what);
    try {
      return Matrix(rows, cols, std::move(data));
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("checkpoint: ") + what + ": " + e.what());
    }
  }

 private:
  std::istream& in_;
};

void write_slot(Writer& w, const ParamSlot& slot) {
  w.str(slot.name);
  w.matrix(slot.theta);
  w.matrix(slot.grad_buffer);

  w.u64(slot.config.rank);
  w.i64(slot.config.refresh_period);
  w.f64(slot.config.lambda);
  w.u64(slot.config.history);
  w.f64(slot.config.alpha);

  w.u8(slot.projector ? 1 : 0);
  if (slot.projector) {
    const Projector& p = *slot.projector;
    w.u64(p.param_rows());
    w.u64(p.param_cols());
    w.u64(p.rank());
    w.u8(static_cast<std::uint8_t>(p.side()));
    w.i64(p.refresh_period());
    w.u8(p.last_refresh_step() ? 1 : 0);
    w.i64(p.last_refresh_step().value_or(0));
    w.matrix(p.factor());
  }

  w.u8(slot.history ? 1 : 0);
  if (slot.history) {
    const GradHistory& h = *slot.history;
    w.u64(h.capacity());
    w.f64(h.lambda());
    w.u64(h.dim());
    w.u64(h.head());
    w.u64(h.size());
    w.doubles(h.storage());
  }

  const AdamHyper& hp = slot.adam.hyper();
  w.f64(hp.beta1);
  w.f64(hp.beta2);
  w.f64(hp.epsilon);
  w.u8(hp.bias_correction ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(hp.eps_placement));
  w.i64(slot.adam.step_count());
  w.matrix(slot.adam.first_moment());
  w.matrix(slot.adam.second_moment());
}

ParamSlot read_slot(Reader& r) {
  ParamSlot slot;
  slot.name = r.str("slot name");
  slot.theta = r.matrix("theta");
  slot.grad_buffer = r.matrix("gradient buffer");

  slot.config.rank = r.u64("slot rank");
  slot.config.refresh_period = r.i64("slot refresh period");
  slot.config.lambda = r.f64("slot lambda");
  slot.config.history = r.u64("slot history");
  slot.config.alpha = r.f64("slot alpha");

  try {
    if (r.flag("projector flag")) {
      const std::uint64_t rows = r.count("projector rows");
      const std::uint64_t cols = r.count("projector cols");
      const std::uint64_t rank = r.count("projector rank");
      const std::uint8_t side = r.u8("projector side");
      if (side > 1) throw FormatError("checkpoint: invalid projector side");
      const std::int64_t period = r.i64("projector period");
      const bool has_refresh = r.flag("projector refresh flag");
      const std::int64_t last = r.i64("projector last refresh");
      Matrix factor = r.matrix("projector factor");
      slot.projector = Projector::restore(rows, cols, rank, static_cast<Side>(side), period,
                                          has_refresh ? std::optional(last) : std::nullopt,
                                          std::move(factor));
    }
    if (r.flag("history flag")) {
      const std::uint64_t capacity = r.count("history capacity");
      const double lambda = r.f64("history lambda");
      const std::uint64_t dim = r.count("history dim");
      const std::uint64_t head = r.count("history head");
      const std::uint64_t size = r.count("history size");
      std::vector<double> storage = r.doubles("history storage");
      slot.history = GradHistory::restore(capacity, lambda, dim, head, size, std::move(storage));
    }

    AdamHyper hp;
    hp.beta1 = r.f64("adam beta1");
    hp.beta2 = r.f64("adam beta2");
    hp.epsilon = r.f64("adam epsilon");
    hp.bias_correction = r.flag("adam bias correction");
    const std::uint8_t placement = r.u8("adam eps placement");
    if (placement > 1) throw FormatError("checkpoint: invalid epsilon placement");
    hp.eps_placement = static_cast<EpsPlacement>(placement);
    const std::int64_t steps = r.i64("adam step count");
    Matrix m = r.matrix("adam first moment");
    Matrix v = r.matrix("adam second moment");
    slot.adam = AdamState::restore(hp, steps, std::move(m), std::move(v));
  } catch (const InvalidArgument& e) {
    throw FormatError("checkpoint: slot '" + slot.name + "': " + e.what());
  }
  return slot;
}

}  // namespace

void write_checkpoint(std::ostream& out, std::span<const ParamSlot> slots, std::int64_t step) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.i64(step);
  w.u64(slots.size());
  for (const ParamSlot& slot : slots) write_slot(w, slot);
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw FormatError("checkpoint: bad magic, not a checkpoint file");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint cp;
  cp.step = r.i64("step");
  const std::uint64_t n = r.count("slot count");
  for (std::uint64_t i = 0; i < n; ++i) cp.slots.push_back(read_slot(r));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("checkpoint: trailing bytes after last slot");
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, std::span<const ParamSlot> slots,
                     std::int64_t step) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("checkpoint: cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, slots, step);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace ngalore
