#include "scrutiny/mask/mask.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "scrutiny/error.hpp"

namespace scrutiny::mask {

namespace {

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::uint64_t n, const char* what) const {
    if (n > in_.size() - pos_) throw Error(Errc::TruncatedFile, std::string("while reading ") + what);
  }
  template <class U>
  U le(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void check_lengths(std::size_t have, std::uint64_t expect, const char* what) {
  if (have != expect) {
    throw Error(Errc::LengthMismatch,
                std::string(what) + " has " + std::to_string(have) + " reals, expected " + std::to_string(expect));
  }
}

}  // namespace

CriticalityMask CriticalityMask::from_flags(std::span<const std::uint8_t> flags) {
  CriticalityMask m;
  m.total_ = flags.size();
  std::uint64_t i = 0;
  while (i < flags.size()) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    const std::uint64_t start = i;
    while (i < flags.size() && flags[i]) ++i;
    m.runs_.push_back({start, i});
    m.n_critical_ += i - start;
  }
  return m;
}

CriticalityMask CriticalityMask::from_flags(const std::vector<bool>& flags) {
  std::vector<std::uint8_t> bytes(flags.begin(), flags.end());
  return from_flags(std::span<const std::uint8_t>(bytes));
}

CriticalityMask CriticalityMask::from_runs(std::uint64_t total, std::vector<Run> runs) {
  CriticalityMask m;
  m.total_ = total;
  bool first = true;
  std::uint64_t prev_end = 0;
  for (const Run& r : runs) {
    if (r.start >= r.end || r.end > total || (!first && r.start <= prev_end)) {
      throw Error(Errc::NonMonotonicRuns, "run [" + std::to_string(r.start) + ", " + std::to_string(r.end) +
                                              ") after end " + std::to_string(prev_end) + ", total " +
                                              std::to_string(total));
    }
    m.n_critical_ += r.length();
    prev_end = r.end;
    first = false;
  }
  m.runs_ = std::move(runs);
  return m;
}

CriticalityMask CriticalityMask::all_critical(std::uint64_t total) {
  return total == 0 ? from_runs(0, {}) : from_runs(total, {{0, total}});
}

bool CriticalityMask::is_critical(std::uint64_t index) const noexcept {
  auto it = std::upper_bound(runs_.begin(), runs_.end(), index,
                             [](std::uint64_t v, const Run& r) { return v < r.start; });
  if (it == runs_.begin()) return false;
  --it;
  return index < it->end;
}

std::vector<std::uint8_t> CriticalityMask::to_flags() const {
  std::vector<std::uint8_t> flags(total_, 0);
  for (const Run& r : runs_) std::fill(flags.begin() + static_cast<std::ptrdiff_t>(r.start),
                                       flags.begin() + static_cast<std::ptrdiff_t>(r.end), 1);
  return flags;
}

std::size_t encoded_size(const MaskSet& masks) {
  std::size_t n = 4 + 4 + 4;
  for (const auto& [name, m] : masks) n += 2 + name.size() + 8 + 8 + 16 * m.runs().size();
  return n;
}

std::vector<std::uint8_t> encode(const MaskSet& masks) {
  Writer w(encoded_size(masks));
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(kVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(masks.size()));
  for (const auto& [name, m] : masks) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(Errc::LengthMismatch, "variable name longer than 65535 bytes");
    }
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.le<std::uint64_t>(m.total());
    w.le<std::uint64_t>(m.runs().size());
    for (const Run& r : m.runs()) {
      w.le<std::uint64_t>(r.start);
      w.le<std::uint64_t>(r.end);
    }
  }
  return w.take();
}

MaskSet decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "not an .scrm file");
  const auto version = r.le<std::uint32_t>("version");
  if (version != kVersion) throw Error(Errc::BadVersion, "version " + std::to_string(version));
  const auto count = r.le<std::uint32_t>("var_count");

  MaskSet out;
  for (std::uint32_t v = 0; v < count; ++v) {
    const auto len = r.le<std::uint16_t>("name length");
    const auto name_bytes = r.take(len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto total = r.le<std::uint64_t>("total");
    const auto run_count = r.le<std::uint64_t>("run_count");
    if (run_count > r.remaining() / 16) throw Error(Errc::TruncatedFile, "runs of '" + name + "'");
    std::vector<Run> runs(run_count);
    for (Run& run : runs) {
      run.start = r.le<std::uint64_t>("run start");
      run.end = r.le<std::uint64_t>("run end");
    }
    auto mask = CriticalityMask::from_runs(total, std::move(runs));
    if (!out.emplace(std::move(name), std::move(mask)).second) {
      throw Error(Errc::DuplicateVariable, "variable listed twice");
    }
  }
  if (r.remaining() != 0) throw Error(Errc::TrailingBytes, std::to_string(r.remaining()) + " bytes after last run");
  return out;
}

void write_file(const std::filesystem::path& path, const MaskSet& masks) {
  const auto bytes = encode(masks);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Errc::IoError, "short write to " + path.string());
}

MaskSet read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<double> gather(std::span<const double> data, const CriticalityMask& mask, int components) {
  const auto c = static_cast<std::size_t>(components);
  check_lengths(data.size(), mask.total() * c, "data");
  std::vector<double> packed;
  packed.reserve(mask.n_critical() * c);
  for (const Run& r : mask.runs()) {
    packed.insert(packed.end(), data.begin() + static_cast<std::ptrdiff_t>(r.start * c),
                  data.begin() + static_cast<std::ptrdiff_t>(r.end * c));
  }
  return packed;
}

void scatter(std::span<const double> packed, const CriticalityMask& mask, FillPolicy fill, std::span<double> out,
             int components) {
  const auto c = static_cast<std::size_t>(components);
  check_lengths(packed.size(), mask.n_critical() * c, "packed");
  check_lengths(out.size(), mask.total() * c, "output");
  const double filler = fill == FillPolicy::Poison ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  std::uint64_t cursor = 0;  // first element not yet handled
  std::size_t src = 0;
  auto fill_gap = [&](std::uint64_t upto) {
    if (fill != FillPolicy::KeepExisting) {
      std::fill(out.begin() + static_cast<std::ptrdiff_t>(cursor * c),
                out.begin() + static_cast<std::ptrdiff_t>(upto * c), filler);
    }
  };
  for (const Run& r : mask.runs()) {
    fill_gap(r.start);
    const std::size_t n = r.length() * c;
    std::copy_n(packed.begin() + static_cast<std::ptrdiff_t>(src), n,
                out.begin() + static_cast<std::ptrdiff_t>(r.start * c));
    src += n;
    cursor = r.end;
  }
  fill_gap(mask.total());
}

}  // namespace scrutiny::mask
