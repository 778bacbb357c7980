#include "scrutiny/ckpt/ckpt.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "scrutiny/error.hpp"

namespace scrutiny::ckpt {

namespace fs = std::filesystem;
using json = nlohmann::json;
using kernels::KernelId;
using kernels::KernelRun;
using kernels::KernelSpec;

namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::CorruptBundle, what); }

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, std::span<const std::uint8_t> bytes) {
  // Write beside the target and rename, so readers never see a torn file.
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    const fs::path p = dir / ".scrutiny.lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::IoError, "cannot open lock " + p.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(Errc::IoError, "another writer holds " + p.string());
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

void check_report(const KernelSpec& spec, std::uint64_t seed, const analysis::CriticalityReport& report) {
  if (report.kernel != spec.id || report.seed != seed) {
    throw Error(Errc::MaskKernelMismatch, fmt::format("report is for {} seed {}, run is {} seed {}",
                                                      kernels::to_string(report.kernel), report.seed,
                                                      kernels::to_string(spec.id), seed));
  }
  for (const auto& d : spec.checkpoint_vars) {
    const auto& v = report.variable(d.name);
    if (v.total() != d.elements() || (!d.scalar() && v.mask.total() != d.elements())) {
      throw Error(Errc::MaskKernelMismatch, "mask size differs for " + d.name);
    }
  }
}

json manifest_json(const Manifest& m) {
  json vars = json::array();
  for (const PayloadEntry& e : m.variables) {
    vars.push_back({{"name", e.name},
                    {"elements", e.elements},
                    {"critical", e.critical},
                    {"components", e.components},
                    {"offset", e.offset},
                    {"bytes", e.bytes}});
  }
  return {{"kernel", kernels::to_string(m.kernel)},
          {"iteration", m.iteration},
          {"seed", m.seed},
          {"ordinal", m.ordinal},
          {"mask_digest", m.mask_digest},
          {"scalars", m.scalars},
          {"scalar_offset", m.scalar_offset},
          {"payload_offset", m.payload_offset},
          {"payload_bytes", m.payload_bytes},
          {"variables", vars}};
}

Manifest parse_manifest(std::span<const std::uint8_t> text) {
  Manifest m;
  try {
    const json j = json::parse(text.begin(), text.end());
    const auto id = kernels::parse_kernel_id(j.at("kernel").get<std::string>());
    if (!id) corrupt("unknown kernel in manifest");
    m.kernel = *id;
    m.iteration = j.at("iteration").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ordinal = j.at("ordinal").get<std::uint64_t>();
    m.mask_digest = j.at("mask_digest").get<std::string>();
    m.scalars = j.at("scalars").get<std::vector<std::string>>();
    m.scalar_offset = j.at("scalar_offset").get<std::uint64_t>();
    m.payload_offset = j.at("payload_offset").get<std::uint64_t>();
    m.payload_bytes = j.at("payload_bytes").get<std::uint64_t>();
    for (const json& v : j.at("variables")) {
      m.variables.push_back({v.at("name").get<std::string>(), v.at("elements").get<std::uint64_t>(),
                             v.at("critical").get<std::uint64_t>(), v.at("components").get<int>(),
                             v.at("offset").get<std::uint64_t>(), v.at("bytes").get<std::uint64_t>()});
    }
  } catch (const json::exception& e) {
    corrupt(std::string("manifest: ") + e.what());
  }
  return m;
}

std::uint64_t peek_ordinal(const fs::path& p) {
  try {
    return decode_bundle(slurp(p)).manifest.ordinal;
  } catch (const Error&) {
    return 0;
  }
}

}  // namespace

void CheckpointPolicy::validate() const {
  if (interval < 1) throw std::invalid_argument("checkpoint interval must be >= 1");
  if (versions_kept < 1) throw std::invalid_argument("versions kept must be >= 1");
}

std::string digest(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return fmt::format("{:016x}", h);
}

CheckpointBundle make_bundle(const KernelSpec& spec, const KernelRun& run, const analysis::CriticalityReport& report,
                             std::uint64_t ordinal) {
  check_report(spec, run.seed, report);
  CheckpointBundle b;
  Manifest& m = b.manifest;
  m.kernel = spec.id;
  m.iteration = run.iter;
  m.seed = run.seed;
  m.ordinal = ordinal;
  m.mask_digest = digest(mask::encode(report.masks()));
  for (const kernels::Variable& v : run.state) {
    if (v.desc.scalar()) {
      m.scalars.push_back(v.desc.name);
      b.scalars.push_back(v.data[0]);
      continue;
    }
    const mask::CriticalityMask& cm = report.variable(v.desc.name).mask;
    std::vector<double> packed = mask::gather(v.data, cm, v.desc.components);
    const std::uint64_t bytes = packed.size() * sizeof(double);
    m.variables.push_back(
        {v.desc.name, cm.total(), cm.n_critical(), v.desc.components, m.payload_bytes, bytes});
    m.payload_bytes += bytes;
    b.payload.insert(b.payload.end(), packed.begin(), packed.end());
  }
  return b;
}

std::vector<std::uint8_t> encode_bundle(const CheckpointBundle& bundle) {
  // Offsets depend on the manifest length, which depends on the offsets;
  // iterate until the digits settle.
  Manifest m = bundle.manifest;
  std::string text;
  for (;;) {
    text = manifest_json(m).dump();
    const std::uint64_t scalar_offset = 8 + text.size();
    const std::uint64_t payload_offset = scalar_offset + 8 * (1 + m.scalars.size());
    if (scalar_offset == m.scalar_offset && payload_offset == m.payload_offset) break;
    m.scalar_offset = scalar_offset;
    m.payload_offset = payload_offset;
  }
  std::vector<std::uint8_t> out;
  out.reserve(m.payload_offset + m.payload_bytes);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(m.iteration)));
  for (double s : bundle.scalars) put_f64(out, s);
  for (double v : bundle.payload) put_f64(out, v);
  return out;
}

CheckpointBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) corrupt("shorter than the manifest length prefix");
  const std::uint64_t len = get_u64(bytes, 0);
  if (len > bytes.size() - 8) corrupt("manifest runs past end of file");
  CheckpointBundle b;
  b.manifest = parse_manifest(bytes.subspan(8, len));
  const Manifest& m = b.manifest;

  if (m.scalar_offset != 8 + len || m.payload_offset != m.scalar_offset + 8 * (1 + m.scalars.size())) {
    corrupt("section offsets disagree with the manifest");
  }
  std::uint64_t expect = 0;
  for (const PayloadEntry& e : m.variables) {
    if (e.offset != expect || e.bytes != e.critical * static_cast<std::uint64_t>(e.components) * 8 ||
        e.critical > e.elements) {
      corrupt("payload entry for " + e.name + " is inconsistent");
    }
    expect += e.bytes;
  }
  if (expect != m.payload_bytes) corrupt("payload size disagrees with its entries");
  if (bytes.size() != m.payload_offset + m.payload_bytes) {
    corrupt(fmt::format("file is {} bytes, manifest describes {}", bytes.size(), m.payload_offset + m.payload_bytes));
  }
  if (static_cast<std::int64_t>(get_u64(bytes, m.scalar_offset)) != m.iteration) {
    corrupt("scalar section iteration disagrees with the manifest");
  }
  for (std::size_t i = 0; i < m.scalars.size(); ++i) {
    b.scalars.push_back(std::bit_cast<double>(get_u64(bytes, m.scalar_offset + 8 * (i + 1))));
  }
  b.payload.resize(m.payload_bytes / 8);
  for (std::size_t i = 0; i < b.payload.size(); ++i) {
    b.payload[i] = std::bit_cast<double>(get_u64(bytes, m.payload_offset + 8 * i));
  }
  return b;
}

fs::path bundle_path(const fs::path& dir, KernelId id, int iter) {
  return dir / fmt::format("{}.{}.ckpt", kernels::lower_name(id), iter);
}

fs::path aux_path(const fs::path& dir, KernelId id) { return dir / (kernels::lower_name(id) + ".scrm"); }

std::vector<fs::path> list_bundles(const fs::path& dir, KernelId id) {
  std::vector<std::pair<std::uint64_t, fs::path>> found;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return {};
  const std::string prefix = kernels::lower_name(id) + ".";
  for (const fs::directory_entry& e : fs::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    if (!e.is_regular_file() || !name.starts_with(prefix) || e.path().extension() != ".ckpt") continue;
    const std::string mid = name.substr(prefix.size(), name.size() - prefix.size() - 5);
    if (mid.empty() || !std::all_of(mid.begin(), mid.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    found.emplace_back(peek_ordinal(e.path()), e.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

fs::path write_checkpoint(const KernelSpec& spec, const KernelRun& run, const analysis::CriticalityReport& report,
                          const CheckpointPolicy& policy, const fs::path& dir) {
  policy.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  DirLock lock(dir);

  const std::vector<std::uint8_t> masks = mask::encode(report.masks());
  const fs::path aux = aux_path(dir, spec.id);
  if (fs::exists(aux)) {
    if (slurp(aux) != masks) throw Error(Errc::MaskKernelMismatch, aux.string() + " holds a different analysis");
  } else {
    spit(aux, masks);
  }

  std::uint64_t ordinal = 0;
  for (const fs::path& p : list_bundles(dir, spec.id)) ordinal = std::max(ordinal, peek_ordinal(p));
  const CheckpointBundle bundle = make_bundle(spec, run, report, ordinal + 1);
  const fs::path path = bundle_path(dir, spec.id, run.iter);
  spit(path, encode_bundle(bundle));

  std::vector<fs::path> all = list_bundles(dir, spec.id);
  const auto keep = static_cast<std::size_t>(policy.versions_kept);
  for (std::size_t i = 0; i + keep < all.size(); ++i) {
    fs::remove(all[i], ec);
    if (ec) throw Error(Errc::IoError, "cannot remove " + all[i].string() + ": " + ec.message());
  }
  return path;
}

KernelRun restart(const fs::path& dir, const KernelSpec& spec, mask::FillPolicy fill) {
  const std::vector<fs::path> all = list_bundles(dir, spec.id);
  if (all.empty()) throw Error(Errc::NoCheckpoint, "no " + kernels::lower_name(spec.id) + " bundle in " + dir.string());
  const CheckpointBundle b = decode_bundle(slurp(all.back()));
  const Manifest& m = b.manifest;
  if (m.kernel != spec.id) throw Error(Errc::MaskKernelMismatch, all.back().string() + " belongs to another kernel");
  if (m.iteration < 0 || m.iteration > spec.loop_len) corrupt("iteration outside the main loop");

  const fs::path aux = aux_path(dir, spec.id);
  if (!fs::exists(aux)) corrupt("aux file " + aux.string() + " is missing");
  const std::vector<std::uint8_t> aux_bytes = slurp(aux);
  if (digest(aux_bytes) != m.mask_digest) {
    throw Error(Errc::MaskKernelMismatch, aux.string() + " does not match the bundle's masks");
  }
  const analysis::CriticalityReport report = analysis::report_from_masks(spec, mask::decode(aux_bytes), m.seed);

  KernelRun run = kernels::start_run(spec, m.seed);
  run.iter = m.iteration;
  std::size_t scalar = 0;
  std::size_t entry = 0;
  for (kernels::Variable& v : run.state) {
    if (v.desc.scalar()) {
      if (scalar >= m.scalars.size() || m.scalars[scalar] != v.desc.name) {
        throw Error(Errc::MaskKernelMismatch, "scalar section lacks " + v.desc.name);
      }
      v.data[0] = b.scalars[scalar++];
      continue;
    }
    if (entry >= m.variables.size() || m.variables[entry].name != v.desc.name ||
        m.variables[entry].elements != v.desc.elements() || m.variables[entry].components != v.desc.components) {
      throw Error(Errc::MaskKernelMismatch, "payload lacks " + v.desc.name);
    }
    const PayloadEntry& e = m.variables[entry++];
    const mask::CriticalityMask& cm = report.variable(v.desc.name).mask;
    if (cm.n_critical() != e.critical) throw Error(Errc::MaskKernelMismatch, "critical count differs for " + e.name);
    const std::span<const double> packed(b.payload.data() + e.offset / 8, e.bytes / 8);
    mask::scatter(packed, cm, fill, v.data, v.desc.components);
  }
  if (scalar != m.scalars.size() || entry != m.variables.size()) {
    throw Error(Errc::MaskKernelMismatch, "bundle carries variables the kernel does not checkpoint");
  }
  return run;
}

StorageReport storage_report(const KernelSpec& spec, const analysis::CriticalityReport& report) {
  StorageReport r;
  std::size_t scalars = 0;
  for (const auto& d : spec.checkpoint_vars) {
    if (d.scalar()) {
      ++scalars;
      continue;
    }
    const auto comps = static_cast<std::uint64_t>(d.components);
    r.original_payload += d.elements() * comps * 8;
    r.optimized_payload += report.variable(d.name).n_critical * comps * 8;
  }
  r.scalar_bytes = 8 * (1 + scalars);
  r.aux_bytes = mask::encoded_size(report.masks());
  r.original_bytes = r.original_payload + r.scalar_bytes;
  r.optimized_bytes = r.optimized_payload + r.scalar_bytes + r.aux_bytes;
  if (r.original_payload > 0) {
    r.saved_fraction = 1.0 - static_cast<double>(r.optimized_payload) / static_cast<double>(r.original_payload);
  }
  return r;
}

TrialSummary fault_injection_trial(const KernelSpec& spec, const analysis::CriticalityReport& report, Target target,
                                   std::size_t n_trials, std::uint64_t sample_seed, unsigned threads) {
  TrialSummary summary;
  summary.target = target;

  // Candidates are (variable index, element); scalars count as critical.
  const bool want_critical = target == Target::CriticalRandom;
  std::vector<std::pair<std::size_t, std::uint64_t>> pool;
  for (std::size_t v = 0; v < spec.checkpoint_vars.size(); ++v) {
    const auto& vc = report.variable(spec.checkpoint_vars[v].name);
    const auto flags = vc.mask.to_flags();
    for (std::uint64_t e = 0; e < vc.total(); ++e) {
      const bool critical = vc.scalar || flags[e] != 0;
      if (critical == want_critical) pool.emplace_back(v, e);
    }
  }
  if (pool.empty()) {
    summary.skipped = true;
    return summary;
  }

  struct Plan {
    std::size_t var;
    std::uint64_t element;
    int iteration;
  };
  std::mt19937_64 rng(sample_seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> when(0, spec.loop_len - 1);
  std::vector<Plan> plans;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const auto& c = pool[pick(rng)];
    plans.push_back({c.first, c.second, when(rng)});
  }

  const std::uint64_t baseline = std::bit_cast<std::uint64_t>(kernels::reference_output(spec, report.seed));
  std::vector<std::string> verdicts(plans.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plans.size(); i = next++) {
      const Plan& p = plans[i];
      try {
        KernelRun run = kernels::start_run(spec, report.seed);
        while (run.iter < p.iteration) kernels::run_step(spec, run);
        kernels::Variable& v = run.state[p.var];
        const auto comps = static_cast<std::uint64_t>(v.desc.components);
        for (std::uint64_t c = 0; c < comps; ++c) v.data[p.element * comps + c] = kCorruptValue;
        const bool same = std::bit_cast<std::uint64_t>(kernels::finish(spec, run)) == baseline;
        if (same != !want_critical) {
          verdicts[i] = want_critical ? "output unchanged after corrupting a critical element"
                                      : "output changed after corrupting an uncritical element";
        }
      } catch (const std::exception& e) {
        verdicts[i] = std::string("exception: ") + e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 1; t < threads; ++t) workers.emplace_back(worker);
    worker();
  }

  summary.trials = plans.size();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (verdicts[i].empty()) {
      ++summary.as_expected;
    } else {
      summary.failures.push_back(
          {spec.checkpoint_vars[plans[i].var].name, plans[i].element, plans[i].iteration, verdicts[i]});
    }
  }
  return summary;
}

}  // namespace scrutiny::ckpt
