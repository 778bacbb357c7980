// One line per acceptance criterion; nonzero exit if any fails. Details of
// a failure go to stderr so the summary lines stay greppable.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "fd_oracle.hpp"
#include "figures.hpp"
#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/ckpt/ckpt.hpp"
#include "scrutiny/error.hpp"
#include "scrutiny/mask/mask.hpp"
#include "temp_dir.hpp"

using namespace scrutiny;
using kernels::KernelId;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t bits(double d) { return std::bit_cast<std::uint64_t>(d); }

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void fail(std::string why) {
    pass = false;
    problems.push_back(std::move(why));
  }
};

std::map<KernelId, analysis::CriticalityReport> g_reports;

Outcome ac1_table() {
  Outcome o;
  const auto t0 = Clock::now();
  for (KernelId id : kernels::kAllKernels) g_reports[id] = analysis::analyze_or_fiat(kernels::build_kernel(id));
  const double secs = seconds_since(t0);

  struct Row {
    KernelId id;
    const char* var;
    std::uint64_t uncritical;
    std::uint64_t total;
  };
  const Row rows[] = {{KernelId::BT, "u", 1500, 10140},   {KernelId::SP, "u", 1500, 10140},
                      {KernelId::MG, "u", 7176, 46480},   {KernelId::CG, "x", 2, 1402},
                      {KernelId::LU, "rho_i", 300, 2028}, {KernelId::LU, "qs", 300, 2028},
                      {KernelId::LU, "rsd", 1500, 10140}, {KernelId::LU, "u", 1628, 10140},
                      {KernelId::FT, "y", 4096, 266240}};
  for (const Row& r : rows) {
    const auto& v = g_reports[r.id].variable(r.var);
    if (v.n_uncritical != r.uncritical || v.total() != r.total) {
      o.fail(fmt::format("{}({}) {}/{} expected {}/{}", kernels::to_string(r.id), r.var, v.n_uncritical, v.total(),
                         r.uncritical, r.total));
    }
  }
  // MG r has no reference count; it must match its own read oracle.
  const auto reads = analysis::oracle_read_tracking(kernels::build_kernel(KernelId::MG));
  const auto never = reads.variable("r").never_read().size();
  const auto mg_r = g_reports[KernelId::MG].variable("r").n_uncritical;
  if (mg_r != never) o.fail(fmt::format("MG(r) {} uncritical, read oracle says {} never read", mg_r, never));

  // Determinism: a second analysis yields identical masks.
  for (KernelId id : {KernelId::BT, KernelId::LU}) {
    if (analysis::analyze(kernels::build_kernel(id)).masks() != g_reports[id].masks()) {
      o.fail(fmt::format("{} analysis not deterministic", kernels::to_string(id)));
    }
  }
  if (secs >= 60.0) o.fail(fmt::format("took {:.1f} s", secs));
  o.detail = fmt::format("9 rows exact, MG(r) {}/46480 = read oracle, {:.1f} s", mg_r, secs);
  return o;
}

Outcome ac2_storage() {
  Outcome o;
  const std::pair<KernelId, double> expected[] = {{KernelId::BT, 14.8}, {KernelId::SP, 14.8}, {KernelId::MG, 19.1},
                                                  {KernelId::CG, 0.1},  {KernelId::LU, 15.7}, {KernelId::FT, 1.5}};
  double best = 0.0;
  std::string got;
  for (auto [id, pct] : expected) {
    const auto s = ckpt::storage_report(kernels::build_kernel(id), g_reports[id]);
    const double saved = 100.0 * s.saved_fraction;
    best = std::max(best, saved);
    got += fmt::format("{} {:.1f} ", kernels::to_string(id), saved);
    if (std::abs(saved - pct) > 0.5) o.fail(fmt::format("{} saved {:.2f}%, expected {} +/- 0.5", kernels::to_string(id), saved, pct));
  }
  if (best < 14.8) o.fail(fmt::format("maximum saving {:.2f}% below 14.8", best));
  o.detail = fmt::format("{}(max {:.1f}%)", got, best);
  return o;
}

Outcome ac3_restart() {
  Outcome o;
  const auto t0 = Clock::now();
  int cases = 0;
  int passed = 0;
  for (KernelId id : kernels::kAllKernels) {
    const auto spec = kernels::build_kernel(id);
    const double reference = kernels::reference_output(spec, analysis::kDefaultSeed);
    for (int at : {0, spec.loop_len / 2, spec.loop_len - 1}) {
      for (mask::FillPolicy fill : {mask::FillPolicy::Zero, mask::FillPolicy::KeepExisting, mask::FillPolicy::Poison}) {
        ++cases;
        const std::string label = fmt::format("{} at {} fill {}", kernels::to_string(id), at, static_cast<int>(fill));
        try {
          testkit::TempDir dir("acceptance-restart");
          kernels::KernelRun run = kernels::start_run(spec, analysis::kDefaultSeed);
          while (run.iter < at) kernels::run_step(spec, run);
          ckpt::write_checkpoint(spec, run, g_reports[id], {1, 2}, dir.path());
          // The original run is abandoned here, as if the process died.
          kernels::KernelRun resumed = ckpt::restart(dir.path(), spec, fill);
          if (resumed.iter != at) {
            o.fail(label + fmt::format(": resumed at {}", resumed.iter));
            continue;
          }
          const double out = kernels::finish(spec, resumed);
          if (bits(out) != bits(reference)) {
            o.fail(label + fmt::format(": output {} differs from {}", out, reference));
          } else {
            ++passed;
          }
        } catch (const std::exception& e) {
          o.fail(label + ": " + e.what());
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 120.0) o.fail(fmt::format("took {:.1f} s", secs));
  o.detail = fmt::format("{}/{} cases bitwise identical, {:.1f} s", passed, cases, secs);
  return o;
}

Outcome ac4_faults() {
  Outcome o;
  constexpr std::size_t kTrials = 100;
  std::string got;
  for (KernelId id : kernels::kAllKernels) {
    const auto spec = kernels::build_kernel(id);
    std::string row = std::string(kernels::to_string(id));
    for (ckpt::Target t : {ckpt::Target::UncriticalRandom, ckpt::Target::CriticalRandom}) {
      const char* name = t == ckpt::Target::UncriticalRandom ? "uncritical" : "critical";
      const auto s = ckpt::fault_injection_trial(spec, g_reports[id], t, kTrials, 1000 + static_cast<int>(id));
      if (s.skipped) {
        if (t == ckpt::Target::CriticalRandom) o.fail(row + ": critical class empty");
        row += " -";
        continue;
      }
      row += fmt::format(" {}/{}", s.as_expected, s.trials);
      if (s.trials < kTrials) o.fail(fmt::format("{} {}: only {} trials", kernels::to_string(id), name, s.trials));
      for (const auto& f : s.failures) {
        o.fail(fmt::format("{} {} {}[{}] at {}: {}", kernels::to_string(id), name, f.variable, f.element, f.iteration,
                           f.reason));
      }
      if (s.failures.empty() && !s.ok()) o.fail(fmt::format("{} {}: {}/{} as expected", kernels::to_string(id), name, s.as_expected, s.trials));
    }
    got += row + ", ";
  }
  got.resize(got.size() - 2);
  o.detail = "uncritical/critical as expected: " + got;
  return o;
}

Outcome ac5_gradients() {
  Outcome o;
  double worst = 0.0;
  std::size_t checked = 0;
  std::string sets;
  for (KernelId id : kernels::kAllKernels) {
    const auto spec = kernels::build_kernel(id);
    const auto& report = g_reports[id];
    const auto reads = analysis::oracle_read_tracking(spec);
    if (!spec.float_surface) {
      // No tape to check; the fiat classification must still agree with the
      // read oracle, i.e. every element is read.
      for (const auto& v : reads.per_variable) {
        if (!v.never_read().empty()) o.fail(fmt::format("{}({}) has never-read elements", kernels::to_string(id), v.name));
      }
      continue;
    }
    const auto checks = testkit::check_gradients(spec, report, 100, report.iterations_analyzed, 11);
    if (checks.size() < 100) o.fail(fmt::format("{}: only {} critical elements checked", kernels::to_string(id), checks.size()));
    checked += checks.size();
    for (const auto& g : checks) {
      worst = std::max(worst, g.rel_error);
      if (!(g.rel_error < 1e-6)) {
        o.fail(fmt::format("{} {}[{}] iter {}: ad {} fd {} rel {:.2e}", kernels::to_string(id), g.variable, g.element,
                           g.iteration, g.ad, g.fd, g.rel_error));
      }
    }
    std::size_t zero_total = 0;
    for (const auto& impact : report.impacts) {
      std::vector<std::uint64_t> zero;
      for (std::uint64_t e = 0; e < impact.derivs.size(); ++e) {
        if (impact.derivs[e] == 0.0) zero.push_back(e);
      }
      const auto never = reads.variable(impact.variable).never_read();
      if (zero != never) {
        o.fail(fmt::format("{}({}): {} zero-derivative vs {} never-read elements", kernels::to_string(id), impact.variable,
                           zero.size(), never.size()));
      }
      zero_total += zero.size();
    }
    sets += fmt::format("{} {} ", kernels::to_string(id), zero_total);
  }
  o.detail = fmt::format("{} gradients, worst rel error {:.1e}; zero-derivative = never-read ({}elements)", checked, worst, sets);
  return o;
}

mask::CriticalityMask random_mask(std::mt19937_64& rng, int shape) {
  const std::uint64_t total = shape == 0 ? 0 : std::uniform_int_distribution<std::uint64_t>(1, 400)(rng);
  std::vector<std::uint8_t> flags(total, 0);
  switch (shape) {
    case 1:  // full
      std::fill(flags.begin(), flags.end(), 1);
      break;
    case 2:  // single-element runs
      for (std::uint64_t i = 0; i < total; i += 2) flags[i] = 1;
      break;
    case 3: {  // one critical element
      flags[std::uniform_int_distribution<std::uint64_t>(0, total - 1)(rng)] = 1;
      break;
    }
    default: {
      const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      std::bernoulli_distribution bit(p);
      for (auto& f : flags) f = bit(rng) ? 1 : 0;
    }
  }
  return mask::CriticalityMask::from_flags(std::span<const std::uint8_t>(flags));
}

Outcome ac6_masks() {
  Outcome o;
  std::mt19937_64 rng(6);
  constexpr int kCases = 1000;
  int shapes[5] = {};
  for (int i = 0; i < kCases; ++i) {
    mask::MaskSet set;
    const int nvars = 1 + i % 3;
    for (int v = 0; v < nvars; ++v) {
      const int shape = (i + v) % 8 < 4 ? (i + v) % 8 : 4;
      ++shapes[shape];
      set.emplace("v" + std::to_string(v), random_mask(rng, shape));
    }
    try {
      if (mask::decode(mask::encode(set)) != set) o.fail(fmt::format("roundtrip {} differs", i));
    } catch (const std::exception& e) {
      o.fail(fmt::format("roundtrip {}: {}", i, e.what()));
    }
  }
  std::normal_distribution<double> value(0.0, 1e3);
  std::size_t compared = 0;
  for (int i = 0; i < kCases; ++i) {
    const auto m = random_mask(rng, i % 8 < 4 ? i % 8 : 4);
    const int comps = 1 + i % 2;
    std::vector<double> data(m.total() * static_cast<std::size_t>(comps));
    for (double& d : data) d = value(rng);
    std::vector<double> out(data.size());
    try {
      mask::scatter(mask::gather(data, m, comps), m, mask::FillPolicy::Poison, out, comps);
    } catch (const std::exception& e) {
      o.fail(fmt::format("gather/scatter {}: {}", i, e.what()));
      continue;
    }
    for (std::uint64_t e = 0; e < m.total(); ++e) {
      if (!m.is_critical(e)) continue;
      for (int c = 0; c < comps; ++c) {
        const std::size_t k = e * static_cast<std::size_t>(comps) + static_cast<std::size_t>(c);
        ++compared;
        if (bits(out[k]) != bits(data[k])) o.fail(fmt::format("gather/scatter {} element {} differs", i, e));
      }
    }
  }
  o.detail = fmt::format("{} mask roundtrips ({} empty, {} full, {} alternating, {} single), {} gather/scatter pairs ({} reals)",
                         kCases, shapes[0], shapes[1], shapes[2], shapes[3], kCases, compared);
  return o;
}

Outcome ac7_goldens() {
  Outcome o;
  std::vector<analysis::CriticalityReport> all;
  for (KernelId id : kernels::kAllKernels) all.push_back(g_reports[id]);
  std::size_t n = 0;
  auto compare = [&](const std::string& file, const std::string& produced) {
    ++n;
    const auto path = testkit::golden_dir() / file;
    if (!std::filesystem::exists(path)) {
      o.fail(file + ": golden missing");
    } else if (testkit::slurp(path) != produced) {
      o.fail(file + ": differs from golden");
    }
  };
  compare("summary.csv", testkit::summary_csv(all));
  for (const auto& f : testkit::figures()) compare(f.file, testkit::render_figure(f, g_reports[f.request.kernel]));
  o.detail = fmt::format("{} files byte-identical", n - o.problems.size());
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"AC1 table counts", ac1_table},     {"AC2 storage savings", ac2_storage}, {"AC3 restart transparency", ac3_restart},
      {"AC4 fault injection", ac4_faults}, {"AC5 AD validity", ac5_gradients},   {"AC6 mask format", ac6_masks},
      {"AC7 figure goldens", ac7_goldens}};
  int failed = 0;
  for (auto [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    for (std::size_t i = 0; i < o.problems.size() && i < 20; ++i) std::fprintf(stderr, "  %s\n", o.problems[i].c_str());
    if (o.problems.size() > 20) std::fprintf(stderr, "  ... %zu more\n", o.problems.size() - 20);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/7 criteria pass\n", 7 - failed);
  return failed == 0 ? 0 : 1;
}
