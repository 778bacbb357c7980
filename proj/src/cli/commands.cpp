#include "scrutiny/cli/commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <csignal>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "scrutiny/ckpt/ckpt.hpp"
#include "scrutiny/error.hpp"

namespace scrutiny::cli {

namespace fs = std::filesystem;
using kernels::KernelSpec;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

// The stored analysis when there is one, a fresh one otherwise.
analysis::CriticalityReport stored_or_fresh(const fs::path& out, const KernelSpec& spec, const CommonOptions& opt) {
  if (fs::exists(ckpt::aux_path(out, spec.id))) return load_analysis(out, spec, opt.seed);
  return analysis::analyze_or_fiat(spec, opt.iters, opt.seed, opt.threshold);
}

std::string_view fill_name(mask::FillPolicy f) {
  switch (f) {
    case mask::FillPolicy::Zero:
      return "zero";
    case mask::FillPolicy::KeepExisting:
      return "keep";
    case mask::FillPolicy::Poison:
      return "poison";
  }
  return "?";
}

// Runs from the start, checkpointing whenever due, and stops before step
// `fail_at` as if the process had died there.
void run_until_failure(const KernelSpec& spec, const analysis::CriticalityReport& report,
                       const ckpt::CheckpointPolicy& policy, const fs::path& dir, std::uint64_t seed, int fail_at,
                       bool kill_self) {
  kernels::KernelRun run = kernels::start_run(spec, seed);
  for (;;) {
    if (policy.due(run.iter)) ckpt::write_checkpoint(spec, run, report, policy, dir);
    if (run.iter == fail_at) {
      if (kill_self) std::raise(SIGKILL);
      return;
    }
    kernels::run_step(spec, run);
  }
}

}  // namespace

fs::path resolve_out(const fs::path& flag) {
  if (const char* env = std::getenv("SCRUTINIZE_OUT"); env != nullptr && *env != '\0') return env;
  return flag;
}

analysis::CriticalityReport load_analysis(const fs::path& out, const KernelSpec& spec, std::uint64_t seed) {
  const fs::path p = ckpt::aux_path(out, spec.id);
  if (!fs::exists(p)) {
    throw Error(Errc::MissingAnalysis, p.string() + " not found; run `analyze --kernel " +
                                           kernels::lower_name(spec.id) + "` first");
  }
  return analysis::report_from_masks(spec, mask::read_file(p), seed);
}

std::optional<mask::FillPolicy> parse_fill(std::string_view s) {
  if (s == "zero") return mask::FillPolicy::Zero;
  if (s == "keep") return mask::FillPolicy::KeepExisting;
  if (s == "poison") return mask::FillPolicy::Poison;
  return std::nullopt;
}

int cmd_analyze(const CommonOptions& opt, std::ostream& os) {
  const fs::path out = resolve_out(opt.out);
  std::vector<analysis::CriticalityReport> reports;
  for (kernels::KernelId id : opt.kernels) {
    const KernelSpec spec = kernels::build_kernel(id);
    analysis::CriticalityReport r = analysis::analyze_or_fiat(spec, opt.iters, opt.seed, opt.threshold);
    std::error_code ec;
    fs::create_directories(out, ec);
    mask::write_file(ckpt::aux_path(out, id), r.masks());
    write_text(out / (kernels::lower_name(id) + ".csv"), analysis::report_csv({&r, 1}));

    os << kernels::to_string(id);
    if (r.by_fiat) {
      os << ": no floating-point surface, every element critical by fiat\n";
    } else {
      os << fmt::format(" (K={}, seed {})\n", r.iterations_analyzed, r.seed);
    }
    for (const analysis::VariableCriticality& v : r.per_variable) {
      if (v.scalar) {
        os << fmt::format("  {}: scalar, critical\n", v.name);
      } else {
        os << fmt::format("  {}: {}/{} uncritical ({}%)\n", v.name, v.n_uncritical, v.total(),
                          analysis::format_rate(v.uncritical_rate()));
      }
    }
    reports.push_back(std::move(r));
  }
  if (reports.size() > 1) {
    write_text(out / "summary.csv", analysis::report_csv(reports, true));
    os << "wrote " << (out / "summary.csv").string() << "\n";
  }
  return kExitOk;
}

int cmd_viz(const VizOptions& opt, std::ostream& os) {
  const fs::path out = resolve_out(opt.common.out);
  const VizRequest& req = opt.request;
  const KernelSpec spec = kernels::build_kernel(req.kernel);
  const analysis::CriticalityReport report = load_analysis(out, spec, opt.common.seed);
  const mask::MaskSet masks = report.masks();
  const std::vector<SliceMap> maps = build_maps(spec, masks, req);

  const kernels::VariableDesc& d = spec.var(req.variable);
  std::string base = kernels::lower_name(req.kernel) + "_" + req.variable;
  const bool strip = req.projection == Projection::FlatStrip || d.shape.size() < 3;
  if (strip) {
    base += "_strip";
  } else {
    if (d.shape.size() == 4) base += fmt::format("_m{}", req.fourth_index);
    base += fmt::format("_axis{}", req.slice_axis);
    if (req.slice_index) base += fmt::format("_{}", *req.slice_index);
  }

  const fs::path dir = out / "viz";
  std::vector<fs::path> written;
  switch (req.format) {
    case ImageFormat::Ascii:
      written.push_back(dir / (base + ".txt"));
      write_text(written.back(), render_ascii(maps));
      break;
    case ImageFormat::Csv:
      written.push_back(dir / (kernels::lower_name(req.kernel) + "_" + req.variable + ".csv"));
      write_text(written.back(), render_csv(masks.at(req.variable)));
      break;
    case ImageFormat::Pgm:
      for (std::size_t i = 0; i < maps.size(); ++i) {
        const std::string name =
            strip || req.slice_index ? base : fmt::format("{}_{}", base, i);
        written.push_back(dir / (name + ".pgm"));
        write_text(written.back(), render_pgm(maps[i]));
      }
      break;
  }
  for (const fs::path& p : written) os << p.string() << "\n";
  return kExitOk;
}

int cmd_bench(const BenchOptions& opt, std::ostream& os) {
  const fs::path out = resolve_out(opt.common.out);
  ckpt::CheckpointPolicy policy{opt.interval, opt.versions};
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    throw Error(Errc::UsageError, e.what());
  }

  int status = kExitOk;
  for (kernels::KernelId id : opt.common.kernels) {
    const KernelSpec spec = kernels::build_kernel(id);
    const analysis::CriticalityReport report = stored_or_fresh(out, spec, opt.common);
    const int fail_at = opt.fail_at.value_or(spec.loop_len / 2);
    if (fail_at < 0 || fail_at >= spec.loop_len) {
      throw Error(Errc::UsageError, fmt::format("--fail-at must lie in 0..{}", spec.loop_len - 1));
    }

    const fs::path dir = out / "ckpt";
    for (const fs::path& p : ckpt::list_bundles(dir, id)) fs::remove(p);
    fs::remove(ckpt::aux_path(dir, id));

    if (opt.fork_kill) {
      os.flush();
      const pid_t pid = ::fork();
      if (pid < 0) throw Error(Errc::IoError, "fork failed");
      if (pid == 0) {
        try {
          run_until_failure(spec, report, policy, dir, opt.common.seed, fail_at, true);
        } catch (...) {
        }
        std::_Exit(3);
      }
      int wstatus = 0;
      ::waitpid(pid, &wstatus, 0);
      if (!WIFSIGNALED(wstatus) || WTERMSIG(wstatus) != SIGKILL) {
        os << kernels::to_string(id) << ": child did not die by SIGKILL\n";
        status = kExitFailure;
        continue;
      }
    } else {
      run_until_failure(spec, report, policy, dir, opt.common.seed, fail_at, false);
    }

    kernels::KernelRun run = ckpt::restart(dir, spec, opt.fill);
    const int resumed_at = run.iter;
    const double output = kernels::finish(spec, run);
    const bool pass = kernels::verify(spec, run) == kernels::Verdict::Pass;
    const bool bitwise = std::bit_cast<std::uint64_t>(output) ==
                         std::bit_cast<std::uint64_t>(kernels::reference_output(spec, opt.common.seed));

    const ckpt::StorageReport s = ckpt::storage_report(spec, report);
    os << fmt::format("{}: original {} B, optimized {} B (incl. {} B mask file), saved {:.1f}%\n",
                      kernels::to_string(id), s.original_bytes, s.optimized_bytes, s.aux_bytes,
                      100.0 * s.saved_fraction);
    os << fmt::format("  failed before iteration {}, restarted at {} of {} (fill {}{}): verification {}{}\n", fail_at,
                      resumed_at, spec.loop_len, fill_name(opt.fill), opt.fork_kill ? ", process killed" : "",
                      pass ? "PASS" : "FAIL", bitwise ? ", output bitwise identical" : "");
    if (!pass) status = kExitFailure;
  }
  return status;
}

int cmd_reconcile(const ReconcileOptions& opt, std::ostream& os) {
  const fs::path out = resolve_out(opt.common.out);
  int status = kExitOk;
  for (kernels::KernelId id : opt.common.kernels) {
    const KernelSpec spec = kernels::build_kernel(id);
    const analysis::CriticalityReport report = stored_or_fresh(out, spec, opt.common);
    const analysis::ReadTracking reads = analysis::oracle_read_tracking(spec, opt.common.iters, opt.common.seed);
    const auto samples = analysis::sample_perturbations(spec, report, opt.samples, opt.common.seed + 1);
    const analysis::Reconciliation rec = analysis::reconcile(report, reads, samples);

    std::size_t uncritical = 0;
    for (const auto& s : samples) uncritical += report.variable(s.variable).mask.is_critical(s.element) ? 0 : 1;
    os << fmt::format("{}: {} elements against the read oracle, {} perturbation samples ({} uncritical): {} mismatches\n",
                      kernels::to_string(id), rec.elements_compared, rec.samples_checked, uncritical,
                      rec.mismatches.size());
    for (std::size_t i = 0; i < std::min<std::size_t>(rec.mismatches.size(), 20); ++i) {
      const auto& m = rec.mismatches[i];
      os << fmt::format("  {}[{}]: {}\n", m.variable, m.element, m.reason);
    }
    if (!rec.consistent()) {
      os << fmt::format("  {}: {} mismatching elements\n", to_string(Errc::MismatchFound), rec.mismatches.size());
      status = kExitFailure;
    }
  }
  return status;
}

}  // namespace scrutiny::cli
