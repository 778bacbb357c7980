// scrutinize: analyze, visualize, benchmark and reconcile checkpoint
// criticality for the miniature NPB kernels.

#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "scrutiny/cli/commands.hpp"
#include "scrutiny/error.hpp"

using namespace scrutiny;

namespace {

struct Raw {
  std::string kernel;
  int iters = analysis::kDefaultIterations;
  std::uint64_t seed = analysis::kDefaultSeed;
  double threshold = 0.0;
  std::string out = "scrutiny-out";
};

void add_common(CLI::App* sub, Raw& raw) {
  sub->add_option("--kernel", raw.kernel, "bt, sp, cg, mg, lu, ft, ep, is or all")->required();
  sub->add_option("--iters", raw.iters, "main-loop iterations to analyze")->capture_default_str();
  sub->add_option("--seed", raw.seed, "initial-data seed")->capture_default_str();
  sub->add_option("--threshold", raw.threshold, "derivative magnitude treated as zero")->capture_default_str();
  sub->add_option("--out", raw.out, "artifact directory (SCRUTINIZE_OUT overrides)")->capture_default_str();
}

cli::CommonOptions common(const Raw& raw, bool allow_all) {
  cli::CommonOptions c;
  if (raw.kernel == "all" && allow_all) {
    c.kernels.assign(std::begin(kernels::kAllKernels), std::end(kernels::kAllKernels));
  } else if (auto id = kernels::parse_kernel_id(raw.kernel)) {
    c.kernels = {*id};
  } else {
    throw Error(Errc::UsageError, "unknown kernel '" + raw.kernel + "'");
  }
  c.iters = raw.iters;
  c.seed = raw.seed;
  c.threshold = raw.threshold;
  c.out = raw.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Element-level checkpoint criticality for NPB miniatures"};
  app.require_subcommand(1);
  Raw raw;

  auto* analyze = app.add_subcommand("analyze", "classify every checkpoint element; write masks and CSV");
  add_common(analyze, raw);

  auto* viz = app.add_subcommand("viz", "render a criticality map from a stored analysis");
  add_common(viz, raw);
  cli::VizRequest req;
  std::string projection = "slice";
  std::string format = "ascii";
  std::optional<std::size_t> index;
  viz->add_option("--var", req.variable, "checkpoint variable")->required();
  viz->add_option("--projection", projection, "slice or strip")
      ->check(CLI::IsMember({"slice", "strip"}))
      ->capture_default_str();
  viz->add_option("--axis", req.slice_axis, "slice axis (0..2)")->capture_default_str();
  viz->add_option("--index", index, "single slice index (default: every slice)");
  viz->add_option("--m", req.fourth_index, "fourth index of a 4D variable")->capture_default_str();
  viz->add_option("--format", format, "ascii, pgm or csv")
      ->check(CLI::IsMember({"ascii", "pgm", "csv"}))
      ->capture_default_str();
  viz->add_option("--width", req.strip_width, "strip width")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "checkpoint, fail, restart, verify; print storage savings");
  add_common(bench, raw);
  cli::BenchOptions bopt;
  std::string fill = "poison";
  bench->add_option("--interval", bopt.interval, "iterations between checkpoints")->capture_default_str();
  bench->add_option("--versions", bopt.versions, "bundles kept")->capture_default_str();
  bench->add_option("--fill", fill, "uncritical fill on restart")
      ->check(CLI::IsMember({"zero", "keep", "poison"}))
      ->capture_default_str();
  bench->add_option("--fail-at", bopt.fail_at, "iteration at which the run dies (default: half way)");
  bench->add_flag("--fork-kill", bopt.fork_kill, "run in a child process and SIGKILL it");

  auto* reconcile = app.add_subcommand("reconcile", "cross-check the analysis against both oracles");
  add_common(reconcile, raw);
  cli::ReconcileOptions ropt;
  reconcile->add_option("--samples", ropt.samples, "perturbation samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cli::kExitUsage;
  }

  try {
    if (*analyze) return cli::cmd_analyze(common(raw, true), std::cout);
    if (*viz) {
      cli::VizOptions v{common(raw, false), req};
      v.request.kernel = v.common.kernels.front();
      v.request.projection = projection == "strip" ? cli::Projection::FlatStrip : cli::Projection::SliceStack;
      v.request.slice_index = index;
      static const std::map<std::string, cli::ImageFormat> formats{
          {"ascii", cli::ImageFormat::Ascii}, {"pgm", cli::ImageFormat::Pgm}, {"csv", cli::ImageFormat::Csv}};
      v.request.format = formats.at(format);
      return cli::cmd_viz(v, std::cout);
    }
    if (*bench) {
      bopt.common = common(raw, true);
      bopt.fill = *cli::parse_fill(fill);
      return cli::cmd_bench(bopt, std::cout);
    }
    ropt.common = common(raw, true);
    return cli::cmd_reconcile(ropt, std::cout);
  } catch (const Error& e) {
    std::cerr << "scrutinize: " << e.what() << "\n";
    return e.code() == Errc::UsageError || e.code() == Errc::IterationRange ? cli::kExitUsage : cli::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "scrutinize: " << e.what() << "\n";
    return cli::kExitFailure;
  }
}
