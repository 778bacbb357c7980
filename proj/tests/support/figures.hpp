#pragma once

// The committed golden artifacts and how to regenerate them in-process.

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "scrutiny/analysis/analysis.hpp"
#include "scrutiny/cli/viz.hpp"

namespace scrutiny::testkit {

struct Figure {
  std::string file;  // under tests/golden, same name `scrutinize viz` writes
  cli::VizRequest request;
};

inline std::vector<Figure> figures() {
  using kernels::KernelId;
  auto slices = [](KernelId id, const char* var, int axis, std::optional<std::size_t> index, std::size_t fourth) {
    cli::VizRequest r;
    r.kernel = id;
    r.variable = var;
    r.slice_axis = axis;
    r.slice_index = index;
    r.fourth_index = fourth;
    return r;
  };
  auto strip = [](KernelId id, const char* var) {
    cli::VizRequest r;
    r.kernel = id;
    r.variable = var;
    r.projection = cli::Projection::FlatStrip;
    return r;
  };
  return {{"bt_u_m0_axis0.txt", slices(KernelId::BT, "u", 0, std::nullopt, 0)},
          {"mg_u_strip.txt", strip(KernelId::MG, "u")},
          {"cg_x_strip.txt", strip(KernelId::CG, "x")},
          {"lu_u_m4_axis0.txt", slices(KernelId::LU, "u", 0, std::nullopt, 4)},
          {"ft_y_axis2_64.txt", slices(KernelId::FT, "y", 2, 64, 0)},
          {"ft_y_axis2_0.txt", slices(KernelId::FT, "y", 2, 0, 0)}};
}

inline std::string render_figure(const Figure& f, const analysis::CriticalityReport& report) {
  return cli::render_ascii(cli::build_maps(kernels::build_kernel(f.request.kernel), report.masks(), f.request));
}

inline std::string summary_csv(const std::vector<analysis::CriticalityReport>& reports) {
  return analysis::report_csv(reports, true);
}

inline std::filesystem::path golden_dir() { return SCRUTINY_GOLDEN_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace scrutiny::testkit
