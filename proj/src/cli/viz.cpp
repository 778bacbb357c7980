#include "scrutiny/cli/viz.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "scrutiny/error.hpp"

namespace scrutiny::cli {

namespace {

[[noreturn]] void usage(const std::string& what) { throw Error(Errc::UsageError, what); }

std::vector<SliceMap> strip(const kernels::VariableDesc& d, const mask::CriticalityMask& m, std::size_t width) {
  if (width == 0) usage("strip width must be positive");
  const std::size_t n = m.total();
  SliceMap map;
  map.title = fmt::format("{} strip width={}", d.name, width);
  map.cols = width;
  map.rows = (n + width - 1) / width;
  map.cells.assign(map.rows * map.cols, Cell::Pad);
  const auto flags = m.to_flags();
  for (std::size_t i = 0; i < n; ++i) map.cells[i] = flags[i] ? Cell::Critical : Cell::Uncritical;
  return {map};
}

}  // namespace

std::vector<SliceMap> build_maps(const kernels::KernelSpec& spec, const mask::MaskSet& masks, const VizRequest& req) {
  const auto it = std::find_if(spec.checkpoint_vars.begin(), spec.checkpoint_vars.end(),
                               [&](const kernels::VariableDesc& d) { return d.name == req.variable; });
  if (it == spec.checkpoint_vars.end()) {
    usage(fmt::format("{} has no variable '{}'", kernels::to_string(spec.id), req.variable));
  }
  const kernels::VariableDesc& d = *it;
  if (d.scalar()) usage(d.name + " is a scalar");
  const auto found = masks.find(d.name);
  if (found == masks.end()) throw Error(Errc::MissingAnalysis, "no mask for " + d.name);
  const mask::CriticalityMask& m = found->second;

  if (req.projection == Projection::FlatStrip || d.shape.size() < 3) return strip(d, m, req.strip_width);
  if (d.shape.size() > 4) usage(d.name + " has more than four axes");

  const std::array<std::size_t, 3> ext{d.shape[0], d.shape[1], d.shape[2]};
  const std::size_t fourth = d.shape.size() == 4 ? d.shape[3] : 1;
  if (req.fourth_index >= fourth) usage(fmt::format("fourth index {} outside 0..{}", req.fourth_index, fourth - 1));
  if (req.slice_axis < 0 || req.slice_axis > 2) usage("slice axis must be 0, 1 or 2");
  const auto axis = static_cast<std::size_t>(req.slice_axis);
  if (req.slice_index && *req.slice_index >= ext[axis]) {
    usage(fmt::format("slice index {} outside 0..{}", *req.slice_index, ext[axis] - 1));
  }

  // The two remaining axes, in order, become rows and columns.
  const std::size_t ra = axis == 0 ? 1 : 0;
  const std::size_t ca = axis == 2 ? 1 : 2;
  const auto flags = m.to_flags();
  const std::string prefix = d.shape.size() == 4 ? fmt::format("{} m={}", d.name, req.fourth_index) : d.name;

  std::vector<SliceMap> maps;
  const std::size_t lo = req.slice_index.value_or(0);
  const std::size_t hi = req.slice_index ? lo + 1 : ext[axis];
  for (std::size_t s = lo; s < hi; ++s) {
    SliceMap map;
    map.title = fmt::format("{} axis{}={}", prefix, axis, s);
    map.rows = ext[ra];
    map.cols = ext[ca];
    map.cells.reserve(map.rows * map.cols);
    for (std::size_t r = 0; r < map.rows; ++r) {
      for (std::size_t c = 0; c < map.cols; ++c) {
        std::array<std::size_t, 3> idx{};
        idx[axis] = s;
        idx[ra] = r;
        idx[ca] = c;
        const std::size_t flat = ((idx[0] * ext[1] + idx[1]) * ext[2] + idx[2]) * fourth + req.fourth_index;
        map.cells.push_back(flags[flat] ? Cell::Critical : Cell::Uncritical);
      }
    }
    maps.push_back(std::move(map));
  }
  return maps;
}

std::string render_ascii(const std::vector<SliceMap>& maps) {
  std::string out;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const SliceMap& m = maps[k];
    if (k > 0) out += '\n';
    out += m.title;
    out += '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        const Cell cell = m.cells[r * m.cols + c];
        if (cell == Cell::Pad) break;
        out += cell == Cell::Critical ? '#' : '.';
      }
      out += '\n';
    }
  }
  return out;
}

std::string render_pgm(const SliceMap& map) {
  std::string out = fmt::format("P2\n# {}\n{} {}\n255\n", map.title, map.cols, map.rows);
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      const Cell cell = map.cells[r * map.cols + c];
      const int g = cell == Cell::Critical ? kGrayCritical : cell == Cell::Uncritical ? kGrayUncritical : kGrayPad;
      if (c > 0) out += ' ';
      out += std::to_string(g);
    }
    out += '\n';
  }
  return out;
}

std::string render_csv(const mask::CriticalityMask& mask) {
  std::string out = "index,flag\n";
  const auto flags = mask.to_flags();
  for (std::size_t i = 0; i < flags.size(); ++i) out += fmt::format("{},{}\n", i, flags[i] ? 1 : 0);
  return out;
}

}  // namespace scrutiny::cli
