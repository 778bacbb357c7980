#pragma once

// Criticality maps: 3D/4D variables as a stack of 2D slices, 1D variables as
// a wrapped strip. Critical is '#' / gray 64, uncritical '.' / gray 255.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scrutiny/kernels/kernel.hpp"
#include "scrutiny/mask/mask.hpp"

namespace scrutiny::cli {

enum class Projection { SliceStack, FlatStrip };
enum class ImageFormat { Ascii, Pgm, Csv };

struct VizRequest {
  kernels::KernelId kernel = kernels::KernelId::BT;
  std::string variable;
  Projection projection = Projection::SliceStack;
  int slice_axis = 0;                      // among the first three axes
  std::optional<std::size_t> slice_index;  // all slices when unset
  std::size_t fourth_index = 0;            // which 3D array of a 4D variable
  ImageFormat format = ImageFormat::Ascii;
  std::size_t strip_width = 64;
};

enum class Cell : std::uint8_t { Uncritical, Critical, Pad };

struct SliceMap {
  std::string title;  // e.g. "u m=0 axis0=3"
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Cell> cells;  // row-major
};

/// Throws Errc::UsageError for an unknown variable, a scalar, a bad axis or
/// an out-of-range index.
std::vector<SliceMap> build_maps(const kernels::KernelSpec& spec, const mask::MaskSet& masks, const VizRequest& req);

/// Title line, then one text row per map row; maps separated by a blank line.
std::string render_ascii(const std::vector<SliceMap>& maps);
/// Plain (P2) graymap of one map. Strip padding is black.
std::string render_pgm(const SliceMap& map);
/// index,flag rows over the whole variable (flag 1 = critical).
std::string render_csv(const mask::CriticalityMask& mask);

inline constexpr int kGrayCritical = 64;
inline constexpr int kGrayUncritical = 255;
inline constexpr int kGrayPad = 0;

}  // namespace scrutiny::cli
