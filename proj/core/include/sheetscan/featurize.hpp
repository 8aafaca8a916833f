// SPDX-License-Identifier: Apache-2.0
//
// Per-cell featurization into 20 channels:
//   0 non-empty value        1 value length (min(n,64)/64)   2 digit proportion
//   3 letter proportion      4 contains '%'                  5 contains '.'
//   6 numeric data format    7 date data format              8 time data format
//   9 matched format length (min(n,32)/32)
//  10 fill color            11 font color  (per-sheet palette index, 0 = none)
//  12 bold  13-16 borders left/top/right/bottom  17 merged_h  18 merged_v
//  19 has formula
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sheetscan/grid.hpp"

namespace sheetscan {

inline constexpr int kFeatureChannels = 20;

namespace channel {
inline constexpr int non_empty = 0;
inline constexpr int length = 1;
inline constexpr int digit_prop = 2;
inline constexpr int letter_prop = 3;
inline constexpr int percent = 4;
inline constexpr int decimal = 5;
inline constexpr int fmt_numeric = 6;
inline constexpr int fmt_date = 7;
inline constexpr int fmt_time = 8;
inline constexpr int fmt_length = 9;
inline constexpr int fill_color = 10;
inline constexpr int font_color = 11;
inline constexpr int bold = 12;
inline constexpr int border_left = 13;
inline constexpr int border_top = 14;
inline constexpr int border_right = 15;
inline constexpr int border_bottom = 16;
inline constexpr int merged_h = 17;
inline constexpr int merged_v = 18;
inline constexpr int formula = 19;
}  // namespace channel

using CellFeatures = std::array<float, kFeatureChannels>;

/// Feature ablations. Disabled channels are zeroed; the shape never changes.
enum class FeatureSubset { full, binary_only, value_string_only };

std::string_view to_string(FeatureSubset s);
/// Throws ParseError for unknown names.
FeatureSubset feature_subset_from_string(std::string_view s);

/// Sorted color vocabulary of one sheet. Index 0 is reserved for "no color".
class ColorPalette {
 public:
  ColorPalette() = default;
  explicit ColorPalette(std::vector<std::string> colors);

  /// Scaled index in [0,1]; 0 for absent or unknown colors.
  float encode(const std::optional<std::string>& color) const;
  std::size_t size() const noexcept { return colors_.size() + 1; }

 private:
  std::vector<std::string> colors_;
};

struct PaletteRegistry {
  ColorPalette fill;
  ColorPalette font;

  static PaletteRegistry from_sheet(const Sheet& sheet);
};

struct DataFormatMatch {
  bool numeric = false;
  bool date = false;
  bool time = false;
  bool any() const noexcept { return numeric || date || time; }
};
DataFormatMatch match_data_format(std::string_view fmt);

CellFeatures featurize_cell(const Cell& cell, const PaletteRegistry& palettes);

/// Dense h x w x 20 tensor, row-major over (row, col, channel).
struct FeatureTensor {
  int h = 0;
  int w = 0;
  std::vector<float> data;

  float at(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * w + c) * kFeatureChannels + ch];
  }
  bool operator==(const FeatureTensor&) const = default;
};

FeatureTensor featurize_sheet(const Sheet& sheet, FeatureSubset subset = FeatureSubset::full);

/// FTNS dump: "FTNS", u32 LE h, w, channels, then float32 LE data.
std::string write_ftns(const FeatureTensor& t);
/// Throws SchemaError on a bad magic, channel count or truncated payload.
FeatureTensor read_ftns(std::string_view bytes);

}  // namespace sheetscan
