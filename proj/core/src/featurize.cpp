// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/featurize.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "sheetscan/binary_io.hpp"
#include "sheetscan/error.hpp"

namespace sheetscan {

std::string_view to_string(FeatureSubset s) {
  switch (s) {
    case FeatureSubset::full: return "full";
    case FeatureSubset::binary_only: return "binary-only";
    case FeatureSubset::value_string_only: return "value-string-only";
  }
  return "full";
}

FeatureSubset feature_subset_from_string(std::string_view s) {
  if (s == "full") return FeatureSubset::full;
  if (s == "binary-only") return FeatureSubset::binary_only;
  if (s == "value-string-only") return FeatureSubset::value_string_only;
  throw ParseError("unknown feature subset '" + std::string(s) + "'");
}

ColorPalette::ColorPalette(std::vector<std::string> colors) : colors_(std::move(colors)) {
  std::sort(colors_.begin(), colors_.end());
  colors_.erase(std::unique(colors_.begin(), colors_.end()), colors_.end());
}

float ColorPalette::encode(const std::optional<std::string>& color) const {
  if (!color || colors_.empty()) return 0.0f;
  const auto it = std::lower_bound(colors_.begin(), colors_.end(), *color);
  if (it == colors_.end() || *it != *color) return 0.0f;
  const auto index = static_cast<float>(it - colors_.begin()) + 1.0f;
  return index / static_cast<float>(colors_.size());
}

PaletteRegistry PaletteRegistry::from_sheet(const Sheet& sheet) {
  std::set<std::string> fills;
  std::set<std::string> fonts;
  for (const auto& [ref, cell] : sheet.cells()) {
    if (cell.format.fill_color) fills.insert(*cell.format.fill_color);
    if (cell.format.font_color) fonts.insert(*cell.format.font_color);
  }
  return PaletteRegistry{ColorPalette({fills.begin(), fills.end()}),
                         ColorPalette({fonts.begin(), fonts.end()})};
}

DataFormatMatch match_data_format(std::string_view fmt) {
  std::string lower(fmt);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  const auto has = [&](char ch) { return lower.find(ch) != std::string::npos; };
  DataFormatMatch m;
  m.numeric = has('0') || has('#');
  m.date = has('y') && (has('m') || has('d'));
  m.time = has(':') && (has('h') || has('s'));
  return m;
}

CellFeatures featurize_cell(const Cell& cell, const PaletteRegistry& palettes) {
  CellFeatures f{};
  const std::string& v = cell.value;
  if (!v.empty()) {
    std::size_t chars = 0;
    std::size_t digits = 0;
    std::size_t letters = 0;
    for (const char raw : v) {
      const auto ch = static_cast<unsigned char>(raw);
      if ((ch & 0xC0u) == 0x80u) continue;  // UTF-8 continuation byte
      ++chars;
      if (std::isdigit(ch)) ++digits;
      if (std::isalpha(ch)) ++letters;
    }
    f[channel::non_empty] = 1.0f;
    f[channel::length] = static_cast<float>(std::min<std::size_t>(chars, 64)) / 64.0f;
    f[channel::digit_prop] = static_cast<float>(digits) / static_cast<float>(chars);
    f[channel::letter_prop] = static_cast<float>(letters) / static_cast<float>(chars);
    f[channel::percent] = v.find('%') != std::string::npos ? 1.0f : 0.0f;
    f[channel::decimal] = v.find('.') != std::string::npos ? 1.0f : 0.0f;
  }
  if (cell.data_format) {
    const DataFormatMatch m = match_data_format(*cell.data_format);
    f[channel::fmt_numeric] = m.numeric ? 1.0f : 0.0f;
    f[channel::fmt_date] = m.date ? 1.0f : 0.0f;
    f[channel::fmt_time] = m.time ? 1.0f : 0.0f;
    if (m.any()) {
      f[channel::fmt_length] =
          static_cast<float>(std::min<std::size_t>(cell.data_format->size(), 32)) / 32.0f;
    }
  }
  const CellFormat& fmt = cell.format;
  f[channel::fill_color] = palettes.fill.encode(fmt.fill_color);
  f[channel::font_color] = palettes.font.encode(fmt.font_color);
  f[channel::bold] = fmt.bold ? 1.0f : 0.0f;
  f[channel::border_left] = fmt.border_left ? 1.0f : 0.0f;
  f[channel::border_top] = fmt.border_top ? 1.0f : 0.0f;
  f[channel::border_right] = fmt.border_right ? 1.0f : 0.0f;
  f[channel::border_bottom] = fmt.border_bottom ? 1.0f : 0.0f;
  f[channel::merged_h] = fmt.merged_h ? 1.0f : 0.0f;
  f[channel::merged_v] = fmt.merged_v ? 1.0f : 0.0f;
  f[channel::formula] = cell.formula ? 1.0f : 0.0f;
  return f;
}

FeatureTensor featurize_sheet(const Sheet& sheet, FeatureSubset subset) {
  FeatureTensor t;
  t.h = sheet.n_rows();
  t.w = sheet.n_cols();
  t.data.assign(static_cast<std::size_t>(t.h) * t.w * kFeatureChannels, 0.0f);
  const PaletteRegistry palettes = PaletteRegistry::from_sheet(sheet);
  const int keep = subset == FeatureSubset::full              ? kFeatureChannels
                   : subset == FeatureSubset::value_string_only ? 6
                                                                : 1;
  for (const auto& [ref, cell] : sheet.cells()) {
    const CellFeatures f = featurize_cell(cell, palettes);
    float* dst = t.data.data() +
                 (static_cast<std::size_t>(ref.row - 1) * t.w + (ref.col - 1)) * kFeatureChannels;
    std::copy_n(f.begin(), keep, dst);
  }
  return t;
}

std::string write_ftns(const FeatureTensor& t) {
  std::string out = "FTNS";
  out.reserve(16 + t.data.size() * 4);
  binio::put_u32(out, static_cast<std::uint32_t>(t.h));
  binio::put_u32(out, static_cast<std::uint32_t>(t.w));
  binio::put_u32(out, kFeatureChannels);
  for (const float v : t.data) binio::put_f32(out, v);
  return out;
}

FeatureTensor read_ftns(std::string_view bytes) {
  binio::Reader in(bytes);
  if (in.take(4, "FTNS magic") != "FTNS") throw SchemaError("not an FTNS tensor dump");
  FeatureTensor t;
  t.h = static_cast<int>(in.u32("FTNS header"));
  t.w = static_cast<int>(in.u32("FTNS header"));
  const std::uint32_t ch = in.u32("FTNS header");
  if (ch != kFeatureChannels) throw SchemaError("FTNS: expected 20 channels");
  const std::size_t n = static_cast<std::size_t>(t.h) * t.w * ch;
  if (in.remaining() != n * 4) throw SchemaError("FTNS: payload size mismatch");
  t.data.resize(n);
  for (auto& v : t.data) v = in.f32("FTNS payload");
  return t;
}

}  // namespace sheetscan
