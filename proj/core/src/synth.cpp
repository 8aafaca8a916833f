// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "sheetscan/error.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan {

void SynthConfig::validate() const {
  const std::array<double, 8> probs{artifacts.embedded_block,     artifacts.internal_blank_row,
                                    artifacts.internal_blank_col, artifacts.adjacent_tables_gap1,
                                    artifacts.title_row,          artifacts.side_note,
                                    missing_value_prob,           bordered_prob};
  for (const double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("synth: probability outside [0,1]");
  }
  if (sheet_count < 1) throw ValidationError("synth: sheet_count must be positive");
  if (max_rows < 4 || max_cols < 3) throw ValidationError("synth: sheet bound below 4x3");
  if (tables_min < 1 || tables_max < tables_min) {
    throw ValidationError("synth: tables_per_sheet range is empty");
  }
  if (static_cast<std::size_t>(max_rows) * static_cast<std::size_t>(max_cols) > kDefaultMaxCells) {
    throw ValidationError("synth: sheet bound exceeds the cell limit");
  }
}

nlohmann::json artifacts_to_json(const ArtifactProbabilities& a) {
  return {{"embedded_block", a.embedded_block},
          {"internal_blank_row", a.internal_blank_row},
          {"internal_blank_col", a.internal_blank_col},
          {"adjacent_tables_gap1", a.adjacent_tables_gap1},
          {"title_row", a.title_row},
          {"side_note", a.side_note}};
}

void artifacts_from_json(const nlohmann::json& j, ArtifactProbabilities& a) {
  if (!j.is_object()) throw SchemaError("/artifacts: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw SchemaError("/artifacts/" + key + ": expected a number");
    const double p = value.get<double>();
    if (key == "embedded_block") a.embedded_block = p;
    else if (key == "internal_blank_row") a.internal_blank_row = p;
    else if (key == "internal_blank_col") a.internal_blank_col = p;
    else if (key == "adjacent_tables_gap1") a.adjacent_tables_gap1 = p;
    else if (key == "title_row") a.title_row = p;
    else if (key == "side_note") a.side_note = p;
    else throw SchemaError("/artifacts/" + key + ": unknown artifact");
  }
}

namespace {

constexpr std::array<const char*, 8> kFillPalette{"FFF2CC", "DDEBF7", "E2EFDA", "FCE4D6",
                                                  "D9D9D9", "BDD7EE", "C6E0B4", "F8CBAD"};
constexpr std::array<const char*, 4> kFontPalette{"000000", "1F4E78", "C00000", "375623"};

constexpr std::array<const char*, 24> kHeaderWords{
    "Region", "Product", "Q1",     "Q2",     "Q3",       "Q4",    "Total",   "Year",
    "Sales",  "Units",   "Price",  "Cost",   "Margin",   "Name",  "Category", "Date",
    "Count",  "Share",   "Growth", "Budget", "Actual",   "Delta", "Owner",   "Status"};
constexpr std::array<const char*, 20> kLabelWords{
    "North",  "South", "East",    "West",   "Alpha",  "Beta",   "Gamma", "Delta",   "Retail", "Online",
    "Direct", "Other", "Hardware", "Software", "Services", "Admin", "Legal", "Support", "Travel", "Misc"};
constexpr std::array<const char*, 10> kNoteWords{
    "Note: figures in USD", "Source: internal", "* preliminary", "Updated monthly", "see appendix",
    "excl. tax",            "draft",            "n/a = not reported", "rev. 2", "confidential"};
constexpr std::array<const char*, 6> kBlockWords{"Subtotal", "Group A", "Group B",
                                                 "Carried forward", "Adjustments", "Memo"};

enum class ColumnKind { integer, decimal, percent, date, currency, time, text };

struct TableStyle {
  bool bordered = false;
  bool header_bold = true;
  std::optional<std::string> header_fill;
  std::optional<std::string> header_font;
  bool row_labels = true;
  bool banded = false;
  std::optional<std::string> band_fill;
  bool total_row = false;
  std::vector<ColumnKind> kinds;
};

struct TablePlan {
  BBox box;
  TableStyle style;
  int blank_row = 0;  // 0 = none
  int blank_col = 0;
  int block_row = 0;  // first of two embedded rows
  bool block_gap = false;
  int title_gap = -1;  // -1 = no title
  bool title_merged = false;
  int note_gap = -1;   // right-hand side note
  int note_rows = 0;
  int note_cols = 0;
  int foot_gap = -1;   // footnote below
  bool attached = false;

  BBox footprint() const {
    BBox f = box;
    if (title_gap >= 0) f.row_top -= title_gap + 1;
    if (note_gap >= 0) f.col_right += note_gap + note_cols;
    if (foot_gap >= 0) f.row_bottom += foot_gap + 1;
    return f;
  }
};

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[static_cast<std::size_t>(rng.uniform_int(0, N - 1))];
}

std::string format_number(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string with_thousands(long v) {
  std::string digits = std::to_string(v);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[static_cast<std::size_t>(i)]);
  }
  return out;
}

void value_for(ColumnKind kind, Rng& rng, Cell& cell) {
  switch (kind) {
    case ColumnKind::integer:
      cell.value = std::to_string(rng.uniform_int(0, 9999));
      if (rng.bernoulli(0.5)) cell.data_format = "0";
      break;
    case ColumnKind::decimal:
      cell.value = format_number("%.2f", rng.uniform(0.0, 999.0));
      cell.data_format = "0.00";
      break;
    case ColumnKind::percent:
      cell.value = format_number("%.1f%%", rng.uniform(0.0, 100.0));
      cell.data_format = "0.0%";
      break;
    case ColumnKind::date: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "20%02d-%02d-%02d", static_cast<int>(rng.uniform_int(10, 24)),
                    static_cast<int>(rng.uniform_int(1, 12)),
                    static_cast<int>(rng.uniform_int(1, 28)));
      cell.value = buf;
      cell.data_format = "yyyy-mm-dd";
      break;
    }
    case ColumnKind::currency:
      cell.value = with_thousands(rng.uniform_int(100, 2'000'000));
      cell.data_format = "#,##0";
      break;
    case ColumnKind::time: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(rng.uniform_int(0, 23)),
                    static_cast<int>(rng.uniform_int(0, 59)));
      cell.value = buf;
      cell.data_format = "hh:mm";
      break;
    }
    case ColumnKind::text:
      cell.value = pick(rng, kLabelWords);
      break;
  }
}

bool numeric_kind(ColumnKind k) {
  return k == ColumnKind::integer || k == ColumnKind::decimal || k == ColumnKind::currency;
}

TableStyle draw_style(Rng& rng, const SynthConfig& cfg, int n_cols) {
  TableStyle s;
  s.bordered = rng.bernoulli(cfg.bordered_prob);
  s.header_bold = rng.bernoulli(0.8);
  if (rng.bernoulli(0.5)) s.header_fill = pick(rng, kFillPalette);
  if (rng.bernoulli(0.25)) s.header_font = pick(rng, kFontPalette);
  s.row_labels = rng.bernoulli(0.75);
  s.banded = rng.bernoulli(0.2);
  if (s.banded) s.band_fill = pick(rng, kFillPalette);
  constexpr std::array<ColumnKind, 7> kinds{ColumnKind::integer, ColumnKind::decimal,
                                            ColumnKind::percent, ColumnKind::date,
                                            ColumnKind::currency, ColumnKind::time,
                                            ColumnKind::text};
  for (int c = 0; c < n_cols; ++c) {
    if (c == 0 && s.row_labels) {
      s.kinds.push_back(ColumnKind::text);
    } else {
      // Numbers dominate real tables.
      const double u = rng.uniform();
      s.kinds.push_back(u < 0.55 ? kinds[static_cast<std::size_t>(rng.uniform_int(0, 2))]
                                 : kinds[static_cast<std::size_t>(rng.uniform_int(0, 6))]);
    }
  }
  return s;
}

class Canvas {
 public:
  Canvas(int rows, int cols) : rows_(rows), cols_(cols), used_(static_cast<std::size_t>(rows * cols), 0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool inside(const BBox& b) const {
    return b.col_left >= 1 && b.row_top >= 1 && b.col_right <= cols_ && b.row_bottom <= rows_;
  }

  /// True when `b` grown by `margin` on every side touches nothing reserved.
  bool free(const BBox& b, int margin) const {
    for (int r = std::max(1, b.row_top - margin); r <= std::min(rows_, b.row_bottom + margin); ++r) {
      for (int c = std::max(1, b.col_left - margin); c <= std::min(cols_, b.col_right + margin); ++c) {
        if (used_[index(r, c)]) return false;
      }
    }
    return true;
  }

  void reserve(const BBox& b) {
    for (int r = b.row_top; r <= b.row_bottom; ++r) {
      for (int c = b.col_left; c <= b.col_right; ++c) used_[index(r, c)] = 1;
    }
  }

  void release(const BBox& b) {
    for (int r = b.row_top; r <= b.row_bottom; ++r) {
      for (int c = b.col_left; c <= b.col_right; ++c) used_[index(r, c)] = 0;
    }
  }

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>((r - 1) * cols_ + (c - 1)); }
  int rows_;
  int cols_;
  std::vector<std::uint8_t> used_;
};

void plan_artifacts(Rng& rng, const ArtifactProbabilities& p, TablePlan& t) {
  const BBox& b = t.box;
  const int rows = b.height();
  const int cols = b.width();
  if (rows >= 6 && rng.bernoulli(p.internal_blank_row)) {
    t.blank_row = static_cast<int>(rng.uniform_int(b.row_top + 2, b.row_bottom - 2));
  }
  if (cols >= 4 && rng.bernoulli(p.internal_blank_col)) {
    t.blank_col = static_cast<int>(rng.uniform_int(b.col_left + 1, b.col_right - 1));
  }
  if (rows >= 7 && cols >= 3 && rng.bernoulli(p.embedded_block)) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int r0 = static_cast<int>(rng.uniform_int(b.row_top + 2, b.row_bottom - 2));
      const bool gap = rng.bernoulli(0.5) && r0 - 1 > b.row_top + 1;
      const int lo = gap ? r0 - 1 : r0;
      if (t.blank_row == 0 || t.blank_row < lo - 1 || t.blank_row > r0 + 2) {
        t.block_row = r0;
        t.block_gap = gap;
        break;
      }
    }
  }
  if (rng.bernoulli(p.title_row)) {
    t.title_gap = static_cast<int>(rng.uniform_int(0, 1));
    t.title_merged = rng.bernoulli(0.5);
  }
  if (rng.bernoulli(p.side_note)) {
    if (rng.bernoulli(0.5)) {
      t.note_gap = static_cast<int>(rng.uniform_int(0, 1));
      t.note_cols = static_cast<int>(rng.uniform_int(1, 3));
      t.note_rows = static_cast<int>(rng.uniform_int(1, std::min(3, rows)));
    } else {
      t.foot_gap = static_cast<int>(rng.uniform_int(0, 1));
    }
  }
}

void put(Sheet::CellMap& cells, int row, int col, Cell cell) { cells[CellRef{row, col}] = std::move(cell); }

void render_table(Rng& rng, const SynthConfig& cfg, const TablePlan& t, Sheet::CellMap& cells) {
  const BBox& b = t.box;
  const TableStyle& s = t.style;
  const bool total_row = s.total_row && b.height() >= 5 && t.blank_row != b.row_bottom - 1;

  for (int r = b.row_top; r <= b.row_bottom; ++r) {
    const bool header = r == b.row_top;
    const bool last = r == b.row_bottom;
    const bool in_block = t.block_row != 0 && (r == t.block_row || r == t.block_row + 1);
    const bool block_gap_row = t.block_row != 0 && t.block_gap && r == t.block_row - 1;
    const int block_cols = (b.width() + 1) / 2;
    for (int c = b.col_left; c <= b.col_right; ++c) {
      const int k = c - b.col_left;
      Cell cell;
      if (s.bordered) {
        cell.format.border_left = cell.format.border_top = true;
        cell.format.border_right = cell.format.border_bottom = true;
      }
      const bool blank = r == t.blank_row || c == t.blank_col || block_gap_row;
      if (header) {
        if (c != t.blank_col) {
          cell.value = pick(rng, kHeaderWords);
        }
        cell.format.bold = s.header_bold;
        cell.format.fill_color = s.header_fill;
        cell.format.font_color = s.header_font;
      } else if (in_block) {
        if (!blank && k < block_cols) {
          cell.value = k == 0 ? pick(rng, kBlockWords) : std::to_string(rng.uniform_int(1, 999));
        }
        cell.format.bold = true;
        cell.format.fill_color = "D9D9D9";
      } else if (blank) {
        // Spacing rows/columns keep their formatting but hold no value.
      } else if (last && total_row) {
        if (k == 0) {
          cell.value = "Total";
          cell.format.bold = true;
        } else if (numeric_kind(s.kinds[static_cast<std::size_t>(k)])) {
          const std::string col = column_letters(c);
          cell.formula = "=SUM(" + col + std::to_string(b.row_top + 1) + ":" + col +
                         std::to_string(b.row_bottom - 1) + ")";
          value_for(s.kinds[static_cast<std::size_t>(k)], rng, cell);
        }
      } else {
        const bool anchor_col = k == 0;
        if (anchor_col || !rng.bernoulli(cfg.missing_value_prob)) {
          value_for(s.kinds[static_cast<std::size_t>(k)], rng, cell);
        }
        if (s.banded && (r - b.row_top) % 2 == 0) cell.format.fill_color = s.band_fill;
      }
      if (!cell.is_blank() || !cell.format.is_default() || cell.data_format) {
        put(cells, r, c, std::move(cell));
      }
    }
  }

  if (t.title_gap >= 0) {
    const int row = b.row_top - t.title_gap - 1;
    Cell title;
    title.value = std::string("Table: ") + pick(rng, kHeaderWords) + " by " + pick(rng, kHeaderWords);
    title.format.bold = true;
    if (t.title_merged && b.width() > 1) {
      title.format.merged_h = true;
      for (int c = b.col_left + 1; c <= b.col_right; ++c) {
        Cell covered;
        covered.format.merged_h = true;
        put(cells, row, c, std::move(covered));
      }
    }
    put(cells, row, b.col_left, std::move(title));
  }
  if (t.note_gap >= 0) {
    const int c0 = b.col_right + t.note_gap + 1;
    for (int r = b.row_top; r < b.row_top + t.note_rows; ++r) {
      for (int c = c0; c < c0 + t.note_cols; ++c) {
        if (c > c0 && rng.bernoulli(0.3)) continue;
        Cell note;
        note.value = pick(rng, kNoteWords);
        put(cells, r, c, std::move(note));
      }
    }
  }
  if (t.foot_gap >= 0) {
    Cell foot;
    foot.value = pick(rng, kNoteWords);
    put(cells, b.row_bottom + t.foot_gap + 1, b.col_left, std::move(foot));
  }
}

struct Layout {
  std::vector<TablePlan> tables;
  int canvas_rows = 0;
  int canvas_cols = 0;
};

std::optional<Layout> try_layout(Rng& rng, const SynthConfig& cfg) {
  Layout layout;
  const int n_tables = static_cast<int>(rng.uniform_int(cfg.tables_min, cfg.tables_max));
  const int min_rows = std::min(cfg.max_rows, std::max(12, 8 * n_tables));
  const int min_cols = std::min(cfg.max_cols, std::max(8, 5 * n_tables));
  layout.canvas_rows = static_cast<int>(rng.uniform_int(min_rows, cfg.max_rows));
  layout.canvas_cols = static_cast<int>(rng.uniform_int(min_cols, cfg.max_cols));
  Canvas canvas(layout.canvas_rows, layout.canvas_cols);

  const int max_h = std::max(3, std::min(18, layout.canvas_rows - 1));
  const int max_w = std::max(2, std::min(10, layout.canvas_cols - 1));

  for (int i = 0; i < n_tables; ++i) {
    bool placed = false;
    // Pack next to the previous table with exactly one blank row or column.
    const bool attach = i > 0 && rng.bernoulli(cfg.artifacts.adjacent_tables_gap1);
    if (attach) {
      TablePlan& prev = layout.tables.back();
      const bool below = rng.bernoulli(0.5);
      for (int attempt = 0; attempt < 2 && !placed; ++attempt) {
        const bool go_below = attempt == 0 ? below : !below;
        TablePlan t;
        if (go_below) {
          const int h = static_cast<int>(rng.uniform_int(3, std::max(3, std::min(max_h, prev.box.height() + 3))));
          t.box = BBox{prev.box.col_left, prev.box.row_bottom + 2, prev.box.col_right,
                       prev.box.row_bottom + 1 + h};
        } else {
          const int w = static_cast<int>(rng.uniform_int(2, std::max(2, std::min(max_w, prev.box.width() + 2))));
          t.box = BBox{prev.box.col_right + 2, prev.box.row_top, prev.box.col_right + 1 + w,
                       prev.box.row_bottom};
        }
        t.style = draw_style(rng, cfg, t.box.width());
        // Sibling tables share their look.
        t.style.bordered = prev.style.bordered;
        t.style.header_bold = prev.style.header_bold;
        t.style.header_fill = prev.style.header_fill;
        t.style.total_row = rng.bernoulli(0.3);
        t.attached = true;
        ArtifactProbabilities p = cfg.artifacts;
        p.title_row = 0.0;  // the gap row/column must stay blank
        plan_artifacts(rng, p, t);
        if (go_below) {
          t.foot_gap = -1;
        } else {
          t.title_gap = -1;
        }
        TablePlan prev_trimmed = prev;
        if (go_below) {
          prev_trimmed.foot_gap = -1;
        } else {
          prev_trimmed.note_gap = -1;
        }
        canvas.release(prev.footprint());
        const BBox fp = t.footprint();
        const bool ok = canvas.inside(fp) && canvas.free(fp, 2) &&
                        !intersects(fp, prev_trimmed.footprint()) &&
                        canvas.free(prev_trimmed.footprint(), 0);
        if (ok) {
          prev = prev_trimmed;
          canvas.reserve(prev.footprint());
          canvas.reserve(fp);
          layout.tables.push_back(std::move(t));
          placed = true;
        } else {
          canvas.reserve(prev.footprint());
        }
      }
      if (!placed) return std::nullopt;
    }
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      TablePlan t;
      const int h = static_cast<int>(rng.uniform_int(3, max_h));
      const int w = static_cast<int>(rng.uniform_int(2, max_w));
      const int top = static_cast<int>(rng.uniform_int(1, std::max(1, layout.canvas_rows - h + 1)));
      const int left = static_cast<int>(rng.uniform_int(1, std::max(1, layout.canvas_cols - w + 1)));
      t.box = BBox{left, top, left + w - 1, top + h - 1};
      t.style = draw_style(rng, cfg, w);
      t.style.total_row = rng.bernoulli(0.3);
      plan_artifacts(rng, cfg.artifacts, t);
      const BBox fp = t.footprint();
      if (!canvas.inside(fp) || !canvas.free(fp, 2)) continue;
      canvas.reserve(fp);
      layout.tables.push_back(std::move(t));
      placed = true;
    }
    if (!placed) return std::nullopt;
  }
  return layout;
}

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus corpus;
  for (int index = 0; index < cfg.sheet_count; ++index) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
    std::optional<Layout> layout;
    for (int attempt = 0; attempt < 50 && !layout; ++attempt) layout = try_layout(rng, cfg);
    if (!layout) {
      ++corpus.skipped;
      continue;
    }

    Sheet::CellMap cells;
    SheetAnnotation ann;
    std::set<std::string> artifacts;
    int used_rows = 1;
    int used_cols = 1;
    for (const TablePlan& t : layout->tables) {
      render_table(rng, cfg, t, cells);
      ann.tables.push_back(t.box);
      const BBox fp = t.footprint();
      used_rows = std::max(used_rows, fp.row_bottom);
      used_cols = std::max(used_cols, fp.col_right);
      if (t.blank_row) artifacts.insert("internal_blank_row");
      if (t.blank_col) artifacts.insert("internal_blank_col");
      if (t.block_row) artifacts.insert("embedded_block");
      if (t.title_gap >= 0) artifacts.insert("title_row");
      if (t.note_gap >= 0 || t.foot_gap >= 0) artifacts.insert("side_note");
      if (t.attached) artifacts.insert("adjacent_tables_gap1");
    }
    const int n_rows = std::min(layout->canvas_rows, used_rows + static_cast<int>(rng.uniform_int(0, 3)));
    const int n_cols = std::min(layout->canvas_cols, used_cols + static_cast<int>(rng.uniform_int(0, 3)));

    char id[64];
    std::snprintf(id, sizeof id, "%s-%05d", cfg.id_prefix.c_str(), index);
    ann.sheet_id = id;
    std::sort(ann.tables.begin(), ann.tables.end(), [](const BBox& a, const BBox& b) {
      return std::tie(a.row_top, a.col_left) < std::tie(b.row_top, b.col_left);
    });
    validate_annotation(ann, BBox{1, 1, n_cols, n_rows});
    corpus.sheets.emplace_back(id, n_rows, n_cols, std::move(cells));
    corpus.labels.push_back(std::move(ann));
    corpus.artifacts.emplace_back(artifacts.begin(), artifacts.end());
  }
  return corpus;
}

}  // namespace sheetscan
