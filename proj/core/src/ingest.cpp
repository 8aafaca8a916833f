// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "sheetscan/error.hpp"

namespace sheetscan {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "/" + key + ": missing");
  return *it;
}

int positive_int(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100'000'000) {
    throw SchemaError(path + ": expected a positive integer");
  }
  return v.get<int>();
}

std::string string_at(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": expected a string");
  return v.get<std::string>();
}

bool flag_at(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) throw SchemaError(path + "/" + key + ": expected a boolean");
  return it->get<bool>();
}

std::optional<std::string> color_at(const json& obj, const char* key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  try {
    return normalize_color(string_at(*it, path + "/" + key));
  } catch (const SchemaError& e) {
    throw SchemaError(path + "/" + key + ": " + e.what());
  }
}

json format_to_json(const CellFormat& f) {
  json j = json::object();
  if (f.fill_color) j["fill_color"] = *f.fill_color;
  if (f.font_color) j["font_color"] = *f.font_color;
  if (f.bold) j["bold"] = true;
  if (f.border_left) j["border_left"] = true;
  if (f.border_top) j["border_top"] = true;
  if (f.border_right) j["border_right"] = true;
  if (f.border_bottom) j["border_bottom"] = true;
  if (f.merged_h) j["merged_h"] = true;
  if (f.merged_v) j["merged_v"] = true;
  return j;
}

CellFormat format_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  CellFormat f;
  f.fill_color = color_at(j, "fill_color", path);
  f.font_color = color_at(j, "font_color", path);
  f.bold = flag_at(j, "bold", path);
  f.border_left = flag_at(j, "border_left", path);
  f.border_top = flag_at(j, "border_top", path);
  f.border_right = flag_at(j, "border_right", path);
  f.border_bottom = flag_at(j, "border_bottom", path);
  f.merged_h = flag_at(j, "merged_h", path);
  f.merged_v = flag_at(j, "merged_v", path);
  return f;
}

// RFC-4180 subset: quoted fields with doubled quotes, CRLF or LF records.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
      field_started = true;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++i;
    } else if (ch == '\n' || ch == '\r') {
      end_row();
    } else {
      field.push_back(ch);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw SchemaError("csv: unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace

json sheet_to_json(const Sheet& sheet) {
  json cells = json::array();
  for (const auto& [ref, cell] : sheet.cells()) {
    json c = json::object();
    c["row"] = ref.row;
    c["col"] = ref.col;
    if (!cell.value.empty()) c["value"] = cell.value;
    if (cell.data_format) c["data_format"] = *cell.data_format;
    if (cell.formula) c["formula"] = *cell.formula;
    if (!cell.format.is_default()) c["format"] = format_to_json(cell.format);
    cells.push_back(std::move(c));
  }
  json j = json::object();
  j["id"] = sheet.id();
  j["n_rows"] = sheet.n_rows();
  j["n_cols"] = sheet.n_cols();
  j["cells"] = std::move(cells);
  return j;
}

Sheet sheet_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError(": expected a sheet object");
  const std::string id = string_at(require(j, "id", ""), "/id");
  const int n_rows = positive_int(require(j, "n_rows", ""), "/n_rows");
  const int n_cols = positive_int(require(j, "n_cols", ""), "/n_cols");
  Sheet::CellMap cells;
  {
    const json* it = &require(j, "cells", "");
    if (!it->is_array()) throw SchemaError("/cells: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& c = (*it)[i];
      const std::string path = "/cells/" + std::to_string(i);
      if (!c.is_object()) throw SchemaError(path + ": expected an object");
      const int row = positive_int(require(c, "row", path), path + "/row");
      const int col = positive_int(require(c, "col", path), path + "/col");
      if (row > n_rows || col > n_cols) {
        throw ValidationError(path + ": cell (" + std::to_string(row) + "," +
                              std::to_string(col) + ") lies outside the " +
                              std::to_string(n_rows) + "x" + std::to_string(n_cols) + " sheet");
      }
      Cell cell;
      if (const auto v = c.find("value"); v != c.end()) {
        cell.value = string_at(*v, path + "/value");
      }
      if (const auto v = c.find("data_format"); v != c.end() && !v->is_null()) {
        cell.data_format = string_at(*v, path + "/data_format");
      }
      if (const auto v = c.find("formula"); v != c.end() && !v->is_null()) {
        cell.formula = string_at(*v, path + "/formula");
      }
      if (const auto v = c.find("format"); v != c.end() && !v->is_null()) {
        cell.format = format_from_json(*v, path + "/format");
      }
      if (!cells.emplace(CellRef{row, col}, std::move(cell)).second) {
        throw SchemaError(path + ": duplicate cell (" + std::to_string(row) + "," +
                          std::to_string(col) + ")");
      }
    }
  }
  return Sheet(id, n_rows, n_cols, std::move(cells));
}

Sheet read_sheet(std::string_view bytes, SheetFormat format, std::string_view csv_id) {
  if (format == SheetFormat::json) {
    json j;
    try {
      j = json::parse(bytes);
    } catch (const json::parse_error& e) {
      throw SchemaError(std::string(": invalid JSON: ") + e.what());
    }
    return sheet_from_json(j);
  }
  const auto rows = parse_csv(bytes);
  if (rows.empty()) throw SchemaError("csv: no rows");
  Sheet::CellMap cells;
  int n_cols = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    n_cols = std::max(n_cols, static_cast<int>(rows[r].size()));
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (rows[r][c].empty()) continue;
      Cell cell;
      cell.value = rows[r][c];
      cells.emplace(CellRef{static_cast<int>(r) + 1, static_cast<int>(c) + 1}, std::move(cell));
    }
  }
  return Sheet(std::string(csv_id), static_cast<int>(rows.size()), std::max(n_cols, 1),
               std::move(cells));
}

std::string write_sheet(const Sheet& sheet) { return sheet_to_json(sheet).dump() + "\n"; }

json box_to_json(const BBox& b) {
  return json::array({b.col_left, b.row_top, b.col_right, b.row_bottom});
}

BBox box_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw SchemaError(path + ": expected [cl, rt, cr, rb]");
  BBox b{positive_int(j[0], path + "/0"), positive_int(j[1], path + "/1"),
         positive_int(j[2], path + "/2"), positive_int(j[3], path + "/3")};
  if (!b.valid()) throw ValidationError(path + ": box corners are reversed");
  return b;
}

std::vector<SheetAnnotation> read_labels(std::string_view bytes,
                                         const std::map<std::string, BBox>* sheet_bounds) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(": invalid JSON: ") + e.what());
  }
  if (!j.is_array()) throw SchemaError(": expected an array of sheet labels");
  std::vector<SheetAnnotation> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    const json& e = j[i];
    if (!e.is_object()) throw SchemaError(path + ": expected an object");
    SheetAnnotation ann;
    ann.sheet_id = string_at(require(e, "sheet", path), path + "/sheet");
    const json& tables = require(e, "tables", path);
    if (!tables.is_array()) throw SchemaError(path + "/tables: expected an array");
    for (std::size_t t = 0; t < tables.size(); ++t) {
      ann.tables.push_back(box_from_json(tables[t], path + "/tables/" + std::to_string(t)));
    }
    if (!seen.insert(ann.sheet_id).second) {
      throw ValidationError(path + ": duplicate labels for sheet '" + ann.sheet_id + "'");
    }
    std::optional<BBox> bounds;
    if (sheet_bounds) {
      const auto it = sheet_bounds->find(ann.sheet_id);
      if (it == sheet_bounds->end()) {
        throw ValidationError(path + ": unknown sheet '" + ann.sheet_id + "'");
      }
      bounds = it->second;
    }
    validate_annotation(ann, bounds);
    out.push_back(std::move(ann));
  }
  return out;
}

std::string write_labels(std::vector<SheetAnnotation> labels) {
  std::sort(labels.begin(), labels.end(),
            [](const auto& a, const auto& b) { return a.sheet_id < b.sheet_id; });
  json j = json::array();
  for (const auto& ann : labels) {
    json tables = json::array();
    for (const auto& b : ann.tables) tables.push_back(box_to_json(b));
    j.push_back(json{{"sheet", ann.sheet_id}, {"tables", std::move(tables)}});
  }
  return j.dump() + "\n";
}

std::vector<int> mask_to_rle(const std::vector<std::uint8_t>& mask) {
  std::vector<int> runs;
  std::uint8_t current = 0;
  int run = 0;
  for (const std::uint8_t v : mask) {
    const std::uint8_t bit = v ? 1 : 0;
    if (bit != current) {
      runs.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  runs.push_back(run);
  return runs;
}

std::vector<std::uint8_t> mask_from_rle(const std::vector<int>& runs, std::size_t cells) {
  std::vector<std::uint8_t> mask;
  mask.reserve(cells);
  std::uint8_t bit = 0;
  for (const int run : runs) {
    if (run < 0) throw SchemaError("mask: negative run length");
    mask.insert(mask.end(), static_cast<std::size_t>(run), bit);
    bit ^= 1;
  }
  if (mask.size() != cells) throw SchemaError("mask: run lengths do not cover the box");
  return mask;
}

std::string write_detections(const DetectionMap& detections) {
  json j = json::object();
  for (const auto& [sheet_id, dets] : detections) {
    json list = json::array();
    for (const auto& d : dets) {
      json e{{"box", box_to_json(d.box)}, {"score", d.score}};
      if (d.mask) e["mask"] = mask_to_rle(*d.mask);
      list.push_back(std::move(e));
    }
    j[sheet_id] = std::move(list);
  }
  return j.dump() + "\n";
}

DetectionMap read_detections(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string(": invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(": expected an object keyed by sheet id");
  DetectionMap out;
  for (const auto& [sheet_id, list] : j.items()) {
    const std::string path = "/" + sheet_id;
    if (!list.is_array()) throw SchemaError(path + ": expected an array");
    auto& dets = out[sheet_id];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string dpath = path + "/" + std::to_string(i);
      const json& e = list[i];
      if (!e.is_object()) throw SchemaError(dpath + ": expected an object");
      Detection d;
      d.box = box_from_json(require(e, "box", dpath), dpath + "/box");
      const json& score = require(e, "score", dpath);
      if (!score.is_number()) throw SchemaError(dpath + "/score: expected a number");
      d.score = score.get<double>();
      if (const auto m = e.find("mask"); m != e.end() && !m->is_null()) {
        if (!m->is_array()) throw SchemaError(dpath + "/mask: expected run lengths");
        d.mask = mask_from_rle(m->get<std::vector<int>>(),
                               static_cast<std::size_t>(bbox_area(d.box)));
      }
      validate_detection(d);
      dets.push_back(std::move(d));
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

Sheet read_sheet_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (path.extension() == ".csv") {
    return read_sheet(bytes, SheetFormat::csv, path.stem().string());
  }
  try {
    return read_sheet(bytes, SheetFormat::json);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + e.what());
  }
}

std::vector<Sheet> load_corpus_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  const fs::path sheets_dir = fs::is_directory(dir / "sheets") ? dir / "sheets" : dir;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(sheets_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if ((ext == ".json" || ext == ".csv") && entry.path().filename() != "labels.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Sheet> sheets;
  sheets.reserve(files.size());
  for (const auto& f : files) sheets.push_back(read_sheet_file(f));
  std::sort(sheets.begin(), sheets.end(),
            [](const Sheet& a, const Sheet& b) { return a.id() < b.id(); });
  return sheets;
}

void save_corpus_dir(const std::filesystem::path& dir, const std::vector<Sheet>& sheets,
                     const std::vector<SheetAnnotation>& labels) {
  for (const auto& s : sheets) write_file(dir / "sheets" / (s.id() + ".json"), write_sheet(s));
  write_file(dir / "labels.json", write_labels(labels));
}

std::vector<SheetAnnotation> align_labels(const std::vector<Sheet>& sheets,
                                          const std::vector<SheetAnnotation>& labels) {
  std::map<std::string, const SheetAnnotation*> by_id;
  for (const auto& l : labels) by_id[l.sheet_id] = &l;
  std::vector<SheetAnnotation> out;
  out.reserve(sheets.size());
  for (const auto& s : sheets) {
    const auto it = by_id.find(s.id());
    if (it == by_id.end()) throw ValidationError("missing annotation for sheet '" + s.id() + "'");
    validate_annotation(*it->second, s.bounds());
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace sheetscan
