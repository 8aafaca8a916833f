// SPDX-License-Identifier: Apache-2.0
//
// Canonical sheet/label/detection serialization and CSV import.
//
// Sheet JSON:
//   {"id", "n_rows", "n_cols", "cells": [{"row", "col", "value"?, "data_format"?,
//    "formula"?, "format"?: {"fill_color", "font_color", "bold", "border_left",
//    "border_top", "border_right", "border_bottom", "merged_h", "merged_v"}}]}
// Absent cells are blank and absent flags are false. Writers emit keys in
// sorted order, cells in row-major order, and only non-default fields, so equal
// sheets always serialize to identical bytes.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/grid.hpp"

namespace sheetscan {

enum class SheetFormat { json, csv };

/// Throws SchemaError (with a JSON path) or ValidationError (out-of-bounds
/// cells). For CSV, `csv_id` becomes the sheet id.
Sheet read_sheet(std::string_view bytes, SheetFormat format, std::string_view csv_id = "sheet");
std::string write_sheet(const Sheet& sheet);

nlohmann::json sheet_to_json(const Sheet& sheet);
Sheet sheet_from_json(const nlohmann::json& j);

/// Label JSON: [{"sheet": id, "tables": [[cl, rt, cr, rb], ...]}, ...], written
/// sorted by sheet id. When `sheet_bounds` is given every referenced sheet must
/// be present in it and every box must fit.
std::vector<SheetAnnotation> read_labels(
    std::string_view bytes, const std::map<std::string, BBox>* sheet_bounds = nullptr);
std::string write_labels(std::vector<SheetAnnotation> labels);

nlohmann::json box_to_json(const BBox& b);
/// `path` is used in error messages.
BBox box_from_json(const nlohmann::json& j, const std::string& path);

/// Detections JSON: {sheet_id: [{"box": [..], "score": s, "mask"?: [runs]}]}.
/// Masks are run-length encoded over the box in row-major order; runs
/// alternate starting with a (possibly empty) run of zeros.
using DetectionMap = std::map<std::string, std::vector<Detection>>;
std::string write_detections(const DetectionMap& detections);
DetectionMap read_detections(std::string_view bytes);

std::vector<int> mask_to_rle(const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> mask_from_rle(const std::vector<int>& runs, std::size_t cells);

// Filesystem helpers. Throw IoError.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Reads a sheet, picking the format from the extension (.csv or JSON).
Sheet read_sheet_file(const std::filesystem::path& path);

/// Loads every sheet in `dir/sheets/` (or `dir/` when there is no such
/// subdirectory), skipping labels.json. Result is sorted by sheet id.
std::vector<Sheet> load_corpus_dir(const std::filesystem::path& dir);
/// Writes `dir/sheets/<id>.json` for each sheet and `dir/labels.json`.
void save_corpus_dir(const std::filesystem::path& dir, const std::vector<Sheet>& sheets,
                     const std::vector<SheetAnnotation>& labels);

/// Looks up the annotation of each sheet. Throws ValidationError naming the
/// first sheet without one.
std::vector<SheetAnnotation> align_labels(const std::vector<Sheet>& sheets,
                                          const std::vector<SheetAnnotation>& labels);

}  // namespace sheetscan
