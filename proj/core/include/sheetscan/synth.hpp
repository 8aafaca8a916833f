// SPDX-License-Identifier: Apache-2.0
//
// Seeded generator of labeled synthetic sheets. Layouts reproduce common
// spreadsheet artifacts: embedded sub-blocks, internal blank rows/columns,
// tables packed one blank row/column apart, titles and side notes.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/grid.hpp"

namespace sheetscan {

struct ArtifactProbabilities {
  double embedded_block = 0.25;
  double internal_blank_row = 0.3;
  double internal_blank_col = 0.2;
  double adjacent_tables_gap1 = 0.3;
  double title_row = 0.4;
  double side_note = 0.3;

  static ArtifactProbabilities none() { return {0, 0, 0, 0, 0, 0}; }
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int sheet_count = 10;
  int max_rows = 64;
  int max_cols = 64;
  int tables_min = 1;
  int tables_max = 4;
  ArtifactProbabilities artifacts;
  /// Chance that a data cell (outside the label column) is left empty.
  double missing_value_prob = 0.05;
  /// Chance that a table draws cell borders on every cell.
  double bordered_prob = 0.6;
  std::string id_prefix = "sheet";

  /// Throws ValidationError for probabilities outside [0,1] or empty ranges.
  void validate() const;
};

struct SynthCorpus {
  std::vector<Sheet> sheets;
  std::vector<SheetAnnotation> labels;
  /// Names of the artifacts injected into each sheet, parallel to `sheets`.
  std::vector<std::vector<std::string>> artifacts;
  /// Sheets dropped because no layout fitted within the retry budget.
  int skipped = 0;
};

SynthCorpus generate_corpus(const SynthConfig& cfg);

nlohmann::json artifacts_to_json(const ArtifactProbabilities& a);
/// Missing keys keep their current value. Throws SchemaError on unknown keys.
void artifacts_from_json(const nlohmann::json& j, ArtifactProbabilities& a);

}  // namespace sheetscan
