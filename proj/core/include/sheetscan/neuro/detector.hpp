// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "sheetscan/grid.hpp"
#include "sheetscan/neuro/model.hpp"

namespace sheetscan::neuro {

/// Full pipeline: features, backbone, proposals, RoI scoring and box
/// regression, boundary refinement (unless config().use_pbr is false),
/// final NMS and per-cell masks. Boxes are clipped to the sheet; results
/// are ordered by descending score. Throws ValidationError when the sheet
/// exceeds config().max_cells.
std::vector<Detection> detect(const Model& model, const Sheet& sheet);

std::map<std::string, std::vector<Detection>> detect_all(const Model& model,
                                                         const std::vector<Sheet>& sheets);

}  // namespace sheetscan::neuro
