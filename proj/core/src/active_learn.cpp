// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/active_learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "sheetscan/error.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan {
namespace {

bool row_blank(const std::vector<std::uint8_t>& occ, int n_cols, int row, int c0, int c1) {
  for (int c = c0; c <= c1; ++c)
    if (occ[static_cast<std::size_t>(row - 1) * n_cols + (c - 1)] != 0) return false;
  return true;
}

bool col_blank(const std::vector<std::uint8_t>& occ, int n_cols, int col, int r0, int r1) {
  for (int r = r0; r <= r1; ++r)
    if (occ[static_cast<std::size_t>(r - 1) * n_cols + (col - 1)] != 0) return false;
  return true;
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

UncertaintyVector UncertaintyVector::from_measures(const std::array<double, 6>& m) {
  UncertaintyVector u{m[0], m[1], m[2], m[3], m[4], m[5], 0.0};
  double sq = 0.0;
  for (double v : m) sq += v * v;
  u.overall = std::sqrt(sq);
  return u;
}

nlohmann::json to_json(const UncertaintyVector& u) {
  return {{"cls_uncertainty", u.cls_uncertainty},
          {"mask_mismatch", u.mask_mismatch},
          {"sparsity", u.sparsity},
          {"overlap_indicator", u.overlap_indicator},
          {"boundary_mismatch", u.boundary_mismatch},
          {"out_of_region", u.out_of_region},
          {"overall", u.overall}};
}

UncertaintyVector uncertainty_from_json(const nlohmann::json& j) {
  UncertaintyVector u;
  try {
    u.cls_uncertainty = j.at("cls_uncertainty").get<double>();
    u.mask_mismatch = j.at("mask_mismatch").get<double>();
    u.sparsity = j.at("sparsity").get<double>();
    u.overlap_indicator = j.at("overlap_indicator").get<double>();
    u.boundary_mismatch = j.at("boundary_mismatch").get<double>();
    u.out_of_region = j.at("out_of_region").get<double>();
    u.overall = j.at("overall").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("uncertainty: ") + e.what());
  }
  return u;
}

UncertaintyVector uncertainty(const Sheet& s, const std::vector<Detection>& dets,
                              SparsityMode mode) {
  for (const auto& d : dets) {
    if (!d.box.valid() || !s.bounds().contains(d.box)) {
      throw ValidationError("detection " + bbox_to_a1(d.box) + " lies outside sheet '" + s.id() + "'");
    }
  }
  std::array<double, 6> m{};
  const auto occ = s.occupancy();
  const int n_cols = s.n_cols();

  if (dets.empty()) {
    m[0] = 1.0;
  } else {
    double score_sum = 0.0;
    for (const auto& d : dets) score_sum += d.score;
    m[0] = std::clamp(1.0 - score_sum / static_cast<double>(dets.size()), 0.0, 1.0);
  }

  double mask_sum = 0.0;
  int with_mask = 0;
  for (const auto& d : dets) {
    if (!d.mask) continue;
    std::size_t on = 0;
    for (auto v : *d.mask) on += v != 0 ? 1 : 0;
    mask_sum += static_cast<double>(on) / static_cast<double>(bbox_area(d.box));
    ++with_mask;
  }
  m[1] = with_mask == 0 ? 0.0 : 1.0 - mask_sum / with_mask;

  if (!dets.empty()) {
    double agg = mode == SparsityMode::max ? 0.0 : 1.0;
    for (const auto& d : dets) {
      std::int64_t filled = 0;
      for (int r = d.box.row_top; r <= d.box.row_bottom; ++r)
        for (int c = d.box.col_left; c <= d.box.col_right; ++c)
          filled += occ[static_cast<std::size_t>(r - 1) * n_cols + (c - 1)];
      const double blank = 1.0 - static_cast<double>(filled) / static_cast<double>(bbox_area(d.box));
      agg = mode == SparsityMode::max ? std::max(agg, blank) : std::min(agg, blank);
    }
    m[2] = agg;
  }

  for (std::size_t i = 0; i < dets.size() && m[3] == 0.0; ++i)
    for (std::size_t j = i + 1; j < dets.size(); ++j)
      if (intersects(dets[i].box, dets[j].box)) {
        m[3] = 1.0;
        break;
      }

  for (const auto& d : dets) {
    const BBox& b = d.box;
    if (row_blank(occ, n_cols, b.row_top, b.col_left, b.col_right) ||
        row_blank(occ, n_cols, b.row_bottom, b.col_left, b.col_right) ||
        col_blank(occ, n_cols, b.col_left, b.row_top, b.row_bottom) ||
        col_blank(occ, n_cols, b.col_right, b.row_top, b.row_bottom)) {
      m[4] = 1.0;
      break;
    }
  }

  std::int64_t total = 0;
  std::int64_t outside = 0;
  for (int r = 1; r <= s.n_rows(); ++r) {
    for (int c = 1; c <= n_cols; ++c) {
      if (occ[static_cast<std::size_t>(r - 1) * n_cols + (c - 1)] == 0) continue;
      ++total;
      const CellRef ref{r, c};
      if (std::none_of(dets.begin(), dets.end(), [&](const Detection& d) { return d.box.contains(ref); }))
        ++outside;
    }
  }
  m[5] = total == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(total);
  return UncertaintyVector::from_measures(m);
}

std::vector<ScoredSheet> score_pool(const neuro::Model& model, const std::vector<Sheet>& sheets,
                                    SparsityMode mode) {
  std::vector<ScoredSheet> out;
  out.reserve(sheets.size());
  for (const auto& s : sheets) out.push_back({s.id(), uncertainty(s, neuro::detect(model, s), mode)});
  return out;
}

std::vector<ScoredSheet> select_sheets(std::vector<ScoredSheet> pool,
                                       std::optional<double> threshold, std::optional<int> top_n) {
  std::sort(pool.begin(), pool.end(), [](const ScoredSheet& a, const ScoredSheet& b) {
    if (a.u.overall != b.u.overall) return a.u.overall > b.u.overall;
    return a.sheet_id < b.sheet_id;
  });
  if (threshold) {
    std::erase_if(pool, [&](const ScoredSheet& s) { return s.u.overall < *threshold; });
  }
  if (top_n && static_cast<int>(pool.size()) > *top_n) pool.resize(static_cast<std::size_t>(std::max(0, *top_n)));
  return pool;
}

double SelectionAccuracy::error_accuracy() const {
  return error_total == 0 ? 1.0 : static_cast<double>(error_selected) / error_total;
}

double SelectionAccuracy::correct_accuracy() const {
  return correct_total == 0 ? 1.0 : static_cast<double>(correct_kept) / correct_total;
}

SelectionAccuracy selection_accuracy(const std::vector<SheetOutcome>& outcomes, double threshold) {
  SelectionAccuracy a;
  for (const auto& o : outcomes) {
    if (o.well_detected) {
      ++a.correct_total;
      if (o.overall < threshold) ++a.correct_kept;
    } else {
      ++a.error_total;
      if (o.overall >= threshold) ++a.error_selected;
    }
  }
  return a;
}

double percent_truncated(int numerator, int denominator) {
  if (denominator <= 0) throw ValidationError("percent_truncated: denominator must be positive");
  const long long permille = 1000LL * numerator / denominator;
  return static_cast<double>(permille) / 10.0;
}

void LoopConfig::validate() const {
  if (batch_size < 1) throw ValidationError("loop: batch_size must be positive");
  if (patience < 1) throw ValidationError("loop: patience must be positive");
  if (max_iterations < 1) throw ValidationError("loop: max_iterations must be positive");
}

nlohmann::json to_json(const LoopConfig& c) {
  return {{"batch_size", c.batch_size},
          {"target_f1", c.target_f1},
          {"patience", c.patience},
          {"max_iterations", c.max_iterations},
          {"warm_start", c.warm_start},
          {"sparsity", c.sparsity == SparsityMode::max ? "max" : "min"}};
}

LoopConfig loop_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("loop config must be a JSON object");
  LoopConfig c;
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "target_f1", c.target_f1);
  read_field(j, "patience", c.patience);
  read_field(j, "max_iterations", c.max_iterations);
  read_field(j, "warm_start", c.warm_start);
  std::string sparsity = "max";
  read_field(j, "sparsity", sparsity);
  if (sparsity != "max" && sparsity != "min") throw SchemaError("loop: sparsity must be 'max' or 'min'");
  c.sparsity = sparsity == "max" ? SparsityMode::max : SparsityMode::min;
  c.validate();
  return c;
}

nlohmann::json to_json(const LoopState& s) {
  nlohmann::json labeled = nlohmann::json::parse(write_labels(s.labeled));
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : s.history) {
    history.push_back({{"iteration", h.iteration},
                       {"selected", h.selected},
                       {"labeled_count", h.labeled_count},
                       {"eval", to_json(h.eval)}});
  }
  return {{"labeled", labeled},     {"unlabeled", s.unlabeled},
          {"iteration", s.iteration}, {"history", history},
          {"best_f1", s.best_f1},   {"stale_iterations", s.stale_iterations},
          {"status", s.status},     {"error", s.error}};
}

LoopState loop_state_from_json(const nlohmann::json& j) {
  LoopState s;
  try {
    s.labeled = read_labels(j.at("labeled").dump());
    s.unlabeled = j.at("unlabeled").get<std::vector<std::string>>();
    s.iteration = j.at("iteration").get<int>();
    for (const auto& h : j.at("history")) {
      s.history.push_back({h.at("iteration").get<int>(), h.at("selected").get<std::vector<std::string>>(),
                           h.at("labeled_count").get<int>(), eval_report_from_json(h.at("eval"))});
    }
    s.best_f1 = j.at("best_f1").get<double>();
    s.stale_iterations = j.at("stale_iterations").get<int>();
    s.status = j.at("status").get<std::string>();
    s.error = j.at("error").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("loop state: ") + e.what());
  }
  std::set<std::string> labeled;
  for (const auto& a : s.labeled) labeled.insert(a.sheet_id);
  for (const auto& id : s.unlabeled) {
    if (labeled.contains(id)) throw ValidationError("loop state: sheet '" + id + "' is both labeled and unlabeled");
  }
  return s;
}

LoopResult run_loop(const std::vector<Sheet>& pool, const Labeler& labeler,
                    const neuro::EvalSet& heldout, const neuro::ModelConfig& mcfg,
                    const neuro::TrainConfig& tcfg, const LoopConfig& lcfg,
                    std::optional<neuro::Model> initial, std::optional<LoopState> resume,
                    const std::function<void(const LoopState&)>& on_iteration) {
  lcfg.validate();
  std::map<std::string, const Sheet*> by_id;
  for (const auto& s : pool) by_id[s.id()] = &s;

  LoopResult result;
  result.model = initial ? std::move(*initial) : neuro::Model(mcfg, derive_seed(tcfg.seed, 0));
  LoopState& st = result.state;
  if (resume) {
    st = std::move(*resume);
    st.status = "running";
    st.error.clear();
  } else {
    for (const auto& s : pool) st.unlabeled.push_back(s.id());
  }
  const GoldMap gold = gold_map(heldout.labels);

  const auto retrain = [&](int iteration) {
    std::vector<Sheet> train_sheets;
    for (const auto& a : st.labeled) {
      const auto it = by_id.find(a.sheet_id);
      if (it == by_id.end()) throw ValidationError("loop: sheet '" + a.sheet_id + "' is not in the pool");
      train_sheets.push_back(*it->second);
    }
    neuro::TrainConfig round = tcfg;
    round.seed = derive_seed(tcfg.seed, static_cast<std::uint64_t>(iteration));
    result.model = lcfg.warm_start
                       ? neuro::train_from(std::move(result.model), train_sheets, st.labeled, round).model
                       : neuro::train(train_sheets, st.labeled, mcfg, round).model;
  };
  // Cold-start rounds are a pure function of the labeled set, so a resumed
  // loop rebuilds the last detector instead of selecting with an untrained one.
  if (resume && !initial && !lcfg.warm_start && st.iteration > 0 && !st.labeled.empty()) {
    retrain(st.iteration);
  }

  while (true) {
    if (st.unlabeled.empty()) {
      st.status = "pool_exhausted";
      break;
    }
    if (st.iteration >= lcfg.max_iterations) {
      st.status = "max_iterations";
      break;
    }
    std::vector<Sheet> remaining;
    for (const auto& id : st.unlabeled) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("loop: sheet '" + id + "' is not in the pool");
      remaining.push_back(*it->second);
    }
    const auto ranked =
        select_sheets(score_pool(result.model, remaining, lcfg.sparsity), std::nullopt, lcfg.batch_size);

    std::vector<SheetAnnotation> fresh;
    try {
      for (const auto& r : ranked) {
        SheetAnnotation a = labeler(*by_id.at(r.sheet_id));
        a.sheet_id = r.sheet_id;
        validate_annotation(a, by_id.at(r.sheet_id)->bounds());
        fresh.push_back(std::move(a));
      }
    } catch (const std::exception& e) {
      st.status = "aborted";
      st.error = e.what();
      break;
    }

    LoopIteration it;
    it.iteration = st.iteration + 1;
    for (auto& a : fresh) {
      it.selected.push_back(a.sheet_id);
      std::erase(st.unlabeled, a.sheet_id);
      st.labeled.push_back(std::move(a));
    }
    it.labeled_count = static_cast<int>(st.labeled.size());

    retrain(it.iteration);
    it.eval = match_and_score(neuro::detect_all(result.model, heldout.sheets), gold, 2);

    st.iteration = it.iteration;
    if (it.eval.f1 > st.best_f1) {
      st.best_f1 = it.eval.f1;
      st.stale_iterations = 0;
    } else {
      ++st.stale_iterations;
    }
    st.history.push_back(std::move(it));
    if (on_iteration) on_iteration(st);
    if (st.history.back().eval.f1 >= lcfg.target_f1) {
      st.status = "target_reached";
      break;
    }
    if (st.stale_iterations >= lcfg.patience) {
      st.status = "patience_exhausted";
      break;
    }
  }
  return result;
}

}  // namespace sheetscan
