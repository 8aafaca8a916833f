// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. `--only N[,M...]` runs a subset.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "feature_goldens.hpp"
#include "sheetscan/active_learn.hpp"
#include "sheetscan/baseline.hpp"
#include "sheetscan/featurize.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/box_coding.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/neuro/trainer.hpp"
#include "sheetscan/synth.hpp"
#include "test_support.hpp"

using namespace sheetscan;
using namespace sheetscan::neuro;

namespace {

// Pinned tolerances and budgets.
constexpr double kFdStep = 1e-4;
constexpr double kFdRelTol = 1e-4;
constexpr double kGradientSuiteSeconds = 60.0;
constexpr double kAblationMarginF1 = 0.10;
constexpr double kTrainBudgetCpuSeconds = 30.0 * 60.0;
constexpr double kSelectionAccuracy = 0.80;
constexpr int kCurveWindow = 3;

constexpr std::uint64_t kCorpusSeed = 7;
constexpr int kCorpusSheets = 200;
constexpr int kTrainSheets = 150;
constexpr std::uint64_t kTrainSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

// ---- shared experiment state --------------------------------------------

struct Split {
  std::vector<Sheet> train_sheets;
  std::vector<SheetAnnotation> train_labels;
  EvalSet heldout;
};

struct Run {
  Model model;
  std::vector<EpochRecord> history;
  double cpu = 0.0;
};

const SynthCorpus& ablation_corpus() {
  static const SynthCorpus c = [] {
    SynthConfig cfg;
    cfg.seed = kCorpusSeed;
    cfg.sheet_count = kCorpusSheets;
    cfg.max_rows = 64;
    cfg.max_cols = 64;
    return generate_corpus(cfg);
  }();
  return c;
}

const Split& split() {
  static const Split s = [] {
    const SynthCorpus& c = ablation_corpus();
    Split out;
    const auto n = static_cast<std::ptrdiff_t>(std::min<std::size_t>(kTrainSheets, c.sheets.size()));
    out.train_sheets.assign(c.sheets.begin(), c.sheets.begin() + n);
    out.train_labels.assign(c.labels.begin(), c.labels.begin() + n);
    out.heldout.sheets.assign(c.sheets.begin() + n, c.sheets.end());
    out.heldout.labels.assign(c.labels.begin() + n, c.labels.end());
    return out;
  }();
  return s;
}

TrainConfig ablation_train_config() {
  TrainConfig t;
  t.seed = kTrainSeed;
  return t;
}

Run train_run(ModelConfig mc, TrainConfig tc, const char* tag) {
  const Split& s = split();
  std::fprintf(stderr, "[train] %s ...\n", tag);
  const double t0 = cpu_seconds();
  TrainResult r = train(s.train_sheets, s.train_labels, mc, tc, &s.heldout, [&](const EpochRecord& e) {
    std::fprintf(stderr, "[train] %s epoch %d eob0 %.3f eob2 %.3f\n", tag, e.epoch, e.eval_eob0->f1,
                 e.eval_eob2->f1);
  });
  return {std::move(r.model), std::move(r.history), cpu_seconds() - t0};
}

const Run& full_run() {
  static const Run r = train_run(ModelConfig{}, ablation_train_config(), "bbr+pbr");
  return r;
}

const Run& bbr_only_run() {
  static const Run r = [] {
    ModelConfig mc;
    mc.use_pbr = false;
    TrainConfig tc = ablation_train_config();
    tc.loss_weights["pbr"] = 0.0;
    return train_run(mc, tc, "bbr-only");
  }();
  return r;
}

const Run& subset_run(FeatureSubset subset) {
  static std::map<FeatureSubset, Run> cache;
  auto it = cache.find(subset);
  if (it == cache.end()) {
    ModelConfig mc;
    mc.feature_subset = subset;
    it = cache.emplace(subset, train_run(mc, ablation_train_config(), std::string(to_string(subset)).c_str())).first;
  }
  return it->second;
}

const Run& full_rerun() {
  static const Run r = train_run(ModelConfig{}, ablation_train_config(), "bbr+pbr rerun");
  return r;
}

EvalReport score(const Model& m, const EvalSet& ev, int threshold) {
  return match_and_score(detect_all(m, ev.sheets), gold_map(ev.labels), threshold);
}

// ---- 1. gradient suite ---------------------------------------------------

template <class LossFn>
bool fd_agrees(BoxParam b, const LossFn& loss, const std::array<double, 4>& grad, double* worst) {
  double* comps[4] = {&b.x, &b.y, &b.w, &b.h};
  bool ok = true;
  for (int i = 0; i < 4; ++i) {
    const double keep = *comps[i];
    *comps[i] = keep + kFdStep;
    const double hi = loss(b);
    *comps[i] = keep - kFdStep;
    const double lo = loss(b);
    *comps[i] = keep;
    const double fd = (hi - lo) / (2 * kFdStep);
    const double rel = std::abs(grad[i] - fd) / std::max(std::abs(fd), 1e-3);
    *worst = std::max(*worst, rel);
    ok &= rel <= kFdRelTol;
  }
  return ok;
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  int bbr_exact = 0, pbr_exact = 0, bbr_fd = 0, pbr_fd = 0;
  double worst = 0.0;

  // Constructed cases: dyadic values, so every closed form is exact in binary.
  for (int t = 0; t < 100; ++t) {
    const double w_a = std::ldexp(1.0, static_cast<int>(rng.uniform_int(0, 6)));
    const double x_a = static_cast<double>(rng.uniform_int(1, 64));
    const double x = x_a + static_cast<double>(rng.uniform_int(-256, 256)) / 8;
    const double x_star = x_a + static_cast<double>(rng.uniform_int(-256, 256)) / 8;
    const double w_star = static_cast<double>(rng.uniform_int(1, 64));
    const double w = w_star * std::ldexp(1.0, static_cast<int>(rng.uniform_int(-2, 2)));
    const LossAndGrad gx = bbr_loss_box({x, 10, w, 4}, {x_star, 10, w_star, 4}, {x_a, 10, w_a, 4});
    const LossAndGrad gw = bbr_loss_box({x, 10, w, 4}, {x_star, 10, w_star, 4}, {x_a, 10, w_star, 4});
    bbr_exact += gx.grad[0] == bbr_grad_x_closed(x, x_star, w_a) && gw.grad[2] == bbr_grad_w_closed(w, w_star);

  }
  for (int t = 0; t < 100;) {
    const double k = static_cast<double>(rng.uniform_int(2, 10));
    const BoxParam gt{static_cast<double>(rng.uniform_int(10, 50)), 20, static_cast<double>(rng.uniform_int(4, 30)), 6};
    const double dl = static_cast<double>(rng.uniform_int(-12, 12));
    const double dr = static_cast<double>(rng.uniform_int(-12, 12));
    const double left = gt.x - gt.w / 2 + dl;
    const double right = gt.x + gt.w / 2 + dr;
    if (right - left <= 0.5) continue;
    ++t;
    const BoxParam b{(left + right) / 2, 20, right - left, 6};
    const BoxParam a{gt.x + static_cast<double>(rng.uniform_int(-5, 5)), 20, 8, 8};
    const LossAndGrad gp = pbr_loss_box(b, gt, a, k);
    pbr_exact += gp.grad[0] == pbr_grad_x_closed(dl, dr, k) && gp.grad[2] == pbr_grad_w_closed(dl, dr, k);
  }

  while (bbr_fd < 100) {
    const BoxParam a{rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(2, 40), rng.uniform(2, 40)};
    const BoxParam gt{rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(2, 40), rng.uniform(2, 40)};
    const BoxParam b{rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(2, 40), rng.uniform(2, 40)};
    const auto t = bbr_encode(b, a), s = bbr_encode(gt, a);
    bool near_kink = false;
    for (int i = 0; i < 4; ++i) near_kink |= std::abs(std::abs(t[i] - s[i]) - 1.0) < 1e-2;
    if (near_kink) continue;
    const auto loss = [&](const BoxParam& p) { return bbr_loss_box(p, gt, a).loss; };
    if (!fd_agrees(b, loss, bbr_loss_box(b, gt, a).grad, &worst)) break;
    ++bbr_fd;
  }
  while (pbr_fd < 100) {
    const double k = 7;
    const BoxParam a{rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(2, 40), rng.uniform(2, 40)};
    const BoxParam gt{rng.uniform(5, 60), rng.uniform(5, 60), rng.uniform(2, 40), rng.uniform(2, 40)};
    const BoxParam b{gt.x + rng.uniform(-6, 6), gt.y + rng.uniform(-6, 6), gt.w + rng.uniform(-6, 6),
                     gt.h + rng.uniform(-6, 6)};
    if (b.w <= 0.5 || b.h <= 0.5) continue;
    const PbrTargets t = pbr_targets(b, a), s = pbr_targets(gt, a);
    bool near_kink = false;
    for (int i = 0; i < 4; ++i) near_kink |= std::abs(std::abs(t[i] - s[i]) - k) < 1e-2;
    if (near_kink) continue;
    const auto loss = [&](const BoxParam& p) { return pbr_loss_box(p, gt, a, k).loss; };
    if (!fd_agrees(b, loss, pbr_loss_box(b, gt, a, k).grad, &worst)) break;
    ++pbr_fd;
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = bbr_exact == 100 && pbr_exact == 100 && bbr_fd == 100 && pbr_fd == 100 &&
                    secs < kGradientSuiteSeconds;
  return {pass, fmt("closed-form exact bbr %d/100 pbr %d/100, fd bbr %d/100 pbr %d/100, worst rel %.2e, %.2fs",
                    bbr_exact, pbr_exact, bbr_fd, pbr_fd, worst, secs)};
}

// ---- 2. scaling law --------------------------------------------------------

Outcome scaling_law() {
  Rng rng(202);
  int cases = 0, bbr_ok = 0, pbr_ok = 0;
  while (cases < 200) {
    const double w_a = std::ldexp(1.0, static_cast<int>(rng.uniform_int(2, 6)));
    const double dx = static_cast<double>(rng.uniform_int(-64, 64)) / 16;
    // Linear-gradient region of smooth-L1 at both anchor widths.
    if (dx == 0.0 || std::abs(dx) / w_a >= 1.0) continue;
    const BoxParam gt{30, 30, static_cast<double>(rng.uniform_int(2, 40)), 10};
    const BoxParam b{gt.x + dx, 30, gt.w, 10};
    const double g1 = bbr_loss_box(b, gt, {30, 30, w_a, 8}).grad[0];
    const double g2 = bbr_loss_box(b, gt, {30, 30, 2 * w_a, 8}).grad[0];
    bbr_ok += g1 == 4 * g2;
    const double p1 = pbr_loss_box(b, gt, {30, 30, w_a, 8}, 7).grad[0];
    const double p2 = pbr_loss_box(b, gt, {30, 30, 2 * w_a, 8}, 7).grad[0];
    pbr_ok += std::bit_cast<std::uint64_t>(p1) == std::bit_cast<std::uint64_t>(p2);
    ++cases;
  }
  return {bbr_ok == cases && pbr_ok == cases,
          fmt("bbr 4x shrink %d/%d, pbr bit-identical %d/%d", bbr_ok, cases, pbr_ok, cases)};
}

// ---- 3. metric oracles -----------------------------------------------------

Outcome metric_oracles() {
  Rng rng(303);
  int iou_ok = 0, eob_ok = 0;
  for (int t = 0; t < 1000; ++t) {
    const int rows = static_cast<int>(rng.uniform_int(1, 20));
    const int cols = static_cast<int>(rng.uniform_int(1, 20));
    const BBox a = testkit::random_box(rng, rows, cols);
    const BBox b = testkit::random_box(rng, rows, cols);
    long inter = 0, uni = 0;
    for (int r = 1; r <= rows; ++r)
      for (int c = 1; c <= cols; ++c) {
        const bool in_a = a.contains(CellRef{r, c}), in_b = b.contains(CellRef{r, c});
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
    iou_ok += iou(a, b) == static_cast<double>(inter) / static_cast<double>(uni);
    const int edges[4] = {a.col_left - b.col_left, a.row_top - b.row_top, a.col_right - b.col_right,
                          a.row_bottom - b.row_bottom};
    int worst = 0;
    for (int e : edges) worst = std::max(worst, e < 0 ? -e : e);
    eob_ok += eob(a, b) == worst;
  }
  const double p1 = percent_truncated(154, 188);
  const double p2 = percent_truncated(184, 212);
  const bool pct = p1 == 81.9 && p2 == 86.7;
  return {iou_ok == 1000 && eob_ok == 1000 && pct,
          fmt("iou %d/1000, eob %d/1000, 154/188 -> %.1f, 184/212 -> %.1f", iou_ok, eob_ok, p1, p2)};
}

// ---- 4. boundary-regression ablation ----------------------------------------

Outcome pbr_ablation() {
  const SynthCorpus& c = ablation_corpus();
  const Run& full = full_run();
  const Run& bbr = bbr_only_run();
  const double f_full = full.history.back().eval_eob0->f1;
  const double f_bbr = bbr.history.back().eval_eob0->f1;
  const bool corpus_ok = static_cast<int>(c.sheets.size()) == kCorpusSheets;
  const bool budget_ok = full.cpu <= kTrainBudgetCpuSeconds && bbr.cpu <= kTrainBudgetCpuSeconds;
  return {corpus_ok && budget_ok && f_full >= f_bbr + kAblationMarginF1,
          fmt("held-out EoB-0 F1 bbr+pbr %.3f vs bbr-only %.3f (margin %+.3f, need %+.2f); sheets %zu; cpu %.0fs / %.0fs",
              f_full, f_bbr, f_full - f_bbr, kAblationMarginF1, c.sheets.size(), full.cpu, bbr.cpu)};
}

// ---- 5. region growth ------------------------------------------------------

SynthCorpus artifact_heavy_corpus() {
  SynthConfig cfg;
  cfg.seed = 505;
  cfg.sheet_count = 50;
  cfg.artifacts = {0.7, 0.7, 0.7, 0.7, 0.7, 0.7};
  return generate_corpus(cfg);
}

Outcome region_growth() {
  SynthConfig dense;
  dense.seed = 501;
  dense.sheet_count = 100;
  dense.tables_max = 1;
  dense.missing_value_prob = 0.0;
  dense.artifacts = ArtifactProbabilities::none();
  const SynthCorpus d = generate_corpus(dense);
  std::map<std::string, std::vector<Detection>> rg;
  for (const auto& s : d.sheets) rg[s.id()] = detect_all_region_growth(s);
  const EvalReport dense_r = match_and_score(rg, gold_map(d.labels), 0);

  const SynthCorpus h = artifact_heavy_corpus();
  std::map<std::string, std::vector<Detection>> rg_h;
  for (const auto& s : h.sheets) rg_h[s.id()] = detect_all_region_growth(s);
  const double f_rg = match_and_score(rg_h, gold_map(h.labels), 2).f1;
  const double f_cnn = score(full_run().model, {h.sheets, h.labels}, 2).f1;
  const bool pass = dense_r.precision == 1.0 && dense_r.recall == 1.0 && f_rg < f_cnn;
  return {pass, fmt("dense single-table EoB-0 P %.3f R %.3f on %zu sheets; artifact-heavy EoB-2 F1 region-growth %.3f "
                    "vs trained %.3f",
                    dense_r.precision, dense_r.recall, d.sheets.size(), f_rg, f_cnn)};
}

// ---- 6. featurize ----------------------------------------------------------

Outcome featurize_goldens_and_ablation() {
  int exact = 0;
  const auto goldens = testkit::feature_goldens();
  for (const auto& g : goldens) exact += featurize_cell(g.cell, g.palettes) == g.expected;
  const double f_full = full_run().history.back().eval_eob2->f1;
  const double f_bin = subset_run(FeatureSubset::binary_only).history.back().eval_eob2->f1;
  const double f_val = subset_run(FeatureSubset::value_string_only).history.back().eval_eob2->f1;
  const bool pass = exact == static_cast<int>(goldens.size()) && goldens.size() == 10 && f_full > f_bin &&
                    f_full > f_val;
  return {pass, fmt("goldens %d/%zu exact; held-out EoB-2 F1 full %.3f, binary-only %.3f, value-string-only %.3f",
                    exact, goldens.size(), f_full, f_bin, f_val)};
}

// ---- 7. training curve -----------------------------------------------------

std::vector<double> eob2_curve(const std::vector<EpochRecord>& h) {
  std::vector<double> out;
  for (const auto& e : h) out.push_back(e.eval_eob2->f1);
  return out;
}

std::vector<double> smooth_trailing(const std::vector<double>& v, int window) {
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(window) ? i + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t j = lo; j <= i; ++j) sum += v[j];
    out.push_back(sum / static_cast<double>(i - lo + 1));
  }
  return out;
}

Outcome training_curve() {
  const std::vector<double> curve = eob2_curve(full_run().history);
  const std::vector<double> s = smooth_trailing(curve, kCurveWindow);
  const auto peak = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  std::size_t drops = 0;
  for (std::size_t i = 0; i < peak; ++i) drops += s[i + 1] < s[i];
  const std::vector<double> again = eob2_curve(full_rerun().history);
  bool bit_exact = again.size() == curve.size();
  for (std::size_t i = 0; bit_exact && i < curve.size(); ++i)
    bit_exact = std::bit_cast<std::uint64_t>(again[i]) == std::bit_cast<std::uint64_t>(curve[i]);
  std::ostringstream pts;
  for (double v : s) pts << fmt("%.3f ", v);
  return {drops == 0 && bit_exact, fmt("smoothed held-out EoB-2 F1 peaks at epoch %zu with %zu drops before it; "
                                       "rerun bit-exact %s; curve %s",
                                       peak + 1, drops, bit_exact ? "yes" : "no", pts.str().c_str())};
}

// ---- 8. active loop --------------------------------------------------------

Outcome active_loop() {
  SynthConfig plain;
  plain.seed = 11;
  plain.sheet_count = 150;
  plain.artifacts = ArtifactProbabilities::none();
  const SynthCorpus pc = generate_corpus(plain);
  SynthConfig art;
  art.seed = 12;
  art.sheet_count = 50;
  art.artifacts = {0.7, 0.7, 0.7, 0.7, 0.7, 0.7};
  art.id_prefix = "artifact";
  const SynthCorpus ac = generate_corpus(art);

  const std::size_t n_pre = 100;
  const std::vector<Sheet> pre_sheets(pc.sheets.begin(), pc.sheets.begin() + n_pre);
  const std::vector<SheetAnnotation> pre_labels(pc.labels.begin(), pc.labels.begin() + n_pre);
  TrainConfig tc;
  tc.seed = 1;
  tc.epochs = 10;
  std::fprintf(stderr, "[train] plain pretraining ...\n");
  const Model pretrained = train(pre_sheets, pre_labels, ModelConfig{}, tc).model;

  std::vector<Sheet> pool(pc.sheets.begin() + n_pre, pc.sheets.end());
  std::vector<SheetAnnotation> gold(pc.labels.begin() + n_pre, pc.labels.end());
  std::set<std::string> artifact_ids;
  for (std::size_t i = 0; i < ac.sheets.size(); ++i) {
    pool.push_back(ac.sheets[i]);
    gold.push_back(ac.labels[i]);
    artifact_ids.insert(ac.sheets[i].id());
  }

  std::vector<ScoredSheet> scored;
  std::vector<SheetOutcome> outcomes;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto dets = detect(pretrained, pool[i]);
    const UncertaintyVector u = uncertainty(pool[i], dets);
    scored.push_back({pool[i].id(), u});
    outcomes.push_back({sheet_well_detected(dets, gold[i].tables), u.overall});
  }
  const auto ranked = select_sheets(scored, std::nullopt);
  double rank_art = 0.0, rank_plain = 0.0;
  for (std::size_t r = 0; r < ranked.size(); ++r)
    (artifact_ids.contains(ranked[r].sheet_id) ? rank_art : rank_plain) += static_cast<double>(r + 1);
  rank_art /= static_cast<double>(artifact_ids.size());
  rank_plain /= static_cast<double>(pool.size() - artifact_ids.size());

  std::optional<double> best_threshold;
  SelectionAccuracy best;
  double best_min = -1.0;
  for (const auto& o : outcomes) {
    const SelectionAccuracy a = selection_accuracy(outcomes, o.overall);
    const double m = std::min(a.error_accuracy(), a.correct_accuracy());
    if (m > best_min) {
      best_min = m;
      best = a;
      best_threshold = o.overall;
    }
  }

  // One oracle-labeled round from the pretrained detector takes the top-ranked sheets.
  std::map<std::string, SheetAnnotation> oracle;
  for (const auto& g : gold) oracle[g.sheet_id] = g;
  LoopConfig lc;
  lc.batch_size = 10;
  lc.max_iterations = 1;
  lc.warm_start = true;
  TrainConfig loop_tc = tc;
  loop_tc.epochs = 2;
  const LoopResult loop = run_loop(
      pool, [&](const Sheet& s) { return oracle.at(s.id()); }, EvalSet{pool, gold}, ModelConfig{}, loop_tc, lc,
      pretrained);
  bool loop_ok = loop.state.history.size() == 1;
  if (loop_ok) {
    const auto& sel = loop.state.history[0].selected;
    for (std::size_t i = 0; i < sel.size() && loop_ok; ++i) loop_ok = sel[i] == ranked[i].sheet_id;
    loop_ok &= sel.size() == 10;
  }

  const bool pass = rank_art < rank_plain && best.error_accuracy() >= kSelectionAccuracy &&
                    best.correct_accuracy() >= kSelectionAccuracy && best.error_total > 0 && loop_ok;
  return {pass,
          fmt("mean rank artifact %.1f vs plain %.1f; threshold %.4f selects errors %d/%d (%.1f%%), keeps correct "
              "%d/%d (%.1f%%); loop round took top-10 %s, round F1 %.3f",
              rank_art, rank_plain, best_threshold.value_or(0.0), best.error_selected, best.error_total,
              percent_truncated(best.error_selected, std::max(best.error_total, 1)), best.correct_kept,
              best.correct_total, percent_truncated(best.correct_kept, std::max(best.correct_total, 1)),
              loop_ok ? "yes" : "no",
              loop.state.history.empty() ? 0.0 : loop.state.history[0].eval.f1)};
}

// ---- 9. determinism --------------------------------------------------------

Outcome determinism() {
  int failures = 0;
  std::vector<std::string> what;
  const auto check = [&](bool ok, const char* name) {
    if (!ok) {
      ++failures;
      what.emplace_back(name);
    }
  };

  SynthConfig cfg;
  cfg.seed = 909;
  cfg.sheet_count = 30;
  const SynthCorpus a = generate_corpus(cfg);
  const SynthCorpus b = generate_corpus(cfg);
  bool same_synth = a.sheets.size() == b.sheets.size() && write_labels(a.labels) == write_labels(b.labels) &&
                    a.artifacts == b.artifacts;
  for (std::size_t i = 0; same_synth && i < a.sheets.size(); ++i)
    same_synth = sheet_to_json(a.sheets[i]).dump() == sheet_to_json(b.sheets[i]).dump();
  check(same_synth, "synth");

  bool ftns_ok = true, sheet_json_ok = true;
  for (const auto& s : a.sheets) {
    const std::string bytes = write_ftns(featurize_sheet(s));
    ftns_ok &= write_ftns(read_ftns(bytes)) == bytes && read_ftns(bytes) == featurize_sheet(s);
    const std::string j = sheet_to_json(s).dump();
    sheet_json_ok &= sheet_to_json(sheet_from_json(nlohmann::json::parse(j))).dump() == j;
  }
  check(ftns_ok, "ftns");
  check(sheet_json_ok, "sheet-json");
  const std::string labels = write_labels(a.labels);
  check(write_labels(read_labels(labels)) == labels, "labels-json");

  const Model& m = full_run().model;
  const std::string tsmw = m.serialize();
  check(Model::deserialize(tsmw).serialize() == tsmw, "tsmw");
  check(full_rerun().model.serialize() == tsmw, "train");

  const auto d1 = detect_all(m, split().heldout.sheets);
  const auto d2 = detect_all(Model::deserialize(tsmw), split().heldout.sheets);
  const std::string dj = write_detections(d1);
  check(write_detections(d2) == dj, "detect");
  check(write_detections(read_detections(dj)) == dj, "detections-json");

  check(to_json(model_config_from_json(to_json(ModelConfig{}))) == to_json(ModelConfig{}), "model-config-json");
  check(to_json(train_config_from_json(to_json(TrainConfig{}))) == to_json(TrainConfig{}), "train-config-json");
  check(to_json(loop_config_from_json(to_json(LoopConfig{}))) == to_json(LoopConfig{}), "loop-config-json");
  const EvalReport rep = score(m, split().heldout, 0);
  check(eval_report_from_json(to_json(rep)) == rep, "eval-json");
  ArtifactProbabilities ap = ArtifactProbabilities::none();
  artifacts_from_json(artifacts_to_json(cfg.artifacts), ap);
  check(artifacts_to_json(ap) == artifacts_to_json(cfg.artifacts), "artifacts-json");
  const UncertaintyVector u = uncertainty(split().heldout.sheets[0], d1.at(split().heldout.sheets[0].id()));
  check(uncertainty_from_json(to_json(u)) == u, "uncertainty-json");

  std::string detail = failures == 0 ? "synth, train, detect reproducible; ftns, tsmw and json round trips exact"
                                     : "mismatch in:";
  for (const auto& w : what) detail += " " + w;
  return {failures == 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--only") continue;
    std::stringstream ss(argv[i + 1]);
    std::string tok;
    while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient-suite", gradient_suite},
      {"scaling-law", scaling_law},
      {"metric-oracles", metric_oracles},
      {"pbr-ablation", pbr_ablation},
      {"region-growth", region_growth},
      {"featurize", featurize_goldens_and_ablation},
      {"training-curve", training_curve},
      {"active-loop", active_loop},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
