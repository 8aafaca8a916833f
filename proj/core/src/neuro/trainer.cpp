// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/neuro/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "network.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan::neuro {
namespace {

constexpr double kRpnPositiveIou = 0.7;
constexpr double kRpnNegativeIou = 0.3;
constexpr double kRoiPositiveIou = 0.5;

struct Example {
  net::T input;
  std::vector<BBox> gt;
  std::vector<Roi> gt_rois;
};

Roi to_roi(const BBox& b) {
  return {b.col_left - 0.5, b.row_top - 0.5, b.col_right + 0.5, b.row_bottom + 0.5};
}

template <class V>
void shuffle(V& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

class Optimizer {
 public:
  Optimizer(const Model& m, const TrainConfig& cfg) : cfg_(cfg) {
    if (cfg.optimizer == "adam") {
      for (const auto& [name, p] : m.params()) {
        m1_.emplace(name, std::vector<float>(p.count(), 0.0f));
        m2_.emplace(name, std::vector<float>(p.count(), 0.0f));
      }
    }
  }

  void step(Model& m, const net::Grads& grads, double lr) {
    ++t_;
    const float wd = static_cast<float>(cfg_.weight_decay);
    const float rate = static_cast<float>(lr);
    if (cfg_.optimizer == "sgd") {
      for (auto& [name, p] : m.params()) {
        const auto& g = grads.at(name);
        for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= rate * (g[i] + wd * p.value[i]);
      }
      return;
    }
    constexpr float b1 = 0.9f;
    constexpr float b2 = 0.999f;
    constexpr float eps = 1e-8f;
    const float c1 = 1.0f - static_cast<float>(std::pow(0.9, t_));
    const float c2 = 1.0f - static_cast<float>(std::pow(0.999, t_));
    for (auto& [name, p] : m.params()) {
      const auto& g = grads.at(name);
      auto& a = m1_.at(name);
      auto& b = m2_.at(name);
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const float gi = g[i] + wd * p.value[i];
        a[i] = b1 * a[i] + (1.0f - b1) * gi;
        b[i] = b2 * b[i] + (1.0f - b2) * gi * gi;
        p.value[i] -= rate * (a[i] / c1) / (std::sqrt(b[i] / c2) + eps);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  std::map<std::string, std::vector<float>> m1_;
  std::map<std::string, std::vector<float>> m2_;
  long t_ = 0;
};

struct LossTally {
  std::map<std::string, double> parts;
  void add(const std::string& name, double v) { parts[name] += v; }
};

// Anchor labels: 1 positive, 0 negative, -1 ignored; `match` is the
// ground-truth index with the highest IoU.
void label_anchors(const ModelConfig& cfg, int h, int w, const std::vector<Roi>& gts,
                   std::vector<std::int8_t>& label, std::vector<int>& match) {
  const int a_n = cfg.anchors_per_position();
  const std::size_t n = static_cast<std::size_t>(h) * w * a_n;
  label.assign(n, 0);
  match.assign(n, -1);
  if (gts.empty()) return;
  std::vector<double> best(n, 0.0);
  std::vector<double> gt_best(gts.size(), 0.0);
  std::vector<int> gt_arg(gts.size(), -1);
  std::vector<double> aw(static_cast<std::size_t>(a_n));
  std::vector<double> ah(static_cast<std::size_t>(a_n));
  for (int a = 0; a < a_n; ++a) {
    const BoxParam p = net::anchor_at(cfg, 1, a);
    aw[static_cast<std::size_t>(a)] = p.w;
    ah[static_cast<std::size_t>(a)] = p.h;
  }
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int a = 0; a < a_n; ++a) {
        const std::size_t idx = (static_cast<std::size_t>(i) * w + j) * a_n + a;
        const Roi r{j + 1.0 - aw[static_cast<std::size_t>(a)] / 2, i + 1.0 - ah[static_cast<std::size_t>(a)] / 2,
                    j + 1.0 + aw[static_cast<std::size_t>(a)] / 2, i + 1.0 + ah[static_cast<std::size_t>(a)] / 2};
        for (std::size_t g = 0; g < gts.size(); ++g) {
          const double v = roi_iou(r, gts[g]);
          if (v > best[idx]) {
            best[idx] = v;
            match[idx] = static_cast<int>(g);
          }
          if (v > gt_best[g]) {
            gt_best[g] = v;
            gt_arg[g] = static_cast<int>(idx);
          }
        }
      }
    }
  }
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (best[idx] >= kRpnPositiveIou) label[idx] = 1;
    else if (best[idx] >= kRpnNegativeIou) label[idx] = -1;
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (gt_arg[g] >= 0) {
      label[static_cast<std::size_t>(gt_arg[g])] = 1;
      match[static_cast<std::size_t>(gt_arg[g])] = static_cast<int>(g);
    }
  }
}

double train_step(Model& model, const Example& ex, const TrainConfig& tcfg, Rng& rng,
                  net::Grads& grads, LossTally& tally) {
  const ModelConfig& cfg = model.config();
  const int h = ex.input.h;
  const int w = ex.input.w;
  const int a_n = cfg.anchors_per_position();
  const double w_obj = tcfg.loss_weight("rpn_obj");
  const double w_rbbr = tcfg.loss_weight("rpn_bbr");
  const double w_cls = tcfg.loss_weight("cls");
  const double w_bbr = tcfg.loss_weight("bbr");
  const double w_pbr = tcfg.loss_weight("pbr");
  const double w_mask = tcfg.loss_weight("mask");
  double total = 0.0;

  const net::Backbone bb = net::backbone_forward(model, ex.input);
  const net::T& feat = bb.features();
  net::T d_feat(feat.h, feat.w, feat.c);

  // Region proposal losses on a balanced anchor sample.
  const net::RpnOut rpn = net::rpn_forward(model, feat);
  {
    std::vector<std::int8_t> label;
    std::vector<int> match;
    label_anchors(cfg, h, w, ex.gt_rois, label, match);
    std::vector<int> pos;
    std::vector<int> neg;
    for (std::size_t i = 0; i < label.size(); ++i) {
      if (label[i] == 1) pos.push_back(static_cast<int>(i));
      else if (label[i] == 0) neg.push_back(static_cast<int>(i));
    }
    shuffle(pos, rng);
    shuffle(neg, rng);
    pos.resize(std::min<std::size_t>(pos.size(), static_cast<std::size_t>(tcfg.rpn_batch / 2)));
    neg.resize(std::min<std::size_t>(neg.size(), static_cast<std::size_t>(tcfg.rpn_batch) - pos.size()));
    net::T d_obj(rpn.obj.h, rpn.obj.w, rpn.obj.c);
    net::T d_del(rpn.deltas.h, rpn.deltas.w, rpn.deltas.c);
    const double n_s = static_cast<double>(pos.size() + neg.size());
    double obj_loss = 0.0;
    for (int y = 0; y < 2; ++y) {
      for (int idx : (y == 1 ? pos : neg)) {
        const double logit = rpn.obj.data[static_cast<std::size_t>(idx)];
        obj_loss += bce_with_logit(logit, static_cast<double>(y)) / n_s;
        d_obj.data[static_cast<std::size_t>(idx)] =
            static_cast<float>(w_obj * (sigmoid(logit) - y) / n_s);
      }
    }
    double bbr_loss_sum = 0.0;
    for (int idx : pos) {
      const BoxParam anchor = net::anchor_at(cfg, w, idx);
      const BbrTargets target = bbr_encode(
          BoxParam::from_roi(ex.gt_rois[static_cast<std::size_t>(match[static_cast<std::size_t>(idx)])]), anchor);
      const std::size_t off = 4 * static_cast<std::size_t>(idx);
      const BbrTargets pred{rpn.deltas.data[off], rpn.deltas.data[off + 1], rpn.deltas.data[off + 2],
                            rpn.deltas.data[off + 3]};
      const LossAndGrad lg = bbr_loss(pred, target);
      bbr_loss_sum += lg.loss / static_cast<double>(pos.size());
      for (std::size_t k = 0; k < 4; ++k)
        d_del.data[off + k] = static_cast<float>(w_rbbr * lg.grad[k] / static_cast<double>(pos.size()));
    }
    tally.add("rpn_obj", w_obj * obj_loss);
    tally.add("rpn_bbr", w_rbbr * bbr_loss_sum);
    total += w_obj * obj_loss + w_rbbr * bbr_loss_sum;
    net::rpn_backward(model, feat, d_obj, d_del, d_feat, grads);
    (void)a_n;
  }

  // RoI sample: proposals, ground truth and jittered ground truth.
  std::vector<Roi> cands = net::proposals(model, rpn, h, w);
  for (const Roi& g : ex.gt_rois) cands.push_back(g);
  for (const BBox& g : ex.gt) {
    for (int k = 0; k < tcfg.gt_jitter; ++k) {
      const int j = tcfg.jitter_cells;
      BBox b{g.col_left + static_cast<int>(rng.uniform_int(-j, j)),
             g.row_top + static_cast<int>(rng.uniform_int(-j, j)),
             g.col_right + static_cast<int>(rng.uniform_int(-j, j)),
             g.row_bottom + static_cast<int>(rng.uniform_int(-j, j))};
      b = {std::clamp(b.col_left, 1, w), std::clamp(b.row_top, 1, h), std::clamp(b.col_right, 1, w),
           std::clamp(b.row_bottom, 1, h)};
      if (b.valid()) cands.push_back(to_roi(b));
    }
  }
  std::vector<std::pair<int, int>> pos;  // (candidate, gt)
  std::vector<int> neg;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    double best = 0.0;
    int arg = -1;
    for (std::size_t g = 0; g < ex.gt_rois.size(); ++g) {
      const double v = roi_iou(cands[i], ex.gt_rois[g]);
      if (v > best) {
        best = v;
        arg = static_cast<int>(g);
      }
    }
    if (best >= kRoiPositiveIou) pos.emplace_back(static_cast<int>(i), arg);
    else neg.push_back(static_cast<int>(i));
  }
  shuffle(pos, rng);
  shuffle(neg, rng);
  const auto max_pos = static_cast<std::size_t>(std::max(1.0, tcfg.roi_batch * tcfg.roi_positive_fraction));
  pos.resize(std::min(pos.size(), max_pos));
  neg.resize(std::min(neg.size(), static_cast<std::size_t>(tcfg.roi_batch) - pos.size()));
  const double n_rois = static_cast<double>(pos.size() + neg.size());
  double cls_loss = 0.0;
  double bbr_loss_sum = 0.0;
  double pbr_loss_sum = 0.0;
  const auto run_roi = [&](int cand, int gt_index) {
    const Roi& roi = cands[static_cast<std::size_t>(cand)];
    const net::HeadCache head = net::head_forward(model, feat, roi);
    const double y = gt_index >= 0 ? 1.0 : 0.0;
    cls_loss += bce_with_logit(static_cast<double>(head.cls_logit), y) / n_rois;
    const float d_cls = static_cast<float>(w_cls * (sigmoid(static_cast<double>(head.cls_logit)) - y) / n_rois);
    std::array<float, 4> d_deltas{};
    if (gt_index >= 0) {
      const double n_pos = static_cast<double>(pos.size());
      const Roi& gt_roi = ex.gt_rois[static_cast<std::size_t>(gt_index)];
      const BbrTargets target = bbr_encode(BoxParam::from_roi(gt_roi), BoxParam::from_roi(roi));
      const BbrTargets pred{head.deltas[0], head.deltas[1], head.deltas[2], head.deltas[3]};
      const LossAndGrad lg = bbr_loss(pred, target);
      bbr_loss_sum += lg.loss / n_pos;
      for (std::size_t k = 0; k < 4; ++k) d_deltas[k] = static_cast<float>(w_bbr * lg.grad[k] / n_pos);
      if (w_pbr > 0.0) {
        const BBox& g = ex.gt[static_cast<std::size_t>(gt_index)];
        const int truth[4] = {g.col_left, g.row_top, g.col_right, g.row_bottom};
        const Roi refined = net::refine(roi, head.deltas, h, w);
        for (Side s : kSides) {
          const net::PbrCache pc = net::pbr_forward(model, feat, refined, s);
          const double target_offset =
              net::outward_sign(s) * (truth[static_cast<int>(s)] - pc.geom.boundary);
          const double dev = static_cast<double>(pc.side.offset) - target_offset;
          pbr_loss_sum += robust_loss(dev, cfg.pbr_k) / n_pos;
          const double d = w_pbr * robust_loss_grad(dev, cfg.pbr_k) / n_pos;
          if (d != 0.0) net::pbr_backward(model, pc, static_cast<float>(d), d_feat, grads);
        }
      }
    }
    net::head_backward(model, head, d_cls, d_deltas, d_feat, grads);
  };
  for (const auto& [cand, g] : pos) run_roi(cand, g);
  for (int cand : neg) run_roi(cand, -1);
  tally.add("cls", w_cls * cls_loss);
  tally.add("bbr", w_bbr * bbr_loss_sum);
  tally.add("pbr", w_pbr * pbr_loss_sum);
  total += w_cls * cls_loss + w_bbr * bbr_loss_sum + w_pbr * pbr_loss_sum;

  // Per-cell table membership.
  if (w_mask > 0.0) {
    const net::T logits = net::mask_forward(model, feat);
    net::T d_logits(h, w, 1);
    double mask_loss = 0.0;
    const double n_cells = static_cast<double>(h) * w;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const CellRef ref{r + 1, c + 1};
        const bool inside = std::any_of(ex.gt.begin(), ex.gt.end(), [&](const BBox& b) { return b.contains(ref); });
        const double y = inside ? 1.0 : 0.0;
        const double z = logits.at(r, c, 0);
        mask_loss += bce_with_logit(z, y) / n_cells;
        d_logits.at(r, c, 0) = static_cast<float>(w_mask * (sigmoid(z) - y) / n_cells);
      }
    }
    tally.add("mask", w_mask * mask_loss);
    total += w_mask * mask_loss;
    net::mask_backward(model, feat, d_logits, d_feat, grads);
  }

  net::backbone_backward(model, bb, std::move(d_feat), grads);
  return total;
}

double scheduled_rate(const TrainConfig& cfg, long step, long total_steps) {
  if (cfg.lr_schedule == "constant" || total_steps <= 1) return cfg.learning_rate;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps - 1);
  return cfg.learning_rate * (0.05 + 0.95 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

}  // namespace

nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"learning_rate", r.learning_rate}, {"losses", r.losses}};
  if (r.eval_eob0) j["eval_eob0"] = to_json(*r.eval_eob0);
  if (r.eval_eob2) j["eval_eob2"] = to_json(*r.eval_eob2);
  return j;
}

TrainResult train(const std::vector<Sheet>& sheets, const std::vector<SheetAnnotation>& labels,
                  const ModelConfig& mcfg, const TrainConfig& tcfg, const EvalSet* eval,
                  const EpochCallback& on_epoch) {
  tcfg.validate();
  return train_from(Model(mcfg, derive_seed(tcfg.seed, 0)), sheets, labels, tcfg, eval, on_epoch);
}

TrainResult train_from(Model model, const std::vector<Sheet>& sheets,
                       const std::vector<SheetAnnotation>& labels, const TrainConfig& tcfg,
                       const EvalSet* eval, const EpochCallback& on_epoch) {
  tcfg.validate();
  const auto aligned = align_labels(sheets, labels);
  std::vector<Example> examples;
  examples.reserve(sheets.size());
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    const Sheet& s = sheets[i];
    if (static_cast<std::size_t>(s.n_rows()) * static_cast<std::size_t>(s.n_cols()) >
        model.config().max_cells) {
      throw ValidationError("sheet '" + s.id() + "' exceeds the model's size bound");
    }
    if (s.n_rows() == 0 || s.n_cols() == 0) continue;
    Example ex;
    ex.input = net::input_tensor(s, model.config().feature_subset);
    ex.gt = aligned[i].tables;
    for (const BBox& b : ex.gt) ex.gt_rois.push_back(to_roi(b));
    examples.push_back(std::move(ex));
  }

  TrainResult result;
  Optimizer opt(model, tcfg);
  const long total_steps = static_cast<long>(tcfg.epochs) * static_cast<long>(examples.size());
  long step = 0;
  net::Grads grads = net::zero_grads(model);
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    Rng rng(derive_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = scheduled_rate(tcfg, step, total_steps);
    LossTally tally;
    double total = 0.0;
    for (std::size_t i : order) {
      for (auto& [name, g] : grads) std::fill(g.begin(), g.end(), 0.0f);
      total += train_step(model, examples[i], tcfg, rng, grads, tally);
      opt.step(model, grads, scheduled_rate(tcfg, step, total_steps));
      ++step;
    }
    const double n = examples.empty() ? 1.0 : static_cast<double>(examples.size());
    for (const auto& [name, v] : tally.parts) rec.losses[name] = v / n;
    rec.losses["total"] = total / n;
    if (eval != nullptr) {
      const auto dets = detect_all(model, eval->sheets);
      const GoldMap gold = gold_map(eval->labels);
      rec.eval_eob0 = match_and_score(dets, gold, 0);
      rec.eval_eob2 = match_and_score(dets, gold, 2);
    }
    if (on_epoch) on_epoch(rec);
    result.history.push_back(std::move(rec));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace sheetscan::neuro
