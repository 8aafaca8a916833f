// SPDX-License-Identifier: Apache-2.0
//
// sheetscan command-line entry point. Machine-readable results go to stdout
// as JSON; diagnostics go to stderr. Exit codes: 0 success, 1 usage error,
// 2 I/O, schema or validation error, 3 internal error.
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sheetscan/active_learn.hpp"
#include "sheetscan/baseline.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/featurize.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/label_service.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/neuro/trainer.hpp"
#include "sheetscan/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sheetscan;

namespace {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("E_USAGE", what) {}
};

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(what + " is not valid JSON: " + e.what());
  }
}

/// Accepts inline JSON or a path to a JSON file.
json json_arg(const std::string& value, const std::string& what) {
  if (!value.empty() && (value.front() == '{' || value.front() == '[')) return parse_json(value, what);
  return parse_json(read_file(value), what);
}

struct Configs {
  neuro::ModelConfig model;
  neuro::TrainConfig train;
  LoopConfig loop;
};

Configs read_configs(const std::optional<std::string>& path) {
  Configs c;
  if (!path) return c;
  const json j = json_arg(*path, "config");
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  if (j.contains("model")) c.model = neuro::model_config_from_json(j["model"]);
  if (j.contains("train")) c.train = neuro::train_config_from_json(j["train"]);
  if (j.contains("loop")) c.loop = loop_config_from_json(j["loop"]);
  return c;
}

std::vector<Sheet> read_sheets(const std::string& path) {
  if (fs::is_directory(path)) return load_corpus_dir(path);
  return {read_sheet_file(path)};
}

std::vector<SheetAnnotation> read_labels_file(const std::string& path) {
  return read_labels(read_file(path));
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

int run_synth(const std::string& out, int count, std::uint64_t seed, int max_rows, int max_cols,
              const std::optional<std::string>& artifacts) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.sheet_count = count;
  cfg.max_rows = max_rows;
  cfg.max_cols = max_cols;
  if (artifacts) artifacts_from_json(json_arg(*artifacts, "artifacts"), cfg.artifacts);
  cfg.validate();
  const SynthCorpus corpus = generate_corpus(cfg);
  save_corpus_dir(out, corpus.sheets, corpus.labels);
  json manifest = json::object();
  for (std::size_t i = 0; i < corpus.sheets.size(); ++i) manifest[corpus.sheets[i].id()] = corpus.artifacts[i];
  write_file(fs::path(out) / "artifacts.json", manifest.dump(2) + "\n");
  print({{"out", out}, {"sheets", corpus.sheets.size()}, {"skipped", corpus.skipped}});
  return 0;
}

int run_featurize(const std::string& sheet, const std::string& out, const std::string& subset) {
  const FeatureTensor t = featurize_sheet(read_sheet_file(sheet), feature_subset_from_string(subset));
  write_file(out, write_ftns(t));
  print({{"out", out}, {"h", t.h}, {"w", t.w}, {"channels", kFeatureChannels}});
  return 0;
}

int run_detect(const std::string& method, const std::optional<std::string>& model_path,
               const std::string& sheet, const std::string& out, bool no_pbr) {
  if (method == "cnn" && !model_path) throw UsageError("detect --method cnn requires --model");
  const auto sheets = read_sheets(sheet);
  DetectionMap dets;
  if (method == "region-growth") {
    for (const auto& s : sheets) dets[s.id()] = filter_detections(s, detect_all_region_growth(s));
  } else if (method == "cnn") {
    neuro::Model model = neuro::Model::load(*model_path);
    if (no_pbr) model.config().use_pbr = false;
    dets = neuro::detect_all(model, sheets);
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  write_file(out, write_detections(dets));
  std::size_t n = 0;
  for (const auto& [id, d] : dets) n += d.size();
  print({{"out", out}, {"sheets", dets.size()}, {"detections", n}});
  return 0;
}

int run_train(const std::string& corpus, const std::string& labels, const std::string& model_out,
              const std::optional<std::string>& config, bool no_pbr,
              const std::optional<std::string>& eval_corpus, const std::optional<std::string>& eval_labels) {
  Configs cfg = read_configs(config);
  if (no_pbr) {
    cfg.model.use_pbr = false;
    cfg.train.loss_weights["pbr"] = 0.0;
  }
  const auto sheets = load_corpus_dir(corpus);
  const auto ann = read_labels_file(labels);
  std::optional<neuro::EvalSet> eval;
  if (eval_corpus || eval_labels) {
    if (!eval_corpus || !eval_labels) throw UsageError("--eval-corpus and --eval-labels go together");
    eval = neuro::EvalSet{load_corpus_dir(*eval_corpus), read_labels_file(*eval_labels)};
  }
  json history = json::array();
  const auto result = neuro::train(sheets, ann, cfg.model, cfg.train, eval ? &*eval : nullptr,
                                   [&](const neuro::EpochRecord& r) {
                                     std::cerr << "epoch " << r.epoch << " loss " << r.losses.at("total") << '\n';
                                     history.push_back(neuro::to_json(r));
                                   });
  result.model.save(model_out);
  print({{"model", model_out}, {"history", history}});
  return 0;
}

int run_eval(const std::string& pred, const std::string& gold, int threshold) {
  if (threshold != 0 && threshold != 2) throw UsageError("--threshold must be 0 or 2");
  const DetectionMap dets = read_detections(read_file(pred));
  print(to_json(match_and_score(dets, gold_map(read_labels_file(gold)), threshold)));
  return 0;
}

int run_select(const std::string& corpus, const std::string& model_path, std::optional<int> top,
               std::optional<double> threshold) {
  const auto sheets = load_corpus_dir(corpus);
  const neuro::Model model = neuro::Model::load(model_path);
  json out = json::array();
  for (const auto& r : select_sheets(score_pool(model, sheets), threshold, top)) {
    out.push_back({{"sheet_id", r.sheet_id}, {"uncertainty", to_json(r.u)}});
  }
  print(out);
  return 0;
}

int run_loop_cmd(const std::string& corpus, const std::string& gold, const std::optional<std::string>& config,
                 const std::optional<std::string>& heldout_corpus, const std::optional<std::string>& heldout_gold,
                 const std::optional<std::string>& state_out, const std::optional<std::string>& resume,
                 const std::optional<std::string>& model_out) {
  const Configs cfg = read_configs(config);
  const auto sheets = load_corpus_dir(corpus);
  const auto labels = align_labels(sheets, read_labels_file(gold));
  std::map<std::string, SheetAnnotation> oracle;
  for (const auto& a : labels) oracle[a.sheet_id] = a;
  neuro::EvalSet heldout;
  if (heldout_corpus || heldout_gold) {
    if (!heldout_corpus || !heldout_gold) throw UsageError("--heldout-corpus and --heldout-gold go together");
    heldout = {load_corpus_dir(*heldout_corpus), read_labels_file(*heldout_gold)};
  } else {
    heldout = {sheets, labels};
  }
  std::optional<LoopState> prior;
  if (resume) prior = loop_state_from_json(parse_json(read_file(*resume), "loop state"));
  const auto result = run_loop(
      sheets, [&](const Sheet& s) { return oracle.at(s.id()); }, heldout, cfg.model, cfg.train, cfg.loop,
      std::nullopt, prior, [&](const LoopState& st) {
        std::cerr << "iteration " << st.iteration << " labeled " << st.labeled.size() << " f1 "
                  << st.history.back().eval.f1 << '\n';
        if (state_out) write_file(*state_out, to_json(st).dump(2) + "\n");
      });
  if (state_out) write_file(*state_out, to_json(result.state).dump(2) + "\n");
  if (model_out) result.model.save(*model_out);
  print(to_json(result.state));
  return 0;
}

LabelService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

int run_serve(const std::string& host, int port, const std::string& corpus, const std::string& labels,
              const std::optional<std::string>& model_path, const std::optional<std::string>& config) {
  const Configs cfg = read_configs(config);
  std::optional<neuro::Model> model;
  if (model_path) model = neuro::Model::load(*model_path);
  ServiceOptions opts{cfg.model, cfg.train, std::nullopt};
  LabelService svc(load_corpus_dir(corpus), labels, std::move(model), opts);
  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "serving on " << host << ":" << port << '\n';
  svc.listen(host, port);
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spreadsheet table detection toolkit"};
  app.require_subcommand(1);

  std::string out, sheet, method = "cnn", pred, gold, corpus, labels, model_out, host = "127.0.0.1";
  std::string subset = "full";
  std::optional<std::string> model, config, artifacts, eval_corpus, eval_labels, heldout_corpus, heldout_gold,
      state_out, resume;
  std::optional<int> top;
  std::optional<double> threshold_sel;
  int count = 10, max_rows = 64, max_cols = 64, threshold = 2, port = 8080;
  std::uint64_t seed = 1;
  bool no_pbr = false;

  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--count", count, "Number of sheets")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--max-rows", max_rows)->check(CLI::PositiveNumber);
  synth->add_option("--max-cols", max_cols)->check(CLI::PositiveNumber);
  synth->add_option("--artifacts", artifacts, "Artifact probabilities (JSON text or file)");

  auto* feat = app.add_subcommand("featurize", "Dump the 20-channel feature tensor (FTNS)");
  feat->add_option("--sheet", sheet)->required();
  feat->add_option("--out", out)->required();
  feat->add_option("--subset", subset, "full | binary-only | value-string-only");

  auto* det = app.add_subcommand("detect", "Detect tables");
  det->add_option("--method", method)->check(CLI::IsMember({"region-growth", "cnn"}));
  det->add_option("--model", model);
  det->add_option("--sheet", sheet, "Sheet file or corpus directory")->required();
  det->add_option("--out", out)->required();
  det->add_flag("--no-pbr", no_pbr, "Skip boundary refinement");

  auto* tr = app.add_subcommand("train", "Train the detector");
  tr->add_option("--corpus", corpus)->required();
  tr->add_option("--labels", labels)->required();
  tr->add_option("--model-out", model_out)->required();
  tr->add_option("--config", config, "JSON with optional 'model' and 'train' objects");
  tr->add_flag("--no-pbr", no_pbr, "Train and decode without boundary refinement");
  tr->add_option("--eval-corpus", eval_corpus);
  tr->add_option("--eval-labels", eval_labels);

  auto* ev = app.add_subcommand("eval", "Score detections against gold labels");
  ev->add_option("--pred", pred)->required();
  ev->add_option("--gold", gold)->required();
  ev->add_option("--threshold", threshold, "EoB tolerance: 0 or 2");

  auto* sel = app.add_subcommand("select", "Rank sheets by uncertainty");
  sel->add_option("--corpus", corpus)->required();
  sel->add_option("--model", model)->required();
  sel->add_option("--top", top);
  sel->add_option("--threshold", threshold_sel);

  auto* loop = app.add_subcommand("loop", "Simulate the labeling loop with an oracle labeler");
  loop->add_option("--corpus", corpus)->required();
  loop->add_option("--gold", gold)->required();
  loop->add_option("--config", config, "JSON with optional 'model', 'train' and 'loop' objects");
  loop->add_option("--heldout-corpus", heldout_corpus);
  loop->add_option("--heldout-gold", heldout_gold);
  loop->add_option("--state-out", state_out);
  loop->add_option("--resume", resume);
  loop->add_option("--model-out", model);

  auto* serve = app.add_subcommand("serve", "Run the labeling HTTP service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--corpus", corpus)->required();
  serve->add_option("--labels", labels, "Label journal (JSON lines)")->required();
  serve->add_option("--model", model);
  serve->add_option("--config", config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "E_USAGE " << e.what() << '\n';
    return 1;
  }

  try {
    if (*synth) return run_synth(out, count, seed, max_rows, max_cols, artifacts);
    if (*feat) return run_featurize(sheet, out, subset);
    if (*det) return run_detect(method, model, sheet, out, no_pbr);
    if (*tr) return run_train(corpus, labels, model_out, config, no_pbr, eval_corpus, eval_labels);
    if (*ev) return run_eval(pred, gold, threshold);
    if (*sel) return run_select(corpus, *model, top, threshold_sel);
    if (*loop) return run_loop_cmd(corpus, gold, config, heldout_corpus, heldout_gold, state_out, resume, model);
    if (*serve) return run_serve(host, port, corpus, labels, model, config);
  } catch (const UsageError& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << e.code() << ' ' << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "E_INTERNAL " << e.what() << '\n';
    return 3;
  }
  return 1;
}
