// SPDX-License-Identifier: Apache-2.0
//
// HTTP backend for human labeling: an uncertainty-ranked queue, sheet
// content with current detections, label submission into an append-only
// journal, and background retraining.
#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sheetscan/active_learn.hpp"
#include "sheetscan/grid.hpp"
#include "sheetscan/metrics.hpp"
#include "sheetscan/neuro/model.hpp"
#include "sheetscan/neuro/trainer.hpp"

namespace sheetscan {

/// JSON-lines journal of submitted labels; the latest entry per sheet wins.
/// The file is only ever appended to.
class LabelStore {
 public:
  /// Replays an existing journal. Throws SchemaError on a corrupt line.
  explicit LabelStore(std::filesystem::path journal);

  void append(const std::string& sheet_id, const std::vector<BBox>& tables,
              const std::optional<std::string>& note = std::nullopt);
  std::optional<std::vector<BBox>> get(const std::string& sheet_id) const;
  std::map<std::string, std::vector<BBox>> latest() const;
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<BBox>> latest_;
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON, empty for 204
};

struct ServiceOptions {
  neuro::ModelConfig model_config;
  neuro::TrainConfig train_config;
  /// Scored after each retrain; the labeled sheets are used when absent.
  std::optional<neuro::EvalSet> heldout;
};

class LabelService {
 public:
  LabelService(std::vector<Sheet> corpus, std::filesystem::path journal,
               std::optional<neuro::Model> model, ServiceOptions options = {});
  ~LabelService();
  LabelService(const LabelService&) = delete;
  LabelService& operator=(const LabelService&) = delete;

  /// Routes one request; used by the HTTP server and directly by tests.
  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::map<std::string, std::string>& query, const std::string& body);

  /// Binds `host:port` (0 picks a free port) and serves on a background
  /// thread. Returns the bound port. Throws IoError when binding fails.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  /// Blocks until the current retrain job (if any) finishes.
  void wait_for_jobs();

 private:
  struct Job {
    std::string status = "pending";
    std::optional<EvalReport> eval;
    std::string error;
  };

  HttpResponse get_queue(const std::map<std::string, std::string>& query);
  HttpResponse get_sheet(const std::string& id);
  HttpResponse post_label(const std::string& id, const std::string& body);
  HttpResponse get_stats();
  HttpResponse post_retrain();
  HttpResponse get_job(const std::string& id);

  std::shared_ptr<const neuro::Model> current_model() const;
  std::vector<Detection> detections_for(const Sheet& s);
  void run_job(std::string job_id, std::vector<Sheet> sheets, std::vector<SheetAnnotation> labels);

  std::vector<Sheet> corpus_;
  std::map<std::string, std::size_t> index_;
  LabelStore store_;
  ServiceOptions options_;

  mutable std::mutex model_mu_;
  std::shared_ptr<const neuro::Model> model_;
  std::uint64_t model_version_ = 0;
  int iteration_ = 0;

  std::mutex cache_mu_;
  std::uint64_t cache_version_ = 0;
  std::map<std::string, std::vector<Detection>> cache_;

  std::mutex job_mu_;
  std::map<std::string, Job> jobs_;
  bool job_running_ = false;
  int next_job_ = 1;
  std::thread job_thread_;

  struct Server;
  std::unique_ptr<Server> server_;
  std::thread server_thread_;
};

}  // namespace sheetscan
