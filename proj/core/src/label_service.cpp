// SPDX-License-Identifier: Apache-2.0
#include "sheetscan/label_service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "sheetscan/error.hpp"
#include "sheetscan/ingest.hpp"
#include "sheetscan/neuro/detector.hpp"
#include "sheetscan/rng.hpp"

namespace sheetscan {
namespace {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

HttpResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

HttpResponse ok(const json& body) { return {200, body.dump()}; }

std::vector<BBox> tables_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": tables must be an array");
  std::vector<BBox> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(box_from_json(j[i], where + "/" + std::to_string(i)));
  return out;
}

json tables_to_json(const std::vector<BBox>& tables) {
  json arr = json::array();
  for (const auto& b : tables) arr.push_back(box_to_json(b));
  return arr;
}

}  // namespace

LabelStore::LabelStore(std::filesystem::path journal) : path_(std::move(journal)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) throw IoError("cannot open label journal " + path_.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path_.string() + ":" + std::to_string(line_no);
    try {
      const json e = json::parse(line);
      latest_[e.at("sheet_id").get<std::string>()] = tables_from_json(e.at("tables"), where);
    } catch (const json::exception& ex) {
      throw SchemaError(where + ": " + ex.what());
    }
  }
}

void LabelStore::append(const std::string& sheet_id, const std::vector<BBox>& tables,
                        const std::optional<std::string>& note) {
  json e{{"sheet_id", sheet_id}, {"tables", tables_to_json(tables)}, {"timestamp", utc_timestamp()}};
  if (note) e["labeler_note"] = *note;
  const std::lock_guard lock(mu_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  out << e.dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to label journal " + path_.string());
  latest_[sheet_id] = tables;
}

std::optional<std::vector<BBox>> LabelStore::get(const std::string& sheet_id) const {
  const std::lock_guard lock(mu_);
  const auto it = latest_.find(sheet_id);
  if (it == latest_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::vector<BBox>> LabelStore::latest() const {
  const std::lock_guard lock(mu_);
  return latest_;
}

std::size_t LabelStore::size() const {
  const std::lock_guard lock(mu_);
  return latest_.size();
}

struct LabelService::Server {
  httplib::Server http;
};

LabelService::LabelService(std::vector<Sheet> corpus, std::filesystem::path journal,
                           std::optional<neuro::Model> model, ServiceOptions options)
    : corpus_(std::move(corpus)), store_(std::move(journal)), options_(std::move(options)) {
  for (std::size_t i = 0; i < corpus_.size(); ++i) index_[corpus_[i].id()] = i;
  model_ = std::make_shared<const neuro::Model>(
      model ? std::move(*model)
            : neuro::Model(options_.model_config, derive_seed(options_.train_config.seed, 0)));
}

LabelService::~LabelService() {
  stop();
  if (job_thread_.joinable()) job_thread_.join();
}

std::shared_ptr<const neuro::Model> LabelService::current_model() const {
  const std::lock_guard lock(model_mu_);
  return model_;
}

std::vector<Detection> LabelService::detections_for(const Sheet& s) {
  std::uint64_t version;
  std::shared_ptr<const neuro::Model> model;
  {
    const std::lock_guard lock(model_mu_);
    version = model_version_;
    model = model_;
  }
  {
    const std::lock_guard lock(cache_mu_);
    if (cache_version_ != version) {
      cache_.clear();
      cache_version_ = version;
    }
    const auto it = cache_.find(s.id());
    if (it != cache_.end()) return it->second;
  }
  auto dets = neuro::detect(*model, s);
  const std::lock_guard lock(cache_mu_);
  if (cache_version_ == version) cache_[s.id()] = dets;
  return dets;
}

HttpResponse LabelService::handle(const std::string& method, const std::string& path,
                                  const std::map<std::string, std::string>& query,
                                  const std::string& body) {
  try {
    const auto tail = [&](const std::string& prefix) -> std::optional<std::string> {
      if (!path.starts_with(prefix) || path.size() == prefix.size()) return std::nullopt;
      std::string rest = path.substr(prefix.size());
      if (rest.find('/') != std::string::npos) return std::nullopt;
      return rest;
    };
    if (method == "GET" && path == "/api/queue") return get_queue(query);
    if (method == "GET" && path == "/api/stats") return get_stats();
    if (method == "POST" && path == "/api/retrain") return post_retrain();
    if (method == "GET") {
      if (auto id = tail("/api/sheet/")) return get_sheet(*id);
      if (auto id = tail("/api/jobs/")) return get_job(*id);
    }
    if (method == "POST") {
      if (auto id = tail("/api/labels/")) return post_label(*id, body);
    }
    return error_response(404, "no route for " + method + " " + path);
  } catch (const Error& e) {
    return error_response(500, e.code() + " " + e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

HttpResponse LabelService::get_queue(const std::map<std::string, std::string>& query) {
  std::optional<int> limit;
  if (const auto it = query.find("limit"); it != query.end()) {
    try {
      std::size_t used = 0;
      limit = std::stoi(it->second, &used);
      if (used != it->second.size() || *limit < 0) throw std::invalid_argument("limit");
    } catch (const std::exception&) {
      return error_response(400, "limit must be a non-negative integer");
    }
  }
  const auto labels = store_.latest();
  std::vector<ScoredSheet> pool;
  for (const auto& s : corpus_) {
    if (labels.contains(s.id())) continue;
    pool.push_back({s.id(), uncertainty(s, detections_for(s))});
  }
  json out = json::array();
  for (const auto& r : select_sheets(std::move(pool), std::nullopt, limit)) {
    out.push_back({{"sheet_id", r.sheet_id}, {"overall", r.u.overall}, {"measures", r.u.measures()}});
  }
  return ok(out);
}

HttpResponse LabelService::get_sheet(const std::string& id) {
  const auto it = index_.find(id);
  if (it == index_.end()) return error_response(404, "unknown sheet '" + id + "'");
  const Sheet& s = corpus_[it->second];
  const json dets = json::parse(write_detections({{id, detections_for(s)}})).at(id);
  const auto label = store_.get(id);
  return ok({{"sheet", sheet_to_json(s)},
             {"detections", dets},
             {"label", label ? tables_to_json(*label) : json(nullptr)}});
}

HttpResponse LabelService::post_label(const std::string& id, const std::string& body) {
  const auto it = index_.find(id);
  if (it == index_.end()) return error_response(404, "unknown sheet '" + id + "'");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  SheetAnnotation ann{id, {}};
  std::optional<std::string> note;
  try {
    if (!j.is_object() || !j.contains("tables")) throw SchemaError("body must be an object with 'tables'");
    ann.tables = tables_from_json(j.at("tables"), "/tables");
    if (j.contains("labeler_note")) {
      if (!j["labeler_note"].is_string()) throw SchemaError("labeler_note must be a string");
      note = j["labeler_note"].get<std::string>();
    }
  } catch (const SchemaError& e) {
    return error_response(400, e.what());
  } catch (const ParseError& e) {
    return error_response(400, e.what());
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  }
  try {
    validate_annotation(ann, corpus_[it->second].bounds());
  } catch (const ValidationError& e) {
    return error_response(422, e.what());
  }
  store_.append(id, ann.tables, note);
  return {204, ""};
}

HttpResponse LabelService::get_stats() {
  std::size_t labeled = 0;
  for (const auto& [id, tables] : store_.latest()) labeled += index_.contains(id) ? 1 : 0;
  int iteration;
  {
    const std::lock_guard lock(model_mu_);
    iteration = iteration_;
  }
  return ok({{"labeled", labeled}, {"unlabeled", corpus_.size() - labeled}, {"iteration", iteration}});
}

HttpResponse LabelService::post_retrain() {
  const std::lock_guard lock(job_mu_);
  if (job_running_) return error_response(409, "a retrain job is already running");
  if (job_thread_.joinable()) job_thread_.join();
  std::vector<Sheet> sheets;
  std::vector<SheetAnnotation> labels;
  for (const auto& [id, tables] : store_.latest()) {
    const auto it = index_.find(id);
    if (it == index_.end()) continue;
    sheets.push_back(corpus_[it->second]);
    labels.push_back({id, tables});
  }
  const std::string job_id = "job-" + std::to_string(next_job_++);
  jobs_[job_id] = Job{};
  job_running_ = true;
  job_thread_ = std::thread(&LabelService::run_job, this, job_id, std::move(sheets), std::move(labels));
  return {202, json{{"job_id", job_id}}.dump()};
}

void LabelService::run_job(std::string job_id, std::vector<Sheet> sheets,
                           std::vector<SheetAnnotation> labels) {
  {
    const std::lock_guard lock(job_mu_);
    jobs_[job_id].status = "running";
  }
  try {
    neuro::TrainConfig tcfg = options_.train_config;
    auto model = std::make_shared<const neuro::Model>(
        neuro::train(sheets, labels, options_.model_config, tcfg).model);
    const neuro::EvalSet own{sheets, labels};
    const neuro::EvalSet& ev = options_.heldout ? *options_.heldout : own;
    const EvalReport report = match_and_score(neuro::detect_all(*model, ev.sheets), gold_map(ev.labels), 2);
    {
      const std::lock_guard lock(model_mu_);
      model_ = std::move(model);
      ++model_version_;
      ++iteration_;
    }
    const std::lock_guard lock(job_mu_);
    jobs_[job_id].status = "done";
    jobs_[job_id].eval = report;
    job_running_ = false;
  } catch (const std::exception& e) {
    const std::lock_guard lock(job_mu_);
    jobs_[job_id].status = "failed";
    jobs_[job_id].error = e.what();
    job_running_ = false;
  }
}

HttpResponse LabelService::get_job(const std::string& id) {
  const std::lock_guard lock(job_mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return error_response(404, "unknown job '" + id + "'");
  json out{{"job_id", id}, {"status", it->second.status}};
  if (it->second.eval) out["eval"] = to_json(*it->second.eval);
  if (!it->second.error.empty()) out["error"] = it->second.error;
  return ok(out);
}

void LabelService::wait_for_jobs() {
  std::thread t;
  {
    const std::lock_guard lock(job_mu_);
    t = std::move(job_thread_);
  }
  if (t.joinable()) t.join();
}

namespace {

void install_routes(httplib::Server& http, LabelService& svc) {
  const auto forward = [&svc](const char* method) {
    return [&svc, method](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query.emplace(k, v);
      const HttpResponse r = svc.handle(method, req.path, query, req.body);
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      if (!r.body.empty()) res.set_content(r.body, "application/json");
    };
  };
  http.Get(".*", forward("GET"));
  http.Post(".*", forward("POST"));
  http.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace

int LabelService::start(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  int bound = port;
  if (port == 0) {
    bound = server_->http.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
  } else if (!server_->http.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  server_thread_ = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
  return bound;
}

void LabelService::listen(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  install_routes(server_->http, *this);
  if (!server_->http.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

void LabelService::stop() {
  if (server_) server_->http.stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace sheetscan
