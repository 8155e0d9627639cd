#pragma once

// JSON API over a Service, plus static hosting of the review UI bundle.
//
//   GET  /api/health
//   GET  /api/hierarchy?level=BL1[&model=nb]
//   GET  /api/report?level=BL1&model=nb[&mode=dynamic]
//   GET  /api/sweep?level=BL1&model=nb
//   GET  /api/predictions?level=BL1&model=nb&max_confidence=0.6&limit=50&offset=0
//   GET  /api/corrections[?record=plant/id]
//   POST /api/corrections  {"record","level","corrected_code","annotator"[,"timestamp"]}
//   POST /api/retrain      {"level","model"[,"v"]}
//
// Failures answer {"code": "...", "message": "..."} with 400, 404 or 409.

#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "obdaml/metrics.hpp"
#include "obdaml/service.hpp"

namespace obdaml {

inline int http_status(Errc c) {
  switch (c) {
    case Errc::UnknownRecord:
    case Errc::NoModel:
    case Errc::UnknownClass: return 404;
    case Errc::Busy: return 409;
    case Errc::IoError: return 500;
    default: return 400;
  }
}

namespace detail {

inline nlohmann::json codes_json(const std::vector<ClassCode>& cs) {
  auto j = nlohmann::json::array();
  for (const auto& c : cs) j.push_back(c.str());
  return j;
}

inline std::string param(const httplib::Request& req, const char* name, std::string fallback = {}) {
  return req.has_param(name) ? req.get_param_value(name) : fallback;
}

inline std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    std::size_t used = 0;
    auto s = req.get_param_value(name);
    long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, std::string("parameter '") + name + "' must be a non-negative integer");
  }
}

inline double double_param(const httplib::Request& req, const char* name, double fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    std::size_t used = 0;
    auto s = req.get_param_value(name);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, std::string("parameter '") + name + "' must be a number");
  }
}

inline nlohmann::json sweep_json(const Snapshot& s) {
  auto pts = nlohmann::json::array();
  for (const auto& p : s.sweep) {
    pts.push_back({{"v", p.v},
                   {"macro_f1", p.macro_f1},
                   {"n_retained_classes", p.n_retained_classes},
                   {"n_excluded_validation", p.n_excluded_validation}});
  }
  return {{"version", s.version},
          {"level", to_string(s.level)},
          {"model", to_string(s.kind)},
          {"v", s.v},
          {"selected_v", s.selected_v ? nlohmann::json(*s.selected_v) : nlohmann::json(nullptr)},
          {"points", pts}};
}

}  // namespace detail

/// Route table bound to a Service; the server runs on its own thread.
class HttpServer {
 public:
  explicit HttpServer(Service& svc) : svc_(svc), server_(std::make_unique<httplib::Server>()) { routes(); }
  ~HttpServer() { stop(); }
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  httplib::Server& raw() { return *server_; }

  /// Binds (port 0 picks a free one) and starts serving in the background.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(Errc::IoError, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
  }

  /// Serves on the calling thread until stop() is called elsewhere.
  void run(const std::string& host, int port) {
    if (!server_->listen(host, port)) throw Error(Errc::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  using Handler = std::function<nlohmann::json(const httplib::Request&)>;

  void get(const std::string& path, Handler h) { server_->Get(path, wrap(std::move(h))); }
  void post(const std::string& path, Handler h) { server_->Post(path, wrap(std::move(h))); }

  static httplib::Server::Handler wrap(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(h(req).dump(), "application/json");
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(nlohmann::json{{"code", to_string(e.code())}, {"message", e.what()}}.dump(),
                        "application/json");
      } catch (const nlohmann::json::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"code", "ParseError"}, {"message", e.what()}}.dump(), "application/json");
      }
    };
  }

  BreakdownLevel level_of(const httplib::Request& req) const { return parse_level(detail::param(req, "level", "BL1")); }
  ModelKind kind_of(const httplib::Request& req) const { return parse_model_kind(detail::param(req, "model", "nb")); }

  void routes() {
    get("/api/health", [this](const httplib::Request&) {
      auto snaps = nlohmann::json::array();
      for (const auto& s : svc_.snapshots()) {
        snaps.push_back({{"level", to_string(s->level)},
                         {"model", to_string(s->kind)},
                         {"version", s->version},
                         {"v", s->v}});
      }
      return nlohmann::json{{"status", "ok"},
                            {"records", svc_.dataset().size()},
                            {"retraining", svc_.retraining()},
                            {"snapshots", snaps}};
    });

    get("/api/hierarchy", [this](const httplib::Request& req) {
      auto level = level_of(req);
      const auto& h = svc_.hierarchy(level);
      auto codes = nlohmann::json::array();
      for (const auto& c : h.codes()) {
        auto label = h.label(c);
        auto parent = parent_of(c);
        nlohmann::json e{{"code", c.str()}, {"depth", c.level()}};
        e["label"] = label ? nlohmann::json(*label) : nlohmann::json(nullptr);
        e["parent"] = parent ? nlohmann::json(parent->str()) : nlohmann::json(nullptr);
        codes.push_back(std::move(e));
      }
      nlohmann::json out{{"level", to_string(level)}, {"codes", codes}};
      if (req.has_param("model")) {
        auto snap = svc_.snapshot(level, kind_of(req));
        auto retained = nlohmann::json::array();
        for (const auto& [c, n] : snap->dynamic.rollup.mapping.retained.counts) retained.push_back(c.str());
        out["retained"] = retained;
        out["version"] = snap->version;
      }
      return out;
    });

    get("/api/report", [this](const httplib::Request& req) {
      auto snap = svc_.snapshot(level_of(req), kind_of(req));
      auto mode = parse_mode(detail::param(req, "mode", "dynamic"));
      auto j = report_to_json(mode == EvalMode::Flat ? snap->flat : snap->dynamic.report);
      j["version"] = snap->version;
      j["v"] = snap->v;
      return j;
    });

    get("/api/sweep", [this](const httplib::Request& req) {
      return detail::sweep_json(*svc_.snapshot(level_of(req), kind_of(req)));
    });

    get("/api/predictions", [this](const httplib::Request& req) {
      auto level = level_of(req);
      auto page = svc_.list_low_confidence(level, kind_of(req), detail::double_param(req, "max_confidence", 1.0),
                                           detail::size_param(req, "limit", 50), detail::size_param(req, "offset", 0));
      std::map<std::string, Correction> active;
      for (const auto& c : svc_.active_corrections())
        if (c.level == level) active[c.record_key] = c;
      auto items = nlohmann::json::array();
      for (const auto& it : page.items) {
        nlohmann::json e{{"record", it.prediction.record_key},
                         {"predicted", it.prediction.predicted.str()},
                         {"confidence", it.prediction.confidence},
                         {"path", detail::codes_json(it.path)}};
        if (it.record) {
          e["description"] = it.record->description;
          e["plant"] = it.record->plant_id;
          auto lbl = it.record->label(level);
          e["label"] = lbl ? nlohmann::json(lbl->str()) : nlohmann::json(nullptr);
        }
        auto c = active.find(it.prediction.record_key);
        e["correction"] = c == active.end() ? nlohmann::json(nullptr) : correction_to_json(c->second);
        items.push_back(std::move(e));
      }
      return nlohmann::json{{"version", page.version}, {"total", page.total}, {"offset", page.offset},
                            {"limit", page.limit},     {"items", items}};
    });

    get("/api/corrections", [this](const httplib::Request& req) {
      std::optional<std::string> rec;
      if (req.has_param("record")) rec = req.get_param_value("record");
      auto active = nlohmann::json::array();
      for (const auto& c : svc_.active_corrections(rec)) active.push_back(correction_to_json(c));
      auto history = nlohmann::json::array();
      for (const auto& c : svc_.corrections_log().history())
        if (!rec || c.record_key == *rec) history.push_back(correction_to_json(c));
      return nlohmann::json{{"active", active}, {"history", history}};
    });

    post("/api/corrections", [this](const httplib::Request& req) {
      auto body = nlohmann::json::parse(req.body);
      auto c = correction_from_json(body);
      c.sequence = 0;
      c.sequence = svc_.submit_correction(c);
      return correction_to_json(c);
    });

    post("/api/retrain", [this](const httplib::Request& req) {
      auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
      auto level = parse_level(body.value("level", std::string("BL1")));
      auto kind = parse_model_kind(body.value("model", std::string("nb")));
      std::optional<std::size_t> v;
      if (body.contains("v") && !body["v"].is_null()) v = body["v"].get<std::size_t>();
      auto s = svc_.retrain(level, kind, v);
      return nlohmann::json{
          {"version", s.version},
          {"before_macro_f1", s.before_macro_f1 ? nlohmann::json(*s.before_macro_f1) : nlohmann::json(nullptr)},
          {"after_macro_f1", s.after_macro_f1},
          {"v", s.v},
          {"n_retained_classes", s.n_retained_classes},
          {"corrections_applied", s.corrections_applied}};
    });

    if (svc_.options().static_dir) server_->set_mount_point("/", *svc_.options().static_dir);
  }

  Service& svc_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace obdaml
