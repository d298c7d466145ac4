#pragma once

#include <algorithm>
#include <limits>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rsv/artifact.hpp"
#include "rsv/error.hpp"
#include "rsv/panel.hpp"
#include "rsv/states.hpp"

namespace rsv::service {

using nlohmann::json;

struct ServiceContext {
  artifact::ModelArtifact artifact;
  std::vector<panel::WeeklyPanelRow> history;
  Roster roster;
  std::string cors_origin = "*";
};

struct Response {
  int status = 200;
  json body;
};

struct FeatureRange {
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<FeatureRange> feature_ranges(const std::vector<panel::WeeklyPanelRow>& rows) {
  std::vector<FeatureRange> out(kNumFeatures);
  for (const auto& r : rows)
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      auto& g = out[f];
      const double v = r.features[f];
      if (std::isnan(g.min) || v < g.min) g.min = v;
      if (std::isnan(g.max) || v > g.max) g.max = v;
    }
  return out;
}

/// Request handlers as plain functions of the context, independent of HTTP.
class Handlers {
 public:
  explicit Handlers(ServiceContext ctx) : ctx_(std::move(ctx)), ranges_(feature_ranges(ctx_.history)) {}

  const ServiceContext& context() const { return ctx_; }

  Response health() const { return {200, {{"status", "ok"}, {"model_id", ctx_.artifact.id}}}; }

  Response schema() const {
    const auto& s = ctx_.artifact.schema();
    auto features = json::array();
    for (std::size_t f = 0; f < s.size(); ++f) {
      json e{{"name", s.names[f]}, {"unit", s.units[f]}, {"categorical", static_cast<bool>(s.categorical[f])}};
      const auto& r = ranges_[f];
      e["min"] = std::isnan(r.min) ? json() : json(r.min);
      e["max"] = std::isnan(r.max) ? json() : json(r.max);
      e["step"] = s.categorical[f] ? json(1) : (std::isnan(r.min) ? json() : json((r.max - r.min) / 100.0));
      features.push_back(e);
    }
    return {200,
            {{"features", features},
             {"model_kind", learners::to_string(ctx_.artifact.kind())},
             {"model_id", ctx_.artifact.id}}};
  }

  Response states() const {
    auto list = json::array();
    for (const auto& s : ctx_.roster.list()) list.push_back(s.str());
    return {200, {{"states", list}}};
  }

  Response trend(const std::string* state_param) const {
    if (state_param == nullptr) return validation({"state"}, {}, {}, "query parameter 'state' is required");
    const auto state = ctx_.roster.resolve(*state_param);
    if (!state) return validation({}, {}, {"state"}, "'" + *state_param + "' is not a roster state");
    std::vector<const panel::WeeklyPanelRow*> rows;
    for (const auto& r : ctx_.history)
      if (r.state == *state) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->week < b->week; });
    auto series = json::array();
    for (const auto* r : rows)
      series.push_back({{"week_ending", r->week.end_date().iso()},
                        {"mmwr_year", r->week.year()},
                        {"mmwr_week", r->week.week()},
                        {"rate", r->rate},
                        {"label", to_string(r->label)}});
    return {200, {{"state", state->str()}, {"series", series}}};
  }

  Response importance() const {
    return {200, {{"model_id", ctx_.artifact.id}, {"importance", evaluation::to_json(learners::variable_importance(ctx_.artifact.model))}}};
  }

  Response report() const {
    if (!ctx_.artifact.metadata.evaluation)
      return {404, {{"error", "NotFound"}, {"message", "the loaded artifact carries no evaluation report"}}};
    return {200, evaluation::to_json(*ctx_.artifact.metadata.evaluation)};
  }

  /// Body: {"state": "CO", "features": {"WVAL": 3.1, ...}} with every schema
  /// feature present and nothing else. RSV_Season also accepts a boolean.
  Response predict(std::string_view body) const {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      return validation({}, {}, {"body"}, "request body is not valid JSON");
    }
    if (!req.is_object()) return validation({}, {}, {"body"}, "request body must be a JSON object");

    std::vector<std::string> missing, unknown, invalid;
    for (const auto& [key, value] : req.items())
      if (key != "state" && key != "features") unknown.push_back(key);

    std::optional<StateCode> state;
    if (!req.contains("state")) missing.push_back("state");
    else if (!req["state"].is_string() || !(state = ctx_.roster.resolve(req["state"].get<std::string>())))
      invalid.push_back("state");

    const auto& schema = ctx_.artifact.schema();
    std::vector<double> x(schema.size(), 0.0);
    if (!req.contains("features") || !req["features"].is_object()) {
      (req.contains("features") ? invalid : missing).push_back("features");
    } else {
      const auto& feats = req["features"];
      for (std::size_t f = 0; f < schema.size(); ++f) {
        const auto& name = schema.names[f];
        if (!feats.contains(name)) {
          missing.push_back(name);
          continue;
        }
        const auto& v = feats[name];
        if (v.is_number()) x[f] = v.get<double>();
        else if (v.is_boolean() && schema.categorical[f]) x[f] = v.get<bool>() ? 1.0 : 0.0;
        else invalid.push_back(name);
      }
      for (const auto& [key, value] : feats.items())
        if (std::find(schema.names.begin(), schema.names.end(), key) == schema.names.end()) unknown.push_back(key);
    }
    if (!missing.empty() || !unknown.empty() || !invalid.empty())
      return validation(missing, unknown, invalid, "request does not match the feature schema");

    const auto probs = learners::predict_proba(ctx_.artifact.model, x);
    json p;
    for (auto c : kAllClasses) p[std::string(to_string(c))] = probs[index_of(c)];
    return {200,
            {{"state", state->str()},
             {"class", to_string(argmax_severe(probs))},
             {"probabilities", p},
             {"model_id", ctx_.artifact.id},
             {"model_kind", learners::to_string(ctx_.artifact.kind())}}};
  }

 private:
  static Response validation(std::vector<std::string> missing, std::vector<std::string> unknown,
                             std::vector<std::string> invalid, const std::string& message) {
    std::vector<std::string> fields;
    for (const auto* v : {&missing, &unknown, &invalid}) fields.insert(fields.end(), v->begin(), v->end());
    return {422,
            {{"error", "ValidationError"},
             {"message", message},
             {"fields", fields},
             {"missing", missing},
             {"unknown", unknown},
             {"invalid", invalid}}};
  }

  ServiceContext ctx_;
  std::vector<FeatureRange> ranges_;
};

/// HTTP front end over Handlers. The model is shared read-only by the
/// server's worker threads.
class Server {
 public:
  explicit Server(ServiceContext ctx) : handlers_(std::make_shared<Handlers>(std::move(ctx))) { install(); }

  ~Server() { stop(); }
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = http_.bind_to_any_port(host);
      if (port_ < 0) fail(ErrorKind::BindFailure, "cannot bind " + host + " to any port");
    } else {
      if (!http_.bind_to_port(host, port)) fail(ErrorKind::BindFailure, "cannot bind " + host + ":" + std::to_string(port));
      port_ = port;
    }
    return port_;
  }

  /// Blocks until stop() is called from another thread.
  void run() { http_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { run(); });
    http_.wait_until_ready();
  }

  void stop() {
    if (http_.is_running()) http_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  const Handlers& handlers() const { return *handlers_; }

 private:
  static void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  void install() {
    const auto& origin = handlers_->context().cors_origin;
    http_.set_default_headers({{"Access-Control-Allow-Origin", origin},
                               {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                               {"Access-Control-Allow-Headers", "Content-Type"}});
    http_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    auto h = handlers_;
    http_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http_.Get("/health", [h](const httplib::Request&, httplib::Response& res) { send(res, h->health()); });
    http_.Get("/schema", [h](const httplib::Request&, httplib::Response& res) { send(res, h->schema()); });
    http_.Get("/states", [h](const httplib::Request&, httplib::Response& res) { send(res, h->states()); });
    http_.Get("/importance", [h](const httplib::Request&, httplib::Response& res) { send(res, h->importance()); });
    http_.Get("/report", [h](const httplib::Request&, httplib::Response& res) { send(res, h->report()); });
    http_.Get("/trend", [h](const httplib::Request& req, httplib::Response& res) {
      if (req.has_param("state")) {
        const auto s = req.get_param_value("state");
        send(res, h->trend(&s));
      } else {
        send(res, h->trend(nullptr));
      }
    });
    http_.Post("/predict", [h](const httplib::Request& req, httplib::Response& res) { send(res, h->predict(req.body)); });
    http_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send(res, {500, {{"error", "Internal"}, {"message", what}}});
    });
  }

  std::shared_ptr<Handlers> handlers_;
  httplib::Server http_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace rsv::service
