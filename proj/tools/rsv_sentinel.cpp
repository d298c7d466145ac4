#include <csignal>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsv/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

void report_error(std::string_view kind, std::string_view message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (auto t = rsv::csv::trim(item); !t.empty()) out.emplace_back(t);
  return out;
}

rsv::service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsv-sentinel: RSV hospitalization risk pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> exclude;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--seed", seed, "top-level seed (overrides the config)");
  app.add_option("--exclude-states", exclude, "comma-separated roster states to drop from the panel");
  app.add_option("--out", out_dir, "output directory (overrides the config)");

  const std::vector<std::pair<std::string, std::string>> stages{
      {"ingest", "parse the four source snapshots"},
      {"build-panel", "join sources into the weekly panel and split it"},
      {"explore", "correlation, distribution and trend tables"},
      {"train", "cross-validate and fit CART, Random Forest and Boosting"},
      {"evaluate", "score the three models on the test set"},
      {"predict", "one prediction from a JSON feature file"},
      {"serve", "start the HTTP prediction service"},
      {"report", "model comparison table"}};
  std::string input;
  std::optional<std::string> model_name;
  std::optional<std::string> host;
  std::optional<int> port;
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "predict") {
      sub->add_option("--input", input, "feature file: {\"state\": ..., \"features\": {...}}")->required();
      sub->add_option("--model", model_name, "cart, forest or boosting");
    }
    if (name == "serve") {
      sub->add_option("--model", model_name, "cart, forest or boosting");
      sub->add_option("--host", host, "bind address");
      sub->add_option("--port", port, "bind port");
    }
  }
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return kExitUsage;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  rsv::config::RunConfig cfg;
  try {
    cfg = rsv::config::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (exclude) cfg.exclude_states = split_list(*exclude);
    if (out_dir) cfg.out = *out_dir;
    if (host) cfg.service.host = *host;
    if (port) cfg.service.port = *port;
    if (model_name) {
      auto k = rsv::learners::parse_model_kind(*model_name);
      if (!k) rsv::fail(rsv::ErrorKind::ConfigError, "--model must be cart, forest or boosting");
      cfg.service.model = *k;
    }
    cfg.validate();
  } catch (const rsv::Error& e) {
    report_error(rsv::to_string(e.kind()), e.what());
    return e.kind() == rsv::ErrorKind::UnknownState ? kExitData : kExitUsage;
  }

  try {
    namespace p = rsv::pipeline;
    if (stage == "serve") {
      rsv::service::Server server(p::service_context(cfg));
      const int bound = server.bind(cfg.service.host, cfg.service.port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << nlohmann::json{{"listening", cfg.service.host + ":" + std::to_string(bound)},
                                  {"model_id", server.handlers().context().artifact.id}}
                       .dump()
                << std::endl;
      server.run();
      g_server = nullptr;
      return kExitOk;
    }
    p::StageResult result;
    if (stage == "ingest") result = p::run_ingest(cfg);
    else if (stage == "build-panel") result = p::run_build_panel(cfg);
    else if (stage == "explore") result = p::run_explore(cfg);
    else if (stage == "train") result = p::run_train(cfg);
    else if (stage == "evaluate") result = p::run_evaluate(cfg);
    else if (stage == "predict") result = p::run_predict(cfg, input);
    else if (stage == "report") result = p::run_report(cfg);
    p::write_manifest(cfg, stage, result);
    std::cout << (result.console.empty() ? result.summary.dump(2) + "\n" : result.console);
    return kExitOk;
  } catch (const rsv::Error& e) {
    report_error(rsv::to_string(e.kind()), e.what());
    return e.kind() == rsv::ErrorKind::ConfigError ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return kExitInternal;
  }
}
