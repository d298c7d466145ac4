#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsv/analysis.hpp"
#include "rsv/error.hpp"
#include "rsv/evaluation.hpp"
#include "rsv/hash.hpp"
#include "rsv/ingest.hpp"
#include "rsv/panel.hpp"
#include "rsv/random.hpp"
#include "rsv/states.hpp"

namespace rsv::config {

using nlohmann::json;
namespace fs = std::filesystem;

struct SourcePaths {
  fs::path rsvnet;
  fs::path nwss;
  fs::path meteo;
  fs::path airquality;
};

struct Grids {
  std::vector<double> cart_cp{0.001, 0.005, 0.01, 0.05};
  std::vector<std::size_t> forest_mtry{2, 3, 5};
  std::vector<std::size_t> forest_n_trees{300, 500};
  std::vector<double> boosting_learning_rate{0.05, 0.1};
  std::vector<std::size_t> boosting_n_stages{100, 200};
  std::vector<std::size_t> boosting_max_depth{2, 3};
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "http://localhost:5173";
  learners::ModelKind model = learners::ModelKind::Forest;
};

/// Seeds fanned out from the single top-level seed.
struct Seeds {
  std::uint64_t root = 0;
  std::uint64_t split = 0;
  std::uint64_t cv = 0;
  std::uint64_t forest = 0;
  std::uint64_t boosting = 0;

  static Seeds from(std::uint64_t root) {
    return {root, derive_seed(root, "split"), derive_seed(root, "cv"), derive_seed(root, "forest"),
            derive_seed(root, "boosting")};
  }
};

struct RunConfig {
  SourcePaths sources;
  std::vector<std::string> roster = default_roster_codes();
  panel::RateFilter rate_filter;
  std::size_t min_days = ingest::kDefaultMinDays;
  double reject_ceiling = 0.05;
  double train_fraction = 0.8;
  std::uint64_t seed = 2024;
  std::size_t cv_folds = 10;
  Grids grids;
  double prune_threshold = analysis::kDefaultPruneThreshold;
  std::vector<std::string> keep_rules = analysis::default_keep_rules();
  std::size_t histogram_bins = 40;
  std::vector<std::string> exclude_states;
  fs::path out = "out";
  ServiceConfig service;

  Seeds seeds() const { return Seeds::from(seed); }

  Roster full_roster() const { return Roster(roster); }

  std::vector<StateCode> excluded() const {
    std::vector<StateCode> out;
    const auto r = full_roster();
    for (const auto& s : exclude_states) {
      auto c = StateCode::parse(s);
      if (!c || !r.contains(*c)) fail(ErrorKind::UnknownState, "cannot exclude '" + s + "': not in the roster");
      out.push_back(*c);
    }
    return out;
  }

  void validate() const {
    if (roster.empty()) fail(ErrorKind::ConfigError, "roster is empty");
    full_roster();
    excluded();
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorKind::ConfigError, "split.fraction must lie in (0, 1)");
    if (!(reject_ceiling >= 0.0 && reject_ceiling <= 1.0)) fail(ErrorKind::ConfigError, "reject_ceiling must lie in [0, 1]");
    if (min_days < 1 || min_days > 7) fail(ErrorKind::ConfigError, "min_days must lie in 1..7");
    if (cv_folds < 2) fail(ErrorKind::ConfigError, "cv.folds must be at least 2");
    if (histogram_bins == 0) fail(ErrorKind::ConfigError, "histogram_bins must be positive");
    if (!(prune_threshold > 0.0 && prune_threshold < 1.0)) fail(ErrorKind::ConfigError, "prune_threshold must lie in (0, 1)");
    const auto& g = grids;
    if (g.cart_cp.empty() || g.forest_mtry.empty() || g.forest_n_trees.empty() || g.boosting_learning_rate.empty() ||
        g.boosting_n_stages.empty() || g.boosting_max_depth.empty())
      fail(ErrorKind::ConfigError, "every grid needs at least one value");
    for (double cp : g.cart_cp)
      if (!(cp >= 0.0)) fail(ErrorKind::ConfigError, "cart complexity parameters must be non-negative");
    for (auto m : g.forest_mtry)
      if (m < 1 || m > kNumFeatures) fail(ErrorKind::ConfigError, "forest mtry must lie in 1..15");
    for (auto n : g.forest_n_trees)
      if (n < 1) fail(ErrorKind::ConfigError, "forest n_trees must be positive");
    for (double lr : g.boosting_learning_rate)
      if (!(lr > 0.0 && lr <= 1.0)) fail(ErrorKind::ConfigError, "boosting learning_rate must lie in (0, 1]");
    if (service.port < 0 || service.port > 65535) fail(ErrorKind::ConfigError, "service.port out of range");
  }

  std::vector<evaluation::LearnerParams> cart_grid() const {
    std::vector<evaluation::LearnerParams> out;
    for (double cp : grids.cart_cp) {
      learners::TreeParams p;
      p.complexity_parameter = cp;
      out.emplace_back(p);
    }
    return out;
  }

  std::vector<evaluation::LearnerParams> forest_grid() const {
    std::vector<evaluation::LearnerParams> out;
    for (auto mtry : grids.forest_mtry)
      for (auto n : grids.forest_n_trees) {
        learners::ForestParams p;
        p.mtry = mtry;
        p.n_trees = n;
        p.seed = seeds().forest;
        out.emplace_back(p);
      }
    return out;
  }

  std::vector<evaluation::LearnerParams> boosting_grid() const {
    std::vector<evaluation::LearnerParams> out;
    for (double lr : grids.boosting_learning_rate)
      for (auto n : grids.boosting_n_stages)
        for (auto d : grids.boosting_max_depth) {
          learners::BoostingParams p;
          p.learning_rate = lr;
          p.n_stages = n;
          p.max_depth = d;
          p.seed = seeds().boosting;
          out.emplace_back(p);
        }
    return out;
  }

  std::vector<evaluation::LearnerParams> grid(learners::ModelKind kind) const {
    switch (kind) {
      case learners::ModelKind::Cart: return cart_grid();
      case learners::ModelKind::Forest: return forest_grid();
      case learners::ModelKind::Boosting: return boosting_grid();
    }
    return {};
  }
};

inline json to_json(const RunConfig& c) {
  const auto s = c.seeds();
  return {
      {"sources",
       {{"rsvnet", c.sources.rsvnet.string()},
        {"nwss", c.sources.nwss.string()},
        {"meteo", c.sources.meteo.string()},
        {"airquality", c.sources.airquality.string()}}},
      {"roster", c.roster},
      {"rate_filter", {{"age_group", c.rate_filter.age_group}, {"sex", c.rate_filter.sex}, {"race", c.rate_filter.race}}},
      {"min_days", c.min_days},
      {"reject_ceiling", c.reject_ceiling},
      {"split", {{"fraction", c.train_fraction}}},
      {"seed", c.seed},
      {"derived_seeds", {{"split", s.split}, {"cv", s.cv}, {"forest", s.forest}, {"boosting", s.boosting}}},
      {"cv", {{"folds", c.cv_folds}}},
      {"grids",
       {{"cart", {{"complexity_parameter", c.grids.cart_cp}}},
        {"forest", {{"mtry", c.grids.forest_mtry}, {"n_trees", c.grids.forest_n_trees}}},
        {"boosting",
         {{"learning_rate", c.grids.boosting_learning_rate},
          {"n_stages", c.grids.boosting_n_stages},
          {"max_depth", c.grids.boosting_max_depth}}}}},
      {"prune_threshold", c.prune_threshold},
      {"keep_rules", c.keep_rules},
      {"histogram_bins", c.histogram_bins},
      {"exclude_states", c.exclude_states},
      {"out", c.out.string()},
      {"service",
       {{"host", c.service.host},
        {"port", c.service.port},
        {"cors_origin", c.service.cors_origin},
        {"model", learners::to_string(c.service.model)}}},
  };
}

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.contains(k)) fail(ErrorKind::ConfigError, "unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::ConfigError, std::string("config key '") + key + "' has the wrong type");
  }
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace detail

/// Relative paths in the file are taken relative to the file's directory.
inline RunConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  using detail::check_keys;
  using detail::read;
  check_keys(j, "config",
             {"sources", "roster", "rate_filter", "min_days", "reject_ceiling", "split", "seed", "cv", "grids",
              "prune_threshold", "keep_rules", "histogram_bins", "exclude_states", "out", "service", "derived_seeds"});
  RunConfig c;
  if (j.contains("sources")) {
    const auto& s = j["sources"];
    check_keys(s, "sources", {"rsvnet", "nwss", "meteo", "airquality"});
    auto path_of = [&](const char* key) {
      std::string p;
      read(s, key, p);
      return detail::resolve(base_dir, p);
    };
    c.sources.rsvnet = path_of("rsvnet");
    c.sources.nwss = path_of("nwss");
    c.sources.meteo = path_of("meteo");
    c.sources.airquality = path_of("airquality");
  }
  read(j, "roster", c.roster);
  if (j.contains("rate_filter")) {
    const auto& f = j["rate_filter"];
    check_keys(f, "rate_filter", {"age_group", "sex", "race"});
    read(f, "age_group", c.rate_filter.age_group);
    read(f, "sex", c.rate_filter.sex);
    read(f, "race", c.rate_filter.race);
  }
  read(j, "min_days", c.min_days);
  read(j, "reject_ceiling", c.reject_ceiling);
  if (j.contains("split")) {
    check_keys(j["split"], "split", {"fraction"});
    read(j["split"], "fraction", c.train_fraction);
  }
  read(j, "seed", c.seed);
  if (j.contains("cv")) {
    check_keys(j["cv"], "cv", {"folds"});
    read(j["cv"], "folds", c.cv_folds);
  }
  if (j.contains("grids")) {
    const auto& g = j["grids"];
    check_keys(g, "grids", {"cart", "forest", "boosting"});
    if (g.contains("cart")) {
      check_keys(g["cart"], "grids.cart", {"complexity_parameter"});
      read(g["cart"], "complexity_parameter", c.grids.cart_cp);
    }
    if (g.contains("forest")) {
      check_keys(g["forest"], "grids.forest", {"mtry", "n_trees"});
      read(g["forest"], "mtry", c.grids.forest_mtry);
      read(g["forest"], "n_trees", c.grids.forest_n_trees);
    }
    if (g.contains("boosting")) {
      check_keys(g["boosting"], "grids.boosting", {"learning_rate", "n_stages", "max_depth"});
      read(g["boosting"], "learning_rate", c.grids.boosting_learning_rate);
      read(g["boosting"], "n_stages", c.grids.boosting_n_stages);
      read(g["boosting"], "max_depth", c.grids.boosting_max_depth);
    }
  }
  read(j, "prune_threshold", c.prune_threshold);
  read(j, "keep_rules", c.keep_rules);
  read(j, "histogram_bins", c.histogram_bins);
  read(j, "exclude_states", c.exclude_states);
  if (j.contains("out")) {
    std::string o;
    read(j, "out", o);
    c.out = detail::resolve(base_dir, o);
  }
  if (j.contains("service")) {
    const auto& s = j["service"];
    check_keys(s, "service", {"host", "port", "cors_origin", "model"});
    read(s, "host", c.service.host);
    read(s, "port", c.service.port);
    read(s, "cors_origin", c.service.cors_origin);
    if (s.contains("model")) {
      std::string m;
      read(s, "model", m);
      auto k = learners::parse_model_kind(m);
      if (!k) fail(ErrorKind::ConfigError, "service.model must be cart, forest or boosting");
      c.service.model = *k;
    }
  }
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::ConfigError, "config file " + path.string() + " does not exist");
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, "config file is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace rsv::config
