// Writes a synthetic four-source snapshot for demos and timing runs.

#include <iostream>

#include <CLI11.hpp>

#include "synthetic_snapshot.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rsv-synth: generate a synthetic source snapshot"};
  std::string dir;
  rsv::synth::SnapshotOptions opt;
  app.add_option("dir", dir, "output directory")->required();
  app.add_option("--seed", opt.seed, "generator seed");
  app.add_option("--weeks", opt.weeks, "number of weeks from 2022-04-02");
  CLI11_PARSE(app, argc, argv);
  const auto paths = rsv::synth::write_snapshot(dir, opt);
  std::cout << paths.rsvnet.string() << '\n'
            << paths.nwss.string() << '\n'
            << paths.meteo.string() << '\n'
            << paths.airquality.string() << '\n';
  return 0;
}
