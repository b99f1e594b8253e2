#include "relaysim/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace relaysim;

  CLI::App app{"Time-bin teleportation and quantum relay simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunManifest manifest;
  std::string config, out, mode = "both";
  std::uint64_t seed = 0, pulses = 0;

  const std::map<std::string, std::string> help{
      {"teleport-equator", "Four-fold fringe versus Bob's analyzer phase"},
      {"teleport-poles", "Correct and wrong arrival slots for pole inputs"},
      {"hom", "Two-photon dip versus Alice's delay"},
      {"franson", "Two-photon fringe of the EPR source"},
      {"relay-curve", "Relay fidelity versus distance for n = 1..4"},
      {"sweep", "Photon-level teleportation fidelity over the Poincare sphere"},
  };
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile | CLI::NonexistentPath);
    sub->add_option("--out", out, "CSV output path (default <subcommand>.csv)");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--mode", mode, "analytic, montecarlo or both")
        ->check(CLI::IsMember({"analytic", "montecarlo", "both"}));
    sub->add_option("--pulses", pulses, "Pulses per Monte Carlo point");
    sub->callback([&manifest, name] { manifest.subcommand = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  if (!config.empty()) manifest.config = config;
  manifest.out = out.empty() ? manifest.subcommand + ".csv" : out;
  manifest.mode = *parse_mode(mode);
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) manifest.seed = seed;
    if (sub->count("--pulses")) manifest.pulses = pulses;
  }
  return run(manifest, std::cerr);
}
