// seiard: command-line driver for the SEIARD identifiability pipeline.
//
//   seiard <command> [--config FILE] [--set path=value ...] [--out DIR] [--threads N]
//   seiard replay MANIFEST --out DIR
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seiard/seiard.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::size_t threads = 0;
  std::string variant;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string json_string_list(const std::vector<std::string>& items) {
  seiard::json a = seiard::json::array();
  for (const auto& s : items) a.push_back(s);
  return a.dump();
}

std::string json_int_list(const std::string& text, const char* what) {
  seiard::json a = seiard::json::array();
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw seiard::ConfigError(std::string("bad ") + what + " entry '" + s + "'");
    a.push_back(v);
  }
  return a.dump();
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config, "JSON config file (or a run manifest)");
  cmd->add_option("--set", o.sets, "override a config field, e.g. --set mcmc.n_chains=2")->take_all();
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker cap");
  cmd->add_option("--variant", o.variant, "original | reparam");
}

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> text{
      {"simulate", "write the synthetic dataset"},
      {"fit", "point estimate on the training window"},
      {"profile", "profile likelihood curves and J_PL intervals"},
      {"mcmc", "posterior sampling, HPDIs and densities"},
      {"report", "both variants end to end, with a summary"},
      {"forecast-eval", "out-of-window MAPE for both variants"},
      {"structural", "sensitivity-matrix rank screen"},
  };
  const auto it = text.find(command);
  return it == text.end() ? std::string() : it->second;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEIARD identifiability pipeline"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string params, windows, horizons;
  std::vector<std::pair<std::string, CLI::App*>> commands;
  for (const auto& name : seiard::command_names()) {
    CLI::App* cmd = app.add_subcommand(name, describe(name));
    add_common(cmd, common);
    commands.emplace_back(name, cmd);
  }
  auto* profile = app.get_subcommand("profile");
  profile->add_option("--params", params, "comma-separated parameter names");
  profile->add_option("--windows", windows, "comma-separated training window ends, e.g. 14,28,56");
  app.get_subcommand("report")->add_option("--params", params, "comma-separated parameter names");
  app.get_subcommand("forecast-eval")->add_option("--horizons", horizons, "comma-separated forecast horizons (days)");

  std::string manifest, replay_out;
  std::size_t replay_threads = 1;
  CLI::App* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("-o,--out", replay_out, "output directory")->required();
  replay->add_option("--threads", replay_threads, "worker cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (replay->parsed()) {
      seiard::replay_manifest(manifest, replay_out, replay_threads);
    } else {
      std::string command;
      for (const auto& [name, cmd] : commands) {
        if (cmd->parsed()) command = name;
      }
      std::vector<std::string> overrides = common.sets;
      if (!common.out.empty()) overrides.push_back("output_dir=" + seiard::json(common.out).dump());
      if (common.threads > 0) overrides.push_back("threads=" + std::to_string(common.threads));
      if (!common.variant.empty()) overrides.push_back("variant=" + seiard::json(common.variant).dump());
      if (!params.empty()) overrides.push_back("profile.params=" + json_string_list(split_list(params)));
      if (!windows.empty()) overrides.push_back("profile.windows=" + json_int_list(windows, "window"));
      if (profile->parsed() && profile->count("--windows") && split_list(windows).empty())
        throw seiard::ConfigError("--windows needs at least one value");
      if (app.get_subcommand("forecast-eval")->count("--horizons")) {
        if (split_list(horizons).empty()) throw seiard::ConfigError("--horizons needs at least one value");
        overrides.push_back("forecast.horizons=" + json_int_list(horizons, "horizon"));
      }
      const seiard::RunConfig cfg =
          seiard::load_config(common.config.empty() ? std::nullopt : std::optional<std::string>(common.config), overrides);
      seiard::run_command(command, cfg);
      std::fprintf(stderr, "wrote %s\n", cfg.output_dir.c_str());
    }
  } catch (const seiard::ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const seiard::ContractError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const seiard::ParameterDomainError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const seiard::DivergenceError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const seiard::NoFeasiblePointError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "done in %.1f s\n", secs);
  return 0;
}
