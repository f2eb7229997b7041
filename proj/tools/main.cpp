#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "testinfo/errors.hpp"

namespace {

using namespace tinfo::cli;

void write_error_record(const std::string& out_dir, const std::string& command,
                        const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["error"] = code;
  j["message"] = message;
  try {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "error.json", std::ios::binary);
    out << j.dump(2) << '\n';
  } catch (const std::exception&) {
    // the message still reaches stderr
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"testinfo: design criteria for hypothesis testing experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> draws;

  const std::map<std::string, Runner (*)(Config&, const Options&)> commands{
      {"criteria", prepare_criteria},     {"optimize", prepare_optimize},
      {"simulate", prepare_simulate},     {"sequential", prepare_sequential},
      {"theorem1", prepare_theorem1},     {"appendix-b", prepare_appendix_b},
      {"lightcurve", prepare_lightcurve},
  };
  const std::map<std::string, std::string> help{
      {"criteria", "evaluate design criteria for one design"},
      {"optimize", "point-exchange search over a candidate grid"},
      {"simulate", "draw one dataset under H0 or H1"},
      {"sequential", "two-stage cubic regression power study"},
      {"theorem1", "fraction of observed information vs its small-delta limit"},
      {"appendix-b", "two-design counterexample for entropy-based criteria"},
      {"lightcurve", "synthetic lightcurve follow-up experiment"},
  };
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "INI config file");
    sub->add_option("--seed", seed, "root RNG seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--format", format, "csv or json");
    sub->add_option("--draws", draws, "Monte Carlo draw count override");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Runner run;
  Options opts;
  try {
    Config cfg = config_path.empty() ? Config() : Config::load(config_path);
    opts = resolve_options(cfg, seed, out, format, draws);
    run = commands.at(command)(cfg, opts);
    cfg.reject_unknown();
  } catch (const std::exception& e) {
    std::cerr << "testinfo " << command << ": invalid configuration: " << e.what() << '\n';
    return 2;
  }

  try {
    run();
  } catch (const tinfo::Error& e) {
    std::cerr << "testinfo " << command << ": " << e.what() << '\n';
    write_error_record(opts.out, command, std::string(tinfo::to_string(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "testinfo " << command << ": " << e.what() << '\n';
    write_error_record(opts.out, command, "internal", e.what());
    return 1;
  }
  return 0;
}
