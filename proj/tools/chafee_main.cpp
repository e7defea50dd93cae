// chafee <command> --config <path> [--out <dir>] [--seed <u64>] [--workers <n>] [--profile fig1..fig5]

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "chafee/config.hpp"
#include "chafee/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw chafee::ConfigError({"cannot read config file '" + path + "'"});
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic heterogeneous Chafee-Infante experiments"};
  std::string command, config_path, out_dir, profile_name;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool print_config = false;
  app.add_option("command", command, "spectrum | simulate | steady-states | ftle-sweep | ews-sweep | exit-sweep | sync-check")
      ->required();
  app.add_option("--config", config_path, "INI configuration file");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides seed)");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--profile", profile_name, "built-in parameter set")
      ->check(CLI::IsMember(chafee::profile_names()));
  app.add_flag("--print-config", print_config, "print the normalized configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : chafee::kConfigError;
  }

  chafee::ExperimentConfig cfg;
  try {
    const auto cmd = chafee::parse_command(command);
    if (!cmd) throw chafee::ConfigError({"unknown command '" + command + "'"});
    if (config_path.empty() && profile_name.empty())
      throw chafee::ConfigError({"either --config or --profile is required"});
    std::string text = config_path.empty() ? std::string() : read_file(config_path);
    chafee::ExperimentConfig base;
    if (!profile_name.empty()) base = *chafee::profile(profile_name);
    base.command = *cmd;
    cfg = chafee::parse_config(text, base);
    if (cfg.command != *cmd)
      throw chafee::ConfigError({"command '" + command + "' does not match config command '" +
                                 std::string(chafee::to_string(cfg.command)) + "'"});
  } catch (const chafee::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return chafee::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return chafee::kConfigError;
  }
  if (print_config) {
    std::cout << chafee::serialize(cfg);
    return 0;
  }

  chafee::RunOptions opts;
  opts.workers = workers;
  if (*out_opt) opts.out_dir = out_dir;
  if (*seed_opt) opts.seed = seed;
  try {
    const chafee::RunResult res = chafee::run(cfg, opts);
    for (const auto& f : res.member_failures) std::cerr << "member failure: " << f << "\n";
    std::cout << "wrote " << res.files.size() << " files to " << res.out_dir.string() << "\n";
    return res.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return chafee::exit_status_for(e);
  }
}
