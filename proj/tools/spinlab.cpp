#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinlab/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spin-geometry computations on discretized flat-coordinate tori"};
  app.footer(spinlab::run::usage());
  std::string command, config_path, out_dir = ".", profile = "default";
  int r = -1, s = -1;
  app.add_option("command", command, "subcommand to run")->required();
  app.add_option("--config", config_path, "config JSON file, or '-' for stdin");
  app.add_option("--out", out_dir, "directory for bulk-field artifacts");
  app.add_option("--tolerance-profile", profile, "default|strict");
  app.add_option("--r", r, "signature r (clifford-check shortcut)");
  app.add_option("--s", s, "signature s (clifford-check shortcut)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  if (!config_path.empty()) {
    try {
      if (config_path == "-") {
        config = nlohmann::ordered_json::parse(std::cin);
      } else {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "cannot open config file '" << config_path << "'\n";
          return 2;
        }
        config = nlohmann::ordered_json::parse(in);
      }
    } catch (const std::exception& e) {
      std::cerr << "invalid config JSON: " << e.what() << "\n";
      return 2;
    }
  }
  if (r >= 0 || s >= 0) config["signature"] = {std::max(r, 0), std::max(s, 0)};

  spinlab::run::RunResult res = spinlab::run::run_command(command, config, profile);
  std::cout << res.report.dump(2) << "\n";
  if (res.exit_code == 4) std::cerr << spinlab::run::usage();
  if (!res.artifacts.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      std::cerr << "cannot create output directory '" << out_dir << "': " << ec.message()
                << "\n";
      return 3;
    }
    for (const auto& [name, bytes] : res.artifacts) {
      std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
      if (!f) {
        std::cerr << "cannot write artifact '" << name << "'\n";
        return 3;
      }
      f << bytes;
    }
  }
  return res.exit_code;
}
