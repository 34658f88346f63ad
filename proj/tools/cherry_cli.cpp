#include "cherry/commands.hpp"
#include "cherry/config.hpp"
#include "cherry/error.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace cherry;
  CLI::App app{"Flat-interval circle maps and Cherry flow experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  commands::RunOptions opts;
  int override_bits = 0;
  for (const auto& name : commands::names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--precision-override", override_bits, "working precision in bits");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (override_bits != 0) opts.precision_override = override_bits;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = config::load(config_path);
    const auto summary = commands::run(command, cfg, opts);
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << commands::error_json(e).dump() << "\n";
    return commands::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}
