#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spatialiv/commands.hpp"

using namespace spatialiv;

int main(int argc, char** argv) {
  CLI::App app{"spatialiv: instrumental variables for unmeasured spatial confounding"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "base seed (overrides seed)");
    sub->add_option("--threads", threads, "worker threads (overrides threads)")->check(CLI::PositiveNumber);
    sub->add_option("--format", format, "table format (overrides format)")->check(CLI::IsMember({"csv", "json"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!out_dir.empty()) c.output_dir = out_dir;
    if (seed) c.seed = c.scenario.seed = *seed;
    if (threads) c.threads = *threads;
    if (!format.empty()) c.format = format;
    const CommandResult r = run_command(command, c, std::cout);
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
