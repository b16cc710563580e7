#include <iostream>

#include <CLI11.hpp>

#include "kmsbounds/cli.hpp"

int main(int argc, char** argv) {
  using namespace kmsbounds::cli;
  CLI::App app{"Subcritical inverse-temperature bounds and finite-volume checks for spin lattices"};
  app.require_subcommand(1, 1);

  std::string config_path;
  bool as_json = false, as_csv = false, paper_table = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> suite;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"norms", "interaction norms of the configured model"},
      {"beta-u", "uniqueness bound with the eps optimisation trace"},
      {"compare", "our bound against the literature comparators"},
      {"verify", "run a verification suite"},
      {"report", "norms, bounds and every applicable suite"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "model config (JSON)")->required();
    auto* j = sub->add_flag("--json", as_json, "emit JSON");
    sub->add_flag("--csv", as_csv, "emit CSV")->excludes(j);
    sub->add_option("--seed", seed, "64-bit seed for randomized suites");
    if (name == "compare") sub->add_flag("--paper-table", paper_table, "append the reference-value table");
    if (name == "verify") {
      sub->add_option("--suite", suite, "decompose|kms|dyson|ks|lemma1|classical-invariance|all")
          ->check(CLI::IsMember(suite_names()));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSchemaError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const Format fmt = as_json ? Format::json : as_csv ? Format::csv : Format::text;
  return run(command, config_path, Options{seed, suite, paper_table}, fmt, std::cout, std::cerr);
}
