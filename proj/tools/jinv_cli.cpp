#include <iostream>

#include <CLI11.hpp>

#include "jinv/commands.hpp"

int main(int argc, char** argv) {
  using namespace jinv::cli;

  CLI::App app{"Inverse spectral problem for discrete Jacobi operators"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Overrides o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--method", o.method, "synthesis|recursion|both")
        ->check(CLI::IsMember({"synthesis", "recursion", "both"}));
    sub->add_option("--tol", o.tol, "round-trip coefficient tolerance");
    sub->add_option("--sizes", o.sizes, "comma-separated sweep sizes");
    sub->add_option("--operator", o.operator_path, "operator JSON");
    sub->add_option("--reference", o.reference_path, "reference operator JSON");
    sub->add_option("--reference_data", o.reference_data_path, "reference spectral JSON");
    sub->add_option("--target_data", o.target_data_path, "target spectral JSON");
    sub->add_option("--orientation", o.orientation, "left|right")->check(CLI::IsMember({"left", "right"}));
    sub->add_option("--level_shifts", o.level_shifts, "index=shift,...");
    sub->add_option("--weight_factors", o.weight_factors, "index=factor,...");
  };
  add_common(app.add_subcommand("forward", "eigen-solve an operator and write its spectral data"));
  add_common(app.add_subcommand("invert", "recover an operator from spectral data"));
  add_common(app.add_subcommand("roundtrip", "forward-solve a target, invert it, compare coefficients"));
  add_common(app.add_subcommand("sweep", "refinement study of the continuum limit"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ExitCode::parse_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  try {
    std::optional<std::filesystem::path> path;
    if (config_path) path = *config_path;
    config = load_config(command, path, o);
  } catch (const std::exception& e) {
    std::cerr << "jinv " << command << ": " << e.what() << '\n';
    return ExitCode::parse_error;
  }
  return run(config);
}
