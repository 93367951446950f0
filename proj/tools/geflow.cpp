#include <iostream>

#include "CLI11.hpp"
#include "geflow/cli.hpp"

using namespace geflow;

int main(int argc, char** argv) {
  CLI::App app{"Geodesic-Einstein flows, characteristic forms and bundle reductions on model fibrations"};
  app.require_subcommand(1);
  std::string config, out = ".", suite = "core", input;

  auto with_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", config, "scenario file (TOML)");
    if (required) opt->required();
    sub->add_option("--out", out, "output directory");
  };
  CLI::App* flow = app.add_subcommand("flow", "run the flow with monitors; writes monitor.csv and field dumps");
  with_config(flow, true);
  CLI::App* verify = app.add_subcommand("verify", "run a property suite; nonzero exit on any failed check");
  with_config(verify, false);
  verify->add_option("--suite", suite, "core, classes, hym, appendix or all")
      ->check(CLI::IsMember({"core", "classes", "hym", "appendix", "all"}));
  CLI::App* classes = app.add_subcommand("classes", "S- and C-forms, inequality gaps and semistability");
  with_config(classes, true);
  CLI::App* hym = app.add_subcommand("hym", "bundle flow on a projective-bundle scenario");
  with_config(hym, true);
  CLI::App* appendix = app.add_subcommand("appendix", "Hermitian-Einstein operator test and normalization");
  with_config(appendix, true);
  CLI::App* report = app.add_subcommand("report", "convert a monitor CSV to long format");
  report->add_option("--input", input, "monitor CSV")->required();
  report->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  try {
    cli::Outcome r;
    if (*report) {
      r = cli::report_command(input, out);
    } else if (*verify) {
      VerifyConfig cfg;
      if (!config.empty()) {
        Scenario sc = parse_scenario(config);
        cfg.seed = sc.seed;
        if (sc.kind == ScenarioKind::TorusCoupled) cfg.coupled = sc;
      }
      r = cli::verify_command(suite, cfg, out, std::cout);
      return r.exit_code;
    } else {
      Scenario sc = parse_scenario(config);
      if (*flow)
        r = cli::flow_command(sc, out);
      else if (*classes)
        r = cli::classes_command(sc, out);
      else if (*hym)
        r = cli::hym_command(sc, out);
      else
        r = cli::appendix_command(sc, out);
    }
    std::cout << r.report.dump(2) << std::endl;
    return r.exit_code;
  } catch (const FlowStalled& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return cli::kExitStalled;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return cli::kExitConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << std::endl;
    return cli::kExitContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
