// Command line front end: one subcommand per scenario kind.

#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "rydmix/runner.hpp"
#include "rydmix/scenario.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

struct Args {
  std::string scenario;
  std::string out = ".";
  std::string format = "csv";
  unsigned workers = 1;
  std::optional<double> step;
};

int execute(const std::string& command, const Args& args) {
  try {
    rydmix::Scenario s = rydmix::load_scenario(args.scenario);
    const std::string kind = rydmix::kind_name(s.kind);
    const std::string expected = command == "map" ? "efficiency-map" : command;
    if (kind != expected) {
      throw rydmix::ValidationError("scenario kind '" + kind + "' does not match subcommand '" + command + "'");
    }
    rydmix::RunOptions opt;
    opt.workers = args.workers;
    opt.step = args.step;
    const rydmix::RunResult r = rydmix::run(s, opt);
    const auto paths =
        rydmix::emit(r, args.out, args.format == "json" ? rydmix::Format::kJson : rydmix::Format::kCsv);
    for (const auto& p : paths) std::cout << p.string() << '\n';
    return 0;
  } catch (const rydmix::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const rydmix::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Six-level Rydberg microwave-to-optics conversion simulator"};
  app.require_subcommand(1);
  Args args;
  double step = 0.0;
  std::string chosen;

  for (const char* name : {"steady", "propagate", "map", "spectrum", "calibrate", "geometry", "thermal", "fidelity"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run a ") + name + " scenario");
    sub->add_option("--scenario", args.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--format", args.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--workers", args.workers, "worker threads for sweeps")
        ->check(CLI::Range(1u, 4096u))
        ->capture_default_str();
    sub->add_option("--step", step, "propagation step override (absorption lengths)")
        ->check(CLI::PositiveNumber);
    sub->callback([&args, &step, &chosen, sub, name] {
      if (sub->count("--step")) args.step = step;
      chosen = name;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  return execute(chosen, args);
}
