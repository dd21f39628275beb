#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "it2lss/cli.hpp"

namespace {

using namespace it2lss;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_flags(CLI::App* app, Flags& f, bool config_required) {
  auto* c = app->add_option("--config", f.config, "JSON run configuration");
  if (config_required) c->required();
  app->add_option("--out", f.out, "output directory (overrides output_dir)");
  app->add_option("--seed", f.seed, "random seed (overrides seed)");
}

int dispatch(cli::Command cmd, const Flags& f) {
  cli::RunConfig cfg;
  const std::string out = f.out.empty() ? "out" : f.out;
  try {
    if (!f.config.empty()) {
      cfg = cli::parse_config(std::filesystem::path(f.config));
      if (cfg.command != cmd) {
        throw ConfigError(std::string("config.command: '") + cli::to_string(cfg.command) +
                          "' does not match the subcommand '" + cli::to_string(cmd) + "'");
      }
    }
    cfg.command = cmd;
  } catch (const Error& e) {
    const int code = cli::exit_code_for(e);
    std::cerr << e.what() << "\n";
    try {
      io::write_json(std::filesystem::path(out) / "diagnostic.json",
                     cli::diagnostic(cli::to_string(cmd), code, e.code(), e.what(), e.details()));
    } catch (const std::exception&) {
    }
    return code;
  }
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  return cli::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IT2 fuzzy large-scale system synthesis and verification"};
  app.require_subcommand(1);

  Flags synth_f, sim_f, verify_f, bench_f;
  auto* synth = app.add_subcommand("synth", "synthesize decentralized fuzzy gains");
  add_flags(synth, synth_f, true);
  auto* sim = app.add_subcommand("simulate", "simulate the closed loop");
  add_flags(sim, sim_f, true);
  auto* verify = app.add_subcommand("verify", "certify a stored trajectory");
  add_flags(verify, verify_f, true);
  auto* bench = app.add_subcommand("bench", "run a benchmark scenario");
  std::string bench_name;
  bench->add_option("name", bench_name, "benchmark name")
      ->required()
      ->check(CLI::IsMember({"pendulum"}));
  add_flags(bench, bench_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfig;
  }

  if (*synth) return dispatch(cli::Command::kSynth, synth_f);
  if (*sim) return dispatch(cli::Command::kSimulate, sim_f);
  if (*verify) return dispatch(cli::Command::kVerify, verify_f);
  return dispatch(cli::Command::kBench, bench_f);
}
