// lpvbound: certify a pair of frozen-equivalent LPV models, check the
// output-error bound on a schedule, compute design thresholds, or rerun the
// built-in example.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lpvbound/harness.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::size_t> delta;
  std::optional<std::size_t> horizon;
  std::optional<double> epsilon;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, Overrides& o, bool config_required) {
  auto* opt = sub->add_option("--config", o.config, "experiment config (JSON)");
  if (config_required) opt->required();
  sub->add_option("--delta", o.delta, "minimum dwell time")->check(CLI::PositiveNumber);
  sub->add_option("--horizon", o.horizon, "simulation horizon")->check(CLI::PositiveNumber);
  sub->add_option("--epsilon", o.epsilon, "target error level")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output directory");
}

lpv::harness::ExperimentConfig resolve(const Overrides& o) {
  lpv::harness::ExperimentConfig c;
  if (!o.config.empty()) c = lpv::harness::load_config(o.config);
  if (o.delta) c.delta = *o.delta;
  if (o.horizon) c.horizon = *o.horizon;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.out) c.out = *o.out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Output-error bounds for frozen-equivalent LPV models"};
  app.require_subcommand(1);

  Overrides certify_o, bound_o, thresholds_o, example_o;
  auto* certify = app.add_subcommand("certify", "minimality, equivalence and stability checks");
  add_common(certify, certify_o, true);
  auto* bound = app.add_subcommand("bound", "simulate both models and check the bound");
  add_common(bound, bound_o, true);
  auto* thresholds = app.add_subcommand("thresholds", "dwell, speed and contraction thresholds");
  add_common(thresholds, thresholds_o, true);
  auto* example = app.add_subcommand("reproduce-example", "built-in two-state example");
  add_common(example, example_o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lpv::harness::kUsage;
  }

  auto run = [](const Overrides& o, auto&& cmd) {
    lpv::harness::ExperimentConfig c;
    const int rc = lpv::harness::guarded(std::cerr, [&]() -> int {
      c = resolve(o);
      return 0;
    });
    if (rc != 0) return rc;
    return cmd(c, std::cout, std::cerr);
  };

  if (*certify) return run(certify_o, lpv::harness::cmd_certify);
  if (*bound) return run(bound_o, lpv::harness::cmd_bound);
  if (*thresholds) return run(thresholds_o, lpv::harness::cmd_thresholds);
  return run(example_o, [](lpv::harness::ExperimentConfig c, std::ostream& out,
                           std::ostream& err) {
    return lpv::harness::cmd_reproduce_example(std::move(c), out, err);
  });
}
