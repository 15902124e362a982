/*
   Copyright 2026 The forwardperf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// forwardperf: command-line front end.
//
//   forwardperf run <scenario.json> [--report FILE] [--seed N] [--threads N]
//   forwardperf conjugate --gamma G... --a A... --y Y...
//   forwardperf export-paths <scenario.json> --out FILE [--seed N]

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "forwardperf/fields.hpp"
#include "forwardperf/scenario.hpp"

namespace {

int conjugate_table(const std::vector<double>& gammas, const std::vector<double>& as,
                    const std::vector<double>& ys) {
  using namespace fwdperf;
  for (double g : gammas)
    if (!(g > 0.0)) {
      std::cerr << "error: gamma must be > 0 (got " << g << ")\n";
      return 2;
    }
  for (double y : ys)
    if (!(y >= 0.0)) {
      std::cerr << "error: y must be >= 0 (got " << y << ")\n";
      return 2;
    }
  std::cout << std::setw(10) << "gamma" << std::setw(10) << "a" << std::setw(14) << "y" << std::setw(24)
            << "numeric" << std::setw(24) << "closed" << std::setw(14) << "diff" << "\n";
  for (double g : gammas)
    for (double a : as)
      for (double y : ys) {
        const double closed = conjugate_exponential(g, a, y);
        double num;
        try {
          num = y == 0.0 ? numeric_dual(exponential_slice(g, a)).eval(0.0)
                         : conjugate_numeric(exponential_slice(g, a), y).value;
        } catch (const std::exception& e) {
          std::cerr << "error: " << e.what() << "\n";
          return 2;
        }
        std::cout << std::setprecision(6) << std::setw(10) << g << std::setw(10) << a << std::setw(14) << y
                  << std::setprecision(15) << std::setw(24) << num << std::setw(24) << closed
                  << std::setprecision(3) << std::setw(14) << (num - closed) << "\n";
      }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verification of forward performance random fields"};
  app.require_subcommand(1);

  std::string scenario_path, report_path, out_path, seed_text;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--report", report_path, "write the report here instead of the scenario's report path");
  run->add_option("--seed", seed_text, "master seed (overrides FORWARDPERF_SEED and the scenario)");
  run->add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  std::vector<double> gammas, as, ys;
  auto* conj = app.add_subcommand("conjugate", "tabulate numeric and closed-form conjugates");
  conj->add_option("--gamma", gammas, "risk aversions")->required();
  conj->add_option("--a", as, "shifts")->required();
  conj->add_option("--y", ys, "dual arguments")->required();

  auto* exp = app.add_subcommand("export-paths", "write simulated paths of an Ito scenario as CSV");
  exp->add_option("scenario", scenario_path, "scenario file")->required();
  exp->add_option("--out", out_path, "output CSV")->required();
  exp->add_option("--seed", seed_text, "master seed");
  exp->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*conj) return conjugate_table(gammas, as, ys);

  fwdperf::scenario::RunOptions opt;
  opt.threads = threads;
  try {
    if (!seed_text.empty()) opt.seed = fwdperf::scenario::detail::parse_seed(seed_text, "--seed");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!report_path.empty()) opt.report_path = report_path;
  if (*exp) opt.export_path = out_path;
  const auto res = fwdperf::scenario::run_scenario(scenario_path, std::cout, opt);
  if (!res.diagnostic.empty()) std::cerr << res.diagnostic << "\n";
  return res.exit_code;
}
