// Copyright 2026 The emcomm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// emcomm command line: train, eval, sweep, replay.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emcomm/core/errors.hpp"
#include "emcomm/metrics/eval_report.hpp"
#include "emcomm/runner/config.hpp"
#include "emcomm/runner/run.hpp"
#include "emcomm/runner/sweep.hpp"

namespace {

using namespace emcomm;

enum ExitCode : int { kOk = 0, kFailure = 1, kBadConfig = 2, kBadInput = 3, kDiverged = 4 };

runner::ExperimentConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
  runner::ExperimentConfig c = runner::load_config(path);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigurationError("--set expects key=value, got '" + s + "'");
    c = runner::with_override(c, s.substr(0, eq), s.substr(eq + 1));
  }
  return c;
}

void print_report(const metrics::EvalReport& r, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << metrics::report_to_string(r);
  } else {
    metrics::save_report(out, r);
    std::cout << "report written to " << out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emcomm: emergent communication experiments"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, trace_path, out, dir, axis;
  std::vector<std::string> sets;
  bool resume = false, quiet = false;
  std::uint64_t seed = 0;
  std::size_t seeds = 1, workers = 0;

  auto* train = app.add_subcommand("train", "train one run to its episode budget");
  train->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--set", sets, "override a config key, key=value");
  train->add_option("--dir", dir, "run directory (default <output_dir>/<name>)");
  train->add_flag("--resume", resume, "continue from the run directory's checkpoint");
  train->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("config", config_path, "config the checkpoint was trained with")->required()->check(CLI::ExistingFile);
  eval->add_option("--set", sets, "override a config key, key=value");
  auto* seed_opt = eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("-o,--out", out, "write the report here instead of stdout");

  auto* sw = app.add_subcommand("sweep", "one run per axis value and seed, plus a CSV table");
  sw->add_option("config", config_path, "base config")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axis, "name=v1,v2,... or name=start:stop:step")->required();
  sw->add_option("--set", sets, "override a base config key, key=value");
  sw->add_option("--seeds", seeds, "seeds per value, counting up from the config seed")->check(CLI::PositiveNumber);
  sw->add_option("--workers", workers, "parallel runs (default $EMCOMM_WORKERS or 1)")->check(CLI::PositiveNumber);
  sw->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* rp = app.add_subcommand("replay", "recompute the evaluation report from a trace");
  rp->add_option("trace", trace_path, "trace file (JSON lines)")->required()->check(CLI::ExistingFile);
  rp->add_option("-o,--out", out, "write the report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto c = load_with_overrides(config_path, sets);
      runner::RunOptions opt;
      opt.directory = dir;
      opt.resume = resume;
      opt.progress = quiet ? nullptr : &std::cerr;
      const auto rec = runner::run(c, opt);
      std::cout << "run " << rec.config_hash << " in " << rec.directory << "\n";
      if (rec.stopped_early) std::cout << "stopped early at episode " << rec.evaluations.back().episode << "\n";
      for (const auto& [name, m] : rec.final_report.metrics) {
        std::cout << name << " " << m.value << " +- " << m.std_error << " (n=" << m.count << ")\n";
      }
      std::cout << "full report: " << rec.directory << "/report.txt\n";
    } else if (*eval) {
      const auto c = load_with_overrides(config_path, sets);
      std::optional<std::uint64_t> s;
      if (seed_opt->count()) s = seed;
      print_report(runner::evaluate_checkpoint(c, checkpoint_path, s).report, out);
    } else if (*sw) {
      const auto c = load_with_overrides(config_path, sets);
      const auto r = runner::sweep(c, runner::parse_axis(axis), seeds, workers, quiet ? nullptr : &std::cerr);
      std::size_t failed = 0;
      for (const auto& cell : r.cells) failed += cell.ok ? 0 : 1;
      std::cout << r.cells.size() - failed << "/" << r.cells.size() << " runs ok; table " << r.csv_path << "\n";
      if (failed) return kFailure;
    } else if (*rp) {
      print_report(runner::replay(trace_path), out);
    }
  } catch (const ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kBadConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kBadInput;
  } catch (const InconsistencyError& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
