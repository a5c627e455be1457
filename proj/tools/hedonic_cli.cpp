// Copyright 2026 The Hedonic Index Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: one subcommand per pipeline stage plus
// `pipeline`, `simulate` and `drift`. Exit codes: 0 success, 1 runtime or
// validation failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "hedonic/pipeline.hpp"

namespace fs = std::filesystem;
namespace hp = hedonic::pipeline;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string transactions;
  std::string catalog;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& o, bool need_config) {
  auto* c = app->add_option("--config", o.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  if (need_config) c->required();
  app->add_option("--out", o.out, "Output directory (overrides paths.output_dir)");
  app->add_option("--transactions", o.transactions, "Transactions file (overrides paths.transactions)");
  app->add_option("--catalog", o.catalog, "Catalog file (overrides paths.catalog)");
  app->add_option("--seed", o.seed, "Master seed; overrides every seed in the config");
}

hp::PipelineConfig build_config(const CommonOptions& o) {
  hp::PipelineConfig cfg = o.config.empty() ? hp::PipelineConfig::from_json(nlohmann::json::object())
                                            : hp::load_config(o.config);
  if (!o.out.empty()) cfg.paths.output_dir = fs::absolute(o.out).string();
  if (!o.transactions.empty()) cfg.paths.transactions = fs::absolute(o.transactions).string();
  if (!o.catalog.empty()) cfg.paths.catalog = fs::absolute(o.catalog).string();
  if (o.seed) cfg.seed = *o.seed;
  cfg.apply_seed();
  return cfg;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw hedonic::Error("cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw hedonic::ParseError(path + ": " + e.what(), 0);
  }
}

int run_drift(const std::string& spec_path, const CommonOptions& o, int replications) {
  hp::PipelineConfig cfg = o.config.empty() ? hp::PipelineConfig::from_json(nlohmann::json::object())
                                            : hp::load_config(o.config);
  hedonic::MarketSpec spec;
  if (!spec_path.empty())
    spec = hedonic::MarketSpec::from_json(read_json(spec_path));
  else if (cfg.synthetic)
    spec = *cfg.synthetic;
  else
    throw hedonic::ValidationError("drift: pass --spec or a config with a synthetic block");
  if (o.seed) spec.seed = *o.seed;
  if (!o.out.empty()) cfg.paths.output_dir = fs::absolute(o.out).string();
  const fs::path out = cfg.output_dir();
  fs::create_directories(out);
  hp::DirLock lock(out);
  const auto rep = hedonic::drift_experiment(spec, replications, hedonic::detail::env_thread_count());
  std::ostringstream os;
  os << "replication,monthly_abs_log_drift,yearly_abs_log_drift\n";
  for (std::size_t r = 0; r < rep.monthly.size(); ++r)
    os << r << ',' << hp::fmt(rep.monthly[r]) << ',' << hp::fmt(rep.yearly[r]) << '\n';
  hp::write_file(out / "drift.csv", os.str());
  nlohmann::json summary = {{"horizon", rep.horizon},
                            {"replications", replications},
                            {"mean_monthly", rep.mean_monthly},
                            {"mean_yearly", rep.mean_yearly},
                            {"fraction_monthly_greater", rep.fraction_monthly_greater},
                            {"spec", spec.to_json()}};
  hp::write_file(out / "drift_summary.json", summary.dump(2) + "\n");
  std::cout << "mean |log drift| monthly " << rep.mean_monthly << ", yearly " << rep.mean_yearly
            << "; monthly larger in " << rep.fraction_monthly_greater * 100.0 << "% of replications\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hedonic price indices from transaction panels"};
  app.require_subcommand(1);

  CommonOptions o;
  std::string spec_path;
  int replications = 50;

  auto* ingest = app.add_subcommand("ingest", "Validate inputs and write panel statistics");
  auto* embed = app.add_subcommand("embed", "Train word embeddings and build product features");
  auto* train = app.add_subcommand("train", "Train the multi-task price network");
  auto* infer = app.add_subcommand("infer", "Hold-out OLS inference on value embeddings");
  auto* index = app.add_subcommand("index", "Compute chained price indices");
  auto* report = app.add_subcommand("report", "Render SVG charts from a run directory");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic market");
  auto* drift = app.add_subcommand("drift", "Chain-drift experiment on synthetic markets");

  for (auto* s : {ingest, embed, train, infer, index, pipeline}) add_common(s, o, true);
  add_common(report, o, false);
  add_common(simulate, o, false);
  add_common(drift, o, false);
  simulate->add_option("--spec", spec_path, "Market spec (JSON)")->check(CLI::ExistingFile);
  drift->add_option("--spec", spec_path, "Market spec (JSON)")->check(CLI::ExistingFile);
  drift->add_option("--replications", replications, "Replications")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*drift) return run_drift(spec_path, o, replications);
    if (*report && o.config.empty()) {
      if (o.out.empty()) {
        std::cerr << "report: pass --out or --config\n";
        return 2;
      }
      hp::DirLock lock(o.out);
      hp::render_report(o.out);
      return 0;
    }
    hp::PipelineConfig cfg = build_config(o);
    if (*simulate) {
      if (!spec_path.empty()) {
        cfg.synthetic = hedonic::MarketSpec::from_json(read_json(spec_path));
        if (!o.seed) cfg.seed = cfg.synthetic->seed;
        cfg.apply_seed();
      }
      if (!cfg.synthetic) throw hedonic::ValidationError("simulate: pass --spec or a config with a synthetic block");
    }
    hp::Run run(cfg);
    if (*simulate) hp::stage_simulate(run);
    if (*ingest) hp::stage_ingest(run);
    if (*embed) hp::stage_embed(run);
    if (*train) hp::stage_train(run);
    if (*infer) hp::stage_infer(run);
    if (*index) hp::stage_index(run);
    if (*report) hp::stage_report(run);
    if (*pipeline) hp::run_pipeline(run);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
