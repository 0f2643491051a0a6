// Copyright 2026 The Gargoyle Authors
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

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gargoyle/context.hpp"
#include "gargoyle/core.hpp"
#include "gargoyle/fbac.hpp"
#include "gargoyle/harness.hpp"
#include "gargoyle/policy.hpp"
#include "gargoyle/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitScenarioAbort = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gargoyle::ConfigError("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw gargoyle::ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw gargoyle::ConfigError("cannot write " + path);
  out << content;
}

int cmd_generate(const std::string& config_path, std::uint64_t seed, const std::string& out_path) {
  gargoyle::harness::GenConfig cfg = gargoyle::harness::gen_config_from_json(read_json(config_path));
  auto specs = gargoyle::harness::generate_scenarios(cfg, seed);
  write_file(out_path, gargoyle::harness::scenarios_to_json(specs).dump(1) + "\n");
  std::cout << "generated " << specs.size() << " scenarios -> " << out_path << "\n";
  return kExitOk;
}

int cmd_run(const std::string& topology_path, const std::string& policies_path,
            const std::string& scenarios_path, const std::string& catalog_path,
            const std::string& blocklist_path, const std::string& out_path,
            const std::string& baseline, const std::string& trace_path) {
  gargoyle::harness::RunnerDeps deps;
  deps.topologies = gargoyle::harness::load_topology_set(read_json(topology_path));
  deps.policies = gargoyle::policy::parse_policies(read_json(policies_path));
  deps.catalog = gargoyle::fbac::load_catalog(read_json(catalog_path));
  std::set<std::string> extra;
  if (!blocklist_path.empty()) {
    extra = gargoyle::context::load_blocklist(read_file(blocklist_path));
  }
  deps.detectors = gargoyle::harness::detectors_for(deps.policies, extra);

  auto specs = gargoyle::harness::scenarios_from_json(read_json(scenarios_path));

  std::vector<gargoyle::harness::ScenarioOutcome> outcomes;
  outcomes.reserve(specs.size());
  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw gargoyle::ConfigError("cannot write " + trace_path);
  }

  std::string model_name = "gargoyle";
  if (baseline.empty()) {
    for (const auto& spec : specs) {
      outcomes.push_back(gargoyle::harness::run_scenario(spec, deps));
      if (trace.is_open()) {
        for (const auto& record : outcomes.back().records) trace << record.dump() << "\n";
      }
    }
  } else {
    auto model = gargoyle::harness::baseline_from_string(baseline);
    if (!model) throw gargoyle::ConfigError("unknown baseline model: " + baseline);
    model_name = gargoyle::harness::to_string(*model);
    for (const auto& spec : specs) {
      outcomes.push_back(gargoyle::harness::run_baseline(*model, spec, deps));
    }
  }

  gargoyle::harness::RunReport report = gargoyle::harness::aggregate(outcomes, {});
  if (!baseline.empty()) {
    report.protection = {{model_name, report.protection["gargoyle"]}};
  }
  nlohmann::json j = gargoyle::harness::report_to_json(report);
  j["model"] = model_name;
  write_file(out_path, j.dump(1) + "\n");

  std::cout << model_name << ": " << report.total_requests << " requests, "
            << report.granted_restricted() << " granted-restricted, protected "
            << report.protection.begin()->second << "/" << outcomes.size() << " -> " << out_path
            << "\n";
  for (const auto& oc : outcomes) {
    if (oc.aborted) {
      std::cerr << "scenario " << oc.scenario_id << " aborted: " << oc.diagnostic << "\n";
      return kExitScenarioAbort;
    }
  }
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& report_paths) {
  std::cout << "model            protected  restricted  denied  requests\n";
  for (const auto& path : report_paths) {
    nlohmann::json j = read_json(path);
    const std::string model = j.value("model", "?");
    int prot = 0;
    if (j.contains("protection")) {
      for (const auto& [name, n] : j["protection"].items()) {
        if (name == model || j["protection"].size() == 1) prot = n.get<int>();
      }
    }
    const int total = j.value("total_requests", 0);
    const int restricted = j["table3"].value("granted_restricted_functions", 0);
    int denied = 0;
    for (const auto& [cls, n] : j["outcomes"].items()) {
      if (cls.rfind("denied-", 0) == 0) denied += n.get<int>();
    }
    std::printf("%-16s %9d %11d %7d %9d\n", model.c_str(), prot, restricted, denied, total);
  }
  return kExitOk;
}

int cmd_bench(int policies_max, int users_max, std::uint64_t seed, const std::string& topology_path,
              const std::string& policies_path, const std::string& catalog_path,
              const std::string& out_path) {
  gargoyle::harness::BenchOptions opts;
  opts.seed = seed;
  opts.policy_counts.clear();
  for (int p = 100; p <= policies_max; p += 200) opts.policy_counts.push_back(p);
  if (opts.policy_counts.empty() || opts.policy_counts.back() != policies_max) {
    opts.policy_counts.push_back(policies_max);
  }
  opts.user_counts.clear();
  for (int u : {10, 30, 60, 90}) {
    if (u < users_max) opts.user_counts.push_back(u);
  }
  opts.user_counts.push_back(users_max);

  auto topologies = gargoyle::harness::load_topology_set(read_json(topology_path));
  auto policies = gargoyle::policy::parse_policies(read_json(policies_path));
  auto catalog = gargoyle::fbac::load_catalog(read_json(catalog_path));

  auto cells = gargoyle::harness::bench_policy_scaling(opts, topologies, policies, catalog);
  std::cout << "policies  users  mean_us  p95_us\n";
  for (const auto& c : cells) {
    std::printf("%8d %6d %8.1f %7.1f\n", c.policies, c.users, c.mean_us, c.p95_us);
  }
  if (!out_path.empty()) {
    write_file(out_path, gargoyle::harness::bench_to_json(cells).dump(1) + "\n");
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gargoyle: network-context access control testbed"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "generate insider scenarios");
  std::string gen_config, gen_out = "scenarios.json";
  std::uint64_t gen_seed = 42;
  generate->add_option("--config", gen_config, "generation config JSON")->required();
  generate->add_option("--seed", gen_seed, "RNG seed");
  generate->add_option("--out", gen_out, "output scenario pack");

  auto* run = app.add_subcommand("run", "run scenarios through the pipeline");
  std::string run_topology, run_policies, run_scenarios, run_catalog, run_blocklist;
  std::string run_out = "report.json", run_baseline, run_trace;
  run->add_option("--topology", run_topology, "topology (single map or set)")->required();
  run->add_option("--policies", run_policies, "policy pack JSON")->required();
  run->add_option("--scenarios", run_scenarios, "scenario pack JSON")->required();
  run->add_option("--catalog", run_catalog, "object catalog JSON")->required();
  run->add_option("--blocklist", run_blocklist, "extra blocklist file");
  run->add_option("--out", run_out, "report output path");
  run->add_option("--baseline", run_baseline, "rbac|fbac|ucon instead of gargoyle");
  run->add_option("--trace", run_trace, "decision trace JSONL output");

  auto* compare = app.add_subcommand("compare", "compare run reports");
  std::vector<std::string> compare_reports;
  compare->add_option("--reports", compare_reports, "report files")->required()->expected(-1);

  auto* bench = app.add_subcommand("bench", "policy-scaling benchmark");
  int bench_policies = 900, bench_users = 90;
  std::uint64_t bench_seed = 1;
  std::string bench_topology = "fixtures/org_maps.json";
  std::string bench_policies_file = "fixtures/policies_reference.json";
  std::string bench_catalog = "fixtures/catalog.json";
  std::string bench_out;
  bench->add_option("--policies-max", bench_policies, "max active policies");
  bench->add_option("--users", bench_users, "max active users");
  bench->add_option("--seed", bench_seed, "RNG seed");
  bench->add_option("--topology", bench_topology, "topology file");
  bench->add_option("--policies", bench_policies_file, "base policy pack");
  bench->add_option("--catalog", bench_catalog, "object catalog");
  bench->add_option("--out", bench_out, "latency table JSON output");

  try {
    app.parse(argc, argv);
    if (*generate) return cmd_generate(gen_config, gen_seed, gen_out);
    if (*run) {
      return cmd_run(run_topology, run_policies, run_scenarios, run_catalog, run_blocklist,
                     run_out, run_baseline, run_trace);
    }
    if (*compare) return cmd_compare(compare_reports);
    if (*bench) {
      return cmd_bench(bench_policies, bench_users, bench_seed, bench_topology,
                       bench_policies_file, bench_catalog, bench_out);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const gargoyle::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
