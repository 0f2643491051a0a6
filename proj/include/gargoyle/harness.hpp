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

#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gargoyle/baseline.hpp"
#include "gargoyle/context.hpp"
#include "gargoyle/core.hpp"
#include "gargoyle/engine.hpp"
#include "gargoyle/fbac.hpp"
#include "gargoyle/ips.hpp"
#include "gargoyle/netsim.hpp"
#include "gargoyle/policy.hpp"
#include "gargoyle/scenario.hpp"

namespace gargoyle::harness {

// ---------------------------------------------------------------------------
// Run inputs

struct TopologySet {
  std::map<int, netsim::Topology> maps;
  std::optional<netsim::Topology> fallback;  // single-map documents apply everywhere

  const netsim::Topology& for_map(int id) const {
    auto it = maps.find(id);
    if (it != maps.end()) return it->second;
    if (fallback) return *fallback;
    throw ConfigError("no topology for org map " + std::to_string(id));
  }
};

inline TopologySet load_topology_set(const nlohmann::json& doc) {
  TopologySet set;
  if (doc.is_object() && doc.contains("maps")) {
    if (!doc["maps"].is_array()) throw SchemaError("topology set: 'maps' must be an array");
    int next_id = 1;
    for (const auto& m : doc["maps"]) {
      const int id = m.is_object() && m.contains("map_id") ? m["map_id"].get<int>() : next_id;
      set.maps[id] = netsim::load_topology(m);
      next_id = id + 1;
    }
  } else {
    set.fallback = netsim::load_topology(doc);
  }
  return set;
}

struct RunnerDeps {
  TopologySet topologies;
  policy::PolicyDocument policies;
  fbac::Catalog catalog;
  context::DetectorConfig detectors;
};

/// Merges the pack's blocklist into the detector configuration.
inline context::DetectorConfig detectors_for(const policy::PolicyDocument& doc,
                                             const std::set<std::string>& extra_blocklist = {}) {
  context::DetectorConfig cfg;
  cfg.recent_window_ms = doc.recent_window_ms;
  cfg.blocklist.insert(doc.vocab.blocklist.begin(), doc.vocab.blocklist.end());
  cfg.blocklist.insert(extra_blocklist.begin(), extra_blocklist.end());
  return cfg;
}

// ---------------------------------------------------------------------------
// Scenario outcomes

struct RequestOutcome {
  std::string request_id;
  std::string final_class;      // denied-<reason> | granted-restricted | granted-full
  bool route_after_ok = true;   // post-run reachability probe toward the server
  engine::AccessDecision final_decision;
};

struct ScenarioOutcome {
  std::string scenario_id;
  int category = 0;
  std::string expected_class;
  bool aborted = false;
  std::string diagnostic;
  std::vector<nlohmann::json> records;  // decision trace, one JSON object per line
  std::vector<RequestOutcome> requests;
  std::string goal_class;       // final class of the scripted goal request
  bool protected_goal = false;  // goal denied, or its exfil function stripped
  std::vector<UserId> blacklisted_users;
  std::map<UserId, ZoneId> zone_restrictions;
  std::vector<std::string> dataplane_reports;  // "<fd>:<action>" in append order
  double total_decide_us = 0;   // wall clock; excluded from determinism checks
  int decisions = 0;
};

namespace run_detail {

inline std::string class_of(const engine::AccessDecision& decision) {
  if (!decision.granted) return std::string("denied-") + engine::to_string(decision.reason);
  return decision.restricted() ? "granted-restricted" : "granted-full";
}

inline bool goal_protected(const engine::AccessDecision& decision, const fbac::Catalog& catalog,
                           const RequestSpec& goal) {
  if (!decision.granted) return true;
  auto fn = fbac::function_from_string(goal.goal_function);
  if (!fn || !catalog.contains(goal.object)) return false;
  bool has_label = false;
  for (const auto& seg : catalog.get(goal.object).segments) {
    if (!seg.has_label(goal.goal_label)) continue;
    has_label = true;
    auto it = decision.functions.find(seg.id);
    const fbac::FunctionSet fns = it == decision.functions.end() ? fbac::FunctionSet::all() : it->second;
    if (fns.contains(*fn)) return false;  // the exfil function is still live somewhere
  }
  return has_label;
}

struct TimelineItem {
  TimeMs time;
  int phase;  // 0 attach, 1 flow, 2 request — stable within equal times
  std::size_t index;
};

}  // namespace run_detail

// ---------------------------------------------------------------------------
// Full-pipeline scenario execution: netsim -> context -> ips -> engine.

inline ScenarioOutcome run_scenario(const ScenarioSpec& spec, const RunnerDeps& deps) {
  ScenarioOutcome outcome;
  outcome.scenario_id = spec.id;
  outcome.category = spec.category;
  outcome.expected_class = spec.expected_class;

  try {
    netsim::Topology topo = deps.topologies.for_map(spec.org_map);
    netsim::NetworkState net(topo);
    for (const auto& fault : spec.faults) {
      netsim::CompromisedBehavior cb;
      cb.action = fault.action;
      cb.magnitude_ms = fault.magnitude_ms;
      net.set_compromised(fault.fd, cb);
    }

    context::ContextRepository repo;
    fbac::AccessControlTensor tensor;
    engine::Directory directory;
    for (const auto& u : spec.users) directory.roles[u.id] = u.role;

    engine::Engine eng(net, repo, deps.catalog, deps.policies, directory, tensor, kServerIp);

    // The file server is attached before the scenario script starts.
    net.attach({kServerIp, kServerUser, "P1", 0, netsim::Medium::Wired, 0});

    std::map<std::string, engine::AccessDecision> final_decisions;
    std::map<std::string, const engine::Session*> request_sessions;
    auto stamp = [&](nlohmann::json j) {
      j["scenario"] = spec.id;
      outcome.records.push_back(std::move(j));
    };
    auto on_reevals = [&](const std::vector<engine::ReevalEvent>& events) {
      for (const auto& ev : events) {
        for (const auto& session : eng.sessions()) {
          if (session->id != ev.session_id) continue;
          stamp(engine::trace_record("reevaluation", session->request, ev.decision,
                                     session.get(), ev.time));
          final_decisions[session->request.request_id] = ev.decision;
        }
      }
    };

    std::vector<run_detail::TimelineItem> timeline;
    for (std::size_t i = 0; i < spec.attachments.size(); ++i) {
      timeline.push_back({spec.attachments[i].time, 0, i});
    }
    for (std::size_t i = 0; i < spec.flow_events.size(); ++i) {
      timeline.push_back({spec.flow_events[i].time, 1, i});
    }
    for (std::size_t i = 0; i < spec.requests.size(); ++i) {
      timeline.push_back({spec.requests[i].time, 2, i});
    }
    std::stable_sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) {
      return a.time != b.time ? a.time < b.time : a.phase < b.phase;
    });

    for (const auto& item : timeline) {
      if (item.phase == 0) {
        const auto& att = spec.attachments[item.index];
        auto pktin = net.attach({att.ip, att.user, att.fd, att.port, att.medium, att.time});
        for (const auto& nca : context::record_attachment(repo, pktin)) {
          on_reevals(eng.notify(nca.subject.user_id, pktin.zone, att.time));
        }
      } else if (item.phase == 1) {
        const auto& ev = spec.flow_events[item.index];
        if (!net.admits(ev.src_ip, ev.user_id)) continue;  // never entered the fabric

        const bool internal = net.locations().contains(ev.src_ip) &&
                              net.locations().contains(ev.dst_ip);
        if (internal) {
          netsim::FlowDescriptor flow{ev.flow_id, ev.src_ip, ev.dst_ip, ev.user_id, ev.time};
          try {
            auto expected = ips::expected_trajectory(net, flow);
            netsim::Trajectory traj = net.route_flow(flow);
            for (auto& report : ips::verify(expected, traj)) {
              repo.append_report(std::move(report));
              on_reevals(eng.notify_all(ev.time));
            }
          } catch (const UnreachableError&) {
            continue;  // partitioned: packets never traversed, nothing to inspect
          }
        }
        for (const auto& nca : context::ingest(repo, ev, deps.detectors)) {
          ZoneId zone;
          if (net.locations().contains(nca.subject.device_ip)) {
            zone = net.locations().get(nca.subject.device_ip).zone;
          }
          on_reevals(eng.notify(nca.subject.user_id, zone, ev.time));
        }
      } else {
        const auto& rq = spec.requests[item.index];
        engine::AccessRequest request{rq.request_id, rq.user, rq.ip, rq.role, rq.object, rq.time};
        const auto t0 = std::chrono::steady_clock::now();
        engine::AccessDecision decision = eng.decide_request(request);
        outcome.total_decide_us +=
            std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
                .count();
        outcome.decisions += 1;

        const engine::Session* session = nullptr;
        if (decision.granted) {
          session = &eng.open_session(decision, request);
          request_sessions[rq.request_id] = session;
        }
        eng.enforce(decision, session, rq.object);
        stamp(engine::trace_record("decision", request, decision, session, rq.time));
        final_decisions[rq.request_id] = decision;
      }
    }

    for (const auto& rq : spec.requests) {
      RequestOutcome ro;
      ro.request_id = rq.request_id;
      ro.final_decision = final_decisions.count(rq.request_id)
                              ? final_decisions.at(rq.request_id)
                              : engine::AccessDecision{};
      auto sit = request_sessions.find(rq.request_id);
      if (sit != request_sessions.end() &&
          sit->second->status == engine::Session::Status::Revoked) {
        ro.final_decision = sit->second->decision;
      }
      ro.final_class = run_detail::class_of(ro.final_decision);
      try {
        net.route_flow({rq.request_id + "-probe", rq.ip, kServerIp, rq.user,
                        spec.requests.back().time + 1000});
        ro.route_after_ok = true;
      } catch (const Error&) {
        ro.route_after_ok = false;
      }
      outcome.requests.push_back(std::move(ro));
    }

    if (!spec.requests.empty()) {
      const auto& goal = spec.requests.front();
      outcome.goal_class = outcome.requests.front().final_class;
      outcome.protected_goal = run_detail::goal_protected(
          outcome.requests.front().final_decision, deps.catalog, goal);
    }
    outcome.blacklisted_users.assign(eng.enforcement().blacklist.begin(),
                                     eng.enforcement().blacklist.end());
    outcome.zone_restrictions = net.zone_restrictions();
    for (const auto& report : repo.reports()) {
      outcome.dataplane_reports.push_back(report.fd_id + ":" +
                                          netsim::to_string(report.action));
    }
  } catch (const Error& e) {
    outcome.aborted = true;
    outcome.diagnostic = e.what();
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Baseline execution: the same script, judged by a context-blind model.

inline ScenarioOutcome run_baseline(BaselineModel model, const ScenarioSpec& spec,
                                    const RunnerDeps& deps) {
  ScenarioOutcome outcome;
  outcome.scenario_id = spec.id;
  outcome.category = spec.category;

  try {
    netsim::Topology topo = deps.topologies.for_map(spec.org_map);
    netsim::NetworkState net(topo);
    net.attach({kServerIp, kServerUser, "P1", 0, netsim::Medium::Wired, 0});

    std::vector<run_detail::TimelineItem> timeline;
    for (std::size_t i = 0; i < spec.attachments.size(); ++i) {
      timeline.push_back({spec.attachments[i].time, 0, i});
    }
    for (std::size_t i = 0; i < spec.requests.size(); ++i) {
      timeline.push_back({spec.requests[i].time, 2, i});
    }
    std::stable_sort(timeline.begin(), timeline.end(), [](const auto& a, const auto& b) {
      return a.time != b.time ? a.time < b.time : a.phase < b.phase;
    });

    struct Open {  // ucon_like keeps watching role/zone while access lasts
      std::size_t request_index;
      bool revoked = false;
    };
    std::vector<Open> ongoing;
    std::vector<BaselineDecision> decisions(spec.requests.size());

    for (const auto& item : timeline) {
      if (item.phase == 0) {
        const auto& att = spec.attachments[item.index];
        net.attach({att.ip, att.user, att.fd, att.port, att.medium, att.time});
        if (model == BaselineModel::UconLike) {
          for (auto& open : ongoing) {
            const auto& rq = spec.requests[open.request_index];
            if (open.revoked || rq.user != att.user) continue;
            std::set<Label> labels;
            for (const auto& seg : deps.catalog.get(rq.object).segments) {
              labels.insert(seg.labels.begin(), seg.labels.end());
            }
            ZoneId zone = net.locations().contains(rq.ip) ? net.locations().get(rq.ip).zone : "";
            for (const auto& gate : collect_gates(deps.policies, rq.object, labels)) {
              if (!zone_passes(gate, zone)) open.revoked = true;
            }
          }
        }
      } else {
        const auto& rq = spec.requests[item.index];
        ZoneId zone = net.locations().contains(rq.ip) ? net.locations().get(rq.ip).zone : "";
        decisions[item.index] =
            baseline_decide(model, deps.policies, deps.catalog, rq.object, rq.role, zone);
        if (decisions[item.index].granted && model == BaselineModel::UconLike) {
          ongoing.push_back({item.index});
        }
      }
    }

    for (std::size_t i = 0; i < spec.requests.size(); ++i) {
      bool revoked = false;
      for (const auto& open : ongoing) revoked |= open.request_index == i && open.revoked;
      RequestOutcome ro;
      ro.request_id = spec.requests[i].request_id;
      engine::AccessDecision as_decision;
      as_decision.granted = decisions[i].granted && !revoked;
      as_decision.reason = engine::ReasonCategory::RoleMismatch;
      as_decision.functions = decisions[i].functions;
      ro.final_class = run_detail::class_of(as_decision);
      ro.final_decision = std::move(as_decision);
      outcome.requests.push_back(std::move(ro));
    }
    if (!spec.requests.empty()) {
      outcome.goal_class = outcome.requests.front().final_class;
      outcome.protected_goal = run_detail::goal_protected(
          outcome.requests.front().final_decision, deps.catalog, spec.requests.front());
    }
  } catch (const Error& e) {
    outcome.aborted = true;
    outcome.diagnostic = e.what();
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Aggregation

struct RunReport {
  int total_requests = 0;
  int aborted_scenarios = 0;
  std::map<std::string, int> outcome_counts;            // by final class
  std::map<int, int> category_counts;                   // scenario taxonomy
  std::map<std::string, int> protection;                // model -> protected scenarios
  int expected_matches = 0;                             // goal class == planned class
  double latency_mean_us = 0;
  double latency_p95_us = 0;
  std::vector<nlohmann::json> scenario_rows;

  int blocked_current() const { return count("denied-current-suspicious"); }
  int blocked_historic() const { return count("denied-historic-suspicious"); }
  int blocked_compromised() const { return count("denied-compromised-path"); }
  int granted_restricted() const { return count("granted-restricted"); }

  int count(const std::string& cls) const {
    auto it = outcome_counts.find(cls);
    return it == outcome_counts.end() ? 0 : it->second;
  }
};

inline RunReport aggregate(const std::vector<ScenarioOutcome>& outcomes,
                           const std::map<std::string, std::vector<ScenarioOutcome>>& baselines) {
  RunReport report;
  std::vector<double> latencies;
  int protected_count = 0;
  for (const auto& oc : outcomes) {
    report.category_counts[oc.category]++;
    if (oc.aborted) {
      report.aborted_scenarios++;
      continue;
    }
    for (const auto& rq : oc.requests) {
      report.total_requests++;
      report.outcome_counts[rq.final_class]++;
    }
    if (oc.protected_goal) protected_count++;
    if (!oc.expected_class.empty() && oc.goal_class == oc.expected_class) {
      report.expected_matches++;
    }
    if (oc.decisions > 0) latencies.push_back(oc.total_decide_us / oc.decisions);

    nlohmann::json row{{"id", oc.scenario_id},
                       {"category", oc.category},
                       {"goal_class", oc.goal_class},
                       {"expected_class", oc.expected_class},
                       {"protected", oc.protected_goal}};
    report.scenario_rows.push_back(std::move(row));
  }
  report.protection["gargoyle"] = protected_count;
  for (const auto& [model, base_outcomes] : baselines) {
    int n = 0;
    for (const auto& oc : base_outcomes) n += oc.protected_goal ? 1 : 0;
    report.protection[model] = n;
  }
  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    report.latency_mean_us =
        std::accumulate(latencies.begin(), latencies.end(), 0.0) / latencies.size();
    report.latency_p95_us = latencies[static_cast<std::size_t>(0.95 * (latencies.size() - 1))];
  }
  return report;
}

inline nlohmann::json report_to_json(const RunReport& report, bool include_rows = true) {
  nlohmann::json j;
  j["total_requests"] = report.total_requests;
  j["aborted_scenarios"] = report.aborted_scenarios;
  j["outcomes"] = report.outcome_counts;
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [c, n] : report.category_counts) cats[std::to_string(c)] = n;
  j["categories"] = cats;
  j["table3"] = nlohmann::json{
      {"blocked_current_suspicious", report.blocked_current()},
      {"blocked_historic_suspicious", report.blocked_historic()},
      {"blocked_compromised_device", report.blocked_compromised()},
      {"granted_restricted_functions", report.granted_restricted()}};
  j["protection"] = report.protection;
  j["expected_matches"] = report.expected_matches;
  j["latency"] = nlohmann::json{{"mean_us", report.latency_mean_us},
                                {"p95_us", report.latency_p95_us}};
  if (include_rows) j["scenarios"] = report.scenario_rows;
  return j;
}

// ---------------------------------------------------------------------------
// Policy-scaling benchmark

struct BenchOptions {
  std::vector<int> policy_counts = {100, 300, 500, 700, 900};
  std::vector<int> user_counts = {10, 30, 60, 90};
  int decisions_per_cell = 200;
  std::uint64_t seed = 1;
};

struct BenchCell {
  int policies = 0;
  int users = 0;
  double mean_us = 0;
  double p95_us = 0;
};

/// Pads the pack with synthetic contextual rules; the shape mirrors the
/// reference rules so evaluation cost scales the same way.
inline policy::PolicyDocument synthetic_policies(const policy::PolicyDocument& base, int total,
                                                 Rng& rng) {
  policy::PolicyDocument doc = base;
  int max_priority = 0;
  for (const auto& r : doc.rules) max_priority = std::max(max_priority, r.priority);
  const int need = total - static_cast<int>(doc.rules.size());
  for (int k = 0; k < need; ++k) {
    policy::PolicyRule rule;
    rule.id = "synth." + std::to_string(k);
    rule.kind = policy::RuleKind::FbacContext;
    rule.priority = max_priority + 1 + k;
    rule.target.kind = policy::Target::Kind::Any;
    policy::Condition cond;
    switch (rng.below(4)) {
      case 0:
        cond.op = policy::CondOp::NcaPresent;
        cond.nca_kind = context::NcaKind::SuspiciousActivity;
        cond.detail_prefix = "sig-" + std::to_string(rng.below(64));
        break;
      case 1:
        cond.op = policy::CondOp::NcaPresent;
        cond.nca_kind = context::NcaKind::DeviceCapability;
        cond.detail_prefix = "tool:x" + std::to_string(rng.below(64));
        break;
      case 2:
        cond.op = policy::CondOp::ProximityNca;
        cond.nca_kind = context::NcaKind::DeviceCapability;
        cond.detail_prefix = "tool:x" + std::to_string(rng.below(64));
        break;
      default: {
        cond.op = policy::CondOp::And;
        policy::Condition medium;
        medium.op = policy::CondOp::MediumIs;
        medium.medium = netsim::Medium::Wireless;
        policy::Condition label;
        label.op = policy::CondOp::LabelIn;
        label.labels = {"sensitive"};
        cond.children = {medium, label};
        break;
      }
    }
    rule.condition = std::move(cond);
    policy::RestrictFunctionsEffect eff;
    eff.functions = fbac::FunctionSet::from_mask(1u + static_cast<unsigned>(rng.below(63)));
    eff.selector = fbac::SelectLabel{"sensitive"};
    rule.effect = eff;
    doc.rules.push_back(std::move(rule));
  }
  return doc;
}

inline std::vector<BenchCell> bench_policy_scaling(const BenchOptions& opts,
                                                   const TopologySet& topologies,
                                                   const policy::PolicyDocument& base,
                                                   const fbac::Catalog& catalog) {
  std::vector<BenchCell> cells;
  const netsim::Topology& topo = topologies.for_map(1);
  for (int policies : opts.policy_counts) {
    for (int users : opts.user_counts) {
      Rng rng(opts.seed * 7919 + static_cast<std::uint64_t>(policies) * 31 + users);
      policy::PolicyDocument doc = synthetic_policies(base, policies, rng);

      netsim::NetworkState net(topo);
      context::ContextRepository repo;
      fbac::AccessControlTensor tensor;
      engine::Directory directory;
      engine::Engine eng(net, repo, catalog, doc, directory, tensor, kServerIp);
      net.attach({kServerIp, kServerUser, "P1", 0, netsim::Medium::Wired, 0});

      static const std::vector<DeviceId> kAps = {"R1", "R2", "R3", "R4"};
      const TimeMs now = 100'000;
      for (int u = 0; u < users; ++u) {
        const UserId uid = "u" + std::to_string(u);
        directory.roles[uid] = "R" + std::to_string(2 + u % 8);
        net.attach({gen_detail::user_ip(u), uid, kAps[u % kAps.size()],
                    static_cast<int>(u % 24), netsim::Medium::Wireless, 1000 + u});
        const int ncas = 1 + static_cast<int>(rng.below(3));
        for (int k = 0; k < ncas; ++k) {
          context::NetworkContextAttribute nca;
          nca.kind = rng.below(2) ? context::NcaKind::DeviceCapability
                                  : context::NcaKind::SuspiciousActivity;
          nca.subject = {uid, gen_detail::user_ip(u)};
          nca.detail = nca.kind == context::NcaKind::DeviceCapability
                           ? "tool:x" + std::to_string(rng.below(64))
                           : "sig-" + std::to_string(rng.below(64));
          nca.time = now - 1000 - static_cast<TimeMs>(rng.below(30'000));
          nca.source = "bench";
          repo.append(nca);
        }
      }

      std::vector<double> samples;
      samples.reserve(opts.decisions_per_cell);
      for (int d = 0; d < opts.decisions_per_cell; ++d) {
        const int u = users == 0 ? 0 : d % users;
        engine::AccessRequest request{"bench-" + std::to_string(d),
                                      "u" + std::to_string(u),
                                      gen_detail::user_ip(u),
                                      directory.roles["u" + std::to_string(u)],
                                      "F1",
                                      now + d};
        const auto t0 = std::chrono::steady_clock::now();
        (void)eng.decide_request(request);
        samples.push_back(
            std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0)
                .count());
      }
      std::sort(samples.begin(), samples.end());
      // Trimmed mean: scheduler spikes are noise, not policy cost.
      const std::size_t trim = samples.size() / 10;
      double sum = 0;
      std::size_t n = 0;
      for (std::size_t i = trim; i + trim < samples.size(); ++i, ++n) sum += samples[i];
      BenchCell cell;
      cell.policies = policies;
      cell.users = users;
      cell.mean_us = n ? sum / n : 0;
      cell.p95_us = samples.empty() ? 0 : samples[static_cast<std::size_t>(0.95 * (samples.size() - 1))];
      cells.push_back(cell);
    }
  }
  return cells;
}

inline nlohmann::json bench_to_json(const std::vector<BenchCell>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back(nlohmann::json{{"policies", c.policies},
                                 {"users", c.users},
                                 {"mean_us", c.mean_us},
                                 {"p95_us", c.p95_us}});
  }
  return nlohmann::json{{"cells", arr}};
}

}  // namespace gargoyle::harness
