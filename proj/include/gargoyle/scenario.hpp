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
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gargoyle/context.hpp"
#include "gargoyle/core.hpp"
#include "gargoyle/fbac.hpp"
#include "gargoyle/netsim.hpp"

namespace gargoyle::harness {

// ---------------------------------------------------------------------------
// Scenario scripts

struct UserSpec {
  UserId id;
  RoleId role;
};

struct AttachmentSpec {
  IpAddr ip;
  UserId user;
  DeviceId fd;
  int port = 0;
  netsim::Medium medium = netsim::Medium::Wired;
  TimeMs time = 0;
};

struct RequestSpec {
  std::string request_id;
  UserId user;
  IpAddr ip;
  RoleId role;
  ObjectId object;
  TimeMs time = 0;
  std::string goal_function = "Email";  // the insider's scripted exfiltration function
  Label goal_label = "top-secret";      // on segments carrying this label
};

struct FaultSpec {
  DeviceId fd;
  netsim::FaultAction action = netsim::FaultAction::Delay;
  TimeMs magnitude_ms = 0;
};

struct ScenarioSpec {
  std::string id;
  int category = 1;  // 1..4 per the insider-scenario taxonomy
  int org_map = 1;   // 1..7
  int user_count = 0;
  std::vector<UserSpec> users;
  std::vector<AttachmentSpec> attachments;
  std::vector<context::FlowEvent> flow_events;
  std::vector<RequestSpec> requests;
  std::vector<FaultSpec> faults;
  std::string expected_class;  // planned outcome class for the goal request
};

/// All organization maps share edge ids and room naming; only the wiring and
/// core count differ. Rooms A/B/Common are the zones the reference policies
/// admit; Room C is the quarantine floor.
inline ZoneId conventional_zone(const DeviceId& fd) {
  static const std::map<DeviceId, ZoneId> zones = {
      {"R1", "RoomA"}, {"R2", "RoomB"}, {"R3", "CommonRoom"}, {"R4", "RoomC"},
      {"P1", "RoomA"}, {"P2", "RoomB"}, {"P3", "CommonRoom"}, {"P4", "RoomC"}};
  auto it = zones.find(fd);
  return it == zones.end() ? ZoneId{} : it->second;
}

inline DeviceId access_point_of(const ZoneId& zone) {
  static const std::map<ZoneId, DeviceId> aps = {
      {"RoomA", "R1"}, {"RoomB", "R2"}, {"CommonRoom", "R3"}, {"RoomC", "R4"}};
  return aps.at(zone);
}

inline DeviceId wired_port_of(const ZoneId& zone) {
  static const std::map<ZoneId, DeviceId> ports = {
      {"RoomA", "P1"}, {"RoomB", "P2"}, {"CommonRoom", "P3"}, {"RoomC", "P4"}};
  return ports.at(zone);
}

inline const IpAddr kServerIp = "10.0.0.100";
inline const UserId kServerUser = "svc-files";

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["category"] = s.category;
  j["org_map"] = s.org_map;
  j["user_count"] = s.user_count;
  j["expected_class"] = s.expected_class;
  auto& users = j["users"] = nlohmann::json::array();
  for (const auto& u : s.users) users.push_back({{"id", u.id}, {"role", u.role}});
  auto& atts = j["attachments"] = nlohmann::json::array();
  for (const auto& a : s.attachments) {
    atts.push_back({{"ip", a.ip},
                    {"user", a.user},
                    {"fd", a.fd},
                    {"port", a.port},
                    {"medium", netsim::to_string(a.medium)},
                    {"time", a.time}});
  }
  auto& flows = j["flow_events"] = nlohmann::json::array();
  for (const auto& ev : s.flow_events) flows.push_back(context::flow_event_to_json(ev));
  auto& reqs = j["requests"] = nlohmann::json::array();
  for (const auto& r : s.requests) {
    reqs.push_back({{"request_id", r.request_id},
                    {"user", r.user},
                    {"ip", r.ip},
                    {"role", r.role},
                    {"object", r.object},
                    {"time", r.time},
                    {"goal_function", r.goal_function},
                    {"goal_label", r.goal_label}});
  }
  auto& faults = j["faults"] = nlohmann::json::array();
  for (const auto& f : s.faults) {
    nlohmann::json jf{{"id", f.fd}, {"action", netsim::to_string(f.action)}};
    if (f.action == netsim::FaultAction::Delay) jf["magnitude_ms"] = f.magnitude_ms;
    faults.push_back(jf);
  }
  return j;
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  try {
    s.id = j.at("id").get<std::string>();
    s.category = j.at("category").get<int>();
    s.org_map = j.at("org_map").get<int>();
    s.user_count = j.value("user_count", 0);
    s.expected_class = j.value("expected_class", "");
    for (const auto& ju : j.value("users", nlohmann::json::array())) {
      s.users.push_back({ju.at("id").get<std::string>(), ju.at("role").get<std::string>()});
    }
    for (const auto& ja : j.value("attachments", nlohmann::json::array())) {
      AttachmentSpec a;
      a.ip = ja.at("ip").get<std::string>();
      a.user = ja.at("user").get<std::string>();
      a.fd = ja.at("fd").get<std::string>();
      a.port = ja.value("port", 0);
      a.medium = ja.value("medium", "wired") == std::string("wireless") ? netsim::Medium::Wireless
                                                                        : netsim::Medium::Wired;
      a.time = ja.value("time", TimeMs{0});
      s.attachments.push_back(std::move(a));
    }
    for (const auto& jf : j.value("flow_events", nlohmann::json::array())) {
      s.flow_events.push_back(context::flow_event_from_json(jf));
    }
    for (const auto& jr : j.value("requests", nlohmann::json::array())) {
      RequestSpec r;
      r.request_id = jr.at("request_id").get<std::string>();
      r.user = jr.at("user").get<std::string>();
      r.ip = jr.at("ip").get<std::string>();
      r.role = jr.at("role").get<std::string>();
      r.object = jr.at("object").get<std::string>();
      r.time = jr.at("time").get<TimeMs>();
      r.goal_function = jr.value("goal_function", "Email");
      r.goal_label = jr.value("goal_label", "top-secret");
      s.requests.push_back(std::move(r));
    }
    for (const auto& jf : j.value("faults", nlohmann::json::array())) {
      FaultSpec f;
      f.fd = jf.at("id").get<std::string>();
      auto action = netsim::fault_action_from_string(jf.at("action").get<std::string>());
      if (!action) throw SchemaError("scenario: bad fault action");
      f.action = *action;
      f.magnitude_ms = jf.value("magnitude_ms", TimeMs{0});
      s.faults.push_back(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline nlohmann::json scenarios_to_json(const std::vector<ScenarioSpec>& specs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : specs) arr.push_back(scenario_to_json(s));
  return nlohmann::json{{"scenarios", arr}};
}

/// Accepts either a pack ({"scenarios":[...]}) or a single scenario object.
inline std::vector<ScenarioSpec> scenarios_from_json(const nlohmann::json& j) {
  std::vector<ScenarioSpec> out;
  if (j.is_object() && j.contains("scenarios") && j["scenarios"].is_array()) {
    for (const auto& js : j["scenarios"]) out.push_back(scenario_from_json(js));
    return out;
  }
  if (j.is_object() && j.contains("id")) {
    out.push_back(scenario_from_json(j));
    return out;
  }
  throw SchemaError("scenario pack: needs 'scenarios' array");
}

// ---------------------------------------------------------------------------
// Generation

struct GenConfig {
  int count = 1000;
  int org_maps = 7;
  std::vector<int> category_pct = {20, 30, 10, 40};
  TimeMs horizon_ms = 180'000;
  TimeMs request_time_ms = 150'000;

  void validate() const {
    if (count < 0) throw ConfigError("generation: count must be >= 0");
    if (org_maps < 1) throw ConfigError("generation: org_maps must be >= 1");
    if (category_pct.size() != 4) throw ConfigError("generation: need 4 category percentages");
    int sum = 0;
    for (int p : category_pct) sum += p;
    if (sum != 100) throw ConfigError("generation: category percentages must sum to 100");
    if (request_time_ms >= horizon_ms) throw ConfigError("generation: request time past horizon");
  }
};

inline GenConfig gen_config_from_json(const nlohmann::json& j) {
  GenConfig cfg;
  cfg.count = j.value("count", cfg.count);
  cfg.org_maps = j.value("org_maps", cfg.org_maps);
  if (j.contains("category_pct")) cfg.category_pct = j["category_pct"].get<std::vector<int>>();
  cfg.horizon_ms = j.value("horizon_ms", cfg.horizon_ms);
  cfg.request_time_ms = j.value("request_time_ms", cfg.request_time_ms);
  cfg.validate();
  return cfg;
}

namespace gen_detail {

/// Exact per-category counts by largest remainder, then a seeded shuffle.
inline std::vector<int> category_sequence(int n, const std::vector<int>& pct, Rng& rng) {
  std::vector<int> counts(4, 0);
  std::vector<std::pair<int, int>> remainders;  // (remainder*100, index)
  int assigned = 0;
  for (int c = 0; c < 4; ++c) {
    counts[c] = n * pct[c] / 100;
    assigned += counts[c];
    remainders.push_back({n * pct[c] % 100, c});
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int i = 0; assigned < n; ++i, ++assigned) counts[remainders[i % 4].second]++;

  std::vector<int> seq;
  for (int c = 0; c < 4; ++c) seq.insert(seq.end(), counts[c], c + 1);
  for (std::size_t i = seq.size(); i > 1; --i) {
    std::swap(seq[i - 1], seq[rng.below(i)]);
  }
  return seq;
}

inline IpAddr user_ip(int k) {
  return "10.0." + std::to_string(1 + k / 200) + "." + std::to_string(1 + k % 200);
}

}  // namespace gen_detail

/// Builds one scripted scenario. The flavor mix targets the reference policy
/// pack: mild injections end in restricted grants, acute ones in denials, so
/// that across a full run most requests stay serviceable.
inline ScenarioSpec build_scenario(int index, int category, const GenConfig& cfg, Rng& rng) {
  ScenarioSpec spec;
  {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sc-%04d", index);
    spec.id = buf;
  }
  spec.category = category;
  spec.org_map = 1 + index % cfg.org_maps;
  const bool alt_map = spec.org_map <= 4;  // maps 1-4 keep a redundant core

  const TimeMs t_req = cfg.request_time_ms;

  // Gate flavor: most requesters hold a valid role in an admitted room.
  enum class Gate { Ok, WrongZone, WrongRole };
  const std::uint64_t g = rng.below(100);
  const Gate gate = g < 89 ? Gate::Ok : g < 97 ? Gate::WrongZone : Gate::WrongRole;

  // Threat profile within the category.
  enum class Profile { Mild, Acute, Historic };
  Profile profile = Profile::Mild;
  int acute_kind = 0;      // 0 scan, 1 dos, 2 restricted-domain
  bool with_fault = false;
  bool fault_on_edge = false;
  switch (category) {
    case 1: {
      const auto r = rng.below(100);
      profile = r < 60 ? Profile::Mild : r < 82 ? Profile::Acute : Profile::Historic;
      acute_kind = static_cast<int>(rng.below(3));
      break;
    }
    case 2:
      profile = rng.below(100) < 82 ? Profile::Mild : Profile::Acute;
      break;
    case 3:
      with_fault = true;
      fault_on_edge = rng.below(100) >= 60;
      break;
    default: {
      const auto r = rng.below(100);
      profile = r < 70 ? Profile::Mild : r < 87 ? Profile::Acute : Profile::Historic;
      acute_kind = static_cast<int>(rng.below(3));
      with_fault = rng.below(100) < 30;
      fault_on_edge = rng.below(100) >= 60;
      break;
    }
  }
  const bool with_proximate = category == 2 || category == 4;
  const bool proximate_acute = category == 2 && profile == Profile::Acute;

  // Goal object; GP-style proximity rules only bite on war-related material.
  ObjectId object = "F1";
  if (!proximate_acute) {
    const auto r = rng.below(100);
    object = r < 75 ? "F1" : r < 90 ? "F2" : "F3";
  }
  const Label goal_label = object == "F3" ? "sensitive" : "top-secret";
  const bool org_gated = object != "F3";

  // Requester placement. Fault scenarios attach over wireless so the path to
  // the file server (wired at P1) always crosses the fabric.
  static const std::vector<ZoneId> kAllowedZones = {"RoomA", "RoomB", "CommonRoom"};
  const ZoneId zone = gate == Gate::WrongZone ? "RoomC" : rng.pick(kAllowedZones);
  const bool wireless = with_fault || rng.below(100) < 80;
  const RoleId role = gate == Gate::WrongRole
                          ? "R12"
                          : "R" + std::to_string(rng.between(2, 9));
  const UserId requester = "u0";
  const IpAddr req_ip = gen_detail::user_ip(0);

  spec.users.push_back({requester, role});
  spec.attachments.push_back({req_ip, requester,
                              wireless ? access_point_of(zone) : wired_port_of(zone),
                              static_cast<int>(rng.below(24)),
                              wireless ? netsim::Medium::Wireless : netsim::Medium::Wired, 1000});

  int next_user = 1;
  // Proximate device, attached to the same room's access point.
  const UserId proximate = "u" + std::to_string(next_user);
  const IpAddr prox_ip = gen_detail::user_ip(next_user);
  if (with_proximate) {
    ++next_user;
    spec.users.push_back({proximate, "R" + std::to_string(rng.between(2, 9))});
    spec.attachments.push_back({prox_ip, proximate, access_point_of(zone),
                                static_cast<int>(rng.below(24)), netsim::Medium::Wireless,
                                t_req - 30'000});
  }

  // Optional supervisor in the requester's room.
  if (rng.below(100) < 40) {
    const UserId sup = "u" + std::to_string(next_user);
    spec.users.push_back({sup, "R10"});
    spec.attachments.push_back({gen_detail::user_ip(next_user), sup, access_point_of(zone),
                                static_cast<int>(rng.below(24)), netsim::Medium::Wireless, 1500});
    ++next_user;
  }

  // Background population.
  const int population = static_cast<int>(rng.below(100) < 90 ? rng.between(5, 55)
                                                              : rng.between(56, 90));
  spec.user_count = population;
  static const std::vector<ZoneId> kAllZones = {"RoomA", "RoomB", "CommonRoom", "RoomC"};
  int flow_seq = 0;
  auto next_flow_id = [&] { return spec.id + "-f" + std::to_string(++flow_seq); };
  while (next_user < population) {
    const UserId uid = "u" + std::to_string(next_user);
    const IpAddr uip = gen_detail::user_ip(next_user);
    const ZoneId uzone = rng.pick(kAllZones);
    const bool uwifi = rng.below(100) < 70;
    spec.users.push_back({uid, "R" + std::to_string(rng.between(2, 9))});
    spec.attachments.push_back({uip, uid, uwifi ? access_point_of(uzone) : wired_port_of(uzone),
                                static_cast<int>(rng.below(24)),
                                uwifi ? netsim::Medium::Wireless : netsim::Medium::Wired,
                                2000 + next_user * 50});
    const int flows = 1 + static_cast<int>(rng.below(2));
    for (int f = 0; f < flows; ++f) {
      context::FlowEvent ev;
      ev.time = rng.between(5000, t_req - 5000);
      ev.flow_id = next_flow_id();
      ev.src_ip = uip;
      ev.user_id = uid;
      const bool internal = rng.below(100) < 50;
      ev.dst_ip = internal ? kServerIp : "198.51.100.7";
      if (!internal) ev.dst_domain = "example.org";
      ev.dst_port = internal ? 443 : 80;
      ev.packets = rng.between(3, 20);
      ev.bytes = ev.packets * 500;
      spec.flow_events.push_back(std::move(ev));
    }
    ++next_user;
  }

  // The requester's routine internal flow; for on-path faults this is the
  // traffic whose trajectory betrays the compromised device.
  {
    context::FlowEvent ev;
    ev.time = t_req - 8000;
    ev.flow_id = next_flow_id();
    ev.src_ip = req_ip;
    ev.user_id = requester;
    ev.dst_ip = kServerIp;
    ev.dst_port = 443;
    ev.packets = 12;
    ev.bytes = 6000;
    spec.flow_events.push_back(std::move(ev));
  }

  auto add_annotated_flow = [&](const IpAddr& src, const UserId& user, TimeMs time,
                                std::set<std::string> tags) {
    context::FlowEvent ev;
    ev.time = time;
    ev.flow_id = next_flow_id();
    ev.src_ip = src;
    ev.user_id = user;
    ev.dst_ip = kServerIp;
    ev.dst_port = 443;
    ev.packets = 6;
    ev.bytes = 3000;
    ev.annotations = std::move(tags);
    spec.flow_events.push_back(std::move(ev));
  };
  auto add_scan_burst = [&](const IpAddr& src, const UserId& user, TimeMs start, int flows,
                            std::set<std::string> tags) {
    for (int k = 0; k < flows; ++k) {
      context::FlowEvent ev;
      ev.time = start + k * 100;
      ev.flow_id = next_flow_id();
      ev.src_ip = src;
      ev.user_id = user;
      ev.dst_ip = kServerIp;
      ev.dst_port = 1000 + k;
      ev.packets = 2;
      ev.bytes = 240;
      if (k == 0) ev.annotations = tags;
      spec.flow_events.push_back(std::move(ev));
    }
  };

  // Category injections.
  const bool own_injection = category == 1 || category == 4;
  if (own_injection) {
    switch (profile) {
      case Profile::Mild:
        add_annotated_flow(req_ip, requester, t_req - 15'000,
                           {rng.below(100) < 50 ? "os-fingerprint:kali" : "tool:vuln-scanner"});
        break;
      case Profile::Acute:
        if (acute_kind == 0) {
          add_scan_burst(req_ip, requester, t_req - 5000, 25, {});
        } else if (acute_kind == 1) {
          for (int k = 0; k < 5; ++k) {
            context::FlowEvent ev;
            ev.time = t_req - 3000 + k * 100;
            ev.flow_id = next_flow_id();
            ev.src_ip = req_ip;
            ev.user_id = requester;
            ev.dst_ip = kServerIp;
            ev.dst_port = 443;
            ev.packets = 300;
            ev.bytes = 150'000;
            spec.flow_events.push_back(std::move(ev));
          }
        } else {
          context::FlowEvent ev;
          ev.time = t_req - 4000;
          ev.flow_id = next_flow_id();
          ev.src_ip = req_ip;
          ev.user_id = requester;
          ev.dst_ip = "203.0.113.66";
          ev.dst_domain = "evil.example";
          ev.dst_port = 443;
          ev.packets = 8;
          ev.bytes = 4000;
          spec.flow_events.push_back(std::move(ev));
        }
        break;
      case Profile::Historic:
        add_scan_burst(req_ip, requester, 8000, 25, {});
        break;
    }
  }
  if (with_proximate) {
    if (proximate_acute) {
      add_scan_burst(prox_ip, proximate, t_req - 6000, 10, {"os-fingerprint:kali"});
    } else {
      add_annotated_flow(prox_ip, proximate, t_req - 10'000,
                         {rng.below(100) < 50 ? "malware-sig:agent-x" : "os-version:xp-eol"});
    }
  }
  if (with_fault) {
    FaultSpec fault;
    fault.fd = fault_on_edge ? spec.attachments.front().fd : "C1";
    const auto fa = rng.below(3);
    fault.action = fa == 0   ? netsim::FaultAction::Delay
                   : fa == 1 ? netsim::FaultAction::Drop
                             : netsim::FaultAction::Misroute;
    if (fault.action == netsim::FaultAction::Delay) fault.magnitude_ms = 40;
    spec.faults.push_back(fault);
  }

  // Keep event order stable for the runner.
  std::stable_sort(spec.flow_events.begin(), spec.flow_events.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });

  RequestSpec req;
  req.request_id = spec.id + "-rq1";
  req.user = requester;
  req.ip = req_ip;
  req.role = role;
  req.object = object;
  req.time = t_req;
  req.goal_function = "Email";
  req.goal_label = goal_label;
  spec.requests.push_back(req);

  // Planned outcome for the goal request.
  if (gate != Gate::Ok && org_gated) {
    spec.expected_class = "denied-role-mismatch";
  } else if (with_fault && (fault_on_edge || !alt_map)) {
    spec.expected_class = "denied-compromised-path";
  } else if (own_injection && profile == Profile::Acute) {
    spec.expected_class = "denied-current-suspicious";
  } else if (proximate_acute) {
    spec.expected_class = "denied-current-suspicious";
  } else if (own_injection && profile == Profile::Historic) {
    spec.expected_class = "denied-historic-suspicious";
  } else {
    spec.expected_class = "granted-restricted";
  }
  return spec;
}

/// Deterministic scenario generation with exact category quotas.
inline std::vector<ScenarioSpec> generate_scenarios(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const std::vector<int> categories =
      gen_detail::category_sequence(cfg.count, cfg.category_pct, rng);
  std::vector<ScenarioSpec> out;
  out.reserve(cfg.count);
  for (int i = 0; i < cfg.count; ++i) {
    Rng child(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(i) * 2654435761ULL + 1);
    out.push_back(build_scenario(i, categories[i], cfg, child));
  }
  return out;
}

/// Structural category consistency: the scripted injections must match the
/// scenario's taxonomy slot.
inline bool category_consistent(const ScenarioSpec& spec) {
  if (spec.requests.empty()) return false;
  const IpAddr req_ip = spec.requests.front().ip;
  ZoneId req_zone;
  std::map<IpAddr, ZoneId> ip_zone;
  for (const auto& att : spec.attachments) {
    ip_zone[att.ip] = conventional_zone(att.fd);
    if (att.ip == req_ip) req_zone = conventional_zone(att.fd);
  }
  auto suspicious_event = [](const context::FlowEvent& ev) {
    return !ev.annotations.empty() || (ev.dst_domain && *ev.dst_domain == "evil.example") ||
           ev.packets >= 200;  // rate-burst flows carry no annotations
  };
  bool own = false, proximate = false;
  std::map<IpAddr, std::set<int>> ports_by_src;
  for (const auto& ev : spec.flow_events) {
    ports_by_src[ev.src_ip].insert(ev.dst_port);
    if (!suspicious_event(ev)) continue;
    if (ev.src_ip == req_ip) own = true;
    else if (ip_zone.count(ev.src_ip) && ip_zone[ev.src_ip] == req_zone) proximate = true;
  }
  for (const auto& [src, ports] : ports_by_src) {
    if (ports.size() < 20) continue;
    if (src == req_ip) own = true;
    else if (ip_zone.count(src) && ip_zone[src] == req_zone) proximate = true;
  }
  const bool fault = !spec.faults.empty();
  switch (spec.category) {
    case 1: return own;
    case 2: return proximate;
    case 3: return fault;
    case 4: return (own ? 1 : 0) + (proximate ? 1 : 0) + (fault ? 1 : 0) >= 2;
    default: return false;
  }
}

}  // namespace gargoyle::harness
