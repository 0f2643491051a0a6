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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gargoyle/context.hpp"
#include "gargoyle/core.hpp"
#include "gargoyle/fbac.hpp"
#include "gargoyle/ips.hpp"
#include "gargoyle/netsim.hpp"

namespace gargoyle::policy {

// ---------------------------------------------------------------------------
// The evaluation view: everything a condition may reference about one access
// request, assembled atomically at a single simulated instant.

struct ProximityEntry {
  UserId user_id;
  IpAddr device_ip;
  RoleId role;
  std::vector<context::NetworkContextAttribute> recent_ncas;
};

struct ContextSnapshot {
  TimeMs time = 0;
  UserId user_id;
  IpAddr device_ip;
  RoleId role;
  ObjectId object_id;
  std::set<Label> object_labels;
  ZoneId zone;
  netsim::Medium medium = netsim::Medium::Wired;
  bool blacklisted = false;
  bool supervisor_in_zone = false;
  std::vector<context::NetworkContextAttribute> recent_ncas;
  std::vector<context::NetworkContextAttribute> historical_ncas;
  std::vector<ProximityEntry> proximity;
  std::vector<ips::DataPlaneReport> path_reports;
  std::vector<DeviceId> current_path;
  std::set<DeviceId> flagged_devices;
  bool safe_path_exists = true;  // a path avoiding every flagged device exists
};

// ---------------------------------------------------------------------------
// Conditions

enum class CondOp {
  And,
  Or,
  Not,
  Always,
  RoleIn,
  RoleRange,
  ZoneIn,
  MediumIs,
  NcaPresent,
  ProximityNca,
  DataPlaneReportOnPath,
  SupervisorInZone,
  LabelIn,
};

enum class NcaWindow { Recent, Historical, Any };

struct Condition {
  CondOp op = CondOp::Always;
  std::vector<Condition> children;              // And / Or / Not
  std::set<RoleId> roles;                       // RoleIn
  int role_min = 0, role_max = 0;               // RoleRange, exclusive bounds
  std::set<ZoneId> zones;                       // ZoneIn
  netsim::Medium medium = netsim::Medium::Wired;  // MediumIs
  context::NcaKind nca_kind = context::NcaKind::SuspiciousActivity;
  std::string detail_prefix;                    // optional NCA detail filter
  NcaWindow window = NcaWindow::Recent;         // NcaPresent
  std::optional<netsim::FaultAction> report_action;  // DataPlaneReportOnPath
  std::set<Label> labels;                       // LabelIn
};

inline bool nca_matches(const context::NetworkContextAttribute& nca, context::NcaKind kind,
                        const std::string& detail_prefix) {
  return nca.kind == kind && (detail_prefix.empty() || has_prefix(nca.detail, detail_prefix));
}

/// Structural-recursion truth value of a condition against one snapshot.
/// Total and pure: identical inputs always agree.
inline bool evaluate_condition(const Condition& cond, const ContextSnapshot& snap) {
  switch (cond.op) {
    case CondOp::And:
      for (const auto& c : cond.children)
        if (!evaluate_condition(c, snap)) return false;
      return true;
    case CondOp::Or:
      for (const auto& c : cond.children)
        if (evaluate_condition(c, snap)) return true;
      return false;
    case CondOp::Not:
      return !evaluate_condition(cond.children.front(), snap);
    case CondOp::Always:
      return true;
    case CondOp::RoleIn:
      return cond.roles.count(snap.role) > 0;
    case CondOp::RoleRange: {
      auto idx = parse_role_index(snap.role);
      return idx && *idx > cond.role_min && *idx < cond.role_max;
    }
    case CondOp::ZoneIn:
      return cond.zones.count(snap.zone) > 0;
    case CondOp::MediumIs:
      return snap.medium == cond.medium;
    case CondOp::NcaPresent: {
      if (cond.window != NcaWindow::Historical) {
        for (const auto& nca : snap.recent_ncas)
          if (nca_matches(nca, cond.nca_kind, cond.detail_prefix)) return true;
      }
      if (cond.window != NcaWindow::Recent) {
        for (const auto& nca : snap.historical_ncas)
          if (nca_matches(nca, cond.nca_kind, cond.detail_prefix)) return true;
      }
      return false;
    }
    case CondOp::ProximityNca:
      for (const auto& entry : snap.proximity)
        for (const auto& nca : entry.recent_ncas)
          if (nca_matches(nca, cond.nca_kind, cond.detail_prefix)) return true;
      return false;
    case CondOp::DataPlaneReportOnPath:
      for (const auto& r : snap.path_reports)
        if (!cond.report_action || r.action == *cond.report_action) return true;
      return false;
    case CondOp::SupervisorInZone:
      return snap.supervisor_in_zone;
    case CondOp::LabelIn:
      for (const auto& l : cond.labels)
        if (snap.object_labels.count(l)) return true;
      return false;
  }
  return false;
}

/// Leaf predicates of a condition tree, in document order.
inline void collect_atoms(const Condition& cond, std::vector<const Condition*>& out) {
  switch (cond.op) {
    case CondOp::And:
    case CondOp::Or:
    case CondOp::Not:
      for (const auto& c : cond.children) collect_atoms(c, out);
      return;
    default:
      out.push_back(&cond);
  }
}

/// Zone-mates whose recent NCAs satisfy a proximity atom of `cond`; these are
/// the trigger subjects for requester-and-trigger effects.
inline std::vector<UserId> trigger_users(const Condition& cond, const ContextSnapshot& snap) {
  std::vector<const Condition*> atoms;
  collect_atoms(cond, atoms);
  std::set<UserId> found;
  for (const Condition* atom : atoms) {
    if (atom->op != CondOp::ProximityNca) continue;
    for (const auto& entry : snap.proximity) {
      for (const auto& nca : entry.recent_ncas) {
        if (nca_matches(nca, atom->nca_kind, atom->detail_prefix)) found.insert(entry.user_id);
      }
    }
  }
  return {found.begin(), found.end()};
}

// ---------------------------------------------------------------------------
// Rules

enum class RuleKind { Org, Generic, FbacContext };

inline const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Org: return "org";
    case RuleKind::Generic: return "generic";
    default: return "fbac-context";
  }
}

struct Target {
  enum class Kind { Any, Object, Label } kind = Kind::Any;
  std::string value;

  bool matches(const ObjectId& object, const std::set<Label>& labels) const {
    switch (kind) {
      case Kind::Any: return true;
      case Kind::Object: return value == object;
      default: return labels.count(value) > 0;
    }
  }
};

enum class ActionScope { Requester, RequesterAndTrigger };

struct DenyEffect {
  std::string reason;  // authored fallback category; may be empty
};

struct RestrictFunctionsEffect {
  fbac::FunctionSet functions;
  fbac::SegmentSelector selector;
};

struct NetworkActionEffect {
  enum class Kind { Quarantine, BlockDevice, RestrictToZone, RerouteAvoiding } kind;
  ZoneId zone;       // RestrictToZone
  DeviceId device;   // BlockDevice; empty means "the reported devices"
  ActionScope scope = ActionScope::Requester;
};

struct BlacklistEffect {
  ActionScope scope = ActionScope::Requester;
};

using Effect = std::variant<DenyEffect, RestrictFunctionsEffect, NetworkActionEffect, BlacklistEffect>;

struct PolicyRule {
  std::string id;
  RuleKind kind = RuleKind::Generic;
  Target target;
  Condition condition;
  Effect effect;
  int priority = 0;
};

struct Vocabulary {
  std::set<RoleId> roles;
  std::set<ZoneId> zones;
  std::set<Label> labels;
  std::vector<std::string> blocklist;
  std::set<RoleId> supervisor_roles;
};

struct PolicyDocument {
  Vocabulary vocab;
  std::vector<PolicyRule> rules;  // document order; priority is authoritative
  TimeMs recent_window_ms = 60'000;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline const char* kReasonNames[] = {"current-suspicious", "historic-suspicious",
                                     "compromised-path", "role-mismatch", "blacklisted"};

inline bool valid_reason(const std::string& r) {
  for (const char* n : kReasonNames)
    if (r == n) return true;
  return false;
}

inline Condition parse_condition(const nlohmann::json& j, const Vocabulary& vocab) {
  if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) {
    throw SchemaError("condition: missing 'op'");
  }
  const std::string op = j["op"].get<std::string>();
  Condition c;
  if (op == "and" || op == "or") {
    c.op = op == "and" ? CondOp::And : CondOp::Or;
    if (!j.contains("args") || !j["args"].is_array() || j["args"].empty()) {
      throw SchemaError("condition: '" + op + "' needs non-empty 'args'");
    }
    for (const auto& a : j["args"]) c.children.push_back(parse_condition(a, vocab));
  } else if (op == "not") {
    c.op = CondOp::Not;
    if (!j.contains("arg")) throw SchemaError("condition: 'not' needs 'arg'");
    c.children.push_back(parse_condition(j["arg"], vocab));
  } else if (op == "always") {
    c.op = CondOp::Always;
  } else if (op == "role_in") {
    c.op = CondOp::RoleIn;
    for (const auto& r : j.at("roles")) {
      RoleId role = r.get<std::string>();
      if (!vocab.roles.count(role)) throw UnknownVocabularyError("condition: undeclared role " + role);
      c.roles.insert(role);
    }
  } else if (op == "role_range") {
    c.op = CondOp::RoleRange;
    c.role_min = j.at("min").get<int>();
    c.role_max = j.at("max").get<int>();
    if (c.role_min >= c.role_max) throw SchemaError("condition: empty role range");
  } else if (op == "zone_in") {
    c.op = CondOp::ZoneIn;
    for (const auto& z : j.at("zones")) {
      ZoneId zone = z.get<std::string>();
      if (!vocab.zones.count(zone)) throw UnknownVocabularyError("condition: undeclared zone " + zone);
      c.zones.insert(zone);
    }
  } else if (op == "medium") {
    c.op = CondOp::MediumIs;
    const std::string m = j.at("value").get<std::string>();
    if (m == "wired") c.medium = netsim::Medium::Wired;
    else if (m == "wireless") c.medium = netsim::Medium::Wireless;
    else throw SchemaError("condition: bad medium " + m);
  } else if (op == "nca" || op == "proximity_nca") {
    c.op = op == "nca" ? CondOp::NcaPresent : CondOp::ProximityNca;
    auto kind = context::nca_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw UnknownVocabularyError("condition: unknown NCA kind");
    c.nca_kind = *kind;
    c.detail_prefix = j.value("detail_prefix", "");
    if (c.op == CondOp::NcaPresent) {
      const std::string w = j.value("window", "recent");
      if (w == "recent") c.window = NcaWindow::Recent;
      else if (w == "historical") c.window = NcaWindow::Historical;
      else if (w == "any") c.window = NcaWindow::Any;
      else throw SchemaError("condition: bad window " + w);
    }
  } else if (op == "dataplane_report") {
    c.op = CondOp::DataPlaneReportOnPath;
    if (j.contains("action")) {
      auto a = netsim::fault_action_from_string(j["action"].get<std::string>());
      if (!a) throw SchemaError("condition: bad report action");
      c.report_action = a;
    }
  } else if (op == "supervisor_in_zone") {
    c.op = CondOp::SupervisorInZone;
  } else if (op == "label_in") {
    c.op = CondOp::LabelIn;
    for (const auto& l : j.at("labels")) {
      Label label = l.get<std::string>();
      if (!vocab.labels.count(label)) throw UnknownVocabularyError("condition: undeclared label " + label);
      c.labels.insert(label);
    }
  } else {
    throw SchemaError("condition: unknown op '" + op + "'");
  }
  return c;
}

inline nlohmann::json condition_to_json(const Condition& c) {
  nlohmann::json j;
  switch (c.op) {
    case CondOp::And:
    case CondOp::Or: {
      j["op"] = c.op == CondOp::And ? "and" : "or";
      auto& args = j["args"] = nlohmann::json::array();
      for (const auto& ch : c.children) args.push_back(condition_to_json(ch));
      break;
    }
    case CondOp::Not:
      j["op"] = "not";
      j["arg"] = condition_to_json(c.children.front());
      break;
    case CondOp::Always:
      j["op"] = "always";
      break;
    case CondOp::RoleIn:
      j["op"] = "role_in";
      j["roles"] = std::vector<std::string>(c.roles.begin(), c.roles.end());
      break;
    case CondOp::RoleRange:
      j["op"] = "role_range";
      j["min"] = c.role_min;
      j["max"] = c.role_max;
      break;
    case CondOp::ZoneIn:
      j["op"] = "zone_in";
      j["zones"] = std::vector<std::string>(c.zones.begin(), c.zones.end());
      break;
    case CondOp::MediumIs:
      j["op"] = "medium";
      j["value"] = netsim::to_string(c.medium);
      break;
    case CondOp::NcaPresent:
      j["op"] = "nca";
      j["kind"] = context::to_string(c.nca_kind);
      if (!c.detail_prefix.empty()) j["detail_prefix"] = c.detail_prefix;
      j["window"] = c.window == NcaWindow::Recent     ? "recent"
                    : c.window == NcaWindow::Historical ? "historical"
                                                        : "any";
      break;
    case CondOp::ProximityNca:
      j["op"] = "proximity_nca";
      j["kind"] = context::to_string(c.nca_kind);
      if (!c.detail_prefix.empty()) j["detail_prefix"] = c.detail_prefix;
      break;
    case CondOp::DataPlaneReportOnPath:
      j["op"] = "dataplane_report";
      if (c.report_action) j["action"] = netsim::to_string(*c.report_action);
      break;
    case CondOp::SupervisorInZone:
      j["op"] = "supervisor_in_zone";
      break;
    case CondOp::LabelIn:
      j["op"] = "label_in";
      j["labels"] = std::vector<std::string>(c.labels.begin(), c.labels.end());
      break;
  }
  return j;
}

inline fbac::SegmentSelector parse_selector(const nlohmann::json& j, const Vocabulary& vocab) {
  if (j.is_string() && j.get<std::string>() == "all") return fbac::SelectAll{};
  if (j.is_object() && j.contains("label")) {
    Label l = j["label"].get<std::string>();
    if (!vocab.labels.count(l)) throw UnknownVocabularyError("selector: undeclared label " + l);
    return fbac::SelectLabel{l};
  }
  if (j.is_object() && j.contains("segment")) {
    return fbac::SelectSegment{j["segment"].get<std::string>()};
  }
  throw SchemaError("selector: expected \"all\", {\"label\":...} or {\"segment\":...}");
}

inline nlohmann::json selector_to_json(const fbac::SegmentSelector& sel) {
  if (std::holds_alternative<fbac::SelectAll>(sel)) return "all";
  if (const auto* s = std::get_if<fbac::SelectSegment>(&sel)) {
    return nlohmann::json{{"segment", s->id}};
  }
  return nlohmann::json{{"label", std::get<fbac::SelectLabel>(sel).label}};
}

inline ActionScope parse_scope(const nlohmann::json& j) {
  const std::string s = j.value("scope", "requester");
  if (s == "requester") return ActionScope::Requester;
  if (s == "requester-and-trigger") return ActionScope::RequesterAndTrigger;
  throw SchemaError("effect: bad scope " + s);
}

inline Effect parse_effect(const nlohmann::json& j, const Vocabulary& vocab) {
  if (!j.is_object() || !j.contains("effect")) throw SchemaError("rule: missing effect");
  const std::string e = j["effect"].get<std::string>();
  if (e == "deny") {
    DenyEffect d;
    d.reason = j.value("reason", "");
    if (!d.reason.empty() && !valid_reason(d.reason)) {
      throw SchemaError("effect: bad deny reason " + d.reason);
    }
    return d;
  }
  if (e == "restrict_functions") {
    RestrictFunctionsEffect r;
    r.functions = fbac::FunctionSet::from_names(j.at("functions").get<std::vector<std::string>>());
    r.selector = parse_selector(j.at("segments"), vocab);
    return r;
  }
  if (e == "network_action") {
    NetworkActionEffect n;
    const std::string a = j.at("action").get<std::string>();
    if (a == "quarantine") n.kind = NetworkActionEffect::Kind::Quarantine;
    else if (a == "block_device") {
      n.kind = NetworkActionEffect::Kind::BlockDevice;
      n.device = j.value("device", "");
    } else if (a == "restrict_to_zone") {
      n.kind = NetworkActionEffect::Kind::RestrictToZone;
      n.zone = j.at("zone").get<std::string>();
      if (!vocab.zones.count(n.zone)) throw UnknownVocabularyError("effect: undeclared zone " + n.zone);
    } else if (a == "reroute_avoiding") {
      n.kind = NetworkActionEffect::Kind::RerouteAvoiding;
    } else {
      throw SchemaError("effect: bad network action " + a);
    }
    n.scope = parse_scope(j);
    return n;
  }
  if (e == "blacklist") {
    BlacklistEffect b;
    b.scope = parse_scope(j);
    return b;
  }
  throw SchemaError("rule: unknown effect '" + e + "'");
}

inline nlohmann::json effect_to_json(const Effect& effect) {
  nlohmann::json j;
  if (const auto* d = std::get_if<DenyEffect>(&effect)) {
    j["effect"] = "deny";
    if (!d->reason.empty()) j["reason"] = d->reason;
  } else if (const auto* r = std::get_if<RestrictFunctionsEffect>(&effect)) {
    j["effect"] = "restrict_functions";
    j["functions"] = r->functions.names();
    j["segments"] = selector_to_json(r->selector);
  } else if (const auto* n = std::get_if<NetworkActionEffect>(&effect)) {
    j["effect"] = "network_action";
    switch (n->kind) {
      case NetworkActionEffect::Kind::Quarantine: j["action"] = "quarantine"; break;
      case NetworkActionEffect::Kind::BlockDevice:
        j["action"] = "block_device";
        if (!n->device.empty()) j["device"] = n->device;
        break;
      case NetworkActionEffect::Kind::RestrictToZone:
        j["action"] = "restrict_to_zone";
        j["zone"] = n->zone;
        break;
      case NetworkActionEffect::Kind::RerouteAvoiding: j["action"] = "reroute_avoiding"; break;
    }
    if (n->scope == ActionScope::RequesterAndTrigger) j["scope"] = "requester-and-trigger";
  } else {
    j["effect"] = "blacklist";
    if (std::get<BlacklistEffect>(effect).scope == ActionScope::RequesterAndTrigger) {
      j["scope"] = "requester-and-trigger";
    }
  }
  return j;
}

inline Target parse_target(const nlohmann::json& j, const Vocabulary& vocab) {
  Target t;
  if (j.is_string()) {
    if (j.get<std::string>() != "any") throw SchemaError("target: expected \"any\"");
    t.kind = Target::Kind::Any;
    return t;
  }
  if (j.is_object() && j.contains("object")) {
    t.kind = Target::Kind::Object;
    t.value = j["object"].get<std::string>();
    return t;
  }
  if (j.is_object() && j.contains("label")) {
    t.kind = Target::Kind::Label;
    t.value = j["label"].get<std::string>();
    if (!vocab.labels.count(t.value)) throw UnknownVocabularyError("target: undeclared label " + t.value);
    return t;
  }
  throw SchemaError("target: expected \"any\", {\"object\":...} or {\"label\":...}");
}

inline nlohmann::json target_to_json(const Target& t) {
  switch (t.kind) {
    case Target::Kind::Any: return "any";
    case Target::Kind::Object: return nlohmann::json{{"object", t.value}};
    default: return nlohmann::json{{"label", t.value}};
  }
}

}  // namespace detail

/// Parses and validates a policy pack. Every reference must resolve against
/// the declared vocabularies; priorities must be unique.
inline PolicyDocument parse_policies(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("vocab") || !doc.contains("rules")) {
    throw SchemaError("policy pack: needs 'vocab' and 'rules'");
  }
  PolicyDocument out;
  try {
    const auto& v = doc["vocab"];
    for (const auto& r : v.value("roles", nlohmann::json::array())) {
      out.vocab.roles.insert(r.get<std::string>());
    }
    for (const auto& z : v.value("zones", nlohmann::json::array())) {
      out.vocab.zones.insert(z.get<std::string>());
    }
    for (const auto& l : v.value("labels", nlohmann::json::array())) {
      out.vocab.labels.insert(l.get<std::string>());
    }
    for (const auto& b : v.value("blocklist", nlohmann::json::array())) {
      out.vocab.blocklist.push_back(b.get<std::string>());
    }
    for (const auto& s : v.value("supervisor_roles", nlohmann::json::array())) {
      RoleId role = s.get<std::string>();
      if (!out.vocab.roles.count(role)) {
        throw UnknownVocabularyError("vocab: supervisor role " + role + " not declared");
      }
      out.vocab.supervisor_roles.insert(role);
    }
    if (doc.contains("defaults") && doc["defaults"].contains("recent_window_ms")) {
      out.recent_window_ms = doc["defaults"]["recent_window_ms"].get<TimeMs>();
    }

    std::set<int> priorities;
    for (const auto& jr : doc["rules"]) {
      PolicyRule rule;
      rule.id = jr.at("id").get<std::string>();
      const std::string kind = jr.at("kind").get<std::string>();
      if (kind == "org") rule.kind = RuleKind::Org;
      else if (kind == "generic") rule.kind = RuleKind::Generic;
      else if (kind == "fbac-context") rule.kind = RuleKind::FbacContext;
      else throw SchemaError("rule " + rule.id + ": bad kind " + kind);
      rule.priority = jr.at("priority").get<int>();
      if (!priorities.insert(rule.priority).second) {
        throw DuplicatePriorityError("rule " + rule.id + ": duplicate priority " +
                                     std::to_string(rule.priority));
      }
      rule.target = detail::parse_target(jr.at("target"), out.vocab);
      rule.condition = detail::parse_condition(jr.at("condition"), out.vocab);
      rule.effect = detail::parse_effect(jr.at("effect"), out.vocab);
      if (rule.kind == RuleKind::FbacContext &&
          !std::holds_alternative<RestrictFunctionsEffect>(rule.effect)) {
        throw SchemaError("rule " + rule.id + ": fbac-context rules must restrict functions");
      }
      out.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("policy pack: ") + e.what());
  }
  return out;
}

inline PolicyDocument parse_policies_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("policy pack: invalid JSON: ") + e.what());
  }
  return parse_policies(doc);
}

inline nlohmann::json serialize_policies(const PolicyDocument& doc) {
  nlohmann::json v;
  v["roles"] = std::vector<std::string>(doc.vocab.roles.begin(), doc.vocab.roles.end());
  v["zones"] = std::vector<std::string>(doc.vocab.zones.begin(), doc.vocab.zones.end());
  v["labels"] = std::vector<std::string>(doc.vocab.labels.begin(), doc.vocab.labels.end());
  v["blocklist"] = doc.vocab.blocklist;
  v["supervisor_roles"] =
      std::vector<std::string>(doc.vocab.supervisor_roles.begin(), doc.vocab.supervisor_roles.end());
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : doc.rules) {
    rules.push_back(nlohmann::json{{"id", r.id},
                                   {"kind", to_string(r.kind)},
                                   {"priority", r.priority},
                                   {"target", detail::target_to_json(r.target)},
                                   {"condition", detail::condition_to_json(r.condition)},
                                   {"effect", detail::effect_to_json(r.effect)}});
  }
  return nlohmann::json{{"vocab", v},
                        {"rules", rules},
                        {"defaults", nlohmann::json{{"recent_window_ms", doc.recent_window_ms}}}};
}

/// Rules whose target matches the snapshot's object and whose condition holds,
/// sorted by priority descending. Priority is authoritative, so document order
/// never changes the result.
inline std::vector<const PolicyRule*> applicable_rules(const PolicyDocument& doc,
                                                       const ContextSnapshot& snap) {
  std::vector<const PolicyRule*> out;
  for (const auto& rule : doc.rules) {
    if (!rule.target.matches(snap.object_id, snap.object_labels)) continue;
    if (!evaluate_condition(rule.condition, snap)) continue;
    out.push_back(&rule);
  }
  std::sort(out.begin(), out.end(),
            [](const PolicyRule* a, const PolicyRule* b) { return a->priority > b->priority; });
  return out;
}

}  // namespace gargoyle::policy
