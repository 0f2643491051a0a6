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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gargoyle/core.hpp"
#include "gargoyle/fbac.hpp"
#include "gargoyle/policy.hpp"

namespace gargoyle::harness {

enum class BaselineModel { Rbac, FbacStatic, UconLike };

inline const char* to_string(BaselineModel m) {
  switch (m) {
    case BaselineModel::Rbac: return "rbac";
    case BaselineModel::FbacStatic: return "fbac_static";
    default: return "ucon_like";
  }
}

inline std::optional<BaselineModel> baseline_from_string(const std::string& s) {
  if (s == "rbac") return BaselineModel::Rbac;
  if (s == "fbac" || s == "fbac_static") return BaselineModel::FbacStatic;
  if (s == "ucon" || s == "ucon_like") return BaselineModel::UconLike;
  return std::nullopt;
}

/// Role/zone requirements lifted from the organization rules, so every model
/// judges the same role and object assignments.
struct GateRequirement {
  std::set<RoleId> roles;
  std::vector<std::pair<int, int>> role_ranges;  // exclusive bounds
  std::set<ZoneId> zones;
};

inline std::vector<GateRequirement> collect_gates(const policy::PolicyDocument& doc,
                                                  const ObjectId& object,
                                                  const std::set<Label>& labels) {
  std::vector<GateRequirement> gates;
  for (const auto& rule : doc.rules) {
    if (rule.kind != policy::RuleKind::Org) continue;
    if (!rule.target.matches(object, labels)) continue;
    GateRequirement gate;
    std::vector<const policy::Condition*> atoms;
    policy::collect_atoms(rule.condition, atoms);
    for (const auto* atom : atoms) {
      if (atom->op == policy::CondOp::RoleIn) gate.roles.insert(atom->roles.begin(), atom->roles.end());
      if (atom->op == policy::CondOp::RoleRange) gate.role_ranges.push_back({atom->role_min, atom->role_max});
      if (atom->op == policy::CondOp::ZoneIn) gate.zones.insert(atom->zones.begin(), atom->zones.end());
    }
    gates.push_back(std::move(gate));
  }
  return gates;
}

inline bool role_passes(const GateRequirement& gate, const RoleId& role) {
  if (gate.roles.empty() && gate.role_ranges.empty()) return true;
  if (gate.roles.count(role)) return true;
  auto idx = parse_role_index(role);
  if (!idx) return false;
  for (const auto& [lo, hi] : gate.role_ranges) {
    if (*idx > lo && *idx < hi) return true;
  }
  return false;
}

inline bool zone_passes(const GateRequirement& gate, const ZoneId& zone) {
  return gate.zones.empty() || gate.zones.count(zone) > 0;
}

// Static per-role FBAC: junior roles lose clipboard and egress functions on
// labeled material, regardless of context.
inline constexpr int kJuniorRoleIndex = 5;

inline fbac::FunctionSet static_role_functions(const RoleId& role, const fbac::Segment& seg) {
  auto idx = parse_role_index(role);
  const bool junior = !idx || *idx >= kJuniorRoleIndex;
  const bool labeled = seg.has_label("top-secret") || seg.has_label("sensitive");
  if (junior && labeled) {
    return fbac::FunctionSet::all().minus(
        fbac::FunctionSet::of({fbac::Function::Copy, fbac::Function::Paste, fbac::Function::Email}));
  }
  return fbac::FunctionSet::all();
}

struct BaselineDecision {
  bool granted = false;
  std::map<SegmentId, fbac::FunctionSet> functions;  // when granted
};

/// One baseline authorization. `zone` is the requester's zone at decision
/// time; only ucon_like looks at it, and none of the models see NCAs,
/// proximity, or data-plane reports.
inline BaselineDecision baseline_decide(BaselineModel model, const policy::PolicyDocument& doc,
                                        const fbac::Catalog& catalog, const ObjectId& object,
                                        const RoleId& role, const ZoneId& zone) {
  const fbac::DataObject& obj = catalog.get(object);
  std::set<Label> labels;
  for (const auto& seg : obj.segments) labels.insert(seg.labels.begin(), seg.labels.end());
  const auto gates = collect_gates(doc, object, labels);

  bool pass = gates.empty();
  for (const auto& gate : gates) {
    const bool rp = role_passes(gate, role);
    const bool zp = model == BaselineModel::UconLike ? zone_passes(gate, zone) : true;
    pass |= rp && zp;
  }
  BaselineDecision decision;
  if (!pass) return decision;

  decision.granted = true;
  for (const auto& seg : obj.segments) {
    decision.functions[seg.id] = model == BaselineModel::FbacStatic
                                     ? static_role_functions(role, seg)
                                     : fbac::FunctionSet::all();
  }
  return decision;
}

}  // namespace gargoyle::harness
