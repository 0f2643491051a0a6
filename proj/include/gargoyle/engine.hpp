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
#include <memory>
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
#include "gargoyle/policy.hpp"

namespace gargoyle::engine {

// ---------------------------------------------------------------------------
// Requests and decisions

struct AccessRequest {
  std::string request_id;
  UserId user_id;
  IpAddr device_ip;
  RoleId role;
  ObjectId object_id;
  TimeMs time = 0;
};

/// Deny categories, ordered most severe first. When several triggers fire,
/// the most severe category wins.
enum class ReasonCategory {
  CompromisedPath = 0,
  CurrentSuspicious,
  HistoricSuspicious,
  RoleMismatch,
  Blacklisted,
};

inline const char* to_string(ReasonCategory r) {
  switch (r) {
    case ReasonCategory::CompromisedPath: return "compromised-path";
    case ReasonCategory::CurrentSuspicious: return "current-suspicious";
    case ReasonCategory::HistoricSuspicious: return "historic-suspicious";
    case ReasonCategory::RoleMismatch: return "role-mismatch";
    default: return "blacklisted";
  }
}

inline std::optional<ReasonCategory> reason_from_string(const std::string& s) {
  for (ReasonCategory r : {ReasonCategory::CompromisedPath, ReasonCategory::CurrentSuspicious,
                           ReasonCategory::HistoricSuspicious, ReasonCategory::RoleMismatch,
                           ReasonCategory::Blacklisted}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

// Resolved network-level actions, ready for enforcement.
struct ActQuarantine { std::vector<IpAddr> device_ips; std::vector<UserId> users; };
struct ActBlockDevice { std::vector<DeviceId> devices; };
struct ActRestrictZone { std::vector<UserId> users; ZoneId zone; };
struct ActReroute { std::set<DeviceId> avoid; };
struct ActBlacklist { std::vector<UserId> users; };

using NetworkAction = std::variant<ActQuarantine, ActBlockDevice, ActRestrictZone, ActReroute, ActBlacklist>;

inline std::string to_string(const NetworkAction& action) {
  auto join = [](const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
      if (!out.empty()) out += ",";
      out += s;
    }
    return out;
  };
  if (const auto* q = std::get_if<ActQuarantine>(&action)) {
    std::vector<std::string> targets = q->device_ips;
    targets.insert(targets.end(), q->users.begin(), q->users.end());
    std::sort(targets.begin(), targets.end());
    return "quarantine:" + join(targets);
  }
  if (const auto* b = std::get_if<ActBlockDevice>(&action)) {
    std::vector<std::string> devices = b->devices;
    std::sort(devices.begin(), devices.end());
    return "block_device:" + join(devices);
  }
  if (const auto* z = std::get_if<ActRestrictZone>(&action)) {
    std::vector<std::string> users = z->users;
    std::sort(users.begin(), users.end());
    return "restrict_to_zone:" + z->zone + ":" + join(users);
  }
  if (const auto* r = std::get_if<ActReroute>(&action)) {
    return "reroute_avoiding:" + join({r->avoid.begin(), r->avoid.end()});
  }
  std::vector<std::string> users = std::get<ActBlacklist>(action).users;
  std::sort(users.begin(), users.end());
  return "blacklist:" + join(users);
}

struct AccessDecision {
  bool granted = false;
  ReasonCategory reason = ReasonCategory::RoleMismatch;        // valid when denied
  std::map<SegmentId, fbac::FunctionSet> functions;            // valid when granted
  std::vector<NetworkAction> network_actions;
  std::vector<std::string> triggering_rules;

  bool restricted() const {
    for (const auto& [seg, fns] : functions) {
      if (fns != fbac::FunctionSet::all()) return true;
    }
    return false;
  }
};

/// Host-independent enforcement state: the run-lifetime blacklist.
struct EnforcementState {
  std::set<UserId> blacklist;
};

/// User-to-role directory, used for supervisor detection and baselines.
struct Directory {
  std::map<UserId, RoleId> roles;

  RoleId role_of(const UserId& u) const {
    auto it = roles.find(u);
    return it == roles.end() ? RoleId{} : it->second;
  }
};

// ---------------------------------------------------------------------------
// Snapshot assembly

struct SnapshotEnv {
  const context::ContextRepository* repo = nullptr;
  const netsim::NetworkState* net = nullptr;
  const fbac::Catalog* catalog = nullptr;
  const policy::PolicyDocument* policies = nullptr;
  const Directory* directory = nullptr;
  const EnforcementState* enforcement = nullptr;
  IpAddr server_ip;
  TimeMs recent_window_ms = 60'000;
};

inline policy::ContextSnapshot snapshot_context(const SnapshotEnv& env,
                                                const AccessRequest& request) {
  const auto& entry = env.net->locations().get(request.device_ip);  // NotAttachedError
  policy::ContextSnapshot snap;
  snap.time = request.time;
  snap.user_id = request.user_id;
  snap.device_ip = request.device_ip;
  snap.role = request.role;
  snap.object_id = request.object_id;
  if (env.catalog->contains(request.object_id)) {
    for (const auto& seg : env.catalog->get(request.object_id).segments) {
      snap.object_labels.insert(seg.labels.begin(), seg.labels.end());
    }
  }
  snap.zone = entry.zone;
  snap.medium = entry.medium;
  snap.blacklisted = env.enforcement->blacklist.count(request.user_id) > 0;

  const TimeMs t = request.time;
  const TimeMs w = env.recent_window_ms;
  snap.recent_ncas = env.repo->query(request.user_id, t - w, t);
  snap.historical_ncas = env.repo->query(request.user_id, 0, t - w - 1);

  if (!snap.zone.empty()) {
    for (const auto& [ip, loc] : env.net->locations().entries()) {
      if (ip == request.device_ip || loc.zone != snap.zone) continue;
      if (loc.user_id == request.user_id) {
        // Requester's other devices are not "proximity", but a supervisor role
        // is a property of people in the zone, handled below.
        continue;
      }
      policy::ProximityEntry pe;
      pe.user_id = loc.user_id;
      pe.device_ip = ip;
      pe.role = env.directory->role_of(loc.user_id);
      pe.recent_ncas = env.repo->query(loc.user_id, t - w, t);
      snap.proximity.push_back(std::move(pe));
      if (env.policies->vocab.supervisor_roles.count(env.directory->role_of(loc.user_id))) {
        snap.supervisor_in_zone = true;
      }
    }
  }

  // Exposure path: rule-filtered but without reroute preferences, i.e. where
  // the traffic would go before any avoidance is applied.
  netsim::PathOptions raw;
  raw.use_avoid_rules = false;
  auto path = env.net->plan_path(request.device_ip, env.server_ip, raw);
  if (path) snap.current_path = *path;
  snap.path_reports = env.repo->reports_on_path(snap.current_path);
  snap.flagged_devices = env.repo->flagged_devices();
  if (snap.flagged_devices.empty()) {
    snap.safe_path_exists = path.has_value();
  } else {
    netsim::PathOptions strict;
    strict.use_avoid_rules = false;
    strict.extra_avoid = snap.flagged_devices;
    strict.fall_back_when_unavoidable = false;
    snap.safe_path_exists =
        env.net->plan_path(request.device_ip, env.server_ip, strict).has_value();
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Decision procedure

namespace detail {

/// Category for one fired deny-ish rule, from what actually triggered it:
/// a data-plane report beats a recent NCA beats a historical one.
inline ReasonCategory deny_category(const policy::PolicyRule& rule,
                                    const policy::ContextSnapshot& snap,
                                    const std::string& authored_reason) {
  std::vector<const policy::Condition*> atoms;
  policy::collect_atoms(rule.condition, atoms);
  bool report = false, recent = false, historical = false;
  for (const auto* atom : atoms) {
    switch (atom->op) {
      case policy::CondOp::DataPlaneReportOnPath:
        report |= policy::evaluate_condition(*atom, snap);
        break;
      case policy::CondOp::NcaPresent: {
        if (atom->window != policy::NcaWindow::Historical) {
          for (const auto& nca : snap.recent_ncas) {
            recent |= policy::nca_matches(nca, atom->nca_kind, atom->detail_prefix);
          }
        }
        if (atom->window != policy::NcaWindow::Recent) {
          for (const auto& nca : snap.historical_ncas) {
            historical |= policy::nca_matches(nca, atom->nca_kind, atom->detail_prefix);
          }
        }
        break;
      }
      case policy::CondOp::ProximityNca:
        recent |= policy::evaluate_condition(*atom, snap);
        break;
      default:
        break;
    }
  }
  if (report) return ReasonCategory::CompromisedPath;
  if (recent) return ReasonCategory::CurrentSuspicious;
  if (historical) return ReasonCategory::HistoricSuspicious;
  if (auto r = reason_from_string(authored_reason)) return *r;
  return ReasonCategory::RoleMismatch;
}

inline std::vector<IpAddr> devices_of_users(const policy::ContextSnapshot& snap,
                                            const std::vector<UserId>& users) {
  std::vector<IpAddr> out;
  for (const auto& entry : snap.proximity) {
    if (std::find(users.begin(), users.end(), entry.user_id) != users.end()) {
      out.push_back(entry.device_ip);
    }
  }
  return out;
}

}  // namespace detail

/// The Risk Management decision procedure: blacklist check, org role/zone
/// gate, generic rules, then contextual function restrictions over the
/// tensor's default-all base. Pure function of its inputs.
inline AccessDecision decide(const AccessRequest& request, const policy::ContextSnapshot& snap,
                             const policy::PolicyDocument& doc,
                             const fbac::AccessControlTensor& tensor,
                             const fbac::Catalog& catalog) {
  const fbac::DataObject& object = catalog.get(request.object_id);  // UnknownObjectError

  AccessDecision decision;
  if (snap.blacklisted) {
    decision.granted = false;
    decision.reason = ReasonCategory::Blacklisted;
    return decision;
  }

  // Organization gate: when org rules target the object, at least one must
  // hold, otherwise the request fails on role/zone grounds.
  {
    std::vector<const policy::PolicyRule*> gate;
    bool passed = false;
    for (const auto& rule : doc.rules) {
      if (rule.kind != policy::RuleKind::Org) continue;
      if (!rule.target.matches(snap.object_id, snap.object_labels)) continue;
      gate.push_back(&rule);
      passed |= policy::evaluate_condition(rule.condition, snap);
    }
    if (!gate.empty() && !passed) {
      decision.granted = false;
      decision.reason = ReasonCategory::RoleMismatch;
      std::sort(gate.begin(), gate.end(),
                [](auto* a, auto* b) { return a->priority > b->priority; });
      for (const auto* rule : gate) decision.triggering_rules.push_back(rule->id);
      return decision;
    }
  }

  bool denied = false;
  std::optional<ReasonCategory> reason;
  auto merge_reason = [&](ReasonCategory cat) {
    if (!reason || static_cast<int>(cat) < static_cast<int>(*reason)) reason = cat;
  };
  std::vector<std::pair<fbac::SegmentSelector, fbac::FunctionSet>> restrictions;

  for (const auto* rule : policy::applicable_rules(doc, snap)) {
    if (rule->kind == policy::RuleKind::Org) continue;
    if (const auto* deny = std::get_if<policy::DenyEffect>(&rule->effect)) {
      denied = true;
      merge_reason(detail::deny_category(*rule, snap, deny->reason));
      decision.triggering_rules.push_back(rule->id);
    } else if (const auto* bl = std::get_if<policy::BlacklistEffect>(&rule->effect)) {
      std::vector<UserId> users{request.user_id};
      if (bl->scope == policy::ActionScope::RequesterAndTrigger) {
        for (auto& u : policy::trigger_users(rule->condition, snap)) users.push_back(u);
      }
      decision.network_actions.push_back(ActBlacklist{std::move(users)});
      decision.triggering_rules.push_back(rule->id);
    } else if (const auto* na = std::get_if<policy::NetworkActionEffect>(&rule->effect)) {
      using Kind = policy::NetworkActionEffect::Kind;
      switch (na->kind) {
        case Kind::Quarantine: {
          ActQuarantine act{{request.device_ip}, {}};
          if (na->scope == policy::ActionScope::RequesterAndTrigger) {
            auto triggers = policy::trigger_users(rule->condition, snap);
            auto ips = detail::devices_of_users(snap, triggers);
            act.device_ips.insert(act.device_ips.end(), ips.begin(), ips.end());
          }
          decision.network_actions.push_back(std::move(act));
          break;
        }
        case Kind::BlockDevice: {
          ActBlockDevice act;
          if (!na->device.empty()) {
            act.devices.push_back(na->device);
          } else {
            std::set<DeviceId> reported;
            for (const auto& r : snap.path_reports) reported.insert(r.fd_id);
            act.devices.assign(reported.begin(), reported.end());
          }
          decision.network_actions.push_back(std::move(act));
          break;
        }
        case Kind::RestrictToZone: {
          ActRestrictZone act{{request.user_id}, na->zone};
          if (na->scope == policy::ActionScope::RequesterAndTrigger) {
            for (auto& u : policy::trigger_users(rule->condition, snap)) act.users.push_back(u);
          }
          decision.network_actions.push_back(std::move(act));
          break;
        }
        case Kind::RerouteAvoiding: {
          // "Blocked unless a safe path exists": reroute when possible,
          // otherwise deny on the compromised path and quarantine the device.
          if (snap.safe_path_exists && !snap.flagged_devices.empty()) {
            decision.network_actions.push_back(ActReroute{snap.flagged_devices});
          } else {
            denied = true;
            merge_reason(ReasonCategory::CompromisedPath);
            decision.network_actions.push_back(ActQuarantine{{request.device_ip}, {}});
          }
          break;
        }
      }
      decision.triggering_rules.push_back(rule->id);
    } else {
      const auto& restrict = std::get<policy::RestrictFunctionsEffect>(rule->effect);
      restrictions.emplace_back(restrict.selector, restrict.functions);
      decision.triggering_rules.push_back(rule->id);
    }
  }

  if (denied) {
    decision.granted = false;
    decision.reason = *reason;
    return decision;
  }

  decision.granted = true;
  for (const auto& seg : object.segments) {
    fbac::FunctionSet fns = tensor.allowed(request.user_id, object.id, seg.id);
    for (const auto& [selector, restricted] : restrictions) {
      if (fbac::selects(selector, seg)) fns = fns.minus(restricted);
    }
    decision.functions[seg.id] = fns;
  }
  return decision;
}

// ---------------------------------------------------------------------------
// Sessions and the enforcement point

struct Session {
  std::string id;
  AccessRequest request;
  AccessDecision decision;
  enum class Status { Active, Revoked, Downgraded } status = Status::Active;
};

inline const char* to_string(Session::Status s) {
  switch (s) {
    case Session::Status::Active: return "active";
    case Session::Status::Revoked: return "revoked";
    default: return "downgraded";
  }
}

struct ReevalEvent {
  std::string session_id;
  Session::Status status = Session::Status::Active;
  bool changed = false;
  AccessDecision decision;  // the fresh decision when changed
  TimeMs time = 0;
};

/// Risk-management PDP plus Advanced Enforcement Point over one run's state.
/// Sessions stay subscribed to their subject and zone; every NCA or report
/// append re-evaluates the affected ones.
class Engine {
 public:
  Engine(netsim::NetworkState& net, const context::ContextRepository& repo,
         const fbac::Catalog& catalog, const policy::PolicyDocument& policies,
         const Directory& directory, const fbac::AccessControlTensor& tensor, IpAddr server_ip)
      : net_(net),
        repo_(repo),
        catalog_(catalog),
        policies_(policies),
        directory_(directory),
        tensor_(tensor),
        server_ip_(std::move(server_ip)) {}

  const EnforcementState& enforcement() const { return enforcement_; }

  policy::ContextSnapshot snapshot(const AccessRequest& request) const {
    SnapshotEnv env{&repo_,      &net_,          &catalog_, &policies_,
                    &directory_, &enforcement_,  server_ip_, policies_.recent_window_ms};
    return snapshot_context(env, request);
  }

  AccessDecision decide_request(const AccessRequest& request) const {
    return decide(request, snapshot(request), policies_, tensor_, catalog_);
  }

  Session& open_session(const AccessDecision& decision, const AccessRequest& request) {
    if (!decision.granted) throw SessionOnDenyError("cannot open a session on a deny");
    auto session = std::make_unique<Session>();
    session->id = "S" + std::to_string(++session_counter_);
    session->request = request;
    session->decision = decision;
    sessions_.push_back(std::move(session));
    return *sessions_.back();
  }

  const std::vector<std::unique_ptr<Session>>& sessions() const { return sessions_; }

  /// Applies a decision: network actions always (defense in depth is
  /// independent of any session), and returns the host-level view the
  /// data provider must render.
  std::map<SegmentId, fbac::FunctionSet> enforce(const AccessDecision& decision,
                                                 const Session* session,
                                                 const ObjectId& object_id) {
    for (const auto& action : decision.network_actions) apply_action(action);
    return host_view(decision, session, object_id);
  }

  /// Per-segment function sets the host app may expose. A revoked session, or
  /// a deny, renders every segment empty.
  std::map<SegmentId, fbac::FunctionSet> host_view(const AccessDecision& decision,
                                                   const Session* session,
                                                   const ObjectId& object_id) const {
    std::map<SegmentId, fbac::FunctionSet> view;
    const bool dead = !decision.granted || (session && session->status == Session::Status::Revoked);
    if (catalog_.contains(object_id)) {
      for (const auto& seg : catalog_.get(object_id).segments) {
        view[seg.id] = dead ? fbac::FunctionSet::none()
                            : decision.functions.count(seg.id) ? decision.functions.at(seg.id)
                                                               : fbac::FunctionSet::all();
      }
    }
    return view;
  }

  /// Re-runs the decision on a fresh snapshot. Worsening to deny revokes the
  /// session and applies the new network actions; tightened restrictions
  /// downgrade it. Restriction sets only ever shrink (old ∩ new), so a stale
  /// threat can never widen an ongoing session.
  ReevalEvent reevaluate(Session& session, TimeMs now) {
    ReevalEvent ev{session.id, session.status, false, {}, now};
    if (session.status == Session::Status::Revoked) return ev;

    AccessRequest request = session.request;
    request.time = now;
    AccessDecision fresh = decide(request, snapshot(request), policies_, tensor_, catalog_);

    if (!fresh.granted) {
      session.status = Session::Status::Revoked;
      session.decision = fresh;
      enforce(fresh, &session, request.object_id);
      return ReevalEvent{session.id, session.status, true, fresh, now};
    }

    bool tightened = false;
    std::map<SegmentId, fbac::FunctionSet> merged = session.decision.functions;
    for (auto& [seg, fns] : merged) {
      auto it = fresh.functions.find(seg);
      if (it == fresh.functions.end()) continue;
      const fbac::FunctionSet next = fns.intersect(it->second);
      if (next != fns) tightened = true;
      fns = next;
    }
    if (!tightened) return ev;

    session.status = Session::Status::Downgraded;
    fresh.functions = std::move(merged);
    session.decision = fresh;
    enforce(fresh, &session, request.object_id);
    return ReevalEvent{session.id, session.status, true, session.decision, now};
  }

  /// Event-driven continuous enforcement: re-evaluates every live session
  /// whose subject or current zone is touched by an update.
  std::vector<ReevalEvent> notify(const UserId& subject, const ZoneId& zone, TimeMs now) {
    std::vector<ReevalEvent> events;
    for (auto& session : sessions_) {
      if (session->status == Session::Status::Revoked) continue;
      bool touched = session->request.user_id == subject;
      if (!touched && !zone.empty() && net_.locations().contains(session->request.device_ip)) {
        touched = net_.locations().get(session->request.device_ip).zone == zone;
      }
      if (!touched) continue;
      ReevalEvent ev = reevaluate(*session, now);
      if (ev.changed) events.push_back(std::move(ev));
    }
    return events;
  }

  /// Data-plane reports affect any session whose path may cross the device,
  /// so a report append re-evaluates every live session.
  std::vector<ReevalEvent> notify_all(TimeMs now) {
    std::vector<ReevalEvent> events;
    for (auto& session : sessions_) {
      if (session->status == Session::Status::Revoked) continue;
      ReevalEvent ev = reevaluate(*session, now);
      if (ev.changed) events.push_back(std::move(ev));
    }
    return events;
  }

  void apply_action(const NetworkAction& action) {
    if (const auto* q = std::get_if<ActQuarantine>(&action)) {
      for (const auto& ip : q->device_ips) net_.apply_rule(netsim::QuarantineRule{{}, ip});
      for (const auto& u : q->users) net_.apply_rule(netsim::QuarantineRule{u, {}});
    } else if (const auto* b = std::get_if<ActBlockDevice>(&action)) {
      for (const auto& d : b->devices) net_.apply_rule(netsim::BlockDeviceRule{d});
    } else if (const auto* z = std::get_if<ActRestrictZone>(&action)) {
      for (const auto& u : z->users) net_.apply_rule(netsim::RestrictToZoneRule{u, z->zone});
    } else if (const auto* r = std::get_if<ActReroute>(&action)) {
      net_.apply_rule(netsim::RerouteAvoidingRule{r->avoid});
    } else {
      for (const auto& u : std::get<ActBlacklist>(action).users) enforcement_.blacklist.insert(u);
    }
  }

 private:
  netsim::NetworkState& net_;
  const context::ContextRepository& repo_;
  const fbac::Catalog& catalog_;
  const policy::PolicyDocument& policies_;
  const Directory& directory_;
  const fbac::AccessControlTensor& tensor_;
  IpAddr server_ip_;
  EnforcementState enforcement_;
  std::vector<std::unique_ptr<Session>> sessions_;
  unsigned session_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Decision trace records (JSON Lines)

inline nlohmann::json trace_record(const std::string& event, const AccessRequest& request,
                                   const AccessDecision& decision, const Session* session,
                                   TimeMs time) {
  nlohmann::json j;
  j["time"] = time;
  j["event"] = event;
  j["request_id"] = request.request_id;
  j["user"] = request.user_id;
  j["object"] = request.object_id;
  j["outcome"] = decision.granted ? "grant" : "deny";
  if (!decision.granted) j["reason"] = to_string(decision.reason);
  if (decision.granted) {
    nlohmann::json fns = nlohmann::json::object();
    for (const auto& [seg, set] : decision.functions) fns[seg] = set.names();
    j["functions"] = fns;
  }
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : decision.network_actions) actions.push_back(to_string(a));
  j["actions"] = actions;
  j["rules"] = decision.triggering_rules;
  if (session) {
    j["session"] = session->id;
    j["status"] = to_string(session->status);
  }
  return j;
}

}  // namespace gargoyle::engine
