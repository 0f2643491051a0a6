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
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gargoyle/core.hpp"

namespace gargoyle::netsim {

/// Nominal per-hop latency of the simulated fabric.
inline constexpr TimeMs kNominalHopMs = 1;

// ---------------------------------------------------------------------------
// Topology

enum class DeviceKind { Core, Edge };
enum class Medium { Wired, Wireless };

inline const char* to_string(DeviceKind k) { return k == DeviceKind::Core ? "core" : "edge"; }
inline const char* to_string(Medium m) { return m == Medium::Wired ? "wired" : "wireless"; }

enum class FaultAction { Drop, Delay, Misroute };

inline const char* to_string(FaultAction a) {
  switch (a) {
    case FaultAction::Drop: return "drop";
    case FaultAction::Delay: return "delay";
    default: return "misroute";
  }
}

inline std::optional<FaultAction> fault_action_from_string(const std::string& s) {
  if (s == "drop") return FaultAction::Drop;
  if (s == "delay") return FaultAction::Delay;
  if (s == "misroute") return FaultAction::Misroute;
  return std::nullopt;
}

struct CompromisedBehavior {
  FaultAction action = FaultAction::Drop;
  TimeMs magnitude_ms = 0;  // meaningful for Delay only
};

struct ForwardingDevice {
  DeviceId id;
  DeviceKind kind = DeviceKind::Edge;
  Medium medium = Medium::Wired;
  int ports = 1;
  std::optional<CompromisedBehavior> compromised;
};

struct Topology {
  std::map<DeviceId, ForwardingDevice> devices;
  std::map<DeviceId, std::vector<DeviceId>> adjacency;  // neighbor lists, sorted
  std::vector<std::pair<DeviceId, DeviceId>> links;     // as loaded, normalized a<b
  std::map<DeviceId, ZoneId> zones;                     // edge device -> zone

  bool has_device(const DeviceId& id) const { return devices.count(id) > 0; }

  std::optional<ZoneId> zone_of(const DeviceId& fd) const {
    auto it = zones.find(fd);
    if (it == zones.end()) return std::nullopt;
    return it->second;
  }

  std::size_t count_kind(DeviceKind k) const {
    std::size_t n = 0;
    for (const auto& [id, d] : devices) n += d.kind == k ? 1 : 0;
    return n;
  }
};

/// Parses and validates a topology document.
///
/// Schema: {"devices":[{"id","kind","medium","ports"}], "links":[["a","b"]],
///          "zones":{"R1":"Z1"}, "compromised":[{"id","action","magnitude_ms"}]}
inline Topology load_topology(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("devices") || !doc["devices"].is_array()) {
    throw SchemaError("topology: missing 'devices' array");
  }
  Topology topo;
  for (const auto& jd : doc["devices"]) {
    if (!jd.is_object() || !jd.contains("id") || !jd["id"].is_string()) {
      throw SchemaError("topology: device entry needs string 'id'");
    }
    ForwardingDevice dev;
    dev.id = jd["id"].get<std::string>();
    const std::string kind = jd.value("kind", "edge");
    if (kind == "core") dev.kind = DeviceKind::Core;
    else if (kind == "edge") dev.kind = DeviceKind::Edge;
    else throw SchemaError("topology: bad device kind '" + kind + "'");
    const std::string medium = jd.value("medium", "wired");
    if (medium == "wired") dev.medium = Medium::Wired;
    else if (medium == "wireless") dev.medium = Medium::Wireless;
    else throw SchemaError("topology: bad device medium '" + medium + "'");
    dev.ports = jd.value("ports", 1);
    if (dev.ports < 1) throw SchemaError("topology: device " + dev.id + " needs ports >= 1");
    if (topo.devices.count(dev.id)) throw TopologyError("topology: duplicate device id " + dev.id);
    topo.adjacency[dev.id];  // ensure every device has an adjacency entry
    topo.devices.emplace(dev.id, dev);
  }
  if (topo.devices.empty()) throw TopologyError("topology: no devices");

  if (doc.contains("links")) {
    if (!doc["links"].is_array()) throw SchemaError("topology: 'links' must be an array");
    for (const auto& jl : doc["links"]) {
      if (!jl.is_array() || jl.size() != 2 || !jl[0].is_string() || !jl[1].is_string()) {
        throw SchemaError("topology: link entries must be [\"a\",\"b\"]");
      }
      DeviceId a = jl[0].get<std::string>();
      DeviceId b = jl[1].get<std::string>();
      if (!topo.has_device(a) || !topo.has_device(b)) {
        throw TopologyError("topology: link references unknown device " + a + "-" + b);
      }
      if (a == b) throw TopologyError("topology: self-link on " + a);
      topo.adjacency[a].push_back(b);
      topo.adjacency[b].push_back(a);
      topo.links.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  for (auto& [id, nbrs] : topo.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  std::sort(topo.links.begin(), topo.links.end());
  topo.links.erase(std::unique(topo.links.begin(), topo.links.end()), topo.links.end());

  if (doc.contains("zones")) {
    if (!doc["zones"].is_object()) throw SchemaError("topology: 'zones' must be an object");
    for (auto it = doc["zones"].begin(); it != doc["zones"].end(); ++it) {
      const DeviceId fd = it.key();
      if (!topo.has_device(fd)) throw TopologyError("topology: zone references unknown device " + fd);
      if (topo.devices.at(fd).kind != DeviceKind::Edge) {
        throw TopologyError("topology: zone entry on non-edge device " + fd);
      }
      if (!it.value().is_string()) throw SchemaError("topology: zone id must be a string");
      topo.zones[fd] = it.value().get<std::string>();
    }
  }
  // Every wireless access point must sit in exactly one zone.
  for (const auto& [id, dev] : topo.devices) {
    if (dev.kind == DeviceKind::Edge && dev.medium == Medium::Wireless && !topo.zones.count(id)) {
      throw TopologyError("topology: wireless access point " + id + " has no zone");
    }
  }

  if (doc.contains("compromised")) {
    if (!doc["compromised"].is_array()) throw SchemaError("topology: 'compromised' must be an array");
    for (const auto& jc : doc["compromised"]) {
      if (!jc.is_object() || !jc.contains("id") || !jc.contains("action")) {
        throw SchemaError("topology: compromised entries need 'id' and 'action'");
      }
      const DeviceId id = jc["id"].get<std::string>();
      if (!topo.has_device(id)) throw TopologyError("topology: compromised unknown device " + id);
      auto action = fault_action_from_string(jc["action"].get<std::string>());
      if (!action) throw SchemaError("topology: bad compromised action");
      CompromisedBehavior cb;
      cb.action = *action;
      if (*action == FaultAction::Delay) {
        if (!jc.contains("magnitude_ms")) {
          throw SchemaError("topology: delay behavior needs magnitude_ms");
        }
        cb.magnitude_ms = jc["magnitude_ms"].get<TimeMs>();
        if (cb.magnitude_ms <= 0) throw SchemaError("topology: delay magnitude must be positive");
      } else if (jc.contains("magnitude_ms")) {
        throw SchemaError("topology: magnitude_ms only valid for delay");
      }
      topo.devices.at(id).compromised = cb;
    }
  }

  // Connectivity check over the whole device set.
  {
    std::set<DeviceId> seen;
    std::deque<DeviceId> frontier{topo.devices.begin()->first};
    seen.insert(topo.devices.begin()->first);
    while (!frontier.empty()) {
      DeviceId cur = frontier.front();
      frontier.pop_front();
      for (const auto& nb : topo.adjacency.at(cur)) {
        if (seen.insert(nb).second) frontier.push_back(nb);
      }
    }
    if (seen.size() != topo.devices.size()) throw TopologyError("topology: graph is disconnected");
  }
  return topo;
}

inline Topology load_topology_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("topology: invalid JSON: ") + e.what());
  }
  try {
    return load_topology(doc);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("topology: schema violation: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Attachments and the geo-location lookup table

struct Attachment {
  IpAddr device_ip;
  UserId user_id;
  DeviceId fd_id;
  int port_id = 0;
  Medium medium = Medium::Wired;
  TimeMs time = 0;
};

struct PacketInEvent {
  IpAddr device_ip;
  UserId user_id;
  DeviceId fd_id;
  int port_id = 0;
  Medium medium = Medium::Wired;
  ZoneId zone;  // empty when the device has no zone entry
  TimeMs time = 0;
};

struct LocationEntry {
  DeviceId fd_id;
  int port_id = 0;
  ZoneId zone;
  TimeMs last_seen = 0;
  UserId user_id;
  Medium medium = Medium::Wired;
};

class LocationTable {
 public:
  void record(const IpAddr& ip, LocationEntry entry) { entries_[ip] = std::move(entry); }

  bool contains(const IpAddr& ip) const { return entries_.count(ip) > 0; }

  const LocationEntry& get(const IpAddr& ip) const {
    auto it = entries_.find(ip);
    if (it == entries_.end()) throw NotAttachedError("no attachment for " + ip);
    return it->second;
  }

  /// Zone of the most recent attachment for `ip`.
  ZoneId resolve(const IpAddr& ip) const { return get(ip).zone; }

  const std::map<IpAddr, LocationEntry>& entries() const { return entries_; }

 private:
  std::map<IpAddr, LocationEntry> entries_;
};

// ---------------------------------------------------------------------------
// Flows and trajectories

struct FlowDescriptor {
  FlowId flow_id;
  IpAddr src_ip;
  IpAddr dst_ip;
  UserId user_id;
  TimeMs time = 0;
};

struct TrajectoryHop {
  DeviceId fd_id;
  TimeMs ingress_ms = 0;

  friend bool operator==(const TrajectoryHop&, const TrajectoryHop&) = default;
};

struct Trajectory {
  FlowId flow_id;
  TimeMs start_ms = 0;  // flow injection time; baseline for the first hop gap
  std::vector<TrajectoryHop> hops;
  bool delivered = true;

  std::vector<DeviceId> device_path() const {
    std::vector<DeviceId> out;
    out.reserve(hops.size());
    for (const auto& h : hops) out.push_back(h.fd_id);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Network-level rules

struct QuarantineRule {
  std::optional<UserId> user;
  std::optional<IpAddr> device_ip;
};
struct BlockDeviceRule { DeviceId fd_id; };
struct RestrictToZoneRule { UserId user; ZoneId zone; };
struct RerouteAvoidingRule { std::set<DeviceId> flagged; };

using NetworkRule =
    std::variant<QuarantineRule, BlockDeviceRule, RestrictToZoneRule, RerouteAvoidingRule>;

// ---------------------------------------------------------------------------
// Shortest paths
//
// Tie-break: among all hop-count-shortest paths, the lexicographically
// smallest device-id sequence. BFS from the destination gives distances;
// a greedy walk over ordered neighbor lists then realizes the minimum.
inline std::optional<std::vector<DeviceId>> shortest_path(
    const Topology& topo, const DeviceId& src, const DeviceId& dst,
    const std::set<DeviceId>& excluded) {
  if (excluded.count(src) || excluded.count(dst)) return std::nullopt;
  if (!topo.has_device(src) || !topo.has_device(dst)) return std::nullopt;
  if (src == dst) return std::vector<DeviceId>{src};

  std::map<DeviceId, int> dist;
  dist[dst] = 0;
  std::deque<DeviceId> frontier{dst};
  while (!frontier.empty()) {
    DeviceId cur = frontier.front();
    frontier.pop_front();
    for (const auto& nb : topo.adjacency.at(cur)) {
      if (excluded.count(nb) || dist.count(nb)) continue;
      dist[nb] = dist[cur] + 1;
      frontier.push_back(nb);
    }
  }
  auto it = dist.find(src);
  if (it == dist.end()) return std::nullopt;

  std::vector<DeviceId> path{src};
  DeviceId cur = src;
  int remaining = it->second;
  while (remaining > 0) {
    // Neighbor lists are sorted, so the first qualifying neighbor is the
    // lexicographic minimum for this position.
    const DeviceId* next = nullptr;
    for (const auto& nb : topo.adjacency.at(cur)) {
      if (excluded.count(nb)) continue;
      auto dit = dist.find(nb);
      if (dit != dist.end() && dit->second == remaining - 1) {
        next = &nb;
        break;
      }
    }
    path.push_back(*next);
    cur = *next;
    --remaining;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Network state: the single-threaded event-loop owner of topology, location
// table, and active rules. Emitted values (Trajectory, PacketInEvent) are
// immutable snapshots.

struct PathOptions {
  bool use_avoid_rules = true;          // honor reroute_avoiding preferences
  std::set<DeviceId> extra_avoid;       // additional devices to route around
  bool fall_back_when_unavoidable = true;
};

class NetworkState {
 public:
  explicit NetworkState(Topology topo) : topo_(std::move(topo)) {}

  const Topology& topology() const { return topo_; }
  const LocationTable& locations() const { return locations_; }

  void subscribe_packet_in(std::function<void(const PacketInEvent&)> fn) {
    subscribers_.push_back(std::move(fn));
  }

  /// Installs an attachment, updates the location table, and emits the
  /// packet-in carrying (device_ip, fd_id, port_id).
  PacketInEvent attach(const Attachment& att) {
    auto dit = topo_.devices.find(att.fd_id);
    if (dit == topo_.devices.end()) {
      throw UnknownDeviceError("attach: unknown forwarding device " + att.fd_id);
    }
    if (att.port_id < 0 || att.port_id >= dit->second.ports) {
      throw PortOutOfRangeError("attach: port " + std::to_string(att.port_id) +
                                " out of range on " + att.fd_id);
    }
    ZoneId zone = topo_.zone_of(att.fd_id).value_or("");
    attachments_[{att.device_ip, att.medium}] = att;
    locations_.record(att.device_ip,
                      LocationEntry{att.fd_id, att.port_id, zone, att.time, att.user_id, att.medium});
    seen_users_.insert(att.user_id);

    PacketInEvent ev{att.device_ip, att.user_id, att.fd_id, att.port_id, att.medium, zone, att.time};
    for (const auto& fn : subscribers_) fn(ev);
    return ev;
  }

  ZoneId resolve_location(const IpAddr& ip) const { return locations_.resolve(ip); }

  /// Controller-planned path between two attached endpoints: rule-filtered,
  /// free of compromised-device effects.
  std::optional<std::vector<DeviceId>> plan_path(const IpAddr& src_ip, const IpAddr& dst_ip,
                                                 const PathOptions& opts = {}) const {
    const auto& src = locations_.get(src_ip);
    const auto& dst = locations_.get(dst_ip);
    std::set<DeviceId> excluded = blocked_;
    if (!opts.extra_avoid.empty()) {
      std::optional<std::vector<DeviceId>> strict;
      std::set<DeviceId> hard = excluded;
      hard.insert(opts.extra_avoid.begin(), opts.extra_avoid.end());
      strict = shortest_path(topo_, src.fd_id, dst.fd_id, hard);
      if (strict || !opts.fall_back_when_unavoidable) return strict;
    }
    if (opts.use_avoid_rules && !avoid_.empty()) {
      std::set<DeviceId> soft = excluded;
      soft.insert(avoid_.begin(), avoid_.end());
      if (auto path = shortest_path(topo_, src.fd_id, dst.fd_id, soft)) return path;
    }
    return shortest_path(topo_, src.fd_id, dst.fd_id, excluded);
  }

  /// Routes a flow and returns the recorded trajectory, with any
  /// compromised-device behavior applied along the way.
  Trajectory route_flow(const FlowDescriptor& flow) const {
    if (!deliverable(flow)) {
      throw UnreachableError("flow " + flow.flow_id + " blocked by network rules");
    }
    auto plan = plan_path(flow.src_ip, flow.dst_ip);
    if (!plan) throw UnreachableError("flow " + flow.flow_id + ": no path");

    Trajectory traj;
    traj.flow_id = flow.flow_id;
    traj.start_ms = flow.time;
    std::vector<DeviceId> path = *plan;
    std::set<DeviceId> already_misrouted;
    TimeMs now = flow.time;

    for (std::size_t i = 0; i < path.size(); ++i) {
      const DeviceId& id = path[i];
      const ForwardingDevice& dev = topo_.devices.at(id);
      now += kNominalHopMs;
      if (dev.compromised && dev.compromised->action == FaultAction::Delay) {
        now += dev.compromised->magnitude_ms;
      }
      traj.hops.push_back({id, now});

      if (!dev.compromised) continue;
      if (dev.compromised->action == FaultAction::Drop) {
        traj.delivered = false;
        return traj;
      }
      if (dev.compromised->action == FaultAction::Misroute && i + 1 < path.size() &&
          !already_misrouted.count(id)) {
        already_misrouted.insert(id);
        std::set<DeviceId> on_path(path.begin(), path.end());
        const DeviceId* wrong = nullptr;
        for (const auto& nb : topo_.adjacency.at(id)) {
          if (!blocked_.count(nb) && !on_path.count(nb)) {
            wrong = &nb;
            break;  // sorted adjacency: first hit is the lowest id
          }
        }
        if (!wrong) {  // no off-path neighbor: degrade to drop
          traj.delivered = false;
          return traj;
        }
        auto rest = shortest_path(topo_, *wrong, path.back(), blocked_);
        path.resize(i + 1);
        if (!rest) {
          path.push_back(*wrong);  // record the stray hop, then lose the packet
          continue;
        }
        path.insert(path.end(), rest->begin(), rest->end());
      }
    }
    // A trajectory that ran off the planned path without reaching the
    // destination is undelivered.
    traj.delivered = !traj.hops.empty() &&
                     traj.hops.back().fd_id == locations_.get(flow.dst_ip).fd_id;
    return traj;
  }

  void apply_rule(const NetworkRule& rule) {
    if (const auto* q = std::get_if<QuarantineRule>(&rule)) {
      if (q->user) {
        if (!seen_users_.count(*q->user)) throw UnknownTargetError("quarantine: unknown user " + *q->user);
        quarantined_users_.insert(*q->user);
      }
      if (q->device_ip) {
        if (!locations_.contains(*q->device_ip)) {
          throw UnknownTargetError("quarantine: unknown device " + *q->device_ip);
        }
        quarantined_ips_.insert(*q->device_ip);
      }
      if (!q->user && !q->device_ip) throw UnknownTargetError("quarantine: empty target");
    } else if (const auto* b = std::get_if<BlockDeviceRule>(&rule)) {
      if (!topo_.has_device(b->fd_id)) throw UnknownTargetError("block: unknown device " + b->fd_id);
      blocked_.insert(b->fd_id);
    } else if (const auto* z = std::get_if<RestrictToZoneRule>(&rule)) {
      if (!seen_users_.count(z->user)) throw UnknownTargetError("restrict_to_zone: unknown user " + z->user);
      bool known_zone = false;
      for (const auto& [fd, zone] : topo_.zones) known_zone |= zone == z->zone;
      if (!known_zone) throw UnknownTargetError("restrict_to_zone: unknown zone " + z->zone);
      zone_restrictions_[z->user] = z->zone;
    } else {
      const auto& r = std::get<RerouteAvoidingRule>(rule);
      for (const auto& fd : r.flagged) {
        if (!topo_.has_device(fd)) throw UnknownTargetError("reroute: unknown device " + fd);
      }
      avoid_.insert(r.flagged.begin(), r.flagged.end());
    }
  }

  bool is_quarantined(const UserId& user) const { return quarantined_users_.count(user) > 0; }
  bool is_quarantined_ip(const IpAddr& ip) const { return quarantined_ips_.count(ip) > 0; }

  /// Whether traffic sourced at (src_ip, user) may enter the network at all.
  bool admits(const IpAddr& src_ip, const UserId& user) const {
    if (quarantined_users_.count(user) || quarantined_ips_.count(src_ip)) return false;
    if (locations_.contains(src_ip) && quarantined_users_.count(locations_.get(src_ip).user_id)) {
      return false;
    }
    auto zit = zone_restrictions_.find(user);
    if (zit != zone_restrictions_.end()) {
      if (!locations_.contains(src_ip) || locations_.get(src_ip).zone != zit->second) return false;
    }
    return true;
  }
  const std::set<DeviceId>& blocked_devices() const { return blocked_; }
  const std::set<DeviceId>& avoided_devices() const { return avoid_; }
  const std::map<UserId, ZoneId>& zone_restrictions() const { return zone_restrictions_; }

  void set_compromised(const DeviceId& fd, std::optional<CompromisedBehavior> behavior) {
    auto it = topo_.devices.find(fd);
    if (it == topo_.devices.end()) throw UnknownDeviceError("set_compromised: unknown device " + fd);
    it->second.compromised = behavior;
  }

 private:
  bool deliverable(const FlowDescriptor& flow) const {
    if (!admits(flow.src_ip, flow.user_id)) return false;
    if (quarantined_ips_.count(flow.dst_ip)) return false;
    if (locations_.contains(flow.dst_ip) &&
        quarantined_users_.count(locations_.get(flow.dst_ip).user_id)) {
      return false;
    }
    return true;
  }

  Topology topo_;
  LocationTable locations_;
  std::map<std::pair<IpAddr, Medium>, Attachment> attachments_;
  std::set<UserId> seen_users_;
  std::set<UserId> quarantined_users_;
  std::set<IpAddr> quarantined_ips_;
  std::set<DeviceId> blocked_;
  std::set<DeviceId> avoid_;
  std::map<UserId, ZoneId> zone_restrictions_;
  std::vector<std::function<void(const PacketInEvent&)>> subscribers_;
};

}  // namespace gargoyle::netsim
