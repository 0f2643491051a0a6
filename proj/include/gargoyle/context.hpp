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
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gargoyle/core.hpp"
#include "gargoyle/ips.hpp"
#include "gargoyle/netsim.hpp"

namespace gargoyle::context {

// ---------------------------------------------------------------------------
// Flow events

struct FlowEvent {
  TimeMs time = 0;
  FlowId flow_id;
  IpAddr src_ip;
  IpAddr dst_ip;
  int dst_port = 0;
  UserId user_id;
  std::int64_t bytes = 0;
  std::int64_t packets = 0;
  std::set<std::string> annotations;  // pre-extracted signature tags
  std::optional<std::string> dst_domain;

  void validate() const {
    if (packets < 1) throw SchemaError("flow event " + flow_id + ": packets must be >= 1");
    if (bytes < packets) throw SchemaError("flow event " + flow_id + ": bytes must be >= packets");
  }
};

inline FlowEvent flow_event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("flow event: expected object");
  FlowEvent ev;
  try {
    ev.time = j.at("time").get<TimeMs>();
    ev.flow_id = j.at("flow_id").get<std::string>();
    ev.src_ip = j.at("src_ip").get<std::string>();
    ev.dst_ip = j.at("dst_ip").get<std::string>();
    ev.dst_port = j.at("dst_port").get<int>();
    ev.user_id = j.at("user_id").get<std::string>();
    ev.bytes = j.at("bytes").get<std::int64_t>();
    ev.packets = j.at("packets").get<std::int64_t>();
    if (j.contains("annotations")) {
      for (const auto& a : j.at("annotations")) ev.annotations.insert(a.get<std::string>());
    }
    if (j.contains("dst_domain") && !j.at("dst_domain").is_null()) {
      ev.dst_domain = j.at("dst_domain").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("flow event: ") + e.what());
  }
  ev.validate();
  return ev;
}

inline nlohmann::json flow_event_to_json(const FlowEvent& ev) {
  nlohmann::json j{{"time", ev.time},     {"flow_id", ev.flow_id}, {"src_ip", ev.src_ip},
                   {"dst_ip", ev.dst_ip}, {"dst_port", ev.dst_port}, {"user_id", ev.user_id},
                   {"bytes", ev.bytes},   {"packets", ev.packets}};
  if (!ev.annotations.empty()) {
    j["annotations"] = std::vector<std::string>(ev.annotations.begin(), ev.annotations.end());
  }
  if (ev.dst_domain) j["dst_domain"] = *ev.dst_domain;
  return j;
}

/// Parses a JSON-Lines flow log; enforces time monotonicity within each flow.
inline std::vector<FlowEvent> parse_flow_log(const std::string& text) {
  std::vector<FlowEvent> events;
  std::map<FlowId, TimeMs> last_time;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("flow log: invalid JSON line: ") + e.what());
    }
    FlowEvent ev = flow_event_from_json(j);
    auto it = last_time.find(ev.flow_id);
    if (it != last_time.end() && ev.time < it->second) {
      throw SchemaError("flow log: time not monotone within flow " + ev.flow_id);
    }
    last_time[ev.flow_id] = ev.time;
    events.push_back(std::move(ev));
  }
  return events;
}

/// Blocklist file: one domain or IP per line, '#' starts a comment.
inline std::set<std::string> load_blocklist(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    auto b = line.find_first_not_of(" \t\r");
    auto e = line.find_last_not_of(" \t\r");
    if (b == std::string::npos) continue;
    out.insert(line.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network Context Attributes

enum class NcaKind {
  DeviceCapability,
  SecurityLevel,
  Interaction,
  ConnectionStatus,
  SuspiciousActivity,
  Location,
  RateAnomaly,
};

inline const char* to_string(NcaKind k) {
  switch (k) {
    case NcaKind::DeviceCapability: return "DeviceCapability";
    case NcaKind::SecurityLevel: return "SecurityLevel";
    case NcaKind::Interaction: return "Interaction";
    case NcaKind::ConnectionStatus: return "ConnectionStatus";
    case NcaKind::SuspiciousActivity: return "SuspiciousActivity";
    case NcaKind::Location: return "Location";
    default: return "RateAnomaly";
  }
}

inline std::optional<NcaKind> nca_kind_from_string(const std::string& s) {
  for (NcaKind k : {NcaKind::DeviceCapability, NcaKind::SecurityLevel, NcaKind::Interaction,
                    NcaKind::ConnectionStatus, NcaKind::SuspiciousActivity, NcaKind::Location,
                    NcaKind::RateAnomaly}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct Subject {
  UserId user_id;
  IpAddr device_ip;

  friend bool operator==(const Subject&, const Subject&) = default;
};

struct NetworkContextAttribute {
  NcaKind kind = NcaKind::SuspiciousActivity;
  Subject subject;
  std::string detail;  // kind-specific payload, e.g. "tool:kali", "port-scan"
  double metric = 0;   // count for port scans, pps for rate anomalies
  TimeMs time = 0;
  std::string source;  // detector name

  friend bool operator==(const NetworkContextAttribute&, const NetworkContextAttribute&) = default;
};

struct DetectorConfig {
  int port_scan_threshold = 20;        // distinct destination ports
  TimeMs port_scan_window_ms = 10'000;
  double rate_threshold_pps = 1000.0;
  TimeMs rate_window_ms = 1'000;
  TimeMs recent_window_ms = 60'000;    // recent/historical boundary
  std::vector<std::string> org_prefixes = {"10."};
  std::set<std::string> blocklist;
};

// ---------------------------------------------------------------------------
// Context Repository
//
// Append-only NCA log plus the raw flow-event log and data-plane report log.
// One writer (the event loop); readers see a consistent prefix.

class ContextRepository {
 public:
  void append(NetworkContextAttribute nca) { ncas_.push_back(std::move(nca)); }

  void record_event(FlowEvent ev) { events_.push_back(std::move(ev)); }

  void append_report(ips::DataPlaneReport report) { reports_.push_back(std::move(report)); }

  const std::vector<NetworkContextAttribute>& all_ncas() const { return ncas_; }
  const std::vector<FlowEvent>& all_events() const { return events_; }
  const std::vector<ips::DataPlaneReport>& reports() const { return reports_; }

  /// NCAs for `user` with time in [t0, t1], optionally filtered by kind,
  /// in time order.
  std::vector<NetworkContextAttribute> query(const UserId& user, TimeMs t0, TimeMs t1,
                                             const std::optional<std::set<NcaKind>>& kinds =
                                                 std::nullopt) const {
    std::vector<NetworkContextAttribute> out;
    for (const auto& nca : ncas_) {
      if (nca.subject.user_id != user) continue;
      if (nca.time < t0 || nca.time > t1) continue;
      if (kinds && !kinds->count(nca.kind)) continue;
      out.push_back(nca);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    return out;
  }

  std::vector<FlowEvent> events_for_src(const IpAddr& src, TimeMs t0, TimeMs t1) const {
    std::vector<FlowEvent> out;
    for (const auto& ev : events_) {
      if (ev.src_ip == src && ev.time >= t0 && ev.time <= t1) out.push_back(ev);
    }
    return out;
  }

  std::vector<FlowEvent> events_for_user(const UserId& user, TimeMs t0, TimeMs t1) const {
    std::vector<FlowEvent> out;
    for (const auto& ev : events_) {
      if (ev.user_id == user && ev.time >= t0 && ev.time <= t1) out.push_back(ev);
    }
    return out;
  }

  /// Devices named by any data-plane report so far. Flags persist for the
  /// remainder of the run.
  std::set<DeviceId> flagged_devices() const {
    std::set<DeviceId> out;
    for (const auto& r : reports_) out.insert(r.fd_id);
    return out;
  }

  std::vector<ips::DataPlaneReport> reports_on_path(const std::vector<DeviceId>& path) const {
    std::set<DeviceId> on_path(path.begin(), path.end());
    std::vector<ips::DataPlaneReport> out;
    for (const auto& r : reports_) {
      if (on_path.count(r.fd_id)) out.push_back(r);
    }
    return out;
  }

  // Deduplication bookkeeping, used by ingest().
  bool claim_flow_finding(const FlowId& flow, const std::string& detector,
                          const std::string& detail) {
    return emitted_.insert(flow + "|" + detector + "|" + detail).second;
  }

  bool claim_window_finding(const UserId& user, const std::string& detector, TimeMs now,
                            TimeMs window) {
    const std::string key = user + "|" + detector;
    auto it = last_window_emit_.find(key);
    if (it != last_window_emit_.end() && it->second >= now - window) return false;
    last_window_emit_[key] = now;
    return true;
  }

 private:
  std::vector<NetworkContextAttribute> ncas_;
  std::vector<FlowEvent> events_;
  std::vector<ips::DataPlaneReport> reports_;
  std::set<std::string> emitted_;
  std::map<std::string, TimeMs> last_window_emit_;
};

// ---------------------------------------------------------------------------
// Detectors (pure functions)

/// Distinct-destination-port scan detector over one source's event window.
inline std::optional<NetworkContextAttribute> detect_port_scan(
    const std::vector<FlowEvent>& window_events, const DetectorConfig& cfg) {
  if (window_events.empty()) return std::nullopt;
  std::set<int> ports;
  for (const auto& ev : window_events) ports.insert(ev.dst_port);
  if (static_cast<int>(ports.size()) < cfg.port_scan_threshold) return std::nullopt;
  const FlowEvent& last = window_events.back();
  return NetworkContextAttribute{NcaKind::SuspiciousActivity,
                                 Subject{last.user_id, last.src_ip},
                                 "port-scan",
                                 static_cast<double>(ports.size()),
                                 last.time,
                                 "port-scan"};
}

/// Packets-per-second anomaly over one user's event window.
inline std::optional<NetworkContextAttribute> analyze_flow_stats(
    const std::vector<FlowEvent>& window_events, const DetectorConfig& cfg, TimeMs now) {
  if (window_events.empty()) return std::nullopt;
  std::int64_t packets = 0;
  for (const auto& ev : window_events) packets += ev.packets;
  const double pps = static_cast<double>(packets) * 1000.0 / static_cast<double>(cfg.rate_window_ms);
  if (pps < cfg.rate_threshold_pps) return std::nullopt;
  const FlowEvent& last = window_events.back();
  return NetworkContextAttribute{NcaKind::RateAnomaly, Subject{last.user_id, last.src_ip},
                                 "rate", pps, now, "flow-stats"};
}

/// Exact-match lookup against the restricted domain/IP blocklist.
inline std::optional<NetworkContextAttribute> detect_restricted_access(
    const FlowEvent& ev, const std::set<std::string>& blocklist) {
  std::optional<std::string> match;
  if (ev.dst_domain && blocklist.count(*ev.dst_domain)) match = *ev.dst_domain;
  else if (blocklist.count(ev.dst_ip)) match = ev.dst_ip;
  if (!match) return std::nullopt;
  return NetworkContextAttribute{NcaKind::SuspiciousActivity, Subject{ev.user_id, ev.src_ip},
                                 "restricted-domain:" + *match, 0, ev.time, "restricted-access"};
}

inline bool is_org_address(const IpAddr& ip, const std::vector<std::string>& prefixes) {
  for (const auto& p : prefixes) {
    if (has_prefix(ip, p)) return true;
  }
  return false;
}

/// Interaction NCA for flows between two organization-managed addresses.
inline std::optional<NetworkContextAttribute> record_interaction(
    const FlowEvent& ev, const std::vector<std::string>& org_prefixes) {
  if (!is_org_address(ev.src_ip, org_prefixes) || !is_org_address(ev.dst_ip, org_prefixes)) {
    return std::nullopt;
  }
  return NetworkContextAttribute{NcaKind::Interaction, Subject{ev.user_id, ev.src_ip},
                                 "peer:" + ev.dst_ip, 0, ev.time, "interaction"};
}

// ---------------------------------------------------------------------------
// Ingest: runs every detector over one event, appends the findings, and
// returns them. Per-finding deduplication keeps re-inspection of the same
// flow from duplicating NCAs.

inline std::vector<NetworkContextAttribute> ingest(ContextRepository& repo, const FlowEvent& ev,
                                                   const DetectorConfig& cfg) {
  ev.validate();
  repo.record_event(ev);
  std::vector<NetworkContextAttribute> out;
  auto emit = [&](NetworkContextAttribute nca) {
    repo.append(nca);
    out.push_back(std::move(nca));
  };

  // Signature tags pre-extracted from the traffic.
  for (const auto& tag : ev.annotations) {
    std::optional<NetworkContextAttribute> nca;
    if (has_prefix(tag, "os-fingerprint:")) {
      nca = NetworkContextAttribute{NcaKind::DeviceCapability, Subject{ev.user_id, ev.src_ip},
                                    "tool:" + tag.substr(15), 0, ev.time, "signature"};
    } else if (has_prefix(tag, "tool:")) {
      nca = NetworkContextAttribute{NcaKind::DeviceCapability, Subject{ev.user_id, ev.src_ip},
                                    tag, 0, ev.time, "signature"};
    } else if (has_prefix(tag, "os-version:")) {
      nca = NetworkContextAttribute{NcaKind::DeviceCapability, Subject{ev.user_id, ev.src_ip},
                                    "os:" + tag.substr(11), 0, ev.time, "signature"};
    } else if (has_prefix(tag, "malware-sig:")) {
      nca = NetworkContextAttribute{NcaKind::SuspiciousActivity, Subject{ev.user_id, ev.src_ip},
                                    tag, 0, ev.time, "signature"};
    }
    if (nca && repo.claim_flow_finding(ev.flow_id, "signature", nca->detail)) emit(*nca);
  }

  if (auto nca = detect_restricted_access(ev, cfg.blocklist)) {
    if (repo.claim_flow_finding(ev.flow_id, "restricted-access", nca->detail)) emit(*nca);
  }
  if (auto nca = record_interaction(ev, cfg.org_prefixes)) {
    if (repo.claim_flow_finding(ev.flow_id, "interaction", nca->detail)) emit(*nca);
  }

  const auto scan_window =
      repo.events_for_src(ev.src_ip, ev.time - cfg.port_scan_window_ms, ev.time);
  if (auto nca = detect_port_scan(scan_window, cfg)) {
    if (repo.claim_window_finding(ev.user_id, "port-scan", ev.time, cfg.port_scan_window_ms)) {
      emit(*nca);
    }
  }

  const auto rate_window =
      repo.events_for_user(ev.user_id, ev.time - cfg.rate_window_ms, ev.time);
  if (auto nca = analyze_flow_stats(rate_window, cfg, ev.time)) {
    if (repo.claim_window_finding(ev.user_id, "flow-stats", ev.time, cfg.rate_window_ms)) {
      emit(*nca);
    }
  }
  return out;
}

/// Location + connection-status NCAs for a packet-in, keeping the repository
/// in step with the attachment log.
inline std::vector<NetworkContextAttribute> record_attachment(ContextRepository& repo,
                                                              const netsim::PacketInEvent& ev) {
  std::vector<NetworkContextAttribute> out;
  out.push_back(NetworkContextAttribute{NcaKind::Location, Subject{ev.user_id, ev.device_ip},
                                        "zone:" + ev.zone, 0, ev.time, "controller"});
  out.push_back(NetworkContextAttribute{
      NcaKind::ConnectionStatus, Subject{ev.user_id, ev.device_ip},
      std::string("medium:") + netsim::to_string(ev.medium), 0, ev.time, "controller"});
  for (const auto& nca : out) repo.append(nca);
  return out;
}

/// Coarse security-level label derived from the stored NCAs: a pure function
/// of the repository, so it needs no storage of its own.
inline std::string derive_security_level(const ContextRepository& repo, const UserId& user,
                                         TimeMs now, const DetectorConfig& cfg) {
  const auto recent = repo.query(user, now - cfg.recent_window_ms, now);
  for (const auto& nca : recent) {
    if (nca.kind == NcaKind::SuspiciousActivity || nca.kind == NcaKind::RateAnomaly) return "low";
  }
  bool medium = false;
  for (const auto& nca : recent) medium |= nca.kind == NcaKind::DeviceCapability;
  const auto historical = repo.query(user, 0, now - cfg.recent_window_ms - 1);
  for (const auto& nca : historical) {
    medium |= nca.kind == NcaKind::SuspiciousActivity || nca.kind == NcaKind::RateAnomaly;
  }
  return medium ? "medium" : "high";
}

}  // namespace gargoyle::context
