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

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gargoyle/core.hpp"
#include "gargoyle/netsim.hpp"

namespace gargoyle::ips {

/// Default slack before an inter-hop gap counts as injected delay.
inline constexpr TimeMs kDefaultDelayToleranceMs = 10;

/// Verdict on one forwarding device, with the trajectory evidence that
/// produced it.
struct DataPlaneReport {
  DeviceId fd_id;
  netsim::FaultAction action = netsim::FaultAction::Drop;
  FlowId flow_id;
  std::vector<DeviceId> expected_path;
  std::vector<netsim::TrajectoryHop> actual_hops;
  TimeMs time = 0;
};

/// The controller-computed path for a flow, free of any compromised-device
/// effects. Throws UnreachableError when routing is impossible.
inline std::vector<DeviceId> expected_trajectory(const netsim::NetworkState& net,
                                                 const netsim::FlowDescriptor& flow) {
  auto path = net.plan_path(flow.src_ip, flow.dst_ip);
  if (!path) throw UnreachableError("flow " + flow.flow_id + ": no expected path");
  return *path;
}

/// Compares an actual trajectory against the expected path and reports every
/// misbehaving device together with its specific action.
///
/// - misroute: named at the last device the paths have in common;
/// - drop: named at the last device reached when delivery failed;
/// - delay: named at every hop whose inter-hop gap exceeds nominal + delta.
inline std::vector<DataPlaneReport> verify(const std::vector<DeviceId>& expected,
                                           const netsim::Trajectory& actual,
                                           TimeMs delta = kDefaultDelayToleranceMs) {
  std::vector<DataPlaneReport> reports;
  if (expected.empty()) return reports;

  const TimeMs report_time = actual.hops.empty() ? actual.start_ms : actual.hops.back().ingress_ms;
  auto make_report = [&](const DeviceId& fd, netsim::FaultAction action) {
    return DataPlaneReport{fd, action, actual.flow_id, expected, actual.hops, report_time};
  };

  // Divergence point, if any.
  std::size_t diverged_at = actual.hops.size();
  for (std::size_t i = 0; i < actual.hops.size(); ++i) {
    if (i >= expected.size() || actual.hops[i].fd_id != expected[i]) {
      diverged_at = i;
      break;
    }
  }

  // Delay checks along the undisputed prefix.
  TimeMs prev = actual.start_ms;
  for (std::size_t i = 0; i < diverged_at; ++i) {
    const TimeMs gap = actual.hops[i].ingress_ms - prev;
    if (gap > netsim::kNominalHopMs + delta) {
      reports.push_back(make_report(actual.hops[i].fd_id, netsim::FaultAction::Delay));
    }
    prev = actual.hops[i].ingress_ms;
  }

  if (diverged_at < actual.hops.size()) {
    const DeviceId& culprit =
        diverged_at > 0 ? actual.hops[diverged_at - 1].fd_id : actual.hops[0].fd_id;
    reports.push_back(make_report(culprit, netsim::FaultAction::Misroute));
    return reports;
  }

  if (!actual.delivered) {
    const DeviceId& last = actual.hops.empty() ? expected.front() : actual.hops.back().fd_id;
    reports.push_back(make_report(last, netsim::FaultAction::Drop));
  }
  return reports;
}

}  // namespace gargoyle::ips
