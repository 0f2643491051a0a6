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
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "gargoyle/ips.hpp"
#include "gargoyle/netsim.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace gargoyle;

namespace {

nlohmann::json fixture_json(const std::string& name) {
  std::ifstream in(std::string(GARGOYLE_FIXTURE_DIR) + "/" + name);
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

netsim::Topology org_map(int id) {
  const nlohmann::json doc = fixture_json("org_maps.json");
  for (const auto& m : doc["maps"]) {
    if (m["map_id"].get<int>() == id) return netsim::load_topology(m);
  }
  FAIL("missing org map");
  return {};
}

}  // namespace

TEST_CASE("expected trajectory of adjacent endpoints is a single hop", "[ips]") {
  auto topo = netsim::load_topology_text(R"({
    "devices": [{"id":"A","ports":4},{"id":"B","ports":4}], "links": [["A","B"]]})");
  netsim::NetworkState net(topo);
  net.attach({"10.0.0.1", "a", "A", 0, netsim::Medium::Wired, 1});
  net.attach({"10.0.0.2", "b", "A", 1, netsim::Medium::Wired, 2});
  auto path = ips::expected_trajectory(net, {"f", "10.0.0.1", "10.0.0.2", "a", 10});
  CHECK(path == std::vector<DeviceId>{"A"});
}

TEST_CASE("expected trajectories match the BFS oracle on a 12-node topology", "[ips]") {
  Rng rng(5150);
  auto doc = oracles::random_topology_doc(rng, 12, 10);
  auto topo = netsim::load_topology(doc);
  const auto nodes = oracles::node_list(doc);
  const auto edges = oracles::edge_list(doc);
  netsim::NetworkState net(topo);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    net.attach({"10.0.2." + std::to_string(i), "u" + std::to_string(i), nodes[i], 0,
                netsim::Medium::Wired, static_cast<TimeMs>(i + 1)});
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      auto path = ips::expected_trajectory(
          net, {"f", "10.0.2." + std::to_string(i), "10.0.2." + std::to_string(j), "u", 10});
      auto want = oracles::bfs_distance(edges, nodes, nodes[i], nodes[j]);
      REQUIRE(want.has_value());
      REQUIRE(static_cast<int>(path.size()) == *want);
    }
  }
}

TEST_CASE("the wired-port flow's expected path crosses that port", "[ips]") {
  // Device wired at P2, file server at P1: the first hop is the port itself.
  netsim::NetworkState net(org_map(1));
  net.attach({"10.0.0.100", "svc-files", "P1", 0, netsim::Medium::Wired, 0});
  net.attach({"10.1.0.20", "U_L", "P2", 1, netsim::Medium::Wired, 1000});
  auto path = ips::expected_trajectory(net, {"f", "10.1.0.20", "10.0.0.100", "U_L", 2000});
  REQUIRE(path.size() >= 2);
  CHECK(path.front() == "P2");
  CHECK(std::count(path.begin(), path.end(), "P2") == 1);
}

TEST_CASE("clean trajectories verify to an empty report list", "[ips]") {
  auto topo = netsim::load_topology_text(R"({
    "devices": [{"id":"A"},{"id":"B"},{"id":"C"}], "links": [["A","B"],["B","C"]]})");
  netsim::NetworkState net(topo);
  net.attach({"10.0.0.1", "a", "A", 0, netsim::Medium::Wired, 1});
  net.attach({"10.0.0.2", "b", "C", 0, netsim::Medium::Wired, 2});
  netsim::FlowDescriptor flow{"f", "10.0.0.1", "10.0.0.2", "a", 100};
  auto expected = ips::expected_trajectory(net, flow);
  auto traj = net.route_flow(flow);
  CHECK(ips::verify(expected, traj).empty());
}

TEST_CASE("a 50 ms delay at P2 is reported as delay at P2", "[ips]") {
  netsim::NetworkState net(org_map(1));
  net.attach({"10.0.0.100", "svc-files", "P1", 0, netsim::Medium::Wired, 0});
  net.attach({"10.1.0.20", "U_L", "P2", 1, netsim::Medium::Wired, 1000});
  net.set_compromised("P2", netsim::CompromisedBehavior{netsim::FaultAction::Delay, 50});

  netsim::FlowDescriptor flow{"f", "10.1.0.20", "10.0.0.100", "U_L", 2000};
  auto expected = ips::expected_trajectory(net, flow);
  auto traj = net.route_flow(flow);
  auto reports = ips::verify(expected, traj, 10);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].fd_id == "P2");
  CHECK(reports[0].action == netsim::FaultAction::Delay);
  CHECK(reports[0].flow_id == "f");
  CHECK(reports[0].expected_path == expected);

  SECTION("a tolerance above the injected delay swallows it") {
    CHECK(ips::verify(expected, traj, 60).empty());
  }
}

TEST_CASE("drop and misroute evidence names the culprit", "[ips]") {
  auto topo = netsim::load_topology_text(R"({
    "devices": [{"id":"A"},{"id":"B"},{"id":"C"},{"id":"D"},{"id":"X"}],
    "links": [["A","B"],["B","C"],["C","D"],["B","X"],["X","C"]]})");
  netsim::NetworkState net(topo);
  net.attach({"10.0.0.1", "a", "A", 0, netsim::Medium::Wired, 1});
  net.attach({"10.0.0.2", "b", "D", 0, netsim::Medium::Wired, 2});
  netsim::FlowDescriptor flow{"f", "10.0.0.1", "10.0.0.2", "a", 100};
  auto expected = ips::expected_trajectory(net, flow);  // A-B-C-D

  SECTION("drop at C truncates there") {
    net.set_compromised("C", netsim::CompromisedBehavior{netsim::FaultAction::Drop, 0});
    auto reports = ips::verify(expected, net.route_flow(flow));
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].fd_id == "C");
    CHECK(reports[0].action == netsim::FaultAction::Drop);
  }

  SECTION("misroute at B diverges via X") {
    net.set_compromised("B", netsim::CompromisedBehavior{netsim::FaultAction::Misroute, 0});
    auto traj = net.route_flow(flow);
    CHECK(traj.device_path() == std::vector<DeviceId>{"A", "B", "X", "C", "D"});
    auto reports = ips::verify(expected, traj);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].fd_id == "B");
    CHECK(reports[0].action == netsim::FaultAction::Misroute);
  }
}

TEST_CASE("no false positives across 100 fault-free runs", "[ips][property]") {
  properties::ips_zero_false_positives(100);
}

TEST_CASE("single-fault injections are localized 100/100", "[ips][property]") {
  properties::ips_single_fault_localization(100);
}
