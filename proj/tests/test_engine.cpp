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
#include <memory>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "gargoyle/engine.hpp"
#include "gargoyle/harness.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace gargoyle;
using fbac::Function;
using fbac::FunctionSet;

namespace {

std::string fixture_path(const std::string& name) {
  return std::string(GARGOYLE_FIXTURE_DIR) + "/" + name;
}

nlohmann::json fixture_json(const std::string& name) {
  std::ifstream in(fixture_path(name));
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

// A live floor: org map 1 with the file server on P1, reference pack loaded.
struct World {
  netsim::Topology topo;
  policy::PolicyDocument policies;
  fbac::Catalog catalog;
  std::unique_ptr<netsim::NetworkState> net;
  context::ContextRepository repo;
  fbac::AccessControlTensor tensor;
  engine::Directory directory;
  std::unique_ptr<engine::Engine> eng;
  context::DetectorConfig detectors;

  World() {
    const nlohmann::json maps = fixture_json("org_maps.json");
    topo = netsim::load_topology(maps["maps"][0]);
    policies = policy::parse_policies(fixture_json("policies_reference.json"));
    catalog = fbac::load_catalog(fixture_json("catalog.json"));
    detectors = harness::detectors_for(policies);
    net = std::make_unique<netsim::NetworkState>(topo);
    eng = std::make_unique<engine::Engine>(*net, repo, catalog, policies, directory, tensor,
                                           "10.0.0.100");
    directory.roles["svc-files"] = "R11";
    net->attach({"10.0.0.100", "svc-files", "P1", 0, netsim::Medium::Wired, 0});
  }

  void attach_user(const UserId& user, const RoleId& role, const IpAddr& ip, const DeviceId& fd,
                   netsim::Medium medium, TimeMs time) {
    directory.roles[user] = role;
    auto ev = net->attach({ip, user, fd, 1 + static_cast<int>(directory.roles.size()), medium, time});
    context::record_attachment(repo, ev);
  }

  void add_nca(const UserId& user, const IpAddr& ip, context::NcaKind kind,
               const std::string& detail, TimeMs time) {
    repo.append(context::NetworkContextAttribute{kind, {user, ip}, detail, 0, time, "test"});
  }
};

}  // namespace

TEST_CASE("snapshot of an empty repository has empty attribute lists", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  auto snap = w.eng->snapshot({"rq", "U_A", "10.1.0.10", "R2", "F1", 5000});
  // the attachment itself produced location/connection-status attributes
  for (const auto& nca : snap.recent_ncas) {
    CHECK((nca.kind == context::NcaKind::Location ||
           nca.kind == context::NcaKind::ConnectionStatus));
  }
  CHECK(snap.historical_ncas.empty());
  CHECK(snap.proximity.empty());
  CHECK(snap.path_reports.empty());
  CHECK(snap.zone == "RoomB");
  CHECK(snap.medium == netsim::Medium::Wireless);
  CHECK_FALSE(snap.blacklisted);
  CHECK(snap.object_labels == std::set<Label>{"top-secret", "war-related", "sensitive"});
}

TEST_CASE("snapshot gathers the hostile neighbor's attributes", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.attach_user("U_B", "R3", "10.1.0.12", "R2", netsim::Medium::Wireless, 80'000);
  w.add_nca("U_B", "10.1.0.12", context::NcaKind::DeviceCapability, "tool:kali", 80'500);
  w.add_nca("U_B", "10.1.0.12", context::NcaKind::SuspiciousActivity, "port-scan", 80'600);

  auto snap = w.eng->snapshot({"rq", "U_A", "10.1.0.10", "R2", "F1", 81'000});
  REQUIRE(snap.proximity.size() == 1);
  CHECK(snap.proximity[0].user_id == "U_B");
  bool kali = false, scan = false;
  for (const auto& nca : snap.proximity[0].recent_ncas) {
    kali |= nca.detail == "tool:kali";
    scan |= nca.detail == "port-scan";
  }
  CHECK(kali);
  CHECK(scan);
}

TEST_CASE("snapshot equals direct repository queries on random logs", "[engine][property]") {
  Rng rng(616);
  for (int run = 0; run < 50; ++run) {
    World w;
    w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
    const TimeMs now = 200'000;
    const int n = static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i) {
      w.add_nca("U_A", "10.1.0.10",
                rng.below(2) ? context::NcaKind::SuspiciousActivity
                             : context::NcaKind::Interaction,
                "d" + std::to_string(rng.below(5)), static_cast<TimeMs>(rng.below(now)));
    }
    auto snap = w.eng->snapshot({"rq", "U_A", "10.1.0.10", "R2", "F1", now});
    const TimeMs w_r = w.policies.recent_window_ms;
    REQUIRE(snap.recent_ncas == w.repo.query("U_A", now - w_r, now));
    REQUIRE(snap.historical_ncas == w.repo.query("U_A", 0, now - w_r - 1));
  }
}

TEST_CASE("snapshot requires an attached device", "[engine]") {
  World w;
  CHECK_THROWS_AS(w.eng->snapshot({"rq", "ghost", "10.9.9.9", "R2", "F1", 1000}),
                  NotAttachedError);
}

TEST_CASE("safe context with a supervisor grants email and print on secrets", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1200);

  engine::AccessRequest request{"rq1", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto snap = w.eng->snapshot(request);
  CHECK(snap.supervisor_in_zone);
  auto decision = engine::decide(request, snap, w.policies, w.tensor, w.catalog);
  REQUIRE(decision.granted);
  // top-secret segments keep Print and Email; wireless strips Copy
  for (const auto& seg : {"drones", "ops"}) {
    CHECK(decision.functions.at(seg).contains(Function::Print));
    CHECK(decision.functions.at(seg).contains(Function::Email));
    CHECK_FALSE(decision.functions.at(seg).contains(Function::Copy));
  }
  CHECK(decision.functions.at("intro") == FunctionSet::all());
}

TEST_CASE("role outside the admitted range is a role mismatch", "[engine]") {
  World w;
  w.attach_user("U_X", "R12", "10.1.0.15", "R2", netsim::Medium::Wireless, 1000);
  engine::AccessRequest request{"rq1", "U_X", "10.1.0.15", "R12", "F1", 30'000};
  auto decision = engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                 w.catalog);
  REQUIRE_FALSE(decision.granted);
  CHECK(decision.reason == engine::ReasonCategory::RoleMismatch);
  CHECK(decision.functions.empty());  // fail-safe: nothing released
  CHECK(std::find(decision.triggering_rules.begin(), decision.triggering_rules.end(),
                  "org.pf1") != decision.triggering_rules.end());
}

TEST_CASE("flagged wired port with no alternative denies and quarantines", "[engine]") {
  World w;
  w.attach_user("U_L", "R4", "10.1.0.20", "P2", netsim::Medium::Wired, 1000);
  w.attach_user("U_L", "R4", "10.1.0.21", "R3", netsim::Medium::Wireless, 1200);
  w.net->set_compromised("P2", netsim::CompromisedBehavior{netsim::FaultAction::Delay, 50});

  // routine traffic betrays the port
  netsim::FlowDescriptor flow{"f1", "10.1.0.20", "10.0.0.100", "U_L", 100'000};
  auto expected = ips::expected_trajectory(*w.net, flow);
  for (auto& report : ips::verify(expected, w.net->route_flow(flow))) {
    w.repo.append_report(report);
  }
  REQUIRE(w.repo.flagged_devices() == std::set<DeviceId>{"P2"});

  engine::AccessRequest wired{"rq-w", "U_L", "10.1.0.20", "R4", "F1", 110'000};
  auto snap = w.eng->snapshot(wired);
  CHECK_FALSE(snap.safe_path_exists);
  REQUIRE_FALSE(snap.path_reports.empty());
  auto decision = engine::decide(wired, snap, w.policies, w.tensor, w.catalog);
  REQUIRE_FALSE(decision.granted);
  CHECK(decision.reason == engine::ReasonCategory::CompromisedPath);
  bool quarantined = false;
  for (const auto& a : decision.network_actions) {
    quarantined |= engine::to_string(a) == "quarantine:10.1.0.20";
  }
  CHECK(quarantined);

  SECTION("the wireless interface is unaffected") {
    engine::AccessRequest wireless{"rq-r", "U_L", "10.1.0.21", "R4", "F1", 120'000};
    auto snap2 = w.eng->snapshot(wireless);
    CHECK(snap2.path_reports.empty());
    auto decision2 = engine::decide(wireless, snap2, w.policies, w.tensor, w.catalog);
    CHECK(decision2.granted);
  }

  SECTION("enforcement makes the wired route unreachable") {
    w.eng->enforce(decision, nullptr, "F1");
    CHECK_THROWS_AS(w.net->route_flow({"probe", "10.1.0.20", "10.0.0.100", "U_L", 130'000}),
                    UnreachableError);
    // defense in depth is session-independent: the wireless route still works
    CHECK(w.net->route_flow({"probe2", "10.1.0.21", "10.0.0.100", "U_L", 130'000}).delivered);
  }
}

TEST_CASE("flagged core with an alternative reroutes and still grants", "[engine]") {
  World w;  // map 1 dual-homes every edge to C1 and C2
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.net->set_compromised("C1", netsim::CompromisedBehavior{netsim::FaultAction::Delay, 40});

  netsim::FlowDescriptor flow{"f1", "10.1.0.10", "10.0.0.100", "U_A", 100'000};
  auto expected = ips::expected_trajectory(*w.net, flow);
  for (auto& report : ips::verify(expected, w.net->route_flow(flow))) {
    w.repo.append_report(report);
  }

  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 110'000};
  auto snap = w.eng->snapshot(request);
  CHECK(snap.safe_path_exists);
  auto decision = engine::decide(request, snap, w.policies, w.tensor, w.catalog);
  REQUIRE(decision.granted);
  bool rerouted = false;
  for (const auto& a : decision.network_actions) {
    rerouted |= engine::to_string(a) == "reroute_avoiding:C1";
  }
  CHECK(rerouted);
  // the flagged-path restriction strips the exfil functions
  CHECK_FALSE(decision.functions.at("drones").contains(Function::Email));

  w.eng->enforce(decision, nullptr, "F1");
  auto rerouted_traj = w.net->route_flow({"f2", "10.1.0.10", "10.0.0.100", "U_A", 115'000});
  for (const auto& hop : rerouted_traj.hops) CHECK(hop.fd_id != "C1");
}

TEST_CASE("DoS-rate context denies and quarantines the requester", "[engine]") {
  World w;
  w.attach_user("U_D", "R3", "10.1.0.30", "R1", netsim::Medium::Wireless, 1000);
  w.repo.append(context::NetworkContextAttribute{
      context::NcaKind::RateAnomaly, {"U_D", "10.1.0.30"}, "rate", 10'000, 99'000, "flow-stats"});

  engine::AccessRequest request{"rq", "U_D", "10.1.0.30", "R3", "F1", 100'000};
  auto decision = engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                 w.catalog);
  REQUIRE_FALSE(decision.granted);
  CHECK(decision.reason == engine::ReasonCategory::CurrentSuspicious);
  bool quarantined = false;
  for (const auto& a : decision.network_actions) {
    quarantined |= engine::to_string(a) == "quarantine:10.1.0.30";
  }
  CHECK(quarantined);
}

TEST_CASE("blacklisted requesters are cut off before any rule runs", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.eng->apply_action(engine::ActBlacklist{{"U_A"}});
  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto decision = engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                 w.catalog);
  REQUIRE_FALSE(decision.granted);
  CHECK(decision.reason == engine::ReasonCategory::Blacklisted);
}

TEST_CASE("unknown objects are rejected", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F9", 30'000};
  CHECK_THROWS_AS(engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                 w.catalog),
                  UnknownObjectError);
}

TEST_CASE("decide matches the reference interpreter", "[engine][property]") {
  properties::decide_vs_reference_interpreter(200);
}

TEST_CASE("decide is deterministic", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.add_nca("U_A", "10.1.0.10", context::NcaKind::DeviceCapability, "tool:kali", 29'000);
  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto snap = w.eng->snapshot(request);
  auto d1 = engine::decide(request, snap, w.policies, w.tensor, w.catalog);
  auto d2 = engine::decide(request, snap, w.policies, w.tensor, w.catalog);
  CHECK(d1.granted == d2.granted);
  CHECK(d1.functions == d2.functions);
  CHECK(d1.triggering_rules == d2.triggering_rules);
}

TEST_CASE("a new suspicious attribute never enlarges a grant", "[engine][property]") {
  Rng rng(2718);
  for (int run = 0; run < 60; ++run) {
    World w;
    w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
    if (rng.below(2)) {
      w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1100);
    }
    if (rng.below(2)) {
      w.add_nca("U_A", "10.1.0.10", context::NcaKind::DeviceCapability, "tool:kali", 29'000);
    }
    engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
    auto before = engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                 w.catalog);
    w.add_nca("U_A", "10.1.0.10", context::NcaKind::SuspiciousActivity,
              "sig-" + std::to_string(rng.below(4)), 29'500);
    auto after = engine::decide(request, w.eng->snapshot(request), w.policies, w.tensor,
                                w.catalog);
    if (!before.granted) {
      REQUIRE_FALSE(after.granted);
      continue;
    }
    if (after.granted) {
      for (const auto& [seg, fns] : after.functions) {
        REQUIRE(fns.subset_of(before.functions.at(seg)));
      }
    }
  }
}

TEST_CASE("sessions open on grants only, with unique ids", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto decision = w.eng->decide_request(request);
  REQUIRE(decision.granted);
  auto& s1 = w.eng->open_session(decision, request);
  auto& s2 = w.eng->open_session(decision, request);
  CHECK(s1.id != s2.id);
  CHECK(s1.status == engine::Session::Status::Active);

  engine::AccessDecision deny;
  deny.granted = false;
  CHECK_THROWS_AS(w.eng->open_session(deny, request), SessionOnDenyError);
}

TEST_CASE("the neighbor turning hostile revokes the session and blacklists both",
          "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1200);

  engine::AccessRequest request{"rq1", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto decision = w.eng->decide_request(request);
  REQUIRE(decision.granted);
  auto& session = w.eng->open_session(decision, request);

  // benign update: nothing changes
  w.attach_user("U_B", "R3", "10.1.0.12", "R2", netsim::Medium::Wireless, 80'000);
  auto events = w.eng->notify("U_B", "RoomB", 80'000);
  CHECK(events.empty());
  CHECK(session.status == engine::Session::Status::Active);

  // the kali capability appears next door
  w.add_nca("U_B", "10.1.0.12", context::NcaKind::DeviceCapability, "tool:kali", 80'500);
  events = w.eng->notify("U_B", "RoomB", 80'500);
  REQUIRE(events.size() == 1);
  CHECK(events[0].status == engine::Session::Status::Revoked);
  CHECK(session.status == engine::Session::Status::Revoked);
  REQUIRE_FALSE(events[0].decision.granted);
  CHECK(events[0].decision.reason == engine::ReasonCategory::CurrentSuspicious);

  // both users blacklisted and confined to Room C
  CHECK(w.eng->enforcement().blacklist == std::set<UserId>{"U_A", "U_B"});
  const auto& zr = w.net->zone_restrictions();
  REQUIRE(zr.count("U_A") == 1);
  REQUIRE(zr.count("U_B") == 1);
  CHECK(zr.at("U_A") == "RoomC");
  CHECK(zr.at("U_B") == "RoomC");

  SECTION("a revoked session renders every segment empty") {
    auto view = w.eng->host_view(session.decision, &session, "F1");
    REQUIRE(view.size() == 4);
    for (const auto& [seg, fns] : view) CHECK(fns.empty());
  }

  SECTION("subsequent requests are denied as blacklisted") {
    engine::AccessRequest later{"rq2", "U_A", "10.1.0.10", "R2", "F1", 90'000};
    auto d2 = w.eng->decide_request(later);
    REQUIRE_FALSE(d2.granted);
    CHECK(d2.reason == engine::ReasonCategory::Blacklisted);
  }
}

TEST_CASE("a mild capability next door downgrades instead of revoking", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1200);
  engine::AccessRequest request{"rq1", "U_A", "10.1.0.10", "R2", "F2", 30'000};
  auto decision = w.eng->decide_request(request);
  REQUIRE(decision.granted);
  const auto before = decision.functions;
  auto& session = w.eng->open_session(decision, request);

  // outdated-OS capability: restriction rules fire, no GP denial (not war-related)
  w.attach_user("U_B", "R3", "10.1.0.12", "R2", netsim::Medium::Wireless, 60'000);
  w.add_nca("U_B", "10.1.0.12", context::NcaKind::DeviceCapability, "os:xp-eol", 60'500);
  auto events = w.eng->notify("U_B", "RoomB", 60'500);
  REQUIRE(events.size() == 1);
  CHECK(events[0].status == engine::Session::Status::Downgraded);
  for (const auto& [seg, fns] : session.decision.functions) {
    CHECK(fns.subset_of(before.at(seg)));
  }
  CHECK_FALSE(session.decision.functions.at("records").contains(Function::Email));
}

TEST_CASE("session status folds over the update stream like replayed decisions",
          "[engine][property]") {
  Rng rng(31337);
  for (int run = 0; run < 50; ++run) {
    World w;
    w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
    w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1100);
    w.attach_user("U_B", "R3", "10.1.0.12", "R2", netsim::Medium::Wireless, 1200);

    engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
    auto decision = w.eng->decide_request(request);
    REQUIRE(decision.granted);
    auto& session = w.eng->open_session(decision, request);

    // Oracle state: fold decide() over the updates independently.
    std::string oracle = "active";
    auto oracle_functions = decision.functions;

    const int updates = 1 + static_cast<int>(rng.below(6));
    for (int u = 0; u < updates; ++u) {
      const TimeMs t = 40'000 + u * 1000;
      const auto kind = rng.below(4);
      const UserId subject = kind == 3 ? "U_A" : "U_B";
      std::string detail;
      context::NcaKind nkind;
      switch (kind) {
        case 0: nkind = context::NcaKind::Interaction; detail = "peer:10.0.0.100"; break;
        case 1: nkind = context::NcaKind::DeviceCapability; detail = "os:xp-eol"; break;
        case 2: nkind = context::NcaKind::DeviceCapability; detail = "tool:kali"; break;
        default: nkind = context::NcaKind::SuspiciousActivity; detail = "port-scan"; break;
      }
      w.add_nca(subject, subject == "U_A" ? "10.1.0.10" : "10.1.0.12", nkind, detail, t);

      if (oracle != "revoked") {
        engine::AccessRequest probe = request;
        probe.time = t;
        auto fresh = engine::decide(probe, w.eng->snapshot(probe), w.policies, w.tensor,
                                    w.catalog);
        if (!fresh.granted) {
          oracle = "revoked";
        } else {
          bool tightened = false;
          for (auto& [seg, fns] : oracle_functions) {
            auto next = fns.intersect(fresh.functions.at(seg));
            tightened |= next != fns;
            fns = next;
          }
          if (tightened) oracle = "downgraded";
        }
      }
      w.eng->notify(subject, "RoomB", t);
    }
    REQUIRE(std::string(engine::to_string(session.status)) == oracle);
    if (oracle != "revoked") {
      for (const auto& [seg, fns] : oracle_functions) {
        REQUIRE(session.decision.functions.at(seg) == fns);
      }
    }
  }
}

TEST_CASE("enforcement applies both layers independently", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  w.attach_user("U_S", "R10", "10.1.0.11", "R2", netsim::Medium::Wireless, 1100);
  engine::AccessRequest request{"rq", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto decision = w.eng->decide_request(request);
  REQUIRE(decision.granted);

  SECTION("rendered view equals the decision's per-segment sets") {
    auto view = w.eng->enforce(decision, nullptr, "F1");
    REQUIRE(view.size() == 4);
    for (const auto& [seg, fns] : view) CHECK(fns == decision.functions.at(seg));
    CHECK_FALSE(view.at("annex").contains(Function::Copy));  // wireless strips Copy
  }

  SECTION("a decision with no actions leaves the network untouched") {
    CHECK(decision.network_actions.empty());
    auto before = w.net->route_flow({"p", "10.1.0.10", "10.0.0.100", "U_A", 31'000});
    w.eng->enforce(decision, nullptr, "F1");
    auto after = w.net->route_flow({"p", "10.1.0.10", "10.0.0.100", "U_A", 31'000});
    CHECK(before.device_path() == after.device_path());
  }

  SECTION("quarantine flips the route to unreachable, host layer or not") {
    engine::AccessDecision hostless;  // network action with no grant at all
    hostless.granted = false;
    hostless.reason = engine::ReasonCategory::CurrentSuspicious;
    hostless.network_actions.push_back(engine::ActQuarantine{{"10.1.0.10"}, {}});
    CHECK(w.net->route_flow({"p", "10.1.0.10", "10.0.0.100", "U_A", 31'000}).delivered);
    w.eng->enforce(hostless, nullptr, "F1");
    CHECK_THROWS_AS(w.net->route_flow({"p", "10.1.0.10", "10.0.0.100", "U_A", 32'000}),
                    UnreachableError);
  }
}

TEST_CASE("trace records serialize decisions stably", "[engine]") {
  World w;
  w.attach_user("U_A", "R2", "10.1.0.10", "R2", netsim::Medium::Wireless, 1000);
  engine::AccessRequest request{"rq1", "U_A", "10.1.0.10", "R2", "F1", 30'000};
  auto decision = w.eng->decide_request(request);
  auto& session = w.eng->open_session(decision, request);
  auto j = engine::trace_record("decision", request, decision, &session, 30'000);
  CHECK(j["event"] == "decision");
  CHECK(j["outcome"] == "grant");
  CHECK(j["request_id"] == "rq1");
  CHECK(j["session"] == session.id);
  CHECK(j["functions"].contains("drones"));
  CHECK_FALSE(j.contains("reason"));

  engine::AccessDecision deny;
  deny.granted = false;
  deny.reason = engine::ReasonCategory::Blacklisted;
  auto jd = engine::trace_record("decision", request, deny, nullptr, 31'000);
  CHECK(jd["outcome"] == "deny");
  CHECK(jd["reason"] == "blacklisted");
  CHECK_FALSE(jd.contains("functions"));
  CHECK_FALSE(jd.contains("session"));
}
