#include <gtest/gtest.h>

#include "arpsim/scenario.hpp"
#include "arpsim/simulator.hpp"

using namespace arpsim;

namespace {

const std::string kDir = ARPSIM_SCENARIO_DIR;

const char* kTwoHosts = R"(
[scenario]
name = "t"

[[host]]
name = "a"
ip = "10.0.0.1"
mac = "02:00:00:00:00:01"
port = 1

[[host]]
name = "b"
ip = "10.0.0.2"
mac = "02:00:00:00:00:02"
port = 2
)";

std::vector<SchemaIssue> issues_of(const std::string& text) {
  try {
    parse_scenario(text, "test.toml");
  } catch (const ScenarioError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<SchemaIssue>& issues, const std::string& field) {
  for (const auto& i : issues) {
    if (i.field.find(field) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Scenario, ShippedEttercapScenarioHasCaptureAddresses) {
  const Scenario s = load_scenario(kDir + "/ettercap-undefended.toml");
  ASSERT_EQ(s.hosts.size(), 3u);
  ASSERT_TRUE(s.attack);
  EXPECT_EQ(s.attack->plan.victim_a_ip, Ipv4Addr::parse("192.0.0.15"));
  EXPECT_EQ(s.attack->plan.victim_b_ip, Ipv4Addr::parse("192.0.0.100"));
  const HostSpec* atk = s.find_host(s.attack->attacker);
  ASSERT_TRUE(atk);
  EXPECT_EQ(atk->config.ip, Ipv4Addr::parse("192.0.0.108"));
  EXPECT_EQ(atk->config.mac, MacAddr::parse("00:0e:7f:5f:ba:40"));
  EXPECT_EQ(s.find_host("victim-a")->config.mac, MacAddr::parse("00:0b:cd:b6:3e:a2"));
  EXPECT_EQ(s.find_host("victim-b")->config.mac, MacAddr::parse("00:08:c7:9f:bd:a8"));
}

TEST(Scenario, AllShippedScenariosValidate) {
  for (const char* name : {"ettercap-undefended", "ettercap-acl", "connectivity", "ip-change", "ip-conflict",
                           "dead-host-takeover", "mac-clone", "blind-spot"}) {
    EXPECT_NO_THROW(load_scenario(kDir + "/" + name + ".toml")) << name;
  }
}

TEST(Scenario, UndefinedHostNamesTheField) {
  const auto issues = issues_of(std::string(kTwoHosts) + R"(
[[script]]
at = 1.0
action = "ping"
host = "ghost"
to = "10.0.0.2"
)");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].field, "script[0].host");
  EXPECT_NE(issues[0].message.find("ghost"), std::string::npos);
  EXPECT_GT(issues[0].line, 0);
}

TEST(Scenario, EmptyScriptRunsToQuiescence) {
  Scenario s = parse_scenario(kTwoHosts);
  EXPECT_TRUE(s.script.empty());
  Simulator sim(std::move(s));
  sim.run();
  EXPECT_EQ(sim.log().size(), 0u);
  EXPECT_EQ(sim.assert_failures(), 0u);
}

TEST(Scenario, DuplicateAddressesNeedMarker) {
  std::string dup = kTwoHosts;
  dup.replace(dup.find("10.0.0.2"), 8, "10.0.0.1");
  EXPECT_TRUE(mentions(issues_of(dup), "host[1].ip"));

  std::string marked = dup;
  marked.replace(marked.find("name = \"t\""), 10, "name = \"t\"\nallow_duplicate_addresses = true");
  EXPECT_TRUE(issues_of(marked).empty());
}

TEST(Scenario, MalformedAddressesReported) {
  std::string bad = kTwoHosts;
  bad.replace(bad.find("10.0.0.2"), 8, "10.0.0.999");
  bad.replace(bad.find("02:00:00:00:00:01"), 17, "02:00:00:00:00:zz");
  const auto issues = issues_of(bad);
  EXPECT_TRUE(mentions(issues, "host[1].ip"));
  EXPECT_TRUE(mentions(issues, "host[0].mac"));
}

TEST(Scenario, ScriptMustBeSortedAndNonNegative) {
  const auto issues = issues_of(std::string(kTwoHosts) + R"(
[[script]]
at = 5.0
action = "wait"

[[script]]
at = 2.0
action = "wait"

[[script]]
at = -1.0
action = "wait"
)");
  EXPECT_TRUE(mentions(issues, "script[1].at"));
  EXPECT_TRUE(mentions(issues, "script[2].at"));
}

TEST(Scenario, UnknownActionsAndFieldsRejected) {
  const auto issues = issues_of(std::string(kTwoHosts) + R"(
[[script]]
at = 1.0
action = "teleport"

[[script]]
at = 2.0
action = "gratuitous"
host = "a"
colour = "red"
)");
  EXPECT_TRUE(mentions(issues, "script[0].action"));
  EXPECT_TRUE(mentions(issues, "script[1].colour"));
}

TEST(Scenario, TomlSyntaxErrorHasLine) {
  const auto issues = issues_of("[scenario]\nname = \"x\"\nbroken = = 1\n");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].line, 3);
}

TEST(Scenario, AclPresetWithoutServerRejected) {
  EXPECT_TRUE(mentions(issues_of(std::string(kTwoHosts) + "\n[switch]\nacl = \"cisco-4.5.1\"\n"), "switch.acl"));
  EXPECT_TRUE(
      issues_of(std::string(kTwoHosts) + "\n[switch]\nacl = \"cisco-4.5.1\"\nserver_mac = \"02:00:00:00:00:63\"\n")
          .empty());
}

TEST(Scenario, ServerSubnetDefaultsToServerNetwork) {
  const Scenario s = parse_scenario(std::string(kTwoHosts) + "\n[server]\nhost = \"b\"\n");
  ASSERT_TRUE(s.server);
  EXPECT_EQ(s.server->subnet, Ipv4Addr::parse("10.0.0.0"));
  EXPECT_EQ(s.server->prefix_len, 24);
}

TEST(Scenario, AttackNeedsKnownAttacker) {
  const auto issues = issues_of(std::string(kTwoHosts) + R"(
[attack]
attacker = "mallory"
victim_a = "10.0.0.1"
victim_b = "10.0.0.2"
)");
  EXPECT_TRUE(mentions(issues, "attack.attacker"));
}

TEST(Scenario, HostOverridesApplied) {
  const Scenario s = parse_scenario(R"(
[scenario]
name = "o"

[[host]]
name = "sol"
ip = "10.0.0.1"
mac = "02:00:00:00:00:01"
port = 1
profile = "solaris"
unsolicited_lifetime = 120
static_overwritable = true
static = [{ ip = "10.0.0.9", mac = "02:00:00:00:00:09" }]
)");
  const HostConfig& h = s.hosts[0].config;
  EXPECT_EQ(h.policy.profile, OsProfile::solaris);
  EXPECT_EQ(h.policy.unsolicited_lifetime, from_seconds(120));
  EXPECT_TRUE(h.policy.static_overwritable_by_arp);
  ASSERT_EQ(h.static_entries.size(), 1u);
}
