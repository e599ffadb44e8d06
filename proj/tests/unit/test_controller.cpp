#include <catch_amalgamated.hpp>

#include <random>

#include "device_fixtures.hpp"
#include "pb/common/random.hpp"
#include "test_helpers.hpp"

using namespace pb;
using namespace pb::controller;
using automation::Backend;
using Catch::Approx;

namespace {

void measure_ready(Controller& c, const DeviceId& id = "d1") {
  c.power_monitor(true);
  c.set_voltage(4.0);
  c.batt_switch(id);
  c.set_usb(id, false);
}

std::unique_ptr<device::SimDevice> hungry_device(const std::string& id) {
  device::DeviceProfile p;
  p.name = "hungry";
  p.model.base_ma = 100.0;
  p.model.cpu_coeff_ma = 10000.0;
  p.model.noise_ma = 0.0;
  return std::make_unique<device::SimDevice>(id, p);
}

}  // namespace

TEST_CASE("power_monitor toggles the socket and clears the voltage on power up") {
  auto c = pbtest::make_controller();
  CHECK(c->power_monitor(true) == Socket::on);
  c->set_voltage(4.2);
  CHECK(c->power_monitor(true) == Socket::on);
  CHECK(c->monitor_config().voltage == 4.2);
  CHECK(c->power_monitor(false) == Socket::off);
  CHECK(c->power_monitor(true) == Socket::on);
  CHECK_FALSE(c->monitor_config().voltage);
}

TEST_CASE("power_monitor refuses to turn off while a channel or session needs it") {
  auto c = pbtest::make_controller();
  measure_ready(*c);
  CHECK(pbtest::error_code_of([&] { c->power_monitor(false); }) == Errc::safety);
  c->start_monitor("d1", 0);
  CHECK(pbtest::error_code_of([&] { c->power_monitor(false); }) == Errc::safety);
  CHECK(c->socket() == Socket::on);
  CHECK(pbtest::error_code_of([&] { c->batt_switch("d1"); }) == Errc::safety);
  c->stop_monitor();
  CHECK(c->batt_switch("d1") == Channel::battery);
  CHECK(c->power_monitor(false) == Socket::off);
}

TEST_CASE("set_voltage checks range and socket") {
  auto c = pbtest::make_controller();
  CHECK(pbtest::error_code_of([&] { c->set_voltage(4.2); }) == Errc::state);
  c->power_monitor(true);
  CHECK(c->set_voltage(4.2).voltage == 4.2);
  CHECK(pbtest::error_code_of([&] { c->set_voltage(0.5); }) == Errc::range);
  CHECK(pbtest::error_code_of([&] { c->set_voltage(13.6); }) == Errc::range);
  CHECK(c->set_voltage(0.8).voltage == 0.8);
  CHECK(c->set_voltage(13.5).voltage == 13.5);
}

TEST_CASE("only one device can be on the monitor") {
  auto c = pbtest::make_controller({{"d1", "J7DUO"}, {"d2", "LMX210"}});
  CHECK(pbtest::error_code_of([&] { c->batt_switch("d1"); }) == Errc::state);
  c->power_monitor(true);
  CHECK(pbtest::error_code_of([&] { c->batt_switch("d1"); }) == Errc::state);
  c->set_voltage(4.0);
  CHECK(c->batt_switch("d1") == Channel::monitor);
  CHECK(c->device("d1").state().power_source == device::PowerSource::monitor);
  CHECK(pbtest::error_code_of([&] { c->batt_switch("d2"); }) == Errc::exclusivity);
  CHECK(pbtest::error_code_of([&] { c->batt_switch("nope"); }) == Errc::not_found);
  CHECK(c->batt_switch("d1") == Channel::battery);
  CHECK(c->power_monitor(false) == Socket::off);
}

TEST_CASE("start_monitor preconditions") {
  auto c = pbtest::make_controller();
  c->power_monitor(true);
  c->set_voltage(4.0);
  CHECK(pbtest::error_code_of([&] { c->start_monitor("d1", 1); }) == Errc::precondition);
  c->batt_switch("d1");
  CHECK(pbtest::error_code_of([&] { c->start_monitor("d1", 1); }) == Errc::precondition);
  c->set_usb("d1", false);
  const auto id = c->start_monitor("d1", 1);
  CHECK(id == "trace-node1-1");
  CHECK(pbtest::error_code_of([&] { c->start_monitor("d1", 1); }) == Errc::exclusivity);
  CHECK(pbtest::error_code_of([&] { c->set_usb("d1", true); }) == Errc::precondition);
}

TEST_CASE("a timed session records duration times rate samples") {
  auto c = pbtest::make_controller();
  measure_ready(*c);
  const auto id = c->start_monitor("d1", 10);
  c->advance(12);
  CHECK_FALSE(c->session_running());
  const auto t = c->stop_monitor();
  REQUIRE(t);
  CHECK(t->id() == id);
  CHECK(t->sealed());
  CHECK(t->size() == 50000);
  CHECK(t->voltage() == 4.0);
  CHECK(c->stop_monitor() == t);
}

TEST_CASE("stopping an open session keeps elapsed times rate samples") {
  auto c = pbtest::make_controller();
  measure_ready(*c);
  CHECK(pbtest::error_code_of([&] { c->stop_monitor(); }) == Errc::state);
  c->start_monitor("d1", 0);
  c->advance(3.7);
  const auto t = c->stop_monitor();
  CHECK(std::abs(static_cast<double>(t->size()) - 3.7 * 5000) <= 1.0);
  CHECK(c->session()->state == SessionState::stopped);
}

TEST_CASE("samples above the current limit fault the session") {
  Controller c("node1");
  c.add_device(hungry_device("d1"));
  measure_ready(c);
  c.start_monitor("d1", 10);
  c.advance(1.0);
  c.device("d1").set_cpu_override(0.7);
  c.advance(1.0);
  REQUIRE(c.session());
  CHECK(c.session()->state == SessionState::faulted);
  const auto t = c.stop_monitor();
  CHECK(t->faulted());
  CHECK(t->sealed());
  CHECK(t->size() == 5001);
  CHECK(t->currents().back() > 6000.0);
  CHECK(c.invariant_violations().empty());
}

TEST_CASE("mirroring adds the configured cpu overhead") {
  auto c = pbtest::make_controller();
  auto& d = c->device("d1");
  const double before = d.effective_cpu();
  CHECK(c->device_mirroring("d1", true).mirroring);
  CHECK(d.effective_cpu() == Approx(before + 0.15));
  CHECK(c->device_mirroring("d1", true).mirroring);
  CHECK(d.effective_cpu() == Approx(before + 0.15));
  CHECK_FALSE(c->device_mirroring("d1", false).mirroring);
  CHECK(d.effective_cpu() == Approx(before));
  CHECK(pbtest::error_code_of([&] { c->device_mirroring("zz", true); }) == Errc::not_found);
}

TEST_CASE("commands route by meter state and os") {
  auto c = pbtest::make_controller({{"d1", "J7DUO"}, {"i1", "IPHONE7"}});
  CHECK(c->execute_command("d1", automation::Tap{100, 200}).backend == Backend::usb_adb);
  c->node_setup("d1", true, false);
  c->start_monitor("d1", 0);
  CHECK(c->execute_command("d1", automation::Tap{100, 200}).backend == Backend::wifi_adb);
  CHECK(pbtest::error_code_of([&] { c->execute_command("d1", automation::Tap{1, 1}, Backend::usb_adb); }) ==
        Errc::routing);
  CHECK(c->execute_command("i1", automation::Tap{100, 200}).backend == Backend::bluetooth_hid);
  const auto sh = c->execute_shell("d1", "dumpsys battery");
  REQUIRE(sh.shell);
  CHECK(sh.shell->exit_code == 0);
}

TEST_CASE("node_setup with power prepares a measurement") {
  auto c = pbtest::make_controller();
  const auto report = c->node_setup("d1", true, false);
  CHECK(c->socket() == Socket::on);
  CHECK(c->monitor_config().voltage == Approx(c->device("d1").profile().model.supply_voltage));
  CHECK(c->channel("d1") == Channel::monitor);
  CHECK_FALSE(c->link("d1").usb);
  CHECK_FALSE(c->link("d1").mirroring);
  CHECK(c->link("d1").wifi_band == WifiBand::ghz_5);
  CHECK(c->link("d1").wifi_adb);
  CHECK(report["steps"] ==
        nlohmann::json::array({"meter_on", "set_voltage", "batt_switch", "wifi", "automation", "usb_off"}));
}

TEST_CASE("node_setup without power leaves the meter alone") {
  auto c = pbtest::make_controller({{"d1", "LMX210"}});
  c->node_setup("d1", false, true);
  CHECK(c->socket() == Socket::off);
  CHECK(c->link("d1").mirroring);
  CHECK(c->link("d1").wifi_band == WifiBand::ghz_2_4);
}

TEST_CASE("node_setup is refused during a session and idempotent otherwise") {
  auto c = pbtest::make_controller();
  c->node_setup("d1", true, true);
  const auto first = c->status();
  c->node_setup("d1", true, true);
  CHECK(c->status() == first);
  c->start_monitor("d1", 0);
  CHECK(pbtest::error_code_of([&] { c->node_setup("d1", true, false); }) == Errc::state);
}

TEST_CASE("node_setup moves the monitor between devices through battery") {
  auto c = pbtest::make_controller({{"d1", "J7DUO"}, {"d2", "LMX210"}});
  c->node_setup("d1", true, false);
  c->node_setup("d2", true, false);
  CHECK(c->channel("d1") == Channel::battery);
  CHECK(c->channel("d2") == Channel::monitor);
  CHECK(c->invariant_violations().empty());
}

TEST_CASE("a failing setup step rolls back to the safe state") {
  for (const char* failing : {"meter_on", "set_voltage", "batt_switch", "wifi", "automation", "usb_off", "mirroring"}) {
    INFO(failing);
    auto c = pbtest::make_controller();
    c->set_fault_hook([&](std::string_view step) {
      if (step == failing) throw Error(Errc::io, "injected");
    });
    try {
      c->node_setup("d1", true, true);
      FAIL("expected a step error");
    } catch (const StepError& e) {
      CHECK(e.step() == failing);
    }
    CHECK(c->safe_state());
    CHECK(c->invariant_violations().empty());
  }
}

TEST_CASE("device_setup minimises background activity") {
  auto c = pbtest::make_controller();
  auto& d = c->device("d1");
  d.install_app({"com.example.game"});
  c->execute_command("d1", automation::LaunchApp{device::kNewsReader});
  c->execute_command("d1", automation::LaunchApp{device::kVideoPlayer});
  c->device_setup("d1");
  CHECK(d.state().brightness == 50);
  CHECK_FALSE(d.state().auto_brightness);
  CHECK(d.state().foreground == device::kHome);
  CHECK(d.state().background.empty());
  CHECK_FALSE(d.state().notifications);
  CHECK(d.state().airplane);
  CHECK(d.state().wifi != WifiBand::off);
  const auto once = d.observable_state();
  c->device_setup("d1");
  CHECK(d.observable_state() == once);
  c->device_setup("d1", 250);
  CHECK(d.state().brightness == 250);
  CHECK(pbtest::error_code_of([&] { c->device_setup("d1", 251); }) == Errc::range);
}

TEST_CASE("cleanup returns the node to the safe state") {
  auto c = pbtest::make_controller();
  c->node_setup("d1", true, true);
  c->cleanup("d1");
  CHECK(c->channel("d1") == Channel::battery);
  CHECK(c->socket() == Socket::off);
  CHECK(c->link("d1").usb);
  CHECK_FALSE(c->link("d1").mirroring);
  CHECK(c->safe_state());
  const auto st = c->status();
  const auto again = c->cleanup();
  CHECK(again["safe"] == true);
  CHECK(c->status() == st);
}

TEST_CASE("cleanup uninstalls apps idle for a week") {
  auto c = pbtest::make_controller();
  auto& d = c->device("d1");
  device::AppRecord stale{"com.example.stale"};
  stale.installed_at = -30 * 86400.0;
  stale.last_used = -8 * 86400.0;
  d.install_app(stale);
  device::AppRecord recent{"com.example.recent"};
  recent.last_used = -6 * 86400.0;
  d.install_app(recent);
  const auto report = c->cleanup();
  CHECK_FALSE(d.installed("com.example.stale"));
  CHECK(d.installed("com.example.recent"));
  CHECK(d.installed(device::kSettingsApp));
  CHECK(report["removed_apps"]["d1"] == nlohmann::json::array({"com.example.stale"}));
}

TEST_CASE("cleanup during a session defers the measured device") {
  auto c = pbtest::make_controller({{"d1", "J7DUO"}, {"d2", "LMX210"}});
  c->node_setup("d1", true, false);
  c->node_setup("d2", false, true);
  c->start_monitor("d1", 0);
  const auto report = c->cleanup();
  CHECK(report["deferred"] == "d1");
  CHECK(c->channel("d1") == Channel::monitor);
  CHECK(c->socket() == Socket::on);
  CHECK_FALSE(c->link("d1").usb);
  CHECK_FALSE(c->link("d2").mirroring);
  c->stop_monitor();
  c->cleanup();
  CHECK(c->safe_state());
}

TEST_CASE("random call sequences never break safety and cleanup always recovers") {
  std::mt19937_64 rng(53);
  const std::vector<DeviceId> ids{"d1", "d2", "i1"};
  for (int round = 0; round < 200; ++round) {
    auto c = pbtest::make_controller({{"d1", "J7DUO"}, {"d2", "SMJ337A"}, {"i1", "IPHONE7"}});
    std::string fail_at;
    c->set_fault_hook([&](std::string_view step) {
      if (step == fail_at) throw Error(Errc::io, "injected");
    });
    for (int op = 0; op < 30; ++op) {
      const auto& id = ids[static_cast<std::size_t>(uniform_int(rng, 0, 2))];
      fail_at = uniform_int(rng, 0, 5) == 0 ? std::vector<std::string>{"meter_on", "batt_switch", "wifi", "usb_off",
                                                                         "mirroring", "brightness"}
                                                  [static_cast<std::size_t>(uniform_int(rng, 0, 5))]
                                            : "";
      try {
        switch (uniform_int(rng, 0, 12)) {
          case 0: c->power_monitor(uniform_int(rng, 0, 1) == 1); break;
          case 1: c->set_voltage(uniform(rng, 0.0, 15.0)); break;
          case 2: c->batt_switch(id); break;
          case 3: c->start_monitor(id, uniform(rng, 0.0, 2.0)); break;
          case 4: c->stop_monitor(); break;
          case 5: c->device_mirroring(id, uniform_int(rng, 0, 1) == 1); break;
          case 6: c->set_usb(id, uniform_int(rng, 0, 1) == 1); break;
          case 7: c->execute_command(id, automation::Tap{10, 10}); break;
          case 8: c->node_setup(id, uniform_int(rng, 0, 1) == 1, uniform_int(rng, 0, 1) == 1); break;
          case 9: c->device_setup(id); break;
          case 10: c->cleanup(); break;
          default: c->advance(uniform(rng, 0.0, 0.5)); break;
        }
      } catch (const Error&) {
      }
      INFO("round " << round << " op " << op << " " << nlohmann::json(c->invariant_violations()).dump());
      REQUIRE(c->invariant_violations().empty());
    }
    fail_at.clear();
    if (c->session_running()) c->stop_monitor();
    c->cleanup();
    CHECK(c->safe_state());
  }
}

TEST_CASE("status document lists meter, channels and links") {
  auto c = pbtest::make_controller();
  c->node_setup("d1", true, false);
  const auto s = c->status();
  CHECK(s["node_id"] == "node1");
  CHECK(s["meter"]["socket"] == "On");
  CHECK(s["channels"]["d1"] == "Monitor");
  CHECK(s["links"]["d1"]["usb"] == "off");
  CHECK(s["safe"] == false);
}
