#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "device_fixtures.hpp"
#include "pb/common/random.hpp"
#include "pb/device/calibration.hpp"
#include "pb/device/device_config.hpp"
#include "test_helpers.hpp"

using namespace pb;
using namespace pb::device;
using Catch::Approx;

namespace {

DeviceProfile flat_profile(double base_ma, double brightness_coeff = 0.0, double cadence = 30.0) {
  DeviceProfile p;
  p.name = "flat";
  p.report_cadence_s = cadence;
  p.model.base_ma = base_ma;
  p.model.brightness_coeff_ma = brightness_coeff;
  p.model.noise_ma = 0.0;
  return p;
}

std::vector<double> capture(SimDevice& d, double seconds) {
  std::vector<double> out(d.ticks_for(seconds));
  d.advance(out.size(), out);
  return out;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double plain_mean(const std::vector<double>& v, std::size_t first, std::size_t last) {
  long double s = 0;
  for (std::size_t i = first; i < last; ++i) s += v[i];
  return static_cast<double>(s / static_cast<long double>(last - first));
}

void settle_idle(SimDevice& d) {
  d.set_brightness(calibration::kSetupBrightness);
  d.set_auto_brightness(false);
  d.set_wifi(d.profile().preferred_band());
  d.set_bluetooth(false);
  d.go_home();
}

}  // namespace

TEST_CASE("with every input at zero the current is the base term") {
  auto d = pbtest::make_device();
  d->set_noise(0.0);
  d->set_brightness(0);
  d->set_cpu_override(0.0);
  d->set_wifi(WifiBand::off);
  d->set_bluetooth(false);
  const auto s = d->step(0.5);
  CHECK(s.current_ma == d->profile().model.base_ma);
}

TEST_CASE("presets cover the test-bed and cadence devices") {
  for (const char* name : {"J7DUO", "IPHONE7", "SMJ337A", "LMX210", "PIXEL3A", "PIXEL4", "PIXEL5"}) {
    CHECK_NOTHROW(find_profile(name));
  }
  CHECK(find_profile("IPHONE7").os == Os::ios);
  CHECK_FALSE(find_profile("IPHONE7").report_cadence_s);
  CHECK(find_profile("PIXEL5").report_cadence_s == Approx(0.60));
  CHECK(pbtest::error_code_of([] { find_profile("NOPE"); }) == Errc::not_found);
  const auto& za = find_network_profile("south-africa");
  CHECK(za.download_mbps == 6.26);
  CHECK(za.upload_mbps == 9.77);
  CHECK(za.latency_ms == 222.04);
  CHECK(builtin_network_profiles().size() == 5);
}

TEST_CASE("current never decreases with brightness or cpu") {
  std::mt19937_64 rng(41);
  for (const auto& p : builtin_profiles()) {
    for (int i = 0; i < 500; ++i) {
      PowerInputs in{uniform_int(rng, 0, 250), uniform(rng, 0.0, 1.0), uniform_int(rng, 0, 1) == 1,
                     static_cast<WifiBand>(uniform_int(rng, 0, 2)), uniform_int(rng, 0, 1) == 1};
      auto brighter = in;
      brighter.brightness = uniform_int(rng, in.brightness, 250);
      auto busier = in;
      busier.cpu_load = uniform(rng, in.cpu_load, 1.0);
      CHECK(p.model.mean_current_ma(brighter) >= p.model.mean_current_ma(in));
      CHECK(p.model.mean_current_ma(busier) >= p.model.mean_current_ma(in));
    }
  }
}

TEST_CASE("energy does not depend on how time is partitioned") {
  std::mt19937_64 rng(43);
  const auto total_ticks = std::uint64_t{5000} * 40;
  auto whole = pbtest::make_device("a", "J7DUO", 9);
  auto parts = pbtest::make_device("a", "J7DUO", 9);
  const std::vector<WorkloadEvent> script{{5.0, workload::SetBrightness{200}}, {12.5, workload::SetCpu{0.4}},
                                          {30.0, workload::SetCpu{std::nullopt}}};
  whole->load_workload(script);
  parts->load_workload(script);
  std::vector<double> samples(total_ticks);
  whole->advance(total_ticks, samples);
  std::uint64_t done = 0;
  while (done < total_ticks) {
    const auto n = std::min<std::uint64_t>(total_ticks - done, uniform_int(rng, 1, 20000));
    parts->advance(n);
    done += n;
  }
  CHECK(parts->integrated_energy_j() == Approx(whole->integrated_energy_j()).epsilon(1e-12));
  const double oracle = plain_mean(samples, 0, samples.size()) * samples.size() / 5000.0 * whole->voltage() / 1000.0;
  CHECK(whole->integrated_energy_j() == Approx(oracle).epsilon(1e-10));
}

TEST_CASE("software reading is the mean of the last closed window") {
  SimDevice d("flat", flat_profile(100.0));
  CHECK_FALSE(d.software_battery_reading());
  d.advance_seconds(45);
  const auto r = d.software_battery_reading();
  REQUIRE(r);
  CHECK(r->current_ma == Approx(100.0));
  CHECK(r->window_start == Approx(0.0));
  CHECK(r->t == Approx(30.0));
}

TEST_CASE("a step inside a window shows up blended") {
  SimDevice d("flat", flat_profile(100.0, 0.4));
  d.set_brightness(0);
  d.load_workload({{10.0, workload::SetBrightness{250}}});
  d.advance_seconds(31);
  const auto r = d.software_battery_reading();
  REQUIRE(r);
  const double before = 100.0;
  const double after = 100.0 + 0.4 * 250;
  CHECK(r->current_ma == Approx((10 * before + 20 * after) / 30.0));
  d.advance_seconds(30);
  CHECK(d.software_battery_reading()->current_ma == Approx(after));
}

TEST_CASE("short cadence profiles update about fifty times in thirty seconds") {
  auto d = pbtest::make_device("p5", "PIXEL5");
  double last = -1.0;
  int updates = 0;
  for (int i = 0; i < 3000; ++i) {
    d->advance_seconds(0.01);
    if (auto r = d->software_battery_reading(); r && r->t != last) {
      last = r->t;
      ++updates;
    }
  }
  CHECK(updates >= 45);
  CHECK(updates <= 55);
}

TEST_CASE("software readings agree with the hardware samples of their window") {
  auto d = pbtest::make_device();
  d->set_noise(0.0);
  d->load_workload({{3.0, workload::SetBrightness{220}}, {17.0, workload::SetCpu{0.7}},
                    {40.0, workload::SetCpu{std::nullopt}}, {55.0, workload::Launch{kVideoPlayer}}});
  const auto samples = capture(*d, 90.0);
  for (int w = 0; w < 3; ++w) {
    const auto first = static_cast<std::size_t>(w) * 150000;
    const double hw = plain_mean(samples, first, first + 150000);
    // peek at the reading for window w by replaying the same device
    auto twin = pbtest::make_device();
    twin->set_noise(0.0);
    twin->load_workload({{3.0, workload::SetBrightness{220}}, {17.0, workload::SetCpu{0.7}},
                         {40.0, workload::SetCpu{std::nullopt}}, {55.0, workload::Launch{kVideoPlayer}}});
    twin->advance(first + 150000);
    const auto r = twin->software_battery_reading();
    REQUIRE(r);
    CHECK(std::abs(r->current_ma - hw) <= 0.005 * hw);
  }
}

TEST_CASE("brightness sweep yields a six level staircase") {
  auto d = pbtest::make_device();
  std::vector<WorkloadEvent> sweep;
  for (int i = 0; i <= 5; ++i) sweep.push_back({60.0 * i, workload::SetBrightness{50 * i}});
  d->load_workload(sweep);
  const auto samples = capture(*d, 360.0);
  std::vector<double> levels;
  for (int i = 0; i < 6; ++i) levels.push_back(plain_mean(samples, i * 300000u, (i + 1) * 300000u));
  CHECK(std::is_sorted(levels.begin(), levels.end()));
  CHECK(std::adjacent_find(levels.begin(), levels.end()) == levels.end());
}

TEST_CASE("identical seed and inputs give identical samples") {
  auto run = [] {
    auto d = pbtest::make_device("d", "LMX210", 77);
    std::vector<double> out;
    auto chunk = capture(*d, 2.0);
    out.insert(out.end(), chunk.begin(), chunk.end());
    const auto icon = d->active_scene().find(TargetAction::launch_app, kNewsReader)->rect.center();
    d->apply_input(automation::Tap{icon.x, icon.y});
    chunk = capture(*d, 2.0);
    out.insert(out.end(), chunk.begin(), chunk.end());
    d->apply_input(automation::Swipe{300, 1000, 300, 400, 300});
    chunk = capture(*d, 2.0);
    out.insert(out.end(), chunk.begin(), chunk.end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("taps, swipes and text update the scene state") {
  auto d = pbtest::make_device();
  const auto& home = d->active_scene();
  const auto icon = home.find(TargetAction::launch_app, kNewsReader)->rect.center();

  SECTION("tap on an icon launches the app") {
    d->apply_input(automation::Tap{icon.x, icon.y});
    CHECK(d->state().foreground == kNewsReader);
  }
  SECTION("tap on empty space changes nothing") {
    Point empty{0, d->screen().height - 1};
    REQUIRE(home.hit(empty) == nullptr);
    const auto delta = d->apply_input(automation::Tap{empty.x, empty.y});
    CHECK(delta.empty());
    CHECK(d->state().foreground == kHome);
  }
  SECTION("text goes to the focused field") {
    d->apply_input(automation::Tap{icon.x, icon.y});
    const auto search = d->active_scene().find_id("search")->rect.center();
    d->apply_input(automation::Tap{search.x, search.y});
    d->apply_input(automation::Text{"hi"});
    bool found = false;
    for (const auto& [key, text] : d->state().fields) found = found || text == "hi";
    CHECK(found);
  }
  SECTION("swipe up in a feed scrolls it") {
    d->apply_input(automation::Tap{icon.x, icon.y});
    const auto* feed = d->active_scene().scrollables.data();
    REQUIRE(feed);
    const auto c = feed->rect.center();
    d->apply_input(automation::Swipe{c.x, c.y + 200, c.x, c.y - 200, 300});
    CHECK(d->state().scroll.at(d->active_scene().id + "/" + feed->id) == 400);
  }
  SECTION("input raises cpu load briefly") {
    const double before = d->cpu_load();
    d->apply_input(automation::Tap{0, d->screen().height - 1});
    CHECK(d->cpu_load() == Approx(before + d->profile().input_bump_cpu));
    d->advance_seconds(0.31);
    CHECK(d->cpu_load() == Approx(before));
  }
  SECTION("out of bounds input is rejected") {
    CHECK(pbtest::error_code_of([&] { d->apply_input(automation::Tap{720, 5}); }) == Errc::bounds);
    CHECK(pbtest::error_code_of([&] { d->apply_input(automation::Swipe{5, 5, 5, 1280, 100}); }) == Errc::bounds);
  }
}

TEST_CASE("frames need mirroring and repeat unchanged content") {
  auto d = pbtest::make_device();
  CHECK(pbtest::error_code_of([&] { d->render_frame(); }) == Errc::unavailable);
  d->set_mirroring(true);
  d->advance_seconds(0.1);
  const auto a = d->render_frame();
  const auto b = d->render_frame();
  CHECK(b.seq == a.seq + 1);
  CHECK(a.cells == b.cells);
  CHECK(a.content_hash == b.content_hash);
}

TEST_CASE("seven minutes of video fit the default stream budget") {
  auto d = pbtest::make_device();
  d->set_mirroring(true);
  const auto icon = d->active_scene().find(TargetAction::launch_app, kVideoPlayer)->rect.center();
  d->apply_input(automation::Tap{icon.x, icon.y});
  const auto play = d->active_scene().find(TargetAction::play_video)->rect.center();
  d->apply_input(automation::Tap{play.x, play.y});
  REQUIRE(d->state().video_playing);
  const auto start = d->tick();
  for (std::uint64_t i = 1; i <= 420 * 30; ++i) {
    d->advance(start + i * 5000 / 30 - d->tick());
    d->render_frame();
  }
  CHECK(d->stream_bytes() <= 52.5e6);
  CHECK(d->stream_bytes() >= 0.9 * 420 * 1e6 / 8);
}

TEST_CASE("idle presets integrate to their calibration energy") {
  for (auto [name, joules] : {std::pair{"J7DUO", calibration::kJ7duoIdleJoules},
                              std::pair{"LMX210", calibration::kLmx210IdleJoules}}) {
    INFO(name);
    auto d = pbtest::make_device("d", name, 3);
    settle_idle(*d);
    d->advance_seconds(calibration::kIdleSeconds);
    CHECK(d->integrated_energy_j() == Approx(joules).epsilon(0.02));
  }
}

TEST_CASE("idle base solver reproduces the shipped presets") {
  CHECK(calibration::solve_idle_base(find_profile("J7DUO"), 359, 600) ==
        Approx(find_profile("J7DUO").model.base_ma).margin(1e-3));
  CHECK(calibration::solve_idle_base(find_profile("LMX210"), 270, 600) ==
        Approx(find_profile("LMX210").model.base_ma).margin(1e-3));
}

TEST_CASE("mirroring moves the video median from 160 to 220 mA") {
  auto d = pbtest::make_device("d", "J7DUO", 5);
  settle_idle(*d);
  const auto icon = d->active_scene().find(TargetAction::launch_app, kVideoPlayer)->rect.center();
  d->apply_input(automation::Tap{icon.x, icon.y});
  const auto play = d->active_scene().find(TargetAction::play_video)->rect.center();
  d->apply_input(automation::Tap{play.x, play.y});
  d->advance_seconds(1.0);
  const double off = median(capture(*d, 20.0));
  d->set_mirroring(true);
  const double on = median(capture(*d, 20.0));
  CHECK(off == Approx(calibration::kVideoMedianMa).epsilon(0.02));
  CHECK(on == Approx(calibration::kVideoMirroredMedianMa).epsilon(0.02));
}

TEST_CASE("scene rectangles must fit the screen") {
  Scene s{"bad", {{"t", {700, 0, 40, 40}, TargetAction::none, ""}}, {}, ""};
  CHECK(pbtest::error_code_of([&] { validate(s, {720, 1280}); }) == Errc::validation);
  CHECK_NOTHROW(validate(home_scene({720, 1280}, {"a", "b", "c", "d", "e"}), {720, 1280}));
}

TEST_CASE("device config documents build devices") {
  const auto doc = nlohmann::json::parse(R"({"devices": [
    {"device_id": "phone-1", "profile": "LMX210", "seed": 4, "noise_ma": 0,
     "workload": [{"t": 1.5, "brightness": 10}]},
    {"device_id": "phone-2", "profile": "IPHONE7",
     "apps": [{"id": "com.example.news", "kind": "generic", "last_used_days_ago": 9}]}]})");
  const auto cfgs = parse_device_configs(doc);
  REQUIRE(cfgs.size() == 2);
  auto a = build_device(cfgs[0]);
  CHECK(a->installed(kBraveBrowser));
  a->advance_seconds(2.0);
  CHECK(a->state().brightness == 10);
  auto b = build_device(cfgs[1]);
  CHECK(b->os() == Os::ios);
  CHECK(b->uninstall_unused(7 * 86400.0) == std::vector<AppId>{kNewsReader});
  CHECK(pbtest::error_code_of([] {
          parse_device_configs(nlohmann::json::parse(R"({"devices": [{"device_id": "x", "profile": "NOPE"}]})"));
        }) == Errc::not_found);
}
