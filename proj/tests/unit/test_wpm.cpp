#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <regex>

#include "device_fixtures.hpp"
#include "pb/common/error.hpp"
#include "pb/trace/analysis.hpp"
#include "pb/wpm/catalog.hpp"
#include "pb/wpm/pipeline.hpp"
#include "pb/wpm/report.hpp"
#include "pb/wpm/stats.hpp"

using namespace pb;
using namespace pb::wpm;
using Catch::Approx;

namespace {

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

// Brute-force nearest rank: smallest x with count(<= x) >= p*n/100.
double rank_oracle(std::vector<double> xs, int p) {
  std::sort(xs.begin(), xs.end());
  for (double x : xs) {
    const auto le = std::count_if(xs.begin(), xs.end(), [&](double y) { return y <= x; });
    if (100 * le >= static_cast<long>(p) * static_cast<long>(xs.size())) return x;
  }
  return xs.back();
}

SyntheticCatalogSpec small_spec() {
  SyntheticCatalogSpec s;
  s.sites = 6;
  s.cert_errors = 1;
  s.seed = 3;
  return s;
}

WpmRequest small_request(std::vector<std::string> urls, int reps = 1) {
  WpmRequest r;
  r.urls = std::move(urls);
  r.device_id = "d1";
  r.browser = device::kChromeBrowser;
  r.reps = reps;
  r.per_page_budget_s = 9.0;
  r.page_slot_s = 12.0;
  return r;
}

std::vector<std::string> first_active(const Catalog& c, std::size_t n) {
  std::vector<std::string> out;
  for (const auto& e : c.entries()) {
    if (e.status == SiteStatus::active && out.size() < n) out.push_back(e.url);
  }
  return out;
}

WpmResult run_fresh(const WpmRequest& r, const Catalog& c) {
  auto ctl = pbtest::make_controller();
  return run(*ctl, r, c);
}

}  // namespace

TEST_CASE("median") {
  CHECK(*median(v({10, 12, 14})) == 12);
  CHECK(*median(v({14, 10, 12})) == 12);
  CHECK(*median(v({10, 14})) == 12);
  CHECK(*median(v({9.7})) == 9.7);
  CHECK(*median(v({4, 1, 3, 2})) == 2.5);
  CHECK_FALSE(median(std::vector<double>{}).has_value());
}

TEST_CASE("nearest-rank cpu percentiles") {
  SECTION("ten evenly spaced samples") {
    const auto p = *cpu_percentiles(v({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}));
    CHECK(p.p25 == 0.3);
    CHECK(p.p50 == 0.5);
    CHECK(p.p75 == 0.8);
  }
  SECTION("constant") { CHECK(*cpu_percentiles(v({0.4, 0.4, 0.4, 0.4})) == CpuPercentiles{0.4, 0.4, 0.4}); }
  SECTION("single sample") { CHECK(*cpu_percentiles(v({0.7})) == CpuPercentiles{0.7, 0.7, 0.7}); }
  SECTION("empty has no percentiles") { CHECK_FALSE(cpu_percentiles(std::vector<double>{}).has_value()); }
  SECTION("matches the definition on random samples") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 300; ++round) {
      std::vector<double> xs(1 + rng() % 40);
      for (auto& x : xs) x = static_cast<double>(rng() % 1000) / 1000.0;
      for (int p : {1, 25, 50, 75, 99, 100}) CHECK(nearest_rank(xs, p) == rank_oracle(xs, p));
    }
  }
}

TEST_CASE("host and site label") {
  CHECK(host_of("https://www.Example.com:443/a?b") == "example.com");
  CHECK(host_of("news.fr") == "news.fr");
  CHECK(site_label("news.com") == "news");
  CHECK(site_label("news.fr") == "news");
  CHECK(site_label("https://www.bbc.co.uk/news") == "bbc");
  CHECK(site_label("a.b.example.org") == "example");
}

TEST_CASE("prefilter partitions") {
  SECTION("ten sites with two timeouts and a certificate error") {
    SyntheticCatalogSpec s;
    s.sites = 10;
    s.timeouts = 2;
    s.cert_errors = 1;
    const auto c = synthetic_catalog(s);
    const auto r = prefilter(c.catalog.urls(), c.catalog, {c.denylist});
    CHECK(r.count(SiteStatus::active) == 7);
    CHECK(r.count(SiteStatus::timeout) == 2);
    CHECK(r.count(SiteStatus::cert_error) == 1);
    CHECK(r.count(SiteStatus::filtered) == 0);
  }
  SECTION("the more popular twin under another TLD is kept") {
    Catalog c({{"a.com"}, {"b.com"}, {"a.fr"}});
    auto r = prefilter({"a.com", "b.com", "a.fr"}, c);
    CHECK(r.active() == std::vector<std::string>{"a.com", "b.com"});
    CHECK(r.partitions[SiteStatus::filtered] == std::vector<std::string>{"a.fr"});
    r = prefilter({"a.fr", "a.com"}, c);
    CHECK(r.partitions[SiteStatus::filtered] == std::vector<std::string>{"a.com"});
  }
  SECTION("empty list") {
    const auto r = prefilter({}, Catalog{});
    for (const auto& [status, urls] : r.partitions) CHECK(urls.empty());
    CHECK(r.counts()["active"] == 0);
  }
  SECTION("unknown sites, repeats, denylist, slow and failing responses") {
    SiteCatalogEntry slow{"slow.com"};
    slow.response_s = 31.0;
    SiteCatalogEntry gone{"gone.com"};
    gone.http_status = 404;
    SiteCatalogEntry moved{"moved.com"};
    moved.http_status = 301;
    Catalog c({{"ok.com"}, slow, gone, moved, {"adult.com"}});
    auto r = prefilter({"ok.com", "ok.com", "nowhere.net", "slow.com", "gone.com", "moved.com", "adult.com"}, c,
                       {{"adult.com"}, 30.0});
    CHECK(r.active() == std::vector<std::string>{"ok.com", "moved.com"});
    CHECK(r.partitions[SiteStatus::filtered] == std::vector<std::string>{"ok.com", "adult.com"});
    CHECK(r.partitions[SiteStatus::timeout] == std::vector<std::string>{"nowhere.net", "slow.com"});
    CHECK(r.partitions[SiteStatus::http_error] == std::vector<std::string>{"gone.com"});
  }
  SECTION("twenty-site catalog counts follow its construction") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SyntheticCatalogSpec s;
      s.sites = 20;
      s.cert_errors = 2;
      s.timeouts = 2;
      s.http_errors = 1;
      s.duplicate_tlds = 2;
      s.denylisted = 1;
      s.seed = seed;
      const auto c = synthetic_catalog(s);
      REQUIRE(c.catalog.entries().size() == 20);
      const auto r = prefilter(c.catalog.urls(), c.catalog, {c.denylist});
      CHECK(r.count(SiteStatus::cert_error) == 2);
      CHECK(r.count(SiteStatus::timeout) == 2);
      CHECK(r.count(SiteStatus::http_error) == 1);
      CHECK(r.count(SiteStatus::filtered) == 3);
      CHECK(r.count(SiteStatus::active) == 12);
    }
  }
  SECTION("impossible construction") {
    SyntheticCatalogSpec s;
    s.sites = 3;
    s.timeouts = 4;
    CHECK_THROWS_AS(synthetic_catalog(s), Error);
  }
}

TEST_CASE("catalog JSON round trip") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  const nlohmann::json j = c.entries();
  const Catalog back(j.get<std::vector<SiteCatalogEntry>>());
  CHECK(nlohmann::json(back.entries()) == j);
  CHECK(j[0].contains("page_bytes"));
  CHECK_THROWS_AS(Catalog({{"x.com"}, {"x.com"}}), Error);
}

TEST_CASE("request validation and JSON") {
  auto r = small_request({"a.com"});
  CHECK_NOTHROW(r.validate());
  auto bad = r;
  bad.reps = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = r;
  bad.per_page_budget_s = 13.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = r;
  bad.per_page_budget_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  const nlohmann::json j = r;
  CHECK(j.get<WpmRequest>().urls == r.urls);
  CHECK(nlohmann::json(j.get<WpmRequest>()) == j);
  const auto defaults = nlohmann::json{{"urls", {"a.com"}}, {"device_id", "d1"}, {"browser", "b"}}.get<WpmRequest>();
  CHECK(defaults.reps == 3);
  CHECK(defaults.per_page_budget_s == 30.0);
  CHECK(defaults.page_slot_s == 120.0);
  CHECK(defaults.automation == Automation::simple_load);
  CHECK_THROWS_AS((nlohmann::json{{"urls", {"a"}}, {"device_id", "d1"}, {"browser", "b"}, {"automation", "x"}}
                       .get<WpmRequest>()),
                  Error);
}

TEST_CASE("run follows the pipeline order") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  const auto urls = first_active(c, 2);

  SECTION("one rep") {
    const auto res = run_fresh(small_request(urls, 1), c);
    CHECK(res.ok);
    CHECK(res.steps == std::vector<std::string>{"node_setup", "device_setup", "browser_setup", "run_test", "cleanup"});
  }
  SECTION("three reps") {
    const auto res = run_fresh(small_request(urls, 3), c);
    std::string log;
    for (const auto& s : res.steps) log += s + " ";
    CHECK(std::regex_match(log, std::regex("node_setup device_setup (browser_setup run_test ){3}cleanup ")));
    CHECK(res.trace_ids.size() == 1);
  }
}

TEST_CASE("per-load energy, conservation and medians") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  const auto urls = first_active(c, 3);
  auto ctl = pbtest::make_controller();
  const auto res = run(*ctl, small_request(urls, 3), c);
  REQUIRE(res.ok);
  REQUIRE(res.total_energy_j);
  const auto trace = ctl->find_trace(res.trace_ids.at(0));
  CHECK(*res.total_energy_j == trace::energy(*trace));

  double sliced = 0.0;
  for (const auto& u : res.urls) {
    REQUIRE(u.loads.size() == 3);
    CHECK_FALSE(u.failed);
    CHECK(u.successful_reps == 3);
    std::vector<double> e;
    std::vector<double> bytes;
    for (const auto& l : u.loads) {
      CHECK(l.ok);
      CHECK(l.window_end - l.window_start == Approx(9.0).margin(1e-3));
      CHECK(l.cpu_samples.size() == 3);
      CHECK(*l.energy_j > 0.0);
      CHECK(l.page_bytes > 0.0);
      sliced += *l.energy_j;
      e.push_back(*l.energy_j);
      bytes.push_back(l.page_bytes);
    }
    std::sort(e.begin(), e.end());
    std::sort(bytes.begin(), bytes.end());
    CHECK(*u.median_energy_j == e[1]);
    CHECK(*u.median_page_bytes == bytes[1]);
  }
  CHECK(sliced + *res.idle_energy_j == Approx(*res.total_energy_j).epsilon(1e-3));
  CHECK(*res.idle_energy_j > 0.0);
  CHECK(ctl->safe_state());
  CHECK(ctl->invariant_violations().empty());
}

TEST_CASE("loads of unreachable sites fail and are excluded") {
  Catalog c({{"good.com", SiteStatus::active, 200, 0.3, device::synthetic_page_profile("good.com", 1)},
             {"bad.com", SiteStatus::cert_error, 200, 0.3, device::synthetic_page_profile("bad.com", 1)}});
  const auto res = run_fresh(small_request({"good.com", "bad.com", "nowhere.org"}, 2), c);
  CHECK(res.ok);
  CHECK_FALSE(res.urls[0].failed);
  for (std::size_t i : {1u, 2u}) {
    CHECK(res.urls[i].failed);
    CHECK(res.urls[i].successful_reps == 0);
    CHECK_FALSE(res.urls[i].median_energy_j);
    CHECK_FALSE(res.urls[i].cpu);
    CHECK(res.urls[i].loads.at(0).error == "page did not load");
  }
}

TEST_CASE("aggregate over partial successes") {
  UrlResult u{"x.com", {}, 0, false, {}, {}, {}};
  LoadMetrics a;
  a.energy_j = 10.0;
  a.page_bytes = 100;
  a.cpu_samples = {0.2, 0.4};
  LoadMetrics b = a;
  b.energy_j = 14.0;
  b.cpu_samples = {0.6};
  LoadMetrics failed = a;
  failed.ok = false;
  failed.energy_j = 1000.0;
  u.loads = {a, failed, b};
  aggregate(u);
  CHECK(u.successful_reps == 2);
  CHECK(*u.median_energy_j == 12.0);
  CHECK(u.cpu->p50 == Approx(0.4));
  u.loads = {failed};
  aggregate(u);
  CHECK(u.failed);
  CHECK_FALSE(u.median_energy_j);
}

TEST_CASE("runs are deterministic") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  const auto r = small_request(first_active(c, 2), 2);
  CHECK(nlohmann::json(run_fresh(r, c)) == nlohmann::json(run_fresh(r, c)));
}

TEST_CASE("visual runs cost more per URL") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  auto r = small_request(first_active(c, 2), 1);
  const auto plain = run_fresh(r, c);
  r.visual = true;
  auto ctl = pbtest::make_controller();
  const auto visual = run(*ctl, r, c);
  for (std::size_t i = 0; i < r.urls.size(); ++i) {
    CHECK(*visual.urls[i].median_energy_j > *plain.urls[i].median_energy_j);
    CHECK(visual.urls[i].cpu->p50 > plain.urls[i].cpu->p50);
  }
  CHECK_FALSE(ctl->link("d1").mirroring);
}

TEST_CASE("interact mode scrolls the page") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  auto r = small_request(first_active(c, 1), 1);
  r.automation = Automation::interact;
  auto ctl = pbtest::make_controller();
  const auto res = run(*ctl, r, c);
  CHECK(res.ok);
  r.automation = Automation::simple_load;
  const auto plain = run_fresh(r, c);
  CHECK(*res.urls[0].median_energy_j > *plain.urls[0].median_energy_j);
}

TEST_CASE("adding a URL never lowers the run energy") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  const auto urls = first_active(c, 4);
  double prev = 0.0;
  for (std::size_t n = 1; n <= urls.size(); ++n) {
    const auto res = run_fresh(small_request({urls.begin(), urls.begin() + static_cast<std::ptrdiff_t>(n)}), c);
    CHECK(*res.total_energy_j >= prev);
    prev = *res.total_energy_j;
  }
}

TEST_CASE("a failing step still runs cleanup") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  for (const char* failing : {"meter_on", "brightness"}) {
    auto ctl = pbtest::make_controller();
    ctl->set_fault_hook([&](std::string_view step) {
      if (step == failing) throw Error(Errc::io, std::string("injected ") + failing);
    });
    const auto res = run(*ctl, small_request(first_active(c, 2), 3), c);
    CHECK_FALSE(res.ok);
    CHECK(res.steps.back() == "cleanup");
    CHECK(std::count(res.steps.begin(), res.steps.end(), "run_test") == 0);
    for (const auto& u : res.urls) CHECK(u.failed);
    ctl->set_fault_hook({});
    CHECK(ctl->safe_state());
  }
  auto ctl = pbtest::make_controller();
  CHECK_THROWS_AS(run(*ctl, [] {
                    auto r = small_request({"a.com"});
                    r.device_id = "zz";
                    return r;
                  }(), c),
                  Error);
}

TEST_CASE("report") {
  const auto c = synthetic_catalog(small_spec()).catalog;
  auto urls = first_active(c, 2);
  urls.push_back("missing.example");
  auto ctl = pbtest::make_controller();
  const auto res = run(*ctl, small_request(urls, 1), c);
  const auto trace = ctl->find_trace(res.trace_ids.at(0));
  const auto j = report_json(res, trace.get());
  CHECK(j["series"]["energy_per_url"].size() == 2);
  CHECK(j["series"]["cpu_boxes"].size() == 2);
  CHECK(j["series"]["period_s"] == 0.1);
  const auto& load = j["series"]["current"][0]["loads"][0];
  REQUIRE(load["t"].size() == 90);
  CHECK(load["current_ma"].size() == 90);
  for (std::size_t i = 1; i < load["t"].size(); ++i) {
    CHECK(load["t"][i].get<double>() - load["t"][i - 1].get<double>() == Approx(0.1));
  }
  CHECK(j["result"].get<WpmResult>().urls.size() == 3);
  CHECK(nlohmann::json(j["result"].get<WpmResult>()) == j["result"]);
  CHECK(nlohmann::json::parse(report(res, trace.get(), "json")) == j);
  const auto csv = report(res, nullptr, "csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK_THROWS_AS(report(res, nullptr, "xml"), Error);
}
