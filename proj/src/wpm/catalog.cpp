#include "pb/wpm/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "pb/common/error.hpp"
#include "pb/common/random.hpp"

namespace pb::wpm {

namespace {

std::vector<std::string> split_labels(const std::string& host) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= host.size()) {
    const auto dot = host.find('.', start);
    const auto end = dot == std::string::npos ? host.size() : dot;
    out.push_back(host.substr(start, end - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return out;
}

bool second_level_suffix(const std::string& label) {
  static const std::set<std::string> kLabels{"co", "com", "org", "net", "ac", "gov", "edu"};
  return kLabels.count(label) != 0;
}

// One GET against the landing page, bounded by the probe budget.
SiteStatus probe(const SiteCatalogEntry* e, double budget_s) {
  if (e == nullptr) return SiteStatus::timeout;
  switch (e->status) {
    case SiteStatus::filtered:
    case SiteStatus::cert_error:
    case SiteStatus::timeout:
      return e->status;
    case SiteStatus::http_error:
      return SiteStatus::http_error;
    case SiteStatus::active:
      break;
  }
  if (!(e->response_s <= budget_s)) return SiteStatus::timeout;
  if (e->http_status >= 400 && e->http_status < 600) return SiteStatus::http_error;
  return SiteStatus::active;
}

}  // namespace

void to_json(nlohmann::json& j, const SiteCatalogEntry& e) {
  j = {{"url", e.url},
       {"status", e.status},
       {"http_status", e.http_status},
       {"response_s", e.response_s},
       {"page_bytes", e.page_bytes()},
       {"profile", e.profile}};
}

void from_json(const nlohmann::json& j, SiteCatalogEntry& e) {
  e.url = j.at("url").get<std::string>();
  if (e.url.empty()) throw Error(Errc::validation, "catalog entry without url");
  e.status = j.value("status", SiteStatus::active);
  e.http_status = j.value("http_status", 200);
  e.response_s = j.value("response_s", 0.5);
  e.profile = j.value("profile", device::PageLoadProfile{});
}

Catalog::Catalog(std::vector<SiteCatalogEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!index_.emplace(entries_[i].url, i).second) {
      throw Error(Errc::validation, "duplicate catalog url '" + entries_[i].url + "'");
    }
  }
}

const SiteCatalogEntry* Catalog::find(std::string_view url) const {
  auto it = index_.find(url);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::vector<std::string> Catalog::urls() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.url);
  return out;
}

device::PageResolver Catalog::resolver() const {
  // copies the active profiles so the resolver outlives the catalog
  auto active = std::make_shared<std::map<std::string, device::PageLoadProfile>>();
  for (const auto& e : entries_) {
    if (e.status == SiteStatus::active && probe(&e, 1e300) == SiteStatus::active) active->emplace(e.url, e.profile);
  }
  return [active](const std::string& url) -> std::optional<device::PageLoadProfile> {
    auto it = active->find(url);
    if (it == active->end()) return std::nullopt;
    return it->second;
  };
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open catalog " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::validation, std::string("catalog is not JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(Errc::validation, "catalog must be a JSON list");
  return Catalog(doc.get<std::vector<SiteCatalogEntry>>());
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write catalog " + path.string());
  out << nlohmann::json(catalog.entries()).dump(1) << '\n';
}

SyntheticCatalog synthetic_catalog(const SyntheticCatalogSpec& spec) {
  const int base = spec.sites - spec.duplicate_tlds;
  const int failing = spec.cert_errors + spec.timeouts + spec.http_errors;
  if (spec.sites < 0 || spec.cert_errors < 0 || spec.timeouts < 0 || spec.http_errors < 0 ||
      spec.duplicate_tlds < 0 || spec.denylisted < 0) {
    throw Error(Errc::validation, "catalog counts must be non-negative");
  }
  if (spec.duplicate_tlds > base || failing + spec.denylisted > base) {
    throw Error(Errc::validation, "catalog counts exceed the number of sites");
  }

  std::mt19937_64 rng(spec.seed);
  static const char* kTlds[] = {".com", ".org", ".net", ".com", ".io"};
  std::vector<SiteCatalogEntry> entries;
  for (int i = 0; i < base; ++i) {
    SiteCatalogEntry e;
    char name[32];
    std::snprintf(name, sizeof name, "site%03d", i + 1);
    e.url = std::string(name) + kTlds[i % 5];
    e.response_s = uniform(rng, 0.2, 2.5);
    e.profile = device::synthetic_page_profile(e.url, spec.seed);
    entries.push_back(std::move(e));
  }

  // Fisher-Yates by hand: std::shuffle differs between library vendors.
  std::vector<int> order(static_cast<std::size_t>(base));
  std::iota(order.begin(), order.end(), 0);
  for (int i = base - 1; i > 0; --i) std::swap(order[i], order[uniform_int(rng, 0, i)]);

  SyntheticCatalog out;
  std::size_t k = 0;
  auto take = [&](int count, auto&& mark) {
    for (int i = 0; i < count; ++i) mark(entries[static_cast<std::size_t>(order[k++])]);
  };
  take(spec.cert_errors, [](SiteCatalogEntry& e) { e.status = SiteStatus::cert_error; });
  take(spec.timeouts, [&](SiteCatalogEntry& e) {
    e.status = SiteStatus::timeout;
    e.response_s = uniform(rng, 31.0, 90.0);
  });
  take(spec.http_errors, [&](SiteCatalogEntry& e) {
    static const int kCodes[] = {403, 404, 500, 503};
    e.status = SiteStatus::http_error;
    e.http_status = kCodes[uniform_int(rng, 0, 3)];
  });
  take(spec.denylisted, [&](SiteCatalogEntry& e) { out.denylist.insert(host_of(e.url)); });

  for (int i = 0; i < spec.duplicate_tlds; ++i) {
    SiteCatalogEntry twin = entries[static_cast<std::size_t>(i)];
    twin.url = site_label(twin.url) + ".fr";
    twin.status = SiteStatus::active;
    twin.http_status = 200;
    twin.response_s = uniform(rng, 0.2, 2.5);
    twin.profile = device::synthetic_page_profile(twin.url, spec.seed);
    entries.push_back(std::move(twin));
  }
  out.catalog = Catalog(std::move(entries));
  return out;
}

std::string host_of(std::string_view url) {
  std::string_view s = url;
  if (auto p = s.find("://"); p != std::string_view::npos) s.remove_prefix(p + 3);
  if (auto p = s.find_first_of("/?#"); p != std::string_view::npos) s = s.substr(0, p);
  if (auto p = s.find('@'); p != std::string_view::npos) s.remove_prefix(p + 1);
  if (auto p = s.rfind(':'); p != std::string_view::npos) s = s.substr(0, p);
  std::string host(s);
  std::transform(host.begin(), host.end(), host.begin(), [](unsigned char c) { return std::tolower(c); });
  if (host.rfind("www.", 0) == 0) host.erase(0, 4);
  return host;
}

std::string site_label(std::string_view url) {
  const auto labels = split_labels(host_of(url));
  const std::size_t n = labels.size();
  if (n >= 3 && labels[n - 1].size() == 2 && second_level_suffix(labels[n - 2])) return labels[n - 3];
  if (n >= 2) return labels[n - 2];
  return labels.front();
}

const std::vector<std::string>& PrefilterResult::active() const {
  static const std::vector<std::string> empty;
  auto it = partitions.find(SiteStatus::active);
  return it == partitions.end() ? empty : it->second;
}

std::size_t PrefilterResult::count(SiteStatus s) const {
  auto it = partitions.find(s);
  return it == partitions.end() ? 0 : it->second.size();
}

nlohmann::json PrefilterResult::counts() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto s : {SiteStatus::active, SiteStatus::cert_error, SiteStatus::timeout, SiteStatus::http_error,
                 SiteStatus::filtered}) {
    j[nlohmann::json(s).get<std::string>()] = count(s);
  }
  return j;
}

PrefilterResult prefilter(const std::vector<std::string>& urls, const Catalog& catalog,
                          const PrefilterOptions& options) {
  PrefilterResult r;
  for (auto s : {SiteStatus::active, SiteStatus::cert_error, SiteStatus::timeout, SiteStatus::http_error,
                 SiteStatus::filtered}) {
    r.partitions[s];
  }
  std::set<std::string> seen_urls;
  std::set<std::string> seen_labels;
  for (const auto& url : urls) {
    SiteStatus status;
    const bool repeated = !seen_urls.insert(url).second;
    const bool twin = !seen_labels.insert(site_label(url)).second;
    if (repeated || twin || options.denylist.count(host_of(url))) {
      status = SiteStatus::filtered;
    } else {
      try {
        status = probe(catalog.find(url), options.probe_budget_s);
      } catch (...) {
        status = SiteStatus::timeout;
      }
    }
    r.partitions[status].push_back(url);
  }
  return r;
}

}  // namespace pb::wpm
