#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pb/device/page_load.hpp"

namespace pb::wpm {

enum class SiteStatus { active, cert_error, timeout, http_error, filtered };

NLOHMANN_JSON_SERIALIZE_ENUM(SiteStatus, {{SiteStatus::active, "active"},
                                          {SiteStatus::cert_error, "cert_error"},
                                          {SiteStatus::timeout, "timeout"},
                                          {SiteStatus::http_error, "http_error"},
                                          {SiteStatus::filtered, "filtered"}})

/// What a landing-page GET against the site would return.
struct SiteCatalogEntry {
  std::string url;
  SiteStatus status = SiteStatus::active;
  int http_status = 200;
  double response_s = 0.5;  ///< time to first response
  device::PageLoadProfile profile;

  std::uint64_t page_bytes() const noexcept { return profile.page_bytes(); }
};

void to_json(nlohmann::json& j, const SiteCatalogEntry& e);
void from_json(const nlohmann::json& j, SiteCatalogEntry& e);

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<SiteCatalogEntry> entries);

  const std::vector<SiteCatalogEntry>& entries() const noexcept { return entries_; }
  const SiteCatalogEntry* find(std::string_view url) const;
  std::vector<std::string> urls() const;
  /// Load profile for active sites; nothing for every other URL.
  device::PageResolver resolver() const;

 private:
  std::vector<SiteCatalogEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// JSON list of entries.
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);

struct SyntheticCatalogSpec {
  int sites = 20;  ///< total entries, duplicates and failures included
  int cert_errors = 0;
  int timeouts = 0;
  int http_errors = 0;
  int duplicate_tlds = 0;  ///< ".fr" twins of earlier ".com" sites, listed after them
  int denylisted = 0;      ///< sites whose host appears in denylist()
  std::uint64_t seed = 1;
};

struct SyntheticCatalog {
  Catalog catalog;
  std::set<std::string> denylist;
};

/// Sites in popularity order. Failure kinds are placed on distinct, seeded
/// positions among the non-duplicate, non-denylisted sites.
SyntheticCatalog synthetic_catalog(const SyntheticCatalogSpec& spec);

/// Host without scheme, port, path and a leading "www.".
std::string host_of(std::string_view url);
/// Name under the public suffix: "news" for news.com, news.fr, news.co.uk.
std::string site_label(std::string_view url);

struct PrefilterOptions {
  std::set<std::string> denylist;  ///< hosts
  double probe_budget_s = 30.0;
};

struct PrefilterResult {
  std::map<SiteStatus, std::vector<std::string>> partitions;  ///< input order kept

  const std::vector<std::string>& active() const;
  std::size_t count(SiteStatus s) const;
  nlohmann::json counts() const;
};

/// Classifies every URL: denylisted hosts, repeated URLs and less popular
/// twins of a site under another TLD (later in the list) are filtered; the
/// rest get one probe. URLs missing from the catalog count as timeouts.
PrefilterResult prefilter(const std::vector<std::string>& urls, const Catalog& catalog,
                          const PrefilterOptions& options = {});

}  // namespace pb::wpm
