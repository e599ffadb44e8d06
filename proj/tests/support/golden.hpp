#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbtest {

using ReportBytes = std::vector<std::uint8_t>;
using GoldenCorpus = std::map<std::string, std::vector<ReportBytes>>;

inline GoldenCorpus load_golden(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open golden corpus " + path);
  GoldenCorpus corpus;
  std::string line;
  std::string current;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      current = line.substr(1, line.size() - 2);
      corpus[current];
      continue;
    }
    std::istringstream words(line);
    ReportBytes report;
    std::string byte;
    while (words >> byte) report.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
    corpus.at(current).push_back(report);
  }
  return corpus;
}

template <class Report>
std::vector<ReportBytes> as_bytes(const std::vector<Report>& reports) {
  std::vector<ReportBytes> out;
  for (const auto& r : reports) {
    const auto b = r.bytes();
    out.emplace_back(b.begin(), b.end());
  }
  return out;
}

}  // namespace pbtest
