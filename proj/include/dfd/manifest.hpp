#pragma once

// Dataset manifest: UTF-8, one JSON object per line with fields exactly
// id/path/label/source/split. Paths are relative to the manifest's directory.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dfd {

struct ManifestRecord {
  std::string id;
  std::string path;
  int label = 0;  // 1 = real, 0 = fake
  std::string source;  // real-orig | real-offline-aug | fake-method-k | fake-generated
  std::string split;   // train | val
};

inline bool source_is_real(const std::string& source) {
  return source.rfind("real", 0) == 0;
}

inline std::string manifest_line(const ManifestRecord& r) {
  // fixed field order; ids/paths are machine-generated ASCII
  std::ostringstream os;
  os << "{\"id\":\"" << r.id << "\",\"path\":\"" << r.path << "\",\"label\":" << r.label
     << ",\"source\":\"" << r.source << "\",\"split\":\"" << r.split << "\"}";
  return os.str();
}

inline void validate_record(const ManifestRecord& r) {
  if (r.id.empty()) throw std::runtime_error("manifest: empty id");
  if (r.label != 0 && r.label != 1)
    throw std::runtime_error("manifest: bad label for id " + r.id);
  if ((r.label == 1) != source_is_real(r.source))
    throw std::runtime_error("manifest: label/source mismatch for id " + r.id);
  if (r.split != "train" && r.split != "val")
    throw std::runtime_error("manifest: bad split for id " + r.id);
}

inline void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& r : records) os << manifest_line(r) << "\n";
  if (!os) throw std::runtime_error("manifest write failed: " + path);
}

inline std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read manifest: " + path);
  std::vector<ManifestRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error("manifest: bad JSON at " + path + ":" + std::to_string(lineno));
    ManifestRecord r;
    r.id = j.at("id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.label = j.at("label").get<int>();
    r.source = j.at("source").get<std::string>();
    r.split = j.at("split").get<std::string>();
    validate_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace dfd
