#pragma once

// Small file-format utilities shared by the CLI and the writers: shortest
// round-trip float text, atomic file writes, content hashes, a sectioned
// key=value config reader, and the run manifest.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "persalign/errors.hpp"

namespace persalign {

// Up to 17 significant digits: parsing the text recovers the double exactly.
std::string format_double(double v);

// FNV-1a 64-bit over raw bytes.  Integrity fingerprint for manifests, not a
// cryptographic hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

// Write to <path>.tmp, then rename over <path>, so readers never observe a
// half-written file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);  // throws RuntimeFailure

// Sectioned key=value text config:
//
//   [online]
//   horizon = 50000    # comments with '#'
//
// Unknown sections or keys are rejected by the callers, not here.
struct ConfigFile {
  // section -> key -> value, plus the order keys were first seen in.
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;  // throws InvalidConfig
  long get_long(const std::string& section, const std::string& key,
                long fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
};

ConfigFile parse_config(const std::string& text);
ConfigFile parse_config_file(const std::string& path);

// ISO-8601 UTC timestamp.
std::string timestamp_utc();

struct ManifestFile {
  std::string name;
  std::string hash;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_text;  // fully resolved config snapshot
  std::string instance_path;
  std::string instance_hash;
  std::vector<std::uint64_t> seeds;
  std::string started_at;
  std::string finished_at;
  std::vector<ManifestFile> files;
};

std::string manifest_to_json(const RunManifest& m);

}  // namespace persalign
