#include "persalign/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace persalign {

std::string format_double(double v) {
  if (std::isnan(v)) throw NumericalFailure("refusing to serialize NaN");
  if (std::isinf(v)) throw NumericalFailure("refusing to serialize Inf");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hash_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw RuntimeFailure("short write: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeFailure("rename failed: " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto sit = sections.find(section);
  return sit != sections.end() && sit->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  auto sit = sections.find(section);
  if (sit == sections.end()) return fallback;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? fallback : kit->second;
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get(section, key, "");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw InvalidConfig("config field " + section + "." + key +
                        ": not a number: '" + text + "'");
  }
  return v;
}

long ConfigFile::get_long(const std::string& section, const std::string& key,
                          long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get(section, key, "");
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw InvalidConfig("config field " + section + "." + key +
                        ": not an integer: '" + text + "'");
  }
  return v;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get(section, key, "");
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidConfig("config field " + section + "." + key +
                      ": not a boolean: '" + text + "'");
}

ConfigFile parse_config(const std::string& text) {
  ConfigFile cfg;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw InvalidConfig("config line " + std::to_string(lineno) +
                            ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          ": empty key");
    }
    if (section.empty()) {
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          ": key outside any [section]");
    }
    cfg.sections[section][key] = value;
  }
  return cfg;
}

ConfigFile parse_config_file(const std::string& path) {
  return parse_config(read_file(path));
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  std::string out = "{\n  \"schema_version\": 1,\n";
  out += "  \"command\": \"" + json_escape(m.command) + "\",\n";
  out += "  \"started_at\": \"" + m.started_at + "\",\n";
  out += "  \"finished_at\": \"" + m.finished_at + "\",\n";
  out += "  \"instance_path\": \"" + json_escape(m.instance_path) + "\",\n";
  out += "  \"instance_hash\": \"" + m.instance_hash + "\",\n";
  out += "  \"seeds\": [";
  for (std::size_t i = 0; i < m.seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(m.seeds[i]);
  }
  out += "],\n";
  out += "  \"config\": \"" + json_escape(m.config_text) + "\",\n";
  out += "  \"files\": [";
  for (std::size_t i = 0; i < m.files.size(); ++i) {
    if (i) out += ',';
    out += "\n    {\"name\": \"" + json_escape(m.files[i].name) +
           "\", \"hash\": \"" + m.files[i].hash +
           "\", \"bytes\": " + std::to_string(m.files[i].bytes) + "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

}  // namespace persalign
