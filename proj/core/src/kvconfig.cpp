#include "finelt/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finelt {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

uint64_t fnv1a64(std::string_view data) {
  uint64_t hash = 0xCBF29CE484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001B3ull;
  }
  return hash;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig config;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    std::string_view line = nl == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const size_t comment = line.find('#');
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    const std::string stripped = trim(line);
    if (stripped.empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty key");
    }
    config.values_[key] = value;
    if (nl == std::string_view::npos) break;
  }
  return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool KeyValueConfig::contains(const std::string& key) const {
  return values_.count(key) > 0;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       std::string fallback) const {
  auto v = get(key);
  return v.has_value() ? *v : std::move(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  try {
    size_t consumed = 0;
    const double parsed = std::stod(*v, &consumed);
    if (consumed != v->size()) throw std::invalid_argument("trailing characters");
    return parsed;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": not a number: " + *v);
  }
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  int64_t parsed = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw std::runtime_error("config key " + key + ": not an integer: " + *v);
  }
  return parsed;
}

uint64_t KeyValueConfig::get_uint(const std::string& key, uint64_t fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  uint64_t parsed = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
  if (ec != std::errc{} || ptr != v->data() + v->size()) {
    throw std::runtime_error("config key " + key +
                             ": not a non-negative integer: " + *v);
  }
  return parsed;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw std::runtime_error("config key " + key + ": not a boolean: " + *v);
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, std::vector<std::string> fallback) const {
  auto v = get(key);
  if (!v.has_value()) return fallback;
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= v->size()) {
    const size_t bar = v->find('|', pos);
    const std::string item =
        trim(bar == std::string::npos ? std::string_view(*v).substr(pos)
                                      : std::string_view(*v).substr(pos, bar - pos));
    if (!item.empty()) out.push_back(item);
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  return out;
}

void KeyValueConfig::set(const std::string& key, std::string value) {
  values_[key] = std::move(value);
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (known.count(key) == 0) {
      throw std::runtime_error("unknown config key: " + key);
    }
  }
}

std::string KeyValueConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

uint64_t KeyValueConfig::hash() const { return fnv1a64(canonical()); }

}  // namespace finelt
