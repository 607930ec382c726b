#include "oae/kv_config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "oae/errors.h"

namespace oae {
namespace {

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

double ParseDouble(std::string_view text, std::string_view what) {
  const std::string_view t = Trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid number for " + std::string(what) + ": '" + std::string(t) + "'");
  }
  return value;
}

std::vector<double> ParseDoubleList(std::string_view text, std::string_view what) {
  std::vector<double> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) out.push_back(ParseDouble(token, what));
  return out;
}

std::string FormatDouble(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

KeyValueDoc KeyValueDoc::Parse(std::string_view text) {
  KeyValueDoc doc;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = Trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = Trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    doc.Add(std::string(key), std::string(Trim(line.substr(eq + 1))));
  }
  return doc;
}

KeyValueDoc KeyValueDoc::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string KeyValueDoc::Serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueDoc::Add(std::string key, std::string value) {
  entries_.emplace_back(std::move(key), std::move(value));
}

void KeyValueDoc::Set(const std::string& key, std::string value) {
  std::erase_if(entries_, [&](const auto& e) { return e.first == key; });
  Add(key, std::move(value));
}

bool KeyValueDoc::Has(std::string_view key) const { return Get(key).has_value(); }

std::optional<std::string> KeyValueDoc::Get(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

std::vector<std::string> KeyValueDoc::GetAll(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

double KeyValueDoc::GetDouble(std::string_view key, double fallback) const {
  const auto v = Get(key);
  return v ? ParseDouble(*v, key) : fallback;
}

int KeyValueDoc::GetInt(std::string_view key, int fallback) const {
  const auto v = Get(key);
  if (!v) return fallback;
  const std::string_view t = Trim(*v);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + *v + "'");
  }
  return value;
}

bool KeyValueDoc::GetBool(std::string_view key, bool fallback) const {
  const auto v = Get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("invalid boolean for " + std::string(key) + ": '" + *v + "'");
}

std::string KeyValueDoc::GetString(std::string_view key, std::string fallback) const {
  const auto v = Get(key);
  return v ? *v : std::move(fallback);
}

void KeyValueDoc::Merge(const KeyValueDoc& other) {
  std::vector<std::string> seen;
  for (const auto& [k, v] : other.entries_) {
    if (std::find(seen.begin(), seen.end(), k) == seen.end()) {
      std::erase_if(entries_, [&](const auto& e) { return e.first == k; });
      seen.push_back(k);
    }
    Add(k, v);
  }
}

}  // namespace oae
