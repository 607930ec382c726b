#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oae {

// Line-oriented `key = value` document. `#` starts a comment line; keys may
// repeat (e.g. one `tap = ...` line per reflection tap). Order is preserved.
class KeyValueDoc {
 public:
  static KeyValueDoc Parse(std::string_view text);
  static KeyValueDoc Load(const std::filesystem::path& path);

  std::string Serialize() const;

  void Add(std::string key, std::string value);
  // Replaces every existing value for `key` with a single one.
  void Set(const std::string& key, std::string value);

  bool Has(std::string_view key) const;
  // Last value for `key`.
  std::optional<std::string> Get(std::string_view key) const;
  std::vector<std::string> GetAll(std::string_view key) const;

  double GetDouble(std::string_view key, double fallback) const;
  int GetInt(std::string_view key, int fallback) const;
  bool GetBool(std::string_view key, bool fallback) const;
  std::string GetString(std::string_view key, std::string fallback) const;

  // Overlays every key of `other` on this document (Set semantics per key).
  void Merge(const KeyValueDoc& other);

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Strict numeric parsing; accepts inf/-inf. Throws ConfigError naming `what`.
double ParseDouble(std::string_view text, std::string_view what);
std::vector<double> ParseDoubleList(std::string_view text, std::string_view what);
// Shortest text that parses back to the identical double.
std::string FormatDouble(double value);

}  // namespace oae
