#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace diffplan::config {

/// Flat `key = value` configuration with `[section]` headers. Keys are
/// stored as "section.key"; a section name that repeats gets "#2", "#3"
/// suffixes so list-like files (one [task] block per task) stay expressible.
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text);
  static FlatConfig parse_file(const std::string& path);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, const std::string& value);

  /// Prefixes ("task.", "task#2.", ...) of every occurrence of a section.
  std::vector<std::string> sections(const std::string& name) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;  // file order
  std::map<std::string, std::string> lookup_;
  std::vector<std::string> section_order_;
};

/// 9-significant-digit float formatting used by every CSV we emit.
std::string format_double(double v);

/// Writes `<dir>/manifest.txt` with the resolved configuration, the
/// generator name, and the invoking command line.
void write_manifest(const std::string& dir, const FlatConfig& resolved,
                    const std::string& command_line);

}  // namespace diffplan::config
