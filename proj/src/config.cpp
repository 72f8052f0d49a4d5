#include "diffplan/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "diffplan/rng.hpp"

namespace diffplan::config {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace

FlatConfig FlatConfig::parse(std::string_view text) {
  FlatConfig out;
  std::map<std::string, int> section_counts;
  std::string prefix;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string line = trim(text.substr(pos, eol - pos));
    ++line_no;
    if (auto cut = line.find('#'); cut != std::string::npos)
      line = trim(std::string_view(line).substr(0, cut));
    if (!line.empty()) {
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": unterminated section header");
        const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
        const int n = ++section_counts[name];
        prefix = n == 1 ? name + "." : name + "#" + std::to_string(n) + ".";
        out.section_order_.push_back(prefix);
      } else {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": expected key = value");
        const std::string key =
            prefix + trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        out.entries_.emplace_back(key, value);
        out.lookup_[key] = value;
      }
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  return out;
}

FlatConfig FlatConfig::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> FlatConfig::get(const std::string& key) const {
  auto it = lookup_.find(key);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::string FlatConfig::get_or(const std::string& key,
                               const std::string& fallback) const {
  auto v = get(key);
  return v ? *v : fallback;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not a number: " + *v);
  }
}

long FlatConfig::get_long(const std::string& key, long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    return std::stol(*v);
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "' is not an integer: " + *v);
  }
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw std::runtime_error("config key '" + key + "' is not a boolean: " + *v);
}

void FlatConfig::set(const std::string& key, const std::string& value) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& kv) { return kv.first == key; });
  if (it == entries_.end())
    entries_.emplace_back(key, value);
  else
    it->second = value;
  lookup_[key] = value;
}

std::vector<std::string> FlatConfig::sections(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& p : section_order_) {
    if (p == name + "." || p.starts_with(name + "#")) out.push_back(p);
  }
  return out;
}

std::string FlatConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_manifest(const std::string& dir, const FlatConfig& resolved,
                    const std::string& command_line) {
  std::ofstream out(dir + "/manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << "command = " << command_line << "\n";
  out << "rng = " << rng_algorithm_name() << "\n";
  out << resolved.serialize();
}

}  // namespace diffplan::config
