#include "dmsconfig/kv_file.hpp"

#include <charconv>
#include <limits>
#include <fstream>
#include <sstream>

#include "dmsconfig/error.hpp"

namespace dmsconfig {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

const std::string* KvSection::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

const std::string& KvSection::at(const std::string& key) const {
  if (const auto* v = find(key)) return *v;
  throw FormatError("missing key '" + key + "'" + (name.empty() ? "" : " in [" + name + "]"));
}

std::vector<KvSection> parse_kv(const std::string& text) {
  std::vector<KvSection> sections(1);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      sections.push_back(KvSection{trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
    sections.back().entries.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return sections;
}

std::vector<KvSection> read_kv_file(const std::string& path) {
  return parse_kv(read_text_file(path));
}

std::map<std::string, std::string> kv_map(const KvSection& section) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : section.entries)
    if (!out.emplace(k, v).second) throw FormatError("duplicate key '" + k + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    if (value == "inf") return std::numeric_limits<double>::infinity();
    throw FormatError("'" + key + "': not a number: '" + value + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw FormatError("'" + key + "': not an integer: '" + value + "'");
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace dmsconfig
