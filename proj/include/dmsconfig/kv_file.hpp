#pragma once

// Flat "key = value" text files used for parameter spaces, oracle profiles,
// scenarios and experiment plans. Lines starting with '#' are comments;
// a line of the form "[name]" opens a new section.

#include <map>
#include <string>
#include <vector>

namespace dmsconfig {

struct KvSection {
  std::string name;  // empty for the implicit leading section
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const;
  const std::string& at(const std::string& key) const;
};

std::vector<KvSection> parse_kv(const std::string& text);
std::vector<KvSection> read_kv_file(const std::string& path);

/// Flattens the leading section into a map; throws FormatError on duplicates.
std::map<std::string, std::string> kv_map(const KvSection& section);

std::vector<std::string> split_list(const std::string& value, char sep = ',');
double parse_double(const std::string& key, const std::string& value);
long long parse_int(const std::string& key, const std::string& value);

/// Shortest representation that round-trips through parse_double.
std::string format_double(double value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dmsconfig
