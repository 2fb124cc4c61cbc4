#pragma once

// The tunable knob space and conversions between raw knob values and
// normalized action vectors in [0,1]^d.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dmsconfig {

inline constexpr std::int64_t kKiB = 1024;
inline constexpr std::int64_t kMiB = 1024 * 1024;

enum class KnobKind { integer, categorical };

/// Integer knobs hold native units (bytes, ms, counts); categorical knobs hold a label.
using KnobValue = std::variant<std::int64_t, std::string>;

struct ParameterSpec {
  std::string name;
  KnobKind kind = KnobKind::integer;
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  std::vector<std::string> categories;
  KnobValue default_value;

  std::size_t category_index(const std::string& label) const;  // throws if absent
  bool contains(const KnobValue& v) const;
};

struct Configuration {
  std::map<std::string, KnobValue> values;

  std::int64_t integer(const std::string& knob) const;
  const std::string& label(const std::string& knob) const;
  bool operator==(const Configuration&) const = default;
};

struct Violation {
  enum class Kind { missing_knob, unknown_knob, wrong_kind, out_of_range };
  Kind kind;
  std::string knob;

  std::string to_string() const;
  bool operator==(const Violation&) const = default;
};

class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<ParameterSpec> specs);

  std::size_t dim() const { return specs_.size(); }
  const std::vector<ParameterSpec>& specs() const { return specs_; }
  const ParameterSpec& spec(const std::string& name) const;
  const ParameterSpec& spec(std::size_t index) const { return specs_.at(index); }
  std::size_t index_of(const std::string& name) const;

  Configuration defaults() const;

  bool operator==(const ParameterSpace&) const;

 private:
  std::vector<ParameterSpec> specs_;
};

/// The ten broker/producer knobs in canonical order.
ParameterSpace default_space();

std::vector<Violation> validate(const Configuration& config, const ParameterSpace& space);

/// Throws InvalidConfiguration listing every violation.
void require_valid(const Configuration& config, const ParameterSpace& space);

std::vector<double> normalize(const Configuration& config, const ParameterSpace& space);

/// Clamps to [0,1] and rounds to the nearest representable knob value.
Configuration denormalize(std::span<const double> action, const ParameterSpace& space);

/// Numeric encoding used as model input: integer knobs raw, categorical knobs by index.
std::vector<double> numeric_features(const Configuration& config, const ParameterSpace& space);

std::string format_knob(const ParameterSpec& spec, const KnobValue& v);
KnobValue parse_knob(const ParameterSpec& spec, const std::string& text);

std::string serialize_space(const ParameterSpace& space);
ParameterSpace parse_space(const std::string& text);
ParameterSpace load_space(const std::string& path);

}  // namespace dmsconfig
