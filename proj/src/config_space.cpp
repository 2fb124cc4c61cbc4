#include "dmsconfig/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"

namespace dmsconfig {

namespace {

void check_spec(const ParameterSpec& s) {
  if (s.name.empty()) throw FormatError("knob with empty name");
  if (s.kind == KnobKind::integer) {
    if (!(s.lower < s.upper)) throw FormatError(s.name + ": lower must be < upper");
    if (!std::holds_alternative<std::int64_t>(s.default_value))
      throw FormatError(s.name + ": integer knob needs an integer default");
  } else {
    if (s.categories.empty()) throw FormatError(s.name + ": no categories");
    std::set<std::string> seen(s.categories.begin(), s.categories.end());
    if (seen.size() != s.categories.size()) throw FormatError(s.name + ": duplicate categories");
    if (!std::holds_alternative<std::string>(s.default_value))
      throw FormatError(s.name + ": categorical knob needs a label default");
  }
  if (!s.contains(s.default_value)) throw FormatError(s.name + ": default out of range");
}

ParameterSpec integer_knob(std::string name, std::int64_t lo, std::int64_t hi, std::int64_t def) {
  return ParameterSpec{std::move(name), KnobKind::integer, lo, hi, {}, def};
}

}  // namespace

std::size_t ParameterSpec::category_index(const std::string& label) const {
  auto it = std::find(categories.begin(), categories.end(), label);
  if (it == categories.end()) throw InvalidConfiguration(name + ": unknown category '" + label + "'");
  return static_cast<std::size_t>(it - categories.begin());
}

bool ParameterSpec::contains(const KnobValue& v) const {
  if (kind == KnobKind::integer) {
    const auto* i = std::get_if<std::int64_t>(&v);
    return i && *i >= lower && *i <= upper;
  }
  const auto* s = std::get_if<std::string>(&v);
  return s && std::find(categories.begin(), categories.end(), *s) != categories.end();
}

std::int64_t Configuration::integer(const std::string& knob) const {
  auto it = values.find(knob);
  if (it == values.end()) throw InvalidConfiguration("missing knob " + knob);
  const auto* v = std::get_if<std::int64_t>(&it->second);
  if (!v) throw InvalidConfiguration(knob + " is not an integer knob");
  return *v;
}

const std::string& Configuration::label(const std::string& knob) const {
  auto it = values.find(knob);
  if (it == values.end()) throw InvalidConfiguration("missing knob " + knob);
  const auto* v = std::get_if<std::string>(&it->second);
  if (!v) throw InvalidConfiguration(knob + " is not a categorical knob");
  return *v;
}

std::string Violation::to_string() const {
  switch (kind) {
    case Kind::missing_knob: return "missing-knob: " + knob;
    case Kind::unknown_knob: return "unknown-knob: " + knob;
    case Kind::wrong_kind: return "wrong-kind: " + knob;
    case Kind::out_of_range: return "out-of-range: " + knob;
  }
  return knob;
}

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> specs) : specs_(std::move(specs)) {
  if (specs_.empty()) throw FormatError("parameter space has no knobs");
  std::set<std::string> names;
  for (const auto& s : specs_) {
    check_spec(s);
    if (!names.insert(s.name).second) throw FormatError("duplicate knob " + s.name);
  }
}

const ParameterSpec& ParameterSpace::spec(const std::string& name) const {
  return specs_[index_of(name)];
}

std::size_t ParameterSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].name == name) return i;
  throw InvalidConfiguration("unknown knob " + name);
}

Configuration ParameterSpace::defaults() const {
  Configuration c;
  for (const auto& s : specs_) c.values.emplace(s.name, s.default_value);
  return c;
}

bool ParameterSpace::operator==(const ParameterSpace& other) const {
  if (dim() != other.dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    const auto& a = specs_[i];
    const auto& b = other.specs_[i];
    if (a.name != b.name || a.kind != b.kind || a.lower != b.lower || a.upper != b.upper ||
        a.categories != b.categories || a.default_value != b.default_value)
      return false;
  }
  return true;
}

ParameterSpace default_space() {
  return ParameterSpace({
      integer_knob("num.network.threads", 1, 20, 3),
      integer_knob("num.io.threads", 1, 24, 8),
      integer_knob("queued.max.requests", 50, 5000, 500),
      integer_knob("socket.receive.buffer.bytes", 10 * kKiB, 200 * kKiB, 100 * kKiB),
      integer_knob("socket.send.buffer.bytes", 10 * kKiB, 200 * kKiB, 100 * kKiB),
      integer_knob("socket.request.max.bytes", 10 * kMiB, 300 * kMiB, 100 * kMiB),
      integer_knob("buffer.memory", 2 * kMiB, 96 * kMiB, 32 * kMiB),
      integer_knob("batch.size", 4 * kKiB, 256 * kKiB, 16 * kKiB),
      integer_knob("linger.ms", 0, 100, 0),
      ParameterSpec{"compression.type", KnobKind::categorical, 0, 0,
                    {"none", "snappy", "gzip", "lz4"}, std::string("none")},
  });
}

std::vector<Violation> validate(const Configuration& config, const ParameterSpace& space) {
  std::vector<Violation> out;
  for (const auto& s : space.specs()) {
    auto it = config.values.find(s.name);
    if (it == config.values.end()) {
      out.push_back({Violation::Kind::missing_knob, s.name});
      continue;
    }
    const bool right_kind = s.kind == KnobKind::integer
                                ? std::holds_alternative<std::int64_t>(it->second)
                                : std::holds_alternative<std::string>(it->second);
    if (!right_kind)
      out.push_back({Violation::Kind::wrong_kind, s.name});
    else if (!s.contains(it->second))
      out.push_back({Violation::Kind::out_of_range, s.name});
  }
  for (const auto& [name, value] : config.values) {
    const auto& specs = space.specs();
    if (std::none_of(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; }))
      out.push_back({Violation::Kind::unknown_knob, name});
  }
  return out;
}

void require_valid(const Configuration& config, const ParameterSpace& space) {
  const auto violations = validate(config, space);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += " [" + v.to_string() + "]";
  throw InvalidConfiguration(msg);
}

std::vector<double> normalize(const Configuration& config, const ParameterSpace& space) {
  require_valid(config, space);
  std::vector<double> out;
  out.reserve(space.dim());
  for (const auto& s : space.specs()) {
    const auto& v = config.values.at(s.name);
    if (s.kind == KnobKind::integer) {
      out.push_back(static_cast<double>(std::get<std::int64_t>(v) - s.lower) /
                    static_cast<double>(s.upper - s.lower));
    } else if (s.categories.size() == 1) {
      out.push_back(0.0);
    } else {
      out.push_back(static_cast<double>(s.category_index(std::get<std::string>(v))) /
                    static_cast<double>(s.categories.size() - 1));
    }
  }
  return out;
}

Configuration denormalize(std::span<const double> action, const ParameterSpace& space) {
  if (action.size() != space.dim())
    throw DimensionMismatch("action has " + std::to_string(action.size()) + " entries, space has " +
                            std::to_string(space.dim()));
  Configuration c;
  for (std::size_t i = 0; i < space.dim(); ++i) {
    const auto& s = space.spec(i);
    const double a = std::isnan(action[i]) ? 0.0 : std::clamp(action[i], 0.0, 1.0);
    if (s.kind == KnobKind::integer) {
      const double raw = static_cast<double>(s.lower) + a * static_cast<double>(s.upper - s.lower);
      c.values.emplace(s.name, std::clamp<std::int64_t>(std::llround(raw), s.lower, s.upper));
    } else {
      const auto last = static_cast<double>(s.categories.size() - 1);
      c.values.emplace(s.name, s.categories[static_cast<std::size_t>(std::llround(a * last))]);
    }
  }
  return c;
}

std::vector<double> numeric_features(const Configuration& config, const ParameterSpace& space) {
  require_valid(config, space);
  std::vector<double> out;
  out.reserve(space.dim());
  for (const auto& s : space.specs()) {
    const auto& v = config.values.at(s.name);
    out.push_back(s.kind == KnobKind::integer
                      ? static_cast<double>(std::get<std::int64_t>(v))
                      : static_cast<double>(s.category_index(std::get<std::string>(v))));
  }
  return out;
}

std::string format_knob(const ParameterSpec& spec, const KnobValue& v) {
  (void)spec;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

KnobValue parse_knob(const ParameterSpec& spec, const std::string& text) {
  if (spec.kind == KnobKind::integer) return static_cast<std::int64_t>(parse_int(spec.name, text));
  return text;
}

std::string serialize_space(const ParameterSpace& space) {
  std::ostringstream out;
  out << "# dmsconfig parameter space\n";
  for (const auto& s : space.specs()) {
    out << "\n[knob]\nname = " << s.name << '\n';
    if (s.kind == KnobKind::integer) {
      out << "kind = integer\nlower = " << s.lower << "\nupper = " << s.upper << '\n';
    } else {
      out << "kind = categorical\ncategories = ";
      for (std::size_t i = 0; i < s.categories.size(); ++i)
        out << (i ? "," : "") << s.categories[i];
      out << '\n';
    }
    out << "default = " << format_knob(s, s.default_value) << '\n';
  }
  return out.str();
}

ParameterSpace parse_space(const std::string& text) {
  std::vector<ParameterSpec> specs;
  for (const auto& section : parse_kv(text)) {
    if (section.name.empty()) {
      if (!section.entries.empty()) throw FormatError("space file: entries outside [knob]");
      continue;
    }
    if (section.name != "knob") throw FormatError("space file: unexpected section [" + section.name + "]");
    ParameterSpec s;
    s.name = section.at("name");
    const auto& kind = section.at("kind");
    if (kind == "integer") {
      s.kind = KnobKind::integer;
      s.lower = parse_int("lower", section.at("lower"));
      s.upper = parse_int("upper", section.at("upper"));
    } else if (kind == "categorical") {
      s.kind = KnobKind::categorical;
      s.categories = split_list(section.at("categories"));
    } else {
      throw FormatError(s.name + ": unknown kind '" + kind + "'");
    }
    s.default_value = parse_knob(s, section.at("default"));
    specs.push_back(std::move(s));
  }
  return ParameterSpace(std::move(specs));
}

ParameterSpace load_space(const std::string& path) { return parse_space(read_text_file(path)); }

}  // namespace dmsconfig
