#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "hybridproj/bench.hpp"
#include "hybridproj/error.hpp"

namespace hybridproj {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"family",
       {"kind", "count", "t", "s", "asymptotic_c", "dim", "matrix", "shift", "r", "lower",
        "upper"}},
      {"experiment",
       {"methods", "schedules", "tolerances", "x_start", "omega", "max_iter", "workers",
        "known_fixed_point", "output", "power"}},
      {"projection", {"tolerance", "max_sweeps"}},
      {"schedule.custom", {"table"}},
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Reader {
 public:
  explicit Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void parse_error(int line, std::string_view key, const std::string& what) const {
    std::string msg = std::string(source_) + ":" + std::to_string(line);
    if (!key.empty()) msg += ": key '" + std::string(key) + "'";
    fail(ErrorCode::ParseError, msg + ": " + what);
  }

  std::map<std::string, Section> read(std::string_view text) {
    std::map<std::string, Section> sections;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line =
          text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') parse_error(line_no, {}, "unterminated section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (!known_keys().contains(current)) {
          parse_error(line_no, {}, "unknown section [" + current + "]");
        }
        sections[current];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) parse_error(line_no, {}, "expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (current.empty()) parse_error(line_no, key, "key outside of any section");
      if (!known_keys().at(current).contains(key)) {
        parse_error(line_no, key, "unknown key in [" + current + "]");
      }
      if (value.empty()) parse_error(line_no, key, "empty value");
      auto [it, inserted] = sections[current].emplace(key, Entry{value, line_no});
      if (!inserted) parse_error(line_no, key, "duplicate key");
    }
    return sections;
  }

  double number(const Entry& e, std::string_view key, std::string_view text) const {
    std::string clean;
    for (char c : text) {
      if (c != '_') clean += c;
    }
    double v = 0.0;
    const char* end = clean.data() + clean.size();
    auto [ptr, ec] = std::from_chars(clean.data(), end, v);
    if (ec != std::errc() || ptr != end || clean.empty()) {
      parse_error(e.line, key, "not a number: '" + std::string(text) + "'");
    }
    return v;
  }

  double number(const Entry& e, std::string_view key) const { return number(e, key, e.value); }

  std::uint64_t integer(const Entry& e, std::string_view key, std::string_view text) const {
    const double v = number(e, key, text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.007199254740992e15) {
      parse_error(e.line, key, "not a non-negative integer: '" + std::string(text) + "'");
    }
    return static_cast<std::uint64_t>(v);
  }

  std::uint64_t integer(const Entry& e, std::string_view key) const {
    return integer(e, key, e.value);
  }

  static std::vector<std::string> items(std::string_view value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
      const std::size_t comma = value.find(',', pos);
      const std::string_view item = trim(value.substr(
          pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  std::vector<double> numbers(const Entry& e, std::string_view key) const {
    std::vector<double> out;
    for (const auto& item : items(e.value)) {
      if (item.empty()) parse_error(e.line, key, "empty list item");
      out.push_back(number(e, key, item));
    }
    return out;
  }

  std::vector<std::size_t> integers(const Entry& e, std::string_view key) const {
    std::vector<std::size_t> out;
    for (const auto& item : items(e.value)) {
      if (item.empty()) parse_error(e.line, key, "empty list item");
      out.push_back(static_cast<std::size_t>(integer(e, key, item)));
    }
    return out;
  }

 private:
  std::string_view source_;
};

const Entry* find(const std::map<std::string, Section>& s, const std::string& section,
                  const std::string& key) {
  auto sit = s.find(section);
  if (sit == s.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

[[noreturn]] void invalid(const std::string& what) {
  fail(ErrorCode::ValidationError, "invalid experiment: " + what);
}

std::vector<std::size_t> default_worker_list() {
  const std::size_t cores = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (cores == 1) return {1};
  return {1, cores};
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

bool uses_epsilon(Method m) {
  return m == Method::PhmMann || m == Method::PhmHalpern || m == Method::Shm;
}

bool is_quasi(Method m) {
  return m == Method::PhmQuasiMann || m == Method::PhmQuasiHalpern || m == Method::ShmQuasi;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

MappingFamily FamilySpec::build() const {
  if (kind == Kind::Threshold) {
    MappingFamily f = [&] {
      if (count) return make_experiment_family(*count);
      std::vector<PiecewiseThresholdMap> maps;
      for (std::size_t i = 0; i < t.size(); ++i) maps.push_back({t[i], s[i]});
      return MappingFamily::threshold(std::move(maps));
    }();
    return asymptotic_c > 0.0 ? f.with_asymptotic_constants(asymptotic_c) : f;
  }
  const auto d = static_cast<Eigen::Index>(dim);
  AffineMonotoneOperator op;
  op.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(matrix.data(), d, d);
  op.shift = shift.empty() ? Vector::Zero(d) : to_vector(shift);
  std::optional<Box> box;
  if (!lower.empty() || !upper.empty()) {
    Box b = Box::unbounded(dim);
    if (!lower.empty()) b.lower = to_vector(lower);
    if (!upper.empty()) b.upper = to_vector(upper);
    box = std::move(b);
  }
  MappingFamily f = MappingFamily::resolvents(std::vector<AffineMonotoneOperator>(radii.size(), op),
                                              radii, std::move(box));
  return asymptotic_c > 0.0 ? f.with_asymptotic_constants(asymptotic_c) : f;
}

void ExperimentSpec::validate() const {
  if (methods.empty()) invalid("at least one method is required");
  if (schedules.empty()) invalid("at least one schedule is required");
  if (tolerances.empty()) invalid("at least one tolerance is required");
  for (double t : tolerances) {
    if (!(t > 0.0) || !std::isfinite(t)) invalid("tolerances must be > 0");
  }
  if (max_iter < 1) invalid("max_iter must be >= 1");
  if (workers.empty()) invalid("workers list is empty");
  for (std::size_t w : workers) {
    if (w < 1) invalid("workers must be >= 1");
  }
  if (!(projection_tolerance > 0.0)) invalid("projection tolerance must be > 0");
  if (projection_max_sweeps < 1) invalid("projection max_sweeps must be >= 1");
  for (const auto& s : schedules) {
    if (s.kind() == AlphaSchedule::Kind::Custom && s.table().empty()) {
      invalid("custom alpha table is empty");
    }
    for (double a : s.table()) {
      if (!(a >= 0.0 && a <= 1.0)) invalid("alpha table entries must lie in [0, 1]");
    }
  }

  const FamilySpec& f = family;
  if (!(f.asymptotic_c >= 0.0) || !std::isfinite(f.asymptotic_c)) {
    invalid("asymptotic_c must be >= 0");
  }
  if (f.kind == FamilySpec::Kind::Threshold) {
    if (f.count && (!f.t.empty() || !f.s.empty())) invalid("give either count or t/s arrays");
    if (f.count) {
      if (*f.count < 1) invalid("family count must be >= 1");
    } else {
      if (f.t.empty()) invalid("threshold family needs count or t/s arrays");
      if (f.t.size() != f.s.size()) invalid("t and s arrays differ in length");
      for (std::size_t i = 0; i < f.t.size(); ++i) {
        try {
          PiecewiseThresholdMap{f.t[i], f.s[i]}.validate();
        } catch (const Error& e) {
          invalid(e.what());
        }
      }
    }
  } else {
    if (f.dim < 1) invalid("resolvent family needs dim >= 1");
    if (f.matrix.size() != f.dim * f.dim) invalid("matrix must have dim * dim entries");
    if (!f.shift.empty() && f.shift.size() != f.dim) invalid("shift must have dim entries");
    if (f.radii.empty()) invalid("resolvent family needs radii r");
    for (double r : f.radii) {
      if (!(r > 0.0) || !std::isfinite(r)) invalid("radii must be > 0");
    }
    if (!f.lower.empty() && f.lower.size() != f.dim) invalid("lower must have dim entries");
    if (!f.upper.empty() && f.upper.size() != f.dim) invalid("upper must have dim entries");
    try {
      AffineMonotoneOperator op;
      const auto d = static_cast<Eigen::Index>(f.dim);
      op.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>(f.matrix.data(), d, d);
      op.shift = f.shift.empty() ? Vector::Zero(d) : to_vector(f.shift);
      op.validate();
    } catch (const Error& e) {
      invalid(e.what());
    }
  }

  const std::size_t d = f.ambient_dim();
  if (x_start.size() != d) invalid("x_start must have " + std::to_string(d) + " entries");
  for (double v : x_start) {
    if (!std::isfinite(v)) invalid("x_start must be finite");
  }
  if (f.kind == FamilySpec::Kind::Threshold && !(x_start[0] >= 0.0 && x_start[0] <= 1.0)) {
    invalid("x_start must lie in [0, 1] for threshold maps");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!f.lower.empty() && x_start[i] < f.lower[i]) invalid("x_start below the domain box");
    if (!f.upper.empty() && x_start[i] > f.upper[i]) invalid("x_start above the domain box");
  }
  if (omega && (!(*omega >= 0.0) || !std::isfinite(*omega))) invalid("omega must be >= 0");
  if (known_fixed_point) {
    if (known_fixed_point->size() != d) invalid("known_fixed_point has the wrong dimension");
    if (omega && to_vector(*known_fixed_point).norm() > *omega) {
      invalid("omega must bound |known_fixed_point|");
    }
  }
  for (Method m : methods) {
    if (m == Method::Lsm && d != 1) invalid("lsm needs a one-dimensional family");
    if (is_quasi(m) && f.asymptotic_c > 0.0) {
      invalid(std::string(to_string(m)) + " needs quasi-phi mappings (asymptotic_c = 0)");
    }
    if (uses_epsilon(m) && f.asymptotic_c > 0.0 && !omega) {
      invalid(std::string(to_string(m)) + " with asymptotic_c > 0 needs omega");
    }
  }
}

SolverConfig ExperimentSpec::solver_config(Method method, const AlphaSchedule& schedule,
                                           std::shared_ptr<const MappingFamily> fam) const {
  SolverConfig cfg;
  cfg.method = method;
  cfg.mappings = std::move(fam);
  cfg.alpha = schedule;
  cfg.x_start = to_vector(x_start);
  if (known_fixed_point) cfg.known_fixed_point = to_vector(*known_fixed_point);
  cfg.omega = omega.value_or(cfg.known_fixed_point ? cfg.known_fixed_point->norm() : 0.0);
  cfg.tol = tolerances.front();
  cfg.max_iter = max_iter;
  cfg.workers = workers.front();
  cfg.power_mode = power_mode;
  cfg.projection.tolerance = projection_tolerance;
  cfg.projection.max_sweeps = projection_max_sweeps;
  return cfg;
}

ExperimentSpec parse_config_text(std::string_view text, std::string_view source) {
  Reader r(source);
  const auto sections = r.read(text);
  ExperimentSpec spec;
  FamilySpec& f = spec.family;

  auto entry = [&](const char* section, const char* key) { return find(sections, section, key); };

  if (!sections.contains("family")) invalid("missing [family] section");
  if (const Entry* e = entry("family", "kind")) {
    if (e->value == "threshold") {
      f.kind = FamilySpec::Kind::Threshold;
    } else if (e->value == "resolvent") {
      f.kind = FamilySpec::Kind::Resolvent;
    } else {
      r.parse_error(e->line, "kind", "expected threshold or resolvent");
    }
  }
  if (const Entry* e = entry("family", "count")) f.count = r.integer(*e, "count");
  if (const Entry* e = entry("family", "t")) f.t = r.numbers(*e, "t");
  if (const Entry* e = entry("family", "s")) f.s = r.numbers(*e, "s");
  if (const Entry* e = entry("family", "asymptotic_c")) f.asymptotic_c = r.number(*e, "asymptotic_c");
  if (const Entry* e = entry("family", "dim")) f.dim = r.integer(*e, "dim");
  if (const Entry* e = entry("family", "matrix")) f.matrix = r.numbers(*e, "matrix");
  if (const Entry* e = entry("family", "shift")) f.shift = r.numbers(*e, "shift");
  if (const Entry* e = entry("family", "r")) f.radii = r.numbers(*e, "r");
  if (const Entry* e = entry("family", "lower")) f.lower = r.numbers(*e, "lower");
  if (const Entry* e = entry("family", "upper")) f.upper = r.numbers(*e, "upper");
  if (f.kind == FamilySpec::Kind::Threshold) f.dim = 0;

  if (const Entry* e = entry("experiment", "methods")) {
    for (const auto& name : Reader::items(e->value)) {
      auto m = parse_method(name);
      if (!m) r.parse_error(e->line, "methods", "unknown method '" + name + "'");
      spec.methods.push_back(*m);
    }
  }
  std::optional<std::vector<double>> custom_table;
  if (const Entry* e = entry("schedule.custom", "table")) custom_table = r.numbers(*e, "table");
  if (const Entry* e = entry("experiment", "schedules")) {
    for (const auto& name : Reader::items(e->value)) {
      auto k = parse_schedule_kind(name);
      if (!k) r.parse_error(e->line, "schedules", "unknown schedule '" + name + "'");
      switch (*k) {
        case AlphaSchedule::Kind::Reciprocal: spec.schedules.push_back(AlphaSchedule::reciprocal()); break;
        case AlphaSchedule::Kind::LogReciprocal: spec.schedules.push_back(AlphaSchedule::log_reciprocal()); break;
        case AlphaSchedule::Kind::PowerOfTen: spec.schedules.push_back(AlphaSchedule::power_of_ten()); break;
        case AlphaSchedule::Kind::ConstantZero: spec.schedules.push_back(AlphaSchedule::constant_zero()); break;
        case AlphaSchedule::Kind::Custom:
          if (!custom_table) invalid("schedule 'custom' needs [schedule.custom] table");
          spec.schedules.push_back(AlphaSchedule::custom(*custom_table));
          break;
      }
    }
  }
  if (const Entry* e = entry("experiment", "tolerances")) spec.tolerances = r.numbers(*e, "tolerances");
  if (const Entry* e = entry("experiment", "x_start")) {
    spec.x_start = r.numbers(*e, "x_start");
  } else if (f.kind == FamilySpec::Kind::Threshold) {
    spec.x_start = {1.0};
  }
  if (const Entry* e = entry("experiment", "omega")) spec.omega = r.number(*e, "omega");
  if (const Entry* e = entry("experiment", "max_iter")) spec.max_iter = r.integer(*e, "max_iter");
  if (const Entry* e = entry("experiment", "workers")) {
    spec.workers = r.integers(*e, "workers");
  } else {
    spec.workers = default_worker_list();
  }
  if (const Entry* e = entry("experiment", "known_fixed_point")) {
    spec.known_fixed_point = r.numbers(*e, "known_fixed_point");
  }
  if (const Entry* e = entry("experiment", "output")) spec.output_path = e->value;
  if (const Entry* e = entry("experiment", "power")) {
    if (e->value == "iterated") {
      spec.power_mode = PowerMode::Iterated;
    } else if (e->value == "single") {
      spec.power_mode = PowerMode::Single;
    } else {
      r.parse_error(e->line, "power", "expected iterated or single");
    }
  }
  if (const Entry* e = entry("projection", "tolerance")) {
    spec.projection_tolerance = r.number(*e, "tolerance");
  }
  if (const Entry* e = entry("projection", "max_sweeps")) {
    const auto v = r.integer(*e, "max_sweeps");
    if (v > 1'000'000'000) r.parse_error(e->line, "max_sweeps", "too large");
    spec.projection_max_sweeps = static_cast<int>(v);
  }

  spec.validate();
  return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string emit_config(const ExperimentSpec& spec) {
  std::ostringstream out;
  const FamilySpec& f = spec.family;
  out << "[family]\n";
  if (f.kind == FamilySpec::Kind::Threshold) {
    out << "kind = threshold\n";
    if (f.count) {
      out << "count = " << *f.count << "\n";
    } else {
      out << "t = " << join(f.t) << "\n";
      out << "s = " << join(f.s) << "\n";
    }
  } else {
    out << "kind = resolvent\n";
    out << "dim = " << f.dim << "\n";
    out << "matrix = " << join(f.matrix) << "\n";
    if (!f.shift.empty()) out << "shift = " << join(f.shift) << "\n";
    out << "r = " << join(f.radii) << "\n";
    if (!f.lower.empty()) out << "lower = " << join(f.lower) << "\n";
    if (!f.upper.empty()) out << "upper = " << join(f.upper) << "\n";
  }
  if (f.asymptotic_c != 0.0) out << "asymptotic_c = " << format_double(f.asymptotic_c) << "\n";

  out << "\n[experiment]\nmethods = ";
  for (std::size_t i = 0; i < spec.methods.size(); ++i) {
    out << (i ? ", " : "") << to_string(spec.methods[i]);
  }
  out << "\nschedules = ";
  const std::vector<double>* custom = nullptr;
  for (std::size_t i = 0; i < spec.schedules.size(); ++i) {
    out << (i ? ", " : "") << spec.schedules[i].name();
    if (spec.schedules[i].kind() == AlphaSchedule::Kind::Custom) custom = &spec.schedules[i].table();
  }
  out << "\ntolerances = " << join(spec.tolerances) << "\n";
  out << "x_start = " << join(spec.x_start) << "\n";
  if (spec.omega) out << "omega = " << format_double(*spec.omega) << "\n";
  out << "max_iter = " << spec.max_iter << "\n";
  out << "workers = ";
  for (std::size_t i = 0; i < spec.workers.size(); ++i) out << (i ? ", " : "") << spec.workers[i];
  out << "\n";
  if (spec.known_fixed_point) out << "known_fixed_point = " << join(*spec.known_fixed_point) << "\n";
  if (!spec.output_path.empty()) out << "output = " << spec.output_path << "\n";
  out << "power = " << (spec.power_mode == PowerMode::Iterated ? "iterated" : "single") << "\n";

  out << "\n[projection]\ntolerance = " << format_double(spec.projection_tolerance) << "\n";
  out << "max_sweeps = " << spec.projection_max_sweeps << "\n";
  if (custom) out << "\n[schedule.custom]\ntable = " << join(*custom) << "\n";
  return out.str();
}

}  // namespace hybridproj
