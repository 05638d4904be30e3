#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hybridproj/bench.hpp"
#include "hybridproj/error.hpp"

namespace hybridproj {

namespace {

const char* const kResultHeader[] = {"method",     "schedule",     "tolerance",
                                     "workers",    "iterations",   "wall_seconds",
                                     "termination", "final_residual", "error"};

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write to " + path.string() + " failed");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double parse_double_field(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ParseError, path.string() + ": bad number '" + s + "'");
}

std::uint64_t parse_uint_field(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ParseError, path.string() + ": bad integer '" + s + "'");
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, RunReport* first_report) {
  spec.validate();
  const auto family = std::make_shared<const MappingFamily>(spec.family.build());
  std::vector<ResultRow> rows;
  bool first = true;
  for (Method method : spec.methods) {
    for (const AlphaSchedule& schedule : spec.schedules) {
      for (double tol : spec.tolerances) {
        for (std::size_t workers : spec.workers) {
          ResultRow row;
          row.method = method;
          row.schedule = schedule.name();
          row.tolerance = tol;
          row.workers = workers;
          SolverConfig cfg = spec.solver_config(method, schedule, family);
          cfg.tol = tol;
          cfg.workers = workers;
          try {
            RunReport report = solve(cfg);
            row.iterations = report.iterations;
            row.wall_seconds = report.wall_time;
            row.termination = report.termination;
            if (cfg.known_fixed_point) {
              row.final_residual = (report.final_x - *cfg.known_fixed_point).norm();
            } else if (!report.trace.empty()) {
              row.final_residual = report.trace.back().step_norm;
            }
            if (report.termination == Termination::ProjectionFailure) row.error = report.message;
            if (first && first_report) *first_report = std::move(report);
          } catch (const Error& e) {
            row.error = std::string(to_string(e.code())) + ": " + e.what();
          }
          first = false;
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> csv_parse(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) fail(ErrorCode::ParseError, "csv: unterminated quoted field");
  if (field_started || !record.empty()) end_record();
  return records;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  if (rows.empty()) fail(ErrorCode::InvalidArgument, "emit_csv: no rows for " + path.string());
  std::ofstream out = open_for_write(path);
  for (std::size_t i = 0; i < std::size(kResultHeader); ++i) {
    out << (i ? "," : "") << kResultHeader[i];
  }
  out << "\r\n";
  for (const ResultRow& r : rows) {
    out << csv_escape(to_string(r.method)) << ',' << csv_escape(r.schedule) << ','
        << format_double(r.tolerance) << ',' << r.workers << ',' << r.iterations << ','
        << format_double(r.wall_seconds) << ','
        << (r.termination ? to_string(*r.termination) : "") << ','
        << format_double(r.final_residual) << ',' << csv_escape(r.error) << "\r\n";
  }
  finish_write(out, path);
}

std::vector<ResultRow> parse_results_csv(const std::filesystem::path& path) {
  const auto records = csv_parse(read_file(path));
  if (records.empty()) fail(ErrorCode::ParseError, path.string() + ": empty csv");
  const auto& header = records.front();
  if (header.size() != std::size(kResultHeader) ||
      !std::equal(header.begin(), header.end(), std::begin(kResultHeader))) {
    fail(ErrorCode::ParseError, path.string() + ": unexpected header");
  }
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i];
    if (f.size() != header.size()) {
      fail(ErrorCode::ParseError, path.string() + ": row " + std::to_string(i) + " has " +
                                      std::to_string(f.size()) + " fields");
    }
    ResultRow r;
    const auto method = parse_method(f[0]);
    if (!method) fail(ErrorCode::ParseError, path.string() + ": unknown method " + f[0]);
    r.method = *method;
    r.schedule = f[1];
    r.tolerance = parse_double_field(f[2], path);
    r.workers = parse_uint_field(f[3], path);
    r.iterations = parse_uint_field(f[4], path);
    r.wall_seconds = parse_double_field(f[5], path);
    if (!f[6].empty()) {
      r.termination = parse_termination(f[6]);
      if (!r.termination) fail(ErrorCode::ParseError, path.string() + ": bad termination " + f[6]);
    }
    r.final_residual = parse_double_field(f[7], path);
    r.error = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_trace(const RunReport& report, const std::filesystem::path& path) {
  if (report.trace.empty()) fail(ErrorCode::InvalidArgument, "emit_trace: empty trace");
  std::ofstream out = open_for_write(path);
  out << "n,alpha,epsilon,chosen_index,step_norm,phi_to_start,residual_to_known,constraints,"
         "cumulative_seconds";
  for (std::size_t k = 1; k <= report.dim; ++k) out << ",x_" << k;
  out << "\r\n";
  for (std::size_t i = 0; i < report.trace.size(); ++i) {
    const TraceRow& r = report.trace[i];
    out << r.n << ',' << format_double(r.alpha) << ',' << format_double(r.epsilon) << ','
        << r.chosen_index << ',' << format_double(r.step_norm) << ','
        << format_double(r.phi_to_start) << ','
        << (r.residual_to_known ? format_double(*r.residual_to_known) : "") << ','
        << r.constraints << ',' << format_double(r.cumulative_seconds);
    for (std::size_t k = 0; k < report.dim; ++k) {
      out << ',' << format_double(report.trajectory[i * report.dim + k]);
    }
    out << "\r\n";
  }
  finish_write(out, path);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::optional<Method> phm;
  for (const ResultRow& r : rows) {
    if (is_parallel(r.method)) {
      phm = r.method;
      break;
    }
  }
  std::size_t max_workers = 1;
  for (const ResultRow& r : rows) {
    if (phm && r.method == *phm) max_workers = std::max(max_workers, r.workers);
  }

  std::vector<SummaryRow> out;
  auto slot = [&](const ResultRow& r) -> SummaryRow& {
    for (SummaryRow& s : out) {
      if (s.schedule == r.schedule && s.tolerance == r.tolerance) return s;
    }
    SummaryRow row;
    row.schedule = r.schedule;
    row.tolerance = r.tolerance;
    out.push_back(std::move(row));
    return out.back();
  };
  for (const ResultRow& r : rows) {
    if (!r.termination) continue;
    if (phm && r.method == *phm) {
      SummaryRow& s = slot(r);
      if (r.workers == 1) s.t_sequential = r.wall_seconds;
      if (max_workers > 1 && r.workers == max_workers) s.t_parallel = r.wall_seconds;
    } else if (r.method == Method::Lsm) {
      SummaryRow& s = slot(r);
      if (s.t_liu || s.liu_very_slow) continue;
      if (*r.termination == Termination::MaxIterReached) {
        s.liu_very_slow = true;
      } else {
        s.t_liu = r.wall_seconds;
      }
    }
  }
  for (SummaryRow& s : out) {
    if (s.t_parallel && s.t_sequential && *s.t_parallel > 0.0) {
      s.speedup = *s.t_sequential / *s.t_parallel;
    }
  }
  return out;
}

std::string render_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  std::vector<std::string> schedules;
  for (const SummaryRow& r : rows) {
    if (std::find(schedules.begin(), schedules.end(), r.schedule) == schedules.end()) {
      schedules.push_back(r.schedule);
    }
  }
  auto cell = [](const std::optional<double>& v) { return v ? fixed(*v) : std::string("-"); };
  for (const std::string& schedule : schedules) {
    out << "alpha_n: " << schedule << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %-12s %-12s %-16s\n", "TOL", "T_p", "T_s", "T_L");
    out << line;
    std::string speedups;
    for (const SummaryRow& r : rows) {
      if (r.schedule != schedule) continue;
      const std::string t_l = r.liu_very_slow ? "very slow conv." : cell(r.t_liu);
      std::snprintf(line, sizeof line, "%-12s %-12s %-12s %-16s\n",
                    format_double(r.tolerance).c_str(), cell(r.t_parallel).c_str(),
                    cell(r.t_sequential).c_str(), t_l.c_str());
      out << line;
      if (r.speedup) {
        speedups += (speedups.empty() ? "" : ", ") + format_double(r.tolerance) + ": " +
                    fixed(*r.speedup);
      }
    }
    if (!speedups.empty()) out << "S_p = T_s/T_p  " << speedups << "\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace hybridproj
