#include "hybridproj/hybridproj.h"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "hybridproj/bench.hpp"
#include "hybridproj/error.hpp"
#include "hybridproj/speedup.hpp"

using namespace hybridproj;

struct hp_family {
  std::shared_ptr<const MappingFamily> family;
};

struct hp_report {
  RunReport report;
};

struct hp_experiment {
  ExperimentSpec spec;
  std::string emitted;
};

struct hp_results {
  std::vector<ResultRow> rows;
  std::vector<std::string> method_names;
  RunReport first;
  bool has_first = false;
  std::string summary;
};

struct hp_speedup {
  SpeedupTable table;
};

namespace {

thread_local std::string last_error;

hp_status record(hp_status status, const std::string& msg) {
  last_error = msg;
  return status;
}

template <class F>
hp_status guarded(F&& body) {
  try {
    body();
    return HP_OK;
  } catch (const Error& e) {
    return record(static_cast<hp_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(HP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(HP_ERR_INTERNAL, e.what());
  } catch (...) {
    return record(HP_ERR_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

Vector copy_vector(const double* data, std::size_t n) {
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = data[i];
  return v;
}

AlphaSchedule schedule_from_name(const char* name) {
  if (name == nullptr) return AlphaSchedule::reciprocal();
  const auto kind = parse_schedule_kind(name);
  if (!kind) fail(ErrorCode::InvalidArgument, std::string("unknown schedule '") + name + "'");
  switch (*kind) {
    case AlphaSchedule::Kind::Reciprocal: return AlphaSchedule::reciprocal();
    case AlphaSchedule::Kind::LogReciprocal: return AlphaSchedule::log_reciprocal();
    case AlphaSchedule::Kind::PowerOfTen: return AlphaSchedule::power_of_ten();
    case AlphaSchedule::Kind::ConstantZero: return AlphaSchedule::constant_zero();
    case AlphaSchedule::Kind::Custom: break;
  }
  fail(ErrorCode::InvalidArgument, "custom schedules need a config file");
}

Method method_from_name(const char* name) {
  if (name == nullptr) return Method::PhmMann;
  const auto m = parse_method(name);
  if (!m) fail(ErrorCode::InvalidArgument, std::string("unknown method '") + name + "'");
  return *m;
}

}  // namespace

extern "C" {

const char* hp_version(void) { return "0.1.0"; }

const char* hp_last_error(void) { return last_error.c_str(); }

const char* hp_status_name(hp_status status) {
  if (status == HP_OK) return "OK";
  if (status == HP_ERR_INTERNAL) return "Internal";
  if (status >= HP_ERR_INVALID_ARGUMENT && status <= HP_ERR_IO) {
    return to_string(static_cast<ErrorCode>(status));
  }
  return "Unknown";
}

hp_status hp_family_experiment(size_t count, hp_family** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto f = std::make_unique<hp_family>();
    f->family = std::make_shared<const MappingFamily>(make_experiment_family(count));
    *out = f.release();
  });
}

hp_status hp_family_threshold(const double* t, const double* s, size_t count,
                              double asymptotic_c, hp_family** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(t, "t");
    need(s, "s");
    std::vector<PiecewiseThresholdMap> maps(count);
    for (std::size_t i = 0; i < count; ++i) maps[i] = {t[i], s[i]};
    MappingFamily fam = MappingFamily::threshold(std::move(maps));
    if (asymptotic_c != 0.0) fam = fam.with_asymptotic_constants(asymptotic_c);
    auto f = std::make_unique<hp_family>();
    f->family = std::make_shared<const MappingFamily>(std::move(fam));
    *out = f.release();
  });
}

hp_status hp_family_resolvent(size_t dim, const double* matrix, const double* shift,
                              const double* radii, size_t count, const double* lower,
                              const double* upper, hp_family** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(matrix, "matrix");
    need(shift, "shift");
    need(radii, "radii");
    if ((lower == nullptr) != (upper == nullptr)) {
      fail(ErrorCode::InvalidArgument, "lower and upper must both be given or both be NULL");
    }
    const auto d = static_cast<Eigen::Index>(dim);
    AffineMonotoneOperator op;
    op.matrix.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) op.matrix(r, c) = matrix[r * d + c];
    }
    op.shift = copy_vector(shift, dim);
    std::vector<AffineMonotoneOperator> ops(count, op);
    std::vector<double> rs(radii, radii + count);
    std::optional<Box> box;
    if (lower) box = Box{copy_vector(lower, dim), copy_vector(upper, dim)};
    auto f = std::make_unique<hp_family>();
    f->family = std::make_shared<const MappingFamily>(
        MappingFamily::resolvents(std::move(ops), std::move(rs), std::move(box)));
    *out = f.release();
  });
}

size_t hp_family_size(const hp_family* family) {
  return family ? family->family->size() : 0;
}

size_t hp_family_dim(const hp_family* family) { return family ? family->family->dim() : 0; }

hp_status hp_family_apply(const hp_family* family, size_t index, uint64_t power,
                          const double* x, double* out) {
  return guarded([&] {
    need(family, "family");
    need(x, "x");
    need(out, "out");
    const MappingFamily& fam = *family->family;
    if (index >= fam.size()) fail(ErrorCode::InvalidArgument, "map index out of range");
    fam.apply(index, power, {x, fam.dim()}, {out, fam.dim()});
  });
}

void hp_family_free(hp_family* family) { delete family; }

void hp_solve_options_init(hp_solve_options* options) {
  if (options == nullptr) return;
  *options = hp_solve_options{};
  options->method = "phm-mann";
  options->schedule = "reciprocal";
  options->tol = 1e-6;
  options->max_iter = 1'000'000;
  options->workers = 1;
}

hp_status hp_solve(const hp_family* family, const hp_solve_options* options, hp_report** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(family, "family");
    need(options, "options");
    need(options->x_start, "x_start");
    SolverConfig cfg;
    cfg.method = method_from_name(options->method);
    cfg.mappings = family->family;
    cfg.alpha = schedule_from_name(options->schedule);
    cfg.omega = options->omega;
    cfg.x_start = copy_vector(options->x_start, options->dim);
    cfg.tol = options->tol;
    cfg.max_iter = options->max_iter;
    cfg.workers = options->workers;
    if (options->known_fixed_point) {
      cfg.known_fixed_point = copy_vector(options->known_fixed_point, options->dim);
    }
    auto r = std::make_unique<hp_report>();
    r->report = solve(cfg);
    *out = r.release();
  });
}

uint64_t hp_report_iterations(const hp_report* report) {
  return report ? report->report.iterations : 0;
}

const char* hp_report_termination(const hp_report* report) {
  return report ? to_string(report->report.termination) : "";
}

size_t hp_report_dim(const hp_report* report) {
  return report ? static_cast<size_t>(report->report.final_x.size()) : 0;
}

hp_status hp_report_final_x(const hp_report* report, double* out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    const Vector& x = report->report.final_x;
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i];
  });
}

size_t hp_report_trace_length(const hp_report* report) {
  return report ? report->report.trace.size() : 0;
}

double hp_report_wall_seconds(const hp_report* report) {
  return report ? report->report.wall_time : 0.0;
}

hp_status hp_report_write_trace(const hp_report* report, const char* path) {
  return guarded([&] {
    need(report, "report");
    need(path, "path");
    emit_trace(report->report, path);
  });
}

void hp_report_free(hp_report* report) { delete report; }

hp_status hp_experiment_load(const char* path, hp_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(path, "path");
    auto e = std::make_unique<hp_experiment>();
    e->spec = parse_config(path);
    *out = e.release();
  });
}

hp_status hp_experiment_parse(const char* text, hp_experiment** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(text, "text");
    auto e = std::make_unique<hp_experiment>();
    e->spec = parse_config_text(text);
    *out = e.release();
  });
}

void hp_experiment_free(hp_experiment* experiment) { delete experiment; }

hp_status hp_experiment_set_workers(hp_experiment* experiment, const size_t* workers,
                                    size_t count) {
  return guarded([&] {
    need(experiment, "experiment");
    need(workers, "workers");
    if (count == 0) fail(ErrorCode::InvalidArgument, "empty worker list");
    std::vector<std::size_t> w(workers, workers + count);
    for (std::size_t k : w) {
      if (k == 0) fail(ErrorCode::InvalidArgument, "worker count must be >= 1");
    }
    experiment->spec.workers = std::move(w);
  });
}

hp_status hp_experiment_set_method(hp_experiment* experiment, const char* method) {
  return guarded([&] {
    need(experiment, "experiment");
    need(method, "method");
    ExperimentSpec next = experiment->spec;
    next.methods = {method_from_name(method)};
    try {
      next.validate();
    } catch (const Error& e) {
      fail(ErrorCode::ValidationError, e.what());
    }
    experiment->spec = std::move(next);
  });
}

hp_status hp_experiment_set_tolerance(hp_experiment* experiment, double tol) {
  return guarded([&] {
    need(experiment, "experiment");
    if (!(tol > 0.0) || !std::isfinite(tol)) {
      fail(ErrorCode::ValidationError, "tolerance must be > 0");
    }
    experiment->spec.tolerances = {tol};
  });
}

hp_status hp_experiment_set_output(hp_experiment* experiment, const char* path) {
  return guarded([&] {
    need(experiment, "experiment");
    need(path, "path");
    experiment->spec.output_path = path;
  });
}

const char* hp_experiment_output(const hp_experiment* experiment) {
  return experiment ? experiment->spec.output_path.c_str() : "";
}

const char* hp_experiment_emit(hp_experiment* experiment) {
  if (experiment == nullptr) return "";
  experiment->emitted = emit_config(experiment->spec);
  return experiment->emitted.c_str();
}

hp_status hp_experiment_run(const hp_experiment* experiment, hp_results** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(experiment, "experiment");
    auto r = std::make_unique<hp_results>();
    r->rows = run_experiment(experiment->spec, &r->first);
    r->has_first = !r->first.trace.empty();
    for (const ResultRow& row : r->rows) r->method_names.emplace_back(to_string(row.method));
    *out = r.release();
  });
}

size_t hp_results_count(const hp_results* results) {
  return results ? results->rows.size() : 0;
}

size_t hp_results_error_count(const hp_results* results) {
  if (results == nullptr) return 0;
  std::size_t n = 0;
  for (const ResultRow& row : results->rows) n += row.error.empty() ? 0 : 1;
  return n;
}

hp_status hp_results_row(const hp_results* results, size_t index, hp_result_row* row) {
  return guarded([&] {
    need(results, "results");
    need(row, "row");
    if (index >= results->rows.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
    const ResultRow& r = results->rows[index];
    row->method = results->method_names[index].c_str();
    row->schedule = r.schedule.c_str();
    row->tolerance = r.tolerance;
    row->workers = r.workers;
    row->iterations = r.iterations;
    row->wall_seconds = r.wall_seconds;
    row->termination = r.termination ? to_string(*r.termination) : "";
    row->final_residual = r.final_residual;
    row->error = r.error.c_str();
  });
}

hp_status hp_results_write_csv(const hp_results* results, const char* path) {
  return guarded([&] {
    need(results, "results");
    need(path, "path");
    emit_csv(results->rows, path);
  });
}

hp_status hp_results_write_trace(const hp_results* results, const char* path) {
  return guarded([&] {
    need(results, "results");
    need(path, "path");
    if (!results->has_first) fail(ErrorCode::InvalidArgument, "first row produced no trace");
    emit_trace(results->first, path);
  });
}

const char* hp_results_summary(hp_results* results) {
  if (results == nullptr) return "";
  results->summary = render_summary(summarize(results->rows));
  return results->summary.c_str();
}

void hp_results_free(hp_results* results) { delete results; }

hp_status hp_experiment_speedup(const hp_experiment* experiment, const size_t* workers,
                                size_t count, int repetitions, hp_speedup** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(experiment, "experiment");
    need(workers, "workers");
    if (count == 0) fail(ErrorCode::InvalidArgument, "empty worker list");
    if (repetitions < 1) fail(ErrorCode::InvalidArgument, "repetitions must be >= 1");
    const ExperimentSpec& spec = experiment->spec;
    spec.validate();
    const Method* method = nullptr;
    for (const Method& m : spec.methods) {
      if (is_parallel(m)) {
        method = &m;
        break;
      }
    }
    if (method == nullptr) fail(ErrorCode::InvalidArgument, "config lists no parallel method");
    auto family = std::make_shared<const MappingFamily>(spec.family.build());
    SolverConfig cfg = spec.solver_config(*method, spec.schedules.front(), family);
    cfg.tol = spec.tolerances.front();
    std::vector<std::size_t> w(workers, workers + count);
    auto s = std::make_unique<hp_speedup>();
    s->table = measure_speedup(cfg, w, repetitions);
    *out = s.release();
  });
}

size_t hp_speedup_count(const hp_speedup* table) { return table ? table->table.rows.size() : 0; }

hp_status hp_speedup_row(const hp_speedup* table, size_t index, size_t* workers,
                         double* seconds, uint64_t* iterations, double* speedup) {
  return guarded([&] {
    need(table, "table");
    if (index >= table->table.rows.size()) fail(ErrorCode::InvalidArgument, "row out of range");
    const SpeedupRow& r = table->table.rows[index];
    if (workers) *workers = r.workers;
    if (seconds) *seconds = r.seconds;
    if (iterations) *iterations = r.iterations;
    if (speedup) *speedup = table->table.speedup(index);
  });
}

int hp_speedup_identical(const hp_speedup* table) {
  return table && table->table.trajectories_identical ? 1 : 0;
}

void hp_speedup_free(hp_speedup* table) { delete table; }

}  // extern "C"
