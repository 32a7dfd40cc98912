#include "momt/momt.h"

#include <cstdio>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "momt/bench.hpp"
#include "momt/export.hpp"
#include "momt/generators.hpp"
#include "momt/problem.hpp"
#include "momt/sqp.hpp"

struct momt_problem {
  momt::ProblemFile file;
};

struct momt_solution {
  momt::SolutionArchive archive;
  momt::SolveResult result;  // trace and warnings; empty after a load
};

struct momt_bench_report {
  std::string suite;
  std::vector<momt::BenchCase> cases;
  std::vector<momt::BenchRow> rows;
  std::string table;
};

namespace {

thread_local std::string last_error;

momt_status status_of(momt::ErrorCode code) {
  switch (code) {
    case momt::ErrorCode::kInvalidArgument: return MOMT_INVALID_ARGUMENT;
    case momt::ErrorCode::kShapeMismatch: return MOMT_SHAPE_MISMATCH;
    case momt::ErrorCode::kNotPositiveDefinite: return MOMT_NOT_POSITIVE_DEFINITE;
    case momt::ErrorCode::kNonPositiveDensity: return MOMT_NON_POSITIVE_DENSITY;
    case momt::ErrorCode::kKernelAssumption: return MOMT_KERNEL_ASSUMPTION;
    case momt::ErrorCode::kFactorizationFailed: return MOMT_FACTORIZATION_FAILED;
    case momt::ErrorCode::kBreakdownDetected: return MOMT_BREAKDOWN_DETECTED;
    case momt::ErrorCode::kLineSearchFailed: return MOMT_LINE_SEARCH_FAILED;
    case momt::ErrorCode::kPositivityLost: return MOMT_POSITIVITY_LOST;
    case momt::ErrorCode::kInvalidContrast: return MOMT_INVALID_CONTRAST;
    case momt::ErrorCode::kIoError: return MOMT_IO_ERROR;
    case momt::ErrorCode::kFormatError: return MOMT_FORMAT_ERROR;
  }
  return MOMT_INTERNAL_ERROR;
}

momt_status fail(momt_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
momt_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const momt::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MOMT_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(MOMT_INTERNAL_ERROR, e.what());
  }
}

#define MOMT_REQUIRE(cond, msg) \
  if (!(cond)) return fail(MOMT_INVALID_ARGUMENT, msg)

momt::ProblemKind kind_of(momt_kind k) {
  return k == MOMT_KIND_VECTOR ? momt::ProblemKind::kVector : momt::ProblemKind::kMatrix;
}

}  // namespace

extern "C" {

const char* momt_last_error(void) { return last_error.c_str(); }

const char* momt_status_name(momt_status status) {
  switch (status) {
    case MOMT_OK: return "ok";
    case MOMT_NOT_CONVERGED: return "not-converged";
    case MOMT_INTERNAL_ERROR: return "internal-error";
    default:
      if (status > MOMT_OK && status <= MOMT_FORMAT_ERROR) {
        return momt::to_string(static_cast<momt::ErrorCode>(status - 1));
      }
      return "unknown";
  }
}

const char* momt_version(void) { return "1.0.0"; }

void momt_generator_options_default(momt_generator_options* o) {
  if (!o) return;
  const momt::GeneratorOptions d;
  o->kind = MOMT_KIND_MATRIX;
  o->generator = "disk-quarters";
  o->dim = d.dim;
  for (int a = 0; a < 3; ++a) o->extent[a] = d.extent[a];
  o->nt = d.nt;
  o->n = d.n;
  o->gamma = d.gamma;
  o->contrast = d.contrast;
  o->seed = d.seed;
  o->disk_radius = d.disk_radius;
  o->corner_radius = d.corner_radius;
  o->sigma_cells = d.sigma_cells;
}

momt_status momt_problem_generate(const momt_generator_options* o, momt_problem** out) {
  MOMT_REQUIRE(o && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    momt::GeneratorOptions g;
    g.kind = kind_of(o->kind);
    if (o->generator) g.name = o->generator;
    g.dim = o->dim;
    for (int a = 0; a < 3; ++a) g.extent[a] = o->extent[a];
    if (g.dim < 3) g.extent[2] = 1;
    g.nt = o->nt;
    g.n = o->n;
    g.gamma = o->gamma;
    g.contrast = o->contrast;
    g.seed = o->seed;
    g.disk_radius = o->disk_radius;
    g.corner_radius = o->corner_radius;
    g.sigma_cells = o->sigma_cells;
    *out = new momt_problem{momt::generate(g)};
    return MOMT_OK;
  });
}

momt_status momt_problem_load(const char* path, momt_problem** out) {
  MOMT_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new momt_problem{momt::load_problem(path)};
    return MOMT_OK;
  });
}

momt_status momt_problem_save(const momt_problem* p, const char* path) {
  MOMT_REQUIRE(p && path, "null argument");
  return guarded([&] {
    momt::save_problem(path, p->file);
    return MOMT_OK;
  });
}

momt_status momt_problem_set_gamma(momt_problem* p, double gamma) {
  MOMT_REQUIRE(p, "null argument");
  MOMT_REQUIRE(gamma > 0.0, "gamma must be positive");
  p->file.gamma = gamma;
  return MOMT_OK;
}

momt_status momt_problem_get_info(const momt_problem* p, momt_problem_info* info) {
  MOMT_REQUIRE(p && info, "null argument");
  return guarded([&] {
    const auto& f = p->file;
    info->kind = f.kind == momt::ProblemKind::kVector ? MOMT_KIND_VECTOR : MOMT_KIND_MATRIX;
    info->dim = f.grid.dim;
    for (int a = 0; a < 3; ++a) info->extent[a] = f.grid.extent[a];
    info->nt = f.grid.nt;
    info->n = f.n;
    info->basis_count = f.basis_count();
    info->gamma = f.gamma;
    info->contrast = f.contrast;
    info->contrast_rho0 = momt::measured_contrast(f, f.rho0);
    info->contrast_rho1 = momt::measured_contrast(f, f.rho1);
    info->seed = f.seed;
    return MOMT_OK;
  });
}

void momt_problem_free(momt_problem* p) { delete p; }

void momt_solver_config_default(momt_solver_config* c) {
  if (!c) return;
  const momt::SolverConfig d;
  c->tol_outer = d.tol_outer;
  c->tol_inner = 0.0;
  c->max_outer = d.max_outer;
  c->max_inner = d.max_inner;
  c->absolute_tol = 0;
}

momt_status momt_solve(const momt_problem* p, const momt_solver_config* c, momt_solution** out) {
  MOMT_REQUIRE(p && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    momt::SolverConfig config;
    if (c) {
      config.tol_outer = c->tol_outer;
      config.tol_inner = c->tol_inner > 0.0 ? c->tol_inner
                         : p->file.kind == momt::ProblemKind::kVector ? 1e-2
                                                                       : 1e-3;
      config.max_outer = c->max_outer;
      config.max_inner = c->max_inner;
      config.absolute_tol = c->absolute_tol != 0;
    } else if (p->file.kind == momt::ProblemKind::kVector) {
      config.tol_inner = 1e-2;
    }
    config.validate();
    const auto model = momt::make_model(p->file);
    auto* s = new momt_solution;
    s->result = momt::solve(*model, config);
    s->archive.problem = p->file;
    s->archive.converged = s->result.converged;
    s->archive.distance2 = s->result.distance2;
    s->archive.w = s->result.state.w;
    s->archive.lambda = s->result.state.lambda;
    *out = s;
    if (s->result.failure) {
      return fail(status_of(*s->result.failure), s->result.failure_message);
    }
    if (!s->result.converged) {
      return fail(MOMT_NOT_CONVERGED, "no convergence within the outer iteration limit");
    }
    return MOMT_OK;
  });
}

momt_status momt_solution_get_info(const momt_solution* s, momt_solution_info* info) {
  MOMT_REQUIRE(s && info, "null argument");
  info->converged = s->archive.converged ? 1 : 0;
  info->distance2 = s->archive.distance2;
  info->iterations = static_cast<int>(s->result.trace.size());
  info->residual = s->result.residual;
  info->warning_count = s->result.warnings.size();
  info->failure = s->result.failure ? status_of(*s->result.failure) : MOMT_OK;
  return MOMT_OK;
}

size_t momt_solution_trace_length(const momt_solution* s) { return s ? s->result.trace.size() : 0; }

momt_status momt_solution_trace_at(const momt_solution* s, size_t i, momt_trace_record* r) {
  MOMT_REQUIRE(s && r, "null argument");
  MOMT_REQUIRE(i < s->result.trace.size(), "trace index out of range");
  const auto& t = s->result.trace[i];
  *r = {t.iter, t.merit, t.cost, t.alpha, t.pcg_iters, t.shift};
  return MOMT_OK;
}

const char* momt_solution_warning(const momt_solution* s, size_t i) {
  if (!s || i >= s->result.warnings.size()) return nullptr;
  return s->result.warnings[i].c_str();
}

momt_status momt_solution_slice_masses(const momt_solution* s, double* masses, size_t capacity, size_t* count) {
  MOMT_REQUIRE(s, "null argument");
  return guarded([&] {
    const auto frames = momt::make_frames(s->archive.problem, s->archive.w);
    if (count) *count = frames.fields.size();
    if (masses) {
      if (capacity < frames.fields.size()) return fail(MOMT_SHAPE_MISMATCH, "mass buffer too small");
      for (size_t f = 0; f < frames.fields.size(); ++f) masses[f] = frames.mass(f);
    }
    return MOMT_OK;
  });
}

momt_status momt_solution_save(const momt_solution* s, const char* path) {
  MOMT_REQUIRE(s && path, "null argument");
  return guarded([&] {
    momt::save_solution(path, s->archive);
    return MOMT_OK;
  });
}

momt_status momt_solution_load(const char* path, momt_solution** out) {
  MOMT_REQUIRE(path && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* s = new momt_solution;
    try {
      s->archive = momt::load_solution(path);
    } catch (...) {
      delete s;
      throw;
    }
    s->result.converged = s->archive.converged;
    s->result.distance2 = s->archive.distance2;
    *out = s;
    return MOMT_OK;
  });
}

momt_status momt_solution_write_trace(const momt_solution* s, const char* path) {
  MOMT_REQUIRE(s && path, "null argument");
  std::ofstream out(path);
  if (!out) return fail(MOMT_IO_ERROR, std::string("cannot open ") + path + " for writing");
  out << "iter,merit,cost,alpha,pcg_iters,shift\n";
  char buf[256];
  for (const auto& t : s->result.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.6g,%d,%.6g\n", t.iter, t.merit, t.cost, t.alpha, t.pcg_iters,
                  t.shift);
    out << buf;
  }
  if (!out) return fail(MOMT_IO_ERROR, std::string("failed to write ") + path);
  return MOMT_OK;
}

momt_status momt_solution_export(const momt_solution* s, momt_export_format format, const char* target,
                                 size_t* files) {
  MOMT_REQUIRE(s && target, "null argument");
  MOMT_REQUIRE(format == MOMT_EXPORT_GLYPH_CSV || format == MOMT_EXPORT_PPM, "unknown export format");
  return guarded([&] {
    const auto frames = momt::make_frames(s->archive.problem, s->archive.w);
    size_t written = 1;
    if (format == MOMT_EXPORT_GLYPH_CSV) {
      momt::export_glyph_csv(frames, target);
    } else {
      written = momt::export_ppm_frames(frames, target).size();
    }
    if (files) *files = written;
    return MOMT_OK;
  });
}

void momt_solution_free(momt_solution* s) { delete s; }

momt_status momt_bench_create(const char* suite, const momt_bench_overrides* o, momt_bench_report** out) {
  MOMT_REQUIRE(suite && out, "null argument");
  *out = nullptr;
  return guarded([&] {
    momt::BenchOverrides ov;
    if (o) {
      if (o->extent[0] > 0) ov.extent = std::array<int, 3>{o->extent[0], o->extent[1], o->extent[2]};
      if (o->nt > 0) ov.nt = o->nt;
      if (o->gamma > 0.0) ov.gamma = o->gamma;
      if (o->tol_outer > 0.0) ov.tol_outer = o->tol_outer;
      if (o->tol_inner > 0.0) ov.tol_inner = o->tol_inner;
      if (o->max_outer > 0) ov.max_outer = o->max_outer;
      if (o->absolute_tol) ov.absolute_tol = true;
    }
    auto* r = new momt_bench_report;
    r->suite = suite;
    try {
      r->cases = momt::bench_cases(suite, ov);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    return MOMT_OK;
  });
}

size_t momt_bench_case_count(const momt_bench_report* r) { return r ? r->cases.size() : 0; }

const char* momt_bench_case_label(const momt_bench_report* r, size_t i) {
  if (!r || i >= r->cases.size()) return nullptr;
  return r->cases[i].label.c_str();
}

momt_status momt_bench_run_case(momt_bench_report* r, size_t i) {
  MOMT_REQUIRE(r, "null argument");
  MOMT_REQUIRE(i < r->cases.size(), "case index out of range");
  return guarded([&] {
    r->rows.push_back(momt::run_bench_case(r->cases[i]));
    return MOMT_OK;
  });
}

momt_status momt_bench_row_at(const momt_bench_report* r, size_t i, momt_bench_row* row) {
  MOMT_REQUIRE(r && row, "null argument");
  MOMT_REQUIRE(i < r->rows.size(), "row index out of range");
  const auto& b = r->rows[i];
  row->label = b.spec.label.c_str();
  row->iterations = b.iterations;
  row->reference_iterations = b.spec.reference_iterations;
  row->pcg_total = b.pcg_total;
  row->seconds = b.seconds;
  row->distance2 = b.distance2;
  row->converged = b.converged ? 1 : 0;
  row->status = b.status.c_str();
  return MOMT_OK;
}

momt_status momt_bench_write_csv(const momt_bench_report* r, const char* path) {
  MOMT_REQUIRE(r && path, "null argument");
  return guarded([&] {
    std::ofstream out(path);
    if (!out) return fail(MOMT_IO_ERROR, std::string("cannot open ") + path + " for writing");
    momt::write_bench_csv(out, r->rows);
    if (!out) return fail(MOMT_IO_ERROR, std::string("failed to write ") + path);
    return MOMT_OK;
  });
}

const char* momt_bench_table(momt_bench_report* r) {
  if (!r) return "";
  std::ostringstream out;
  momt::write_bench_table(out, r->rows);
  r->table = out.str();
  return r->table.c_str();
}

void momt_bench_free(momt_bench_report* r) { delete r; }

}  // extern "C"
