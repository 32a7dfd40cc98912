#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "momt/momt.h"

namespace {

std::string temp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("momt_capi_" + name)).string();
}

momt_problem* small_problem(momt_kind kind) {
  momt_generator_options o;
  momt_generator_options_default(&o);
  o.kind = kind;
  o.extent[0] = o.extent[1] = 16;
  o.nt = 4;
  o.gamma = 0.05;
  momt_problem* p = nullptr;
  REQUIRE(momt_problem_generate(&o, &p) == MOMT_OK);
  return p;
}

}  // namespace

TEST_CASE("metadata") {
  CHECK(std::string(momt_version()) == "1.0.0");
  CHECK(std::string(momt_status_name(MOMT_OK)) == "ok");
  CHECK(std::string(momt_status_name(MOMT_NOT_CONVERGED)) != "");
  CHECK(std::string(momt_status_name(static_cast<momt_status>(99))) != "");
}

TEST_CASE("generate, solve, save and export") {
  for (momt_kind kind : {MOMT_KIND_MATRIX, MOMT_KIND_VECTOR}) {
    momt_problem* p = small_problem(kind);
    momt_problem_info info;
    REQUIRE(momt_problem_get_info(p, &info) == MOMT_OK);
    CHECK(info.kind == kind);
    CHECK(info.extent[0] == 16);
    CHECK(info.nt == 4);
    CHECK(info.contrast_rho0 == doctest::Approx(10.0).epsilon(0.1));

    const std::string problem_path = temp("p.momt");
    REQUIRE(momt_problem_save(p, problem_path.c_str()) == MOMT_OK);
    momt_problem* loaded = nullptr;
    REQUIRE(momt_problem_load(problem_path.c_str(), &loaded) == MOMT_OK);
    momt_problem_info loaded_info;
    REQUIRE(momt_problem_get_info(loaded, &loaded_info) == MOMT_OK);
    CHECK(loaded_info.basis_count == info.basis_count);
    momt_problem_free(loaded);
    std::filesystem::remove(problem_path);

    momt_solver_config config;
    momt_solver_config_default(&config);
    momt_solution* s = nullptr;
    REQUIRE(momt_solve(p, &config, &s) == MOMT_OK);
    momt_solution_info si;
    REQUIRE(momt_solution_get_info(s, &si) == MOMT_OK);
    CHECK(si.converged == 1);
    CHECK(si.iterations > 0);
    CHECK(si.distance2 > 0.0);
    CHECK(si.failure == MOMT_OK);
    CHECK(momt_solution_trace_length(s) == static_cast<size_t>(si.iterations));
    momt_trace_record rec;
    REQUIRE(momt_solution_trace_at(s, 0, &rec) == MOMT_OK);
    CHECK(rec.iter == 1);
    CHECK(momt_solution_trace_at(s, 1000, &rec) == MOMT_INVALID_ARGUMENT);

    std::vector<double> masses(16);
    size_t count = 0;
    REQUIRE(momt_solution_slice_masses(s, masses.data(), masses.size(), &count) == MOMT_OK);
    CHECK(count == 5);
    for (size_t j = 0; j < count; ++j) CHECK(masses[j] == doctest::Approx(1.0).epsilon(config.tol_outer));
    CHECK(momt_solution_slice_masses(s, masses.data(), 2, &count) == MOMT_SHAPE_MISMATCH);

    const std::string solution_path = temp("s.moms");
    REQUIRE(momt_solution_save(s, solution_path.c_str()) == MOMT_OK);
    momt_solution* back = nullptr;
    REQUIRE(momt_solution_load(solution_path.c_str(), &back) == MOMT_OK);
    momt_solution_info bi;
    REQUIRE(momt_solution_get_info(back, &bi) == MOMT_OK);
    CHECK(bi.distance2 == si.distance2);
    CHECK(bi.converged == 1);
    momt_solution_free(back);
    std::filesystem::remove(solution_path);

    const std::string trace_path = temp("trace.csv");
    REQUIRE(momt_solution_write_trace(s, trace_path.c_str()) == MOMT_OK);
    std::FILE* f = std::fopen(trace_path.c_str(), "r");
    REQUIRE(f != nullptr);
    char header[128] = {};
    REQUIRE(std::fgets(header, sizeof header, f) != nullptr);
    std::fclose(f);
    CHECK(std::string(header) == "iter,merit,cost,alpha,pcg_iters,shift\n");
    std::filesystem::remove(trace_path);

    size_t files = 0;
    const std::string prefix = temp("frame");
    REQUIRE(momt_solution_export(s, MOMT_EXPORT_PPM, prefix.c_str(), &files) == MOMT_OK);
    CHECK(files == 5);
    for (size_t j = 0; j < files; ++j) {
      char name[32];
      std::snprintf(name, sizeof name, "_%03zu.ppm", j);
      CHECK(std::filesystem::remove(prefix + name));
    }
    const std::string glyphs = temp("glyphs.csv");
    REQUIRE(momt_solution_export(s, MOMT_EXPORT_GLYPH_CSV, glyphs.c_str(), &files) == MOMT_OK);
    CHECK(files == 1);
    CHECK(std::filesystem::remove(glyphs));

    momt_solution_free(s);
    momt_problem_free(p);
  }
}

TEST_CASE("iteration limit still returns the iterate") {
  momt_problem* p = small_problem(MOMT_KIND_MATRIX);
  momt_solver_config config;
  momt_solver_config_default(&config);
  config.max_outer = 1;
  momt_solution* s = nullptr;
  CHECK(momt_solve(p, &config, &s) == MOMT_NOT_CONVERGED);
  REQUIRE(s != nullptr);
  momt_solution_info si;
  REQUIRE(momt_solution_get_info(s, &si) == MOMT_OK);
  CHECK(si.converged == 0);
  CHECK(si.iterations == 1);
  momt_solution_free(s);
  momt_problem_free(p);
}

TEST_CASE("errors") {
  momt_problem* p = nullptr;
  CHECK(momt_problem_load(temp("absent.momt").c_str(), &p) == MOMT_IO_ERROR);
  CHECK(p == nullptr);
  CHECK(std::strlen(momt_last_error()) > 0);

  CHECK(momt_problem_generate(nullptr, &p) == MOMT_INVALID_ARGUMENT);
  CHECK(momt_problem_get_info(nullptr, nullptr) == MOMT_INVALID_ARGUMENT);
  CHECK(momt_solve(nullptr, nullptr, nullptr) == MOMT_INVALID_ARGUMENT);

  momt_generator_options o;
  momt_generator_options_default(&o);
  o.contrast = 0.5;
  CHECK(momt_problem_generate(&o, &p) == MOMT_INVALID_CONTRAST);
  CHECK(std::string(momt_last_error()).find("contrast") != std::string::npos);

  const std::string garbage = temp("garbage.momt");
  std::FILE* f = std::fopen(garbage.c_str(), "wb");
  std::fputs("MOMTgarbage", f);
  std::fclose(f);
  CHECK(momt_problem_load(garbage.c_str(), &p) == MOMT_FORMAT_ERROR);
  std::filesystem::remove(garbage);

  p = small_problem(MOMT_KIND_VECTOR);
  CHECK(momt_problem_set_gamma(p, -1.0) == MOMT_INVALID_ARGUMENT);
  CHECK(momt_problem_set_gamma(p, 0.2) == MOMT_OK);
  momt_solver_config config;
  momt_solver_config_default(&config);
  config.tol_outer = 3.0;
  momt_solution* s = nullptr;
  CHECK(momt_solve(p, &config, &s) == MOMT_INVALID_ARGUMENT);
  CHECK(s == nullptr);
  momt_problem_free(p);
  momt_problem_free(nullptr);
  momt_solution_free(nullptr);
}

TEST_CASE("bench") {
  momt_bench_report* r = nullptr;
  CHECK(momt_bench_create("nope", nullptr, &r) == MOMT_INVALID_ARGUMENT);
  momt_bench_overrides o{};
  o.extent[0] = o.extent[1] = 16;
  o.extent[2] = 1;
  o.nt = 4;
  REQUIRE(momt_bench_create("table1", &o, &r) == MOMT_OK);
  REQUIRE(momt_bench_case_count(r) > 0);
  CHECK(std::string(momt_bench_case_label(r, 0)).find("16x16") != std::string::npos);
  REQUIRE(momt_bench_run_case(r, 0) == MOMT_OK);
  momt_bench_row row;
  REQUIRE(momt_bench_row_at(r, 0, &row) == MOMT_OK);
  CHECK(row.converged == 1);
  CHECK(std::string(row.status) == "ok");
  CHECK(std::string(momt_bench_table(r)).find("16x16") != std::string::npos);
  const std::string csv = temp("bench.csv");
  CHECK(momt_bench_write_csv(r, csv.c_str()) == MOMT_OK);
  CHECK(std::filesystem::remove(csv));
  momt_bench_free(r);
}
