/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
// Links only the shared library through its C header.
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include "flexsig/flexsig.h"

namespace fs = std::filesystem;

namespace {

struct ConfigGuard {
  fxs_config* c = nullptr;
  ~ConfigGuard() { fxs_config_free(c); }
};

struct RunGuard {
  fxs_run* r = nullptr;
  ~RunGuard() { fxs_run_free(r); }
};

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(fxs_version()) > 0);
  ConfigGuard g;
  CHECK(fxs_config_parse(R"({"population": {"bad_key": 1}})", &g.c) == FXS_ERR_CONFIG);
  CHECK(g.c == nullptr);
  CHECK(std::string(fxs_last_error()).find("population.bad_key") != std::string::npos);
  CHECK(fxs_config_default(&g.c) == FXS_OK);
  CHECK(std::string(fxs_last_error()).empty());
  CHECK(fxs_config_default(nullptr) == FXS_ERR_ARGUMENT);
  CHECK(fxs_config_set_mode(g.c, "psychic") != FXS_OK);
  CHECK(fxs_config_set_mode(nullptr, "tou") == FXS_ERR_ARGUMENT);
  CHECK(fxs_config_load("/nonexistent/flexsig.json", &g.c) == FXS_ERR_CONFIG);
}

TEST_CASE("config JSON buffer handling") {
  ConfigGuard g;
  REQUIRE(fxs_config_default(&g.c) == FXS_OK);
  size_t needed = 0;
  CHECK(fxs_config_to_json(g.c, nullptr, 0, &needed) == FXS_OK);
  REQUIRE(needed > 1);
  std::vector<char> small(8, 'x');
  CHECK(fxs_config_to_json(g.c, small.data(), small.size(), nullptr) == FXS_ERR_ARGUMENT);
  CHECK(std::strlen(small.data()) == 7);
  std::vector<char> buf(needed);
  CHECK(fxs_config_to_json(g.c, buf.data(), buf.size(), nullptr) == FXS_OK);
  CHECK(std::strlen(buf.data()) == needed - 1);

  char fp[32] = {};
  CHECK(fxs_config_fingerprint(g.c, fp, sizeof fp) == FXS_OK);
  CHECK(std::strlen(fp) == 16);
  CHECK(fxs_config_override_seed(g.c, "weather=3") == FXS_OK);
  char fp2[32] = {};
  CHECK(fxs_config_fingerprint(g.c, fp2, sizeof fp2) == FXS_OK);
  CHECK(std::string(fp) != std::string(fp2));
  CHECK(fxs_config_override_seed(g.c, "weather") == FXS_ERR_CONFIG);
}

TEST_CASE("simulate and verify through the C API") {
  const fs::path out = fs::temp_directory_path() / "flexsig_test_capi";
  fs::remove_all(out);
  ConfigGuard g;
  REQUIRE(fxs_config_parse(R"({"population": {"n_households": 5}, "weather": {"n_days": 2}})", &g.c) == FXS_OK);
  REQUIRE(fxs_config_set_output_dir(g.c, out.string().c_str()) == FXS_OK);

  int n = 0, pv = 0, part = 0;
  CHECK(fxs_generate(g.c, &n, &pv, &part) == FXS_OK);
  CHECK(n == 5);
  CHECK(pv == 1);
  CHECK(part == 3);

  RunGuard run;
  REQUIRE(fxs_simulate(g.c, &run.r) == FXS_OK);
  CHECK(fxs_run_days(run.r) == 2);
  REQUIRE(fxs_run_slots(run.r) == 24);
  std::vector<double> d(24), b(24);
  CHECK(fxs_run_demand(run.r, 1, 0, d.data(), d.size()) == FXS_OK);
  CHECK(fxs_run_demand(run.r, 1, 1, b.data(), b.size()) == FXS_OK);
  CHECK(fxs_run_demand(run.r, 5, 0, d.data(), d.size()) == FXS_ERR_ARGUMENT);
  CHECK(fxs_run_demand(run.r, 0, 0, d.data(), 3) == FXS_ERR_ARGUMENT);
  double v = 0.0;
  CHECK(fxs_run_summary(run.r, "mean_pds_pct", &v) == FXS_OK);
  CHECK(fxs_run_summary(run.r, "no_such_field", &v) == FXS_ERR_ARGUMENT);

  double worst = 1.0;
  CHECK(fxs_verify(out.string().c_str(), &worst) == FXS_OK);
  CHECK(worst <= 1e-9);
  CHECK(fxs_verify("/nonexistent/run", &worst) != FXS_OK);
  fs::remove_all(out);
}
