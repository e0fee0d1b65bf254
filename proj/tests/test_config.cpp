#include <doctest.h>

#include <filesystem>

#include "cascade/config.hpp"
#include "cascade/hill.hpp"

using namespace cascade;

namespace {

const std::filesystem::path kConfigs = CASCADE_CONFIG_DIR;

const char* kMinimal = R"(
[model]
k = 2
mu = [1, 2]
alpha = [1]
feedback = affine
slope = -0.5
intercept = 1.5

[delays]
tau = 1
kernel = dirac
kernel.at = -1
)";

std::string error_key(const std::string& text) {
  try {
    parse_config_text(text, kConfigs);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("bundled configs parse") {
  auto hes1 = parse_config(kConfigs / "hes1_h2.cfg");
  REQUIRE(hes1.hes1.has_value());
  CHECK(hes1.hes1->h == 2.0);
  CHECK(hes1_ratio(*hes1.hes1) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(hes1.simulation.mc_runs == 100);
  CHECK(hes1.simulation.tol == 1e-6);
  CHECK(hes1.analysis.m_max == 200);

  auto pathway = parse_config(kConfigs / "pathway.cfg");
  REQUIRE(pathway.model.has_value());
  REQUIRE(pathway.delays.has_value());
  CHECK(pathway.model->hill == std::vector<double>{1.0, 2.0, 2.0});
  REQUIRE(pathway.delays->kernels.size() == 3);
  CHECK(pathway.delays->kernels[0].kind == "table");
  CHECK(pathway.delays->kernels[1].params == std::vector<double>{0.0});
  CHECK(pathway.delays->kernels[2].params == std::vector<double>{-1.0, -0.5});

  auto spec = build_cascade(pathway);
  CHECK(spec.k == 3);
  CHECK(spec.kernels.size() == 3);
  CHECK(spec.feedback.as_hill() != nullptr);

  auto cooke = parse_config(kConfigs / "cooke.cfg");
  REQUIRE(cooke.cooke.has_value());
  CHECK(cooke.cooke->b < cooke.cooke->c);
}

TEST_CASE("default kernel applies to every equation, numbered keys override") {
  auto cfg = parse_config_text(std::string(kMinimal) + "kernel2 = uniform\nkernel2.a = -1\nkernel2.b = 0\n");
  REQUIRE(cfg.delays->kernels.size() == 2);
  CHECK(cfg.delays->kernels[0].kind == "dirac");
  CHECK(cfg.delays->kernels[1].kind == "uniform");
  auto spec = build_cascade(cfg);
  CHECK(spec.feedback(1.0) == doctest::Approx(1.0));
}

TEST_CASE("round trip") {
  for (const char* name : {"hes1_h2.cfg", "hes1_post_hopf.cfg", "cooke.cfg", "pathway.cfg"}) {
    INFO(name);
    auto a = parse_config(kConfigs / name);
    auto b = parse_config_text(serialize_config(a), a.base_dir);
    CHECK(a == b);
    CHECK(serialize_config(b) == serialize_config(a));
  }
  auto m = parse_config_text(kMinimal);
  CHECK(parse_config_text(serialize_config(m)) == m);
}

TEST_CASE("errors name the offending key") {
  CHECK(error_key("[model]\nk = 2\nmu = [1, -1]\nalpha = [1]\nhill.mu = 1\nhill.b = 1\nhill.h = 2\n"
                  "[delays]\ntau = 1\nkernel = dirac\nkernel.at = 0\n") == "model.mu[1]");
  CHECK(error_key("[model]\nk = 2\nmu = [1, x]\n") == "model.mu[1]");
  CHECK(error_key(std::string(kMinimal) + "bogus = 1\n") == "delays.bogus");
  CHECK(error_key(std::string(kMinimal) + "[extras]\n") == "extras");
  CHECK(error_key("[simulation]\nt_end = 10\n") == "");
  CHECK(error_key(std::string(kMinimal) + "[cooke]\nb = 0.5\nc = 1\ntau = 1\n") == "");
  CHECK(error_key(std::string(kMinimal) + "[simulation]\nmc_runs = 0\n") == "simulation.mc_runs");
  CHECK(error_key(std::string(kMinimal) + "[simulation]\ntol = -1\n") == "simulation.tol");
  CHECK(error_key(std::string(kMinimal) + "[simulation]\nhistory_bounds = [2, 1]\n") ==
        "simulation.history_bounds[0]");
}

TEST_CASE("kernel errors") {
  const std::string head = "[model]\nk = 1\nmu = [1]\nhill.mu = 1\nhill.b = 1\nhill.h = 2\n[delays]\ntau = 1\n";
  CHECK(error_key(head + "kernel = table\nkernel.file = missing.csv\n") == "delays.kernel.file");
  CHECK(error_key(head + "kernel = gamma\n") == "delays.kernel");
  CHECK(error_key(head + "kernel = uniform\nkernel.a = -1\n") == "delays.kernel.b");
  CHECK(error_key(head) == "delays.kernel1");
  // Overlapping supports are rejected when the kernel is built.
  CHECK(error_key(head + "kernel = dirac\nkernel.at = 0.5\n") == "delays.kernel");
}

TEST_CASE("kernel table reader") {
  auto [s, d] = read_kernel_table(kConfigs / "pathway_kernel.csv");
  REQUIRE(s.size() == d.size());
  CHECK(s.size() >= 2);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  CHECK_THROWS_AS(read_kernel_table(kConfigs / "nope.csv"), ConfigError);
}
