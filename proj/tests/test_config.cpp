#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "prufer_lab/config.hpp"

using namespace prufer_lab;

TEST(Config, DefaultsWithoutTables) {
  const auto c = parse_config("");
  EXPECT_EQ(c.mode, Mode::kSpectrum);
  EXPECT_EQ(c.runs, 1u);
  EXPECT_DOUBLE_EQ(c.op.L, 400.0);
  EXPECT_EQ(c.potential.fourier.size(), 2u);
  EXPECT_TRUE(c.tables.empty());
}

TEST(Config, ParsesTables) {
  const auto c = parse_config(R"(
[experiment]
mode = "sine-beta"
runs = 12
seed = 99
checks = false

[potential]
alpha = 0.2
dim = 2
fourier = [[1, 0, 0.5, 0.0], [-1, 0, 0.5, 0.0]]

[sde]
beta = 0.5
horizon = 50.0
dt = 0.02
noise_scale = 3.0
)");
  EXPECT_EQ(c.mode, Mode::kSineBeta);
  EXPECT_EQ(c.runs, 12u);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_FALSE(c.checks);
  EXPECT_DOUBLE_EQ(c.potential.alpha, 0.2);
  ASSERT_EQ(c.potential.fourier.size(), 2u);
  EXPECT_EQ(c.potential.fourier[0].k, (std::vector<int>{1, 0}));
  EXPECT_DOUBLE_EQ(c.sde.beta, 0.5);
  EXPECT_DOUBLE_EQ(c.sde.sine.horizon, 50.0);
  EXPECT_DOUBLE_EQ(c.sde.sine.dt, 0.02);
  EXPECT_DOUBLE_EQ(c.sde.relative.dt, 0.02);
  ASSERT_TRUE(c.sde.relative.noise_scale.has_value());
  EXPECT_DOUBLE_EQ(*c.sde.relative.noise_scale, 3.0);
  EXPECT_TRUE(c.tables.count("sde"));
}

TEST(Config, SineBetaHorizonKeepsItsOwnDefault) {
  const auto c = parse_config("[sde]\nbeta = 1.0\n");
  EXPECT_DOUBLE_EQ(c.sde.sine.horizon, SineBetaOptions{}.horizon);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config("[operator]\nLL = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nmode = \"bogus\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nruns = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("[potential]\nfourier = [[1, 1.0, 0.0]]\n"), ConfigError);
  EXPECT_THROW(parse_config("[sde]\nkind = \"other\"\n"), ConfigError);
}

TEST(Config, ParseErrorCarriesLineAndColumn) {
  try {
    parse_config("[experiment]\nruns = = 3\n", "bad.toml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(msg.rfind("bad.toml:2:", 0), 0u) << msg;
  }
}

TEST(Config, RequiredTablesPerMode) {
  auto c = parse_config("[experiment]\nmode = \"spectrum\"\n[potential]\nalpha = 0.3\n");
  EXPECT_THROW(require_tables(c), ConfigError);
  c = parse_config("[experiment]\nmode = \"spectrum\"\n[potential]\n[operator]\n");
  EXPECT_NO_THROW(require_tables(c));
  c = parse_config("[experiment]\nmode = \"explosion\"\n");
  EXPECT_THROW(require_tables(c), ConfigError);
  c = parse_config("[experiment]\nmode = \"report\"\n");
  EXPECT_NO_THROW(require_tables(c));
}

TEST(Config, EchoOmitsWorkersAndOutput) {
  auto c = parse_config("[experiment]\nthreads = 3\nout = \"somewhere\"\n");
  const auto j = to_json(c);
  EXPECT_FALSE(j["experiment"].contains("threads"));
  EXPECT_FALSE(j["experiment"].contains("out"));
  c.threads = 1;
  c.out = "elsewhere";
  EXPECT_EQ(to_json(c), j);
  EXPECT_TRUE(j["sde"]["noise_scale"].is_null());
}

TEST(Config, PresetsParse) {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(PRUFER_LAB_PRESETS)) {
    if (entry.path().extension() != ".toml") continue;
    ++seen;
    ExperimentConfig c;
    ASSERT_NO_THROW(c = load_config(entry.path())) << entry.path();
    EXPECT_NO_THROW(require_tables(c)) << entry.path();
  }
  EXPECT_GE(seen, 5u);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/x.toml"), ConfigError); }
