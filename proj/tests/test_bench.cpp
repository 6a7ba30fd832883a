#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "srom/experiment.hpp"

using namespace srom;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(is, l)) out.push_back(l);
  return out;
}

ExperimentReport fake(Variant v, std::size_t n, double e, double c) {
  ExperimentReport r;
  r.case_label = "test1";
  r.variant = v;
  r.nx = 1000;
  r.n_t = r.n_mu = 2;
  r.n = n;
  r.n_pct = n / 10.0;
  r.error.max_error = e;
  r.error.unstable = e > 1e6;
  r.runtime.mean = c;
  return r;
}

}  // namespace

TEST(Error, RelativeL2) {
  const CartesianGrid g(1, {0, 0}, 1.0, 2);
  const Field a(g, {1, 0}), b(g, {1, 1}), z(g);
  EXPECT_DOUBLE_EQ(compute_error(a, b), 1.0);
  EXPECT_DOUBLE_EQ(compute_error(a, a), 0.0);
  EXPECT_DOUBLE_EQ(compute_error(a, z), 1.0);
  EXPECT_THROW(compute_error(z, a), UndefinedReference);
}

TEST(Variants, ParseAndLabel) {
  EXPECT_EQ(parse_variant("Adp-SS"), Variant::AdpSS);
  EXPECT_EQ(parse_variant("N-Adp-SS-ROM"), Variant::NAdpSS);
  EXPECT_EQ(to_string(Variant::S), "S-ROM");
  EXPECT_THROW(parse_variant("POD"), ConfigError);
  EXPECT_TRUE(is_hyper_reduced(Variant::NAdpSS));
  EXPECT_FALSE(is_hyper_reduced(Variant::SS));
}

TEST(Report, EmptyListRejected) {
  EXPECT_THROW(emit_report({}, fs::temp_directory_path() / "srom_empty.csv"), ConfigError);
}

TEST(Report, OneRowPlusHeader) {
  const auto dir = fs::temp_directory_path() / "srom_report_one";
  fs::remove_all(dir);
  emit_report({fake(Variant::SS, 1000, 0.11, 2.0)}, dir / "r.csv");
  const auto l = lines(dir / "r.csv");
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "case,variant,N_x,N_t,N_mu,n,n_pct,E,C,C_adapt,C_A,C_b,C_ls,unstable_flag");
  EXPECT_EQ(l[1].substr(0, 14), "test1,SS-ROM,1");
  EXPECT_TRUE(fs::exists(dir / "r_error_vs_n.csv"));
  EXPECT_TRUE(fs::exists(dir / "r_error_vs_runtime.csv"));
  fs::remove_all(dir);
}

TEST(Report, SweepTableShape) {
  std::vector<ExperimentReport> reps;
  for (auto v : {Variant::AdpSS, Variant::NAdpSS})
    for (std::size_t n : {800u, 100u, 400u, 200u}) reps.push_back(fake(v, n, v == Variant::AdpSS ? 0.1 : 1e12, n * 1e-4));
  const auto dir = fs::temp_directory_path() / "srom_report_sweep";
  fs::remove_all(dir);
  emit_report(reps, dir / "t3.csv");
  EXPECT_EQ(lines(dir / "t3.csv").size(), 9u);
  const auto by_n = lines(dir / "t3_error_vs_n.csv");
  ASSERT_EQ(by_n.size(), 9u);
  // sorted by n: the first two data rows have n = 100
  EXPECT_NE(by_n[1].find(",100,"), std::string::npos);
  EXPECT_NE(by_n[2].find(",100,"), std::string::npos);
  EXPECT_EQ(by_n[1].back(), '0');  // Adp stable
  EXPECT_EQ(by_n[2].back(), '1');  // N-Adp flagged
  fs::remove_all(dir);
}

TEST(Config, ShippedDefaults) {
  const auto t1 = cli::load_config(std::string(SROM_CONFIG_DIR) + "/test1.cfg");
  EXPECT_EQ(t1.tc.nx, 1000);
  EXPECT_EQ(t1.tc.n_t, 2);
  EXPECT_EQ(t1.tc.n_mu, 2);
  EXPECT_EQ(t1.mesh_size(), 5u);
  EXPECT_EQ(t1.tc.targets_mu, 40);
  EXPECT_EQ(t1.sweep_n, (std::vector<std::size_t>{100, 200, 400, 800}));
  EXPECT_EQ(t1.experiment.repeats, 3);

  const auto t2 = cli::load_config(std::string(SROM_CONFIG_DIR) + "/test2.cfg");
  EXPECT_TRUE(t2.tc.is_static);
  EXPECT_EQ(t2.tc.nx, 600);
  EXPECT_EQ(t2.mesh_size(), 3600u);
  EXPECT_EQ(t2.tc.m_hyp, 4);

  const auto t3 = cli::load_config(std::string(SROM_CONFIG_DIR) + "/test3.cfg");
  EXPECT_EQ(t3.tc.nx, 800);
  EXPECT_EQ(t3.tc.n_t, 6);
  EXPECT_EQ(t3.mesh_size(), 12800u);
  EXPECT_EQ(t3.tc.targets_mu, 50);
}

TEST(Config, BadValuesRejected) {
  const auto p = fs::temp_directory_path() / "srom_bad.cfg";
  {
    std::ofstream os(p);
    os << "[case]\nname = nope\n";
  }
  EXPECT_THROW(cli::load_config(p.string()), ConfigError);
  {
    std::ofstream os(p);
    os << "[case]\nname = test1\n[grid]\nnx = many\n";
  }
  EXPECT_THROW(cli::load_config(p.string()), ConfigError);
  {
    std::ofstream os(p);
    os << "[case]\nname = test1\n[shifts]\nmode = diagonal\n";
  }
  EXPECT_THROW(cli::load_config(p.string()), ConfigError);
  fs::remove(p);
}

TEST(Experiment, SmallTest1VariantsOrdered) {
  auto off = build_offline(test1_case(200));
  build_hyper(off);
  ExperimentOptions opt;
  opt.targets_mu = 5;
  const auto ss = run_experiment(off, Variant::SS, 0, opt);
  const auto s = run_experiment(off, Variant::S, 0, opt);
  EXPECT_LT(ss.error.max_error, s.error.max_error);
  EXPECT_EQ(ss.error.per_target.size(), 5u);
  EXPECT_EQ(ss.n, 200u);
  EXPECT_FALSE(ss.error.unstable);
}

TEST(Experiment, HyperVariantNeedsOfflineStage) {
  const auto off = build_offline(test1_case(100));
  EXPECT_THROW(run_experiment(off, Variant::AdpSS, 5), ConfigError);
}

TEST(Experiment, OfflineRoundTrip) {
  auto tc = test1_case(100);
  auto off = build_offline(tc);
  build_hyper(off);
  const auto dir = fs::temp_directory_path() / "srom_offline_rt";
  fs::remove_all(dir);
  save_offline(off, dir);
  const auto back = load_offline(tc, dir);
  EXPECT_EQ(back.ranked_shifted, off.ranked_shifted);
  EXPECT_EQ(back.z_ref, off.z_ref);
  ExperimentOptions opt;
  opt.targets_mu = 3;
  EXPECT_EQ(run_experiment(off, Variant::AdpSS, 10, opt).error.max_error,
            run_experiment(back, Variant::AdpSS, 10, opt).error.max_error);
  fs::remove_all(dir);
}
