#include <gtest/gtest.h>

#include "cli_runner.hpp"
#include "oracles.hpp"

using namespace odflow;

namespace {

std::vector<std::string> with_out(std::vector<std::string> args, const std::filesystem::path& out) {
  args.push_back("--out");
  args.push_back(out.string());
  return args;
}

}  // namespace

TEST(CliSolveOd, GoldenInstance) {
  const auto dir = oracle::scratch_dir("cli_solve");
  const auto r = cli::run(with_out({"solve-od", "--margins", cli::data("golden_margins.csv"), "--costs",
                                    cli::data("golden_costs.csv"), "--beta", "1"},
                                   dir / "runs"),
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto run = cli::only_run(dir / "runs");
  const Eigen::MatrixXd d = csv::read_matrix(run / "d_star.csv");
  const auto ref = oracle::brute_force_2x2({0.6, 0.4}, {0.5, 0.5}, Eigen::Matrix2d{{0, 1}, {1, 0}}, 1.0);
  EXPECT_NEAR((d - ref).cwiseAbs().maxCoeff(), 0.0, 1e-6);
  const auto pot = load_potentials(run / "potentials.csv");
  EXPECT_EQ(pot.lamL[0], 0.0);
  const auto report = cli::slurp(run / "report.txt");
  EXPECT_EQ(cli::field(report, "converged"), "true");
  EXPECT_FALSE(cli::field(report, "mean_trip_time").empty());
  const auto meta = cli::slurp(run / "meta");
  EXPECT_EQ(cli::field(meta, "run_id"), run.filename().string());
  EXPECT_EQ(cli::field(meta, "config.beta"), "1");
  EXPECT_FALSE(cli::field(meta, "version").empty());
}

TEST(CliSolveOd, BetaZeroGivesOuterProduct) {
  const auto dir = oracle::scratch_dir("cli_beta0");
  const auto r = cli::run(with_out({"solve-od", "--margins", cli::data("golden_margins.csv"), "--costs",
                                    cli::data("golden_costs.csv"), "--beta", "0"},
                                   dir / "runs"),
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Eigen::MatrixXd d = csv::read_matrix(cli::only_run(dir / "runs") / "d_star.csv");
  EXPECT_NEAR((d - Eigen::Vector2d(0.6, 0.4) * Eigen::RowVector2d(0.5, 0.5)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(CliSolveOd, MissingCostFile) {
  const auto dir = oracle::scratch_dir("cli_missing");
  const auto r = cli::run(
      with_out({"solve-od", "--margins", cli::data("golden_margins.csv"), "--costs", "/nonexistent/costs.csv"},
               dir / "runs"),
      dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("PARSE_ERROR"), std::string::npos) << r.err;
}

TEST(CliConfig, FlagsOverrideConfig) {
  const auto dir = oracle::scratch_dir("cli_config");
  csv::write_text(dir / "run.cfg", "# golden\nmargins=" + cli::data("golden_margins.csv") +
                                       "\ncosts=" + cli::data("golden_costs.csv") + "\nbeta=0\n");
  const auto a = cli::run(with_out({"solve-od", "--config", (dir / "run.cfg").string()}, dir / "a"), dir);
  ASSERT_EQ(a.exit_code, 0) << a.err;
  EXPECT_EQ(cli::field(cli::slurp(cli::only_run(dir / "a") / "meta"), "config.beta"), "0");
  const auto b = cli::run(with_out({"solve-od", "--config", (dir / "run.cfg").string(), "--beta", "2"}, dir / "b"), dir);
  ASSERT_EQ(b.exit_code, 0) << b.err;
  EXPECT_EQ(cli::field(cli::slurp(cli::only_run(dir / "b") / "meta"), "config.beta"), "2");
}

TEST(CliConfig, UnknownKeyIsAnError) {
  const auto dir = oracle::scratch_dir("cli_badcfg");
  csv::write_text(dir / "run.cfg", "margins=" + cli::data("golden_margins.csv") + "\ncolour=blue\n");
  const auto r = cli::run(
      with_out({"solve-od", "--config", (dir / "run.cfg").string(), "--costs", cli::data("golden_costs.csv")},
               dir / "runs"),
      dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST(CliExchange, RequiresSeed) {
  const auto dir = oracle::scratch_dir("cli_noseed");
  const auto r = cli::run(with_out({"simulate-exchange", "--margins", cli::data("small_margins.csv"), "--costs",
                                    cli::data("golden_costs.csv"), "--events", "100"},
                                   dir / "runs"),
                          dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
}

TEST(CliExchange, SingleDistrictHasNothingToExchange) {
  const auto dir = oracle::scratch_dir("cli_n1");
  csv::write_text(dir / "m.csv", "district,L,W\n0,5,5\n");
  csv::write_text(dir / "c.csv", "0\n");
  const auto r = cli::run(with_out({"simulate-exchange", "--margins", (dir / "m.csv").string(), "--costs",
                                    (dir / "c.csv").string(), "--events", "10", "--seed", "1"},
                                   dir / "runs"),
                          dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("EMPTY_PROPENSITY"), std::string::npos) << r.err;
}

TEST(CliExchange, ConcentrationAndExactLaw) {
  const auto dir = oracle::scratch_dir("cli_exchange");
  const auto r = cli::run(with_out({"simulate-exchange", "--margins", cli::data("golden_margins_1e4.csv"), "--costs",
                                    cli::data("golden_costs.csv"), "--events", "700000", "--sample-every", "1000",
                                    "--sigma", "0.1", "--seed", "7"},
                                   dir / "runs"),
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto run = cli::only_run(dir / "runs");
  EXPECT_EQ(cli::field(cli::slurp(run / "report.txt"), "concentration"), "PASS");
  const auto meta = cli::slurp(run / "meta");
  EXPECT_EQ(cli::field(meta, "seed"), "7");
  EXPECT_EQ(cli::field(meta, "rng_id"), Rng::kId);
  EXPECT_EQ(cli::slurp(run / "trajectory.csv").substr(0, 29), "event_index,t,dist_to_dstar\n0");

  const auto small = cli::run(with_out({"simulate-exchange", "--margins", cli::data("small_margins.csv"), "--costs",
                                        cli::data("golden_costs.csv"), "--beta", "0", "--events", "200000",
                                        "--sample-every", "100", "--burn-in", "0", "--seed", "3", "--exact",
                                        "--with-state"},
                                       dir / "small"),
                              dir);
  ASSERT_EQ(small.exit_code, 0) << small.err;
  const auto srun = cli::only_run(dir / "small");
  const auto law = cli::slurp(srun / "stationary.csv");
  EXPECT_NE(law.find("1,1,1,1,0.6666666666666"), std::string::npos) << law;
  EXPECT_NE(cli::slurp(srun / "trajectory.csv").find(",d_1_1\n"), std::string::npos);
}

TEST(CliRoute, WardropAndSweep) {
  const auto dir = oracle::scratch_dir("cli_route");
  const auto r = cli::run(with_out({"route-eq", "--network", cli::data("two_link.net"), "--omega", "0"}, dir / "a"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto eq = cli::slurp(cli::only_run(dir / "a") / "equilibrium.csv");
  EXPECT_NE(eq.find("edge,e1,0.666666666"), std::string::npos) << eq;

  const auto s = cli::run(with_out({"route-eq", "--network", cli::data("double_parallel.net"), "--omega", "0.01",
                                    "--sweep", "1,0.1,0.01,0.001"},
                                   dir / "b"),
                          dir);
  ASSERT_EQ(s.exit_code, 0) << s.err;
  const auto rep = cli::slurp(cli::only_run(dir / "b") / "report.txt");
  EXPECT_EQ(cli::field(rep, "sweep"), "PASS");
  EXPECT_EQ(cli::field(rep, "method"), "sue");
}

TEST(CliRoute, SimulationNeedsSeed) {
  const auto dir = oracle::scratch_dir("cli_route_seed");
  const auto r = cli::run(
      with_out({"route-eq", "--network", cli::data("two_link.net"), "--agents", "100", "--events", "1000"}, dir / "a"),
      dir);
  EXPECT_NE(r.exit_code, 0);
}

TEST(CliSurvey, SizeMode) {
  const auto dir = oracle::scratch_dir("cli_size");
  const auto r = cli::run(with_out({"survey", "--epsilon", "0.1", "--sigma", "0.05"}, dir / "runs"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "2797\n");
}

TEST(CliSurvey, ZeroCountFile) {
  const auto dir = oracle::scratch_dir("cli_zero");
  csv::write_text(dir / "counts.csv", "0,0\n3,4\n");
  const auto r = cli::run(with_out({"survey", "--counts", (dir / "counts.csv").string(), "--costs",
                                    cli::data("golden_costs.csv")},
                                   dir / "runs"),
                          dir);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("ZERO_MARGIN"), std::string::npos) << r.err;
}

TEST(CliSurvey, GenerateRecoverMatchesLibrary) {
  const auto dir = oracle::scratch_dir("cli_survey");
  const auto r = cli::run(with_out({"survey", "--margins", cli::data("three_margins.csv"), "--costs",
                                    cli::data("three_costs.csv"), "--beta", "1", "--respondents", "50000", "--seed",
                                    "11"},
                                   dir / "runs"),
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto run = cli::only_run(dir / "runs");
  const auto inst = load_instance(cli::data("three_margins.csv"), cli::data("three_costs.csv"), 1.0);
  const auto truth = solve_sinkhorn(inst).d_star.d;
  const auto fit = mle_fit_gravity(sample_survey(truth, 50'000, 11), inst.T, 1.0);
  const Eigen::MatrixXd got = csv::read_matrix(run / "d_mle.csv");
  EXPECT_NEAR((got - fit.d_star.d).cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_LE((got - truth).norm(), 0.02);

  // fit mode on the written counts reproduces the same estimate
  const auto f = cli::run(with_out({"survey", "--counts", (run / "counts.csv").string(), "--costs",
                                    cli::data("three_costs.csv"), "--beta", "1"},
                                   dir / "fit"),
                          dir);
  ASSERT_EQ(f.exit_code, 0) << f.err;
  EXPECT_EQ(cli::slurp(cli::only_run(dir / "fit") / "d_mle.csv"), cli::slurp(run / "d_mle.csv"));
}

TEST(CliMixing, ScanPasses) {
  const auto dir = oracle::scratch_dir("cli_mixing");
  const auto r = cli::run(with_out({"mixing-scan", "--margins", cli::data("mixing_margins.csv"), "--costs",
                                    cli::data("golden_costs.csv"), "--beta", "3", "--seed", "1"},
                                   dir / "runs"),
                          dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto csv_text = cli::slurp(cli::only_run(dir / "runs") / "mixing.csv");
  EXPECT_EQ(csv_text.substr(0, 39), "N,threshold,start_distance,mean_t_half,");
}

TEST(CliRunId, ExplicitRunIdAndRerunAreIdentical) {
  const auto dir = oracle::scratch_dir("cli_runid");
  const std::vector<std::string> args{"route-eq", "--network", cli::data("two_link.net"), "--omega", "0.1",
                                      "--agents", "1000", "--events", "150000", "--seed", "5"};
  auto a = args;
  a.insert(a.end(), {"--run-id", "fixed"});
  const auto fixed = cli::run(with_out(a, dir / "x"), dir);
  ASSERT_EQ(fixed.exit_code, 0) << fixed.out << fixed.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "x" / "fixed" / "meta"));
  ASSERT_EQ(cli::run(with_out(args, dir / "y"), dir).exit_code, 0);
  ASSERT_EQ(cli::run(with_out(args, dir / "z"), dir).exit_code, 0);
  EXPECT_EQ(cli::tree(dir / "y"), cli::tree(dir / "z"));
  auto other = args;
  other.back() = "6";
  ASSERT_EQ(cli::run(with_out(other, dir / "w"), dir).exit_code, 0);
  EXPECT_NE(cli::only_run(dir / "w").filename(), cli::only_run(dir / "y").filename());
}
