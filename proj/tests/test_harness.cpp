#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "seqstop/campaign.hpp"
#include "seqstop/config.hpp"
#include "seqstop/emit.hpp"

using namespace seqstop;

namespace {

CampaignSpec small_diffusion_campaign() {
  CampaignSpec spec;
  spec.mode = CampaignMode::diffusion;
  spec.grid = {0.0, 1.0, 2.19613, 3.0};
  spec.reps = 2000;
  spec.master_seed = 9001;
  return spec;
}

std::string emit_to_string(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

}  // namespace

TEST_CASE("config parsing", "[harness]") {
  const std::string text =
      "# top comment\n"
      "[design]\n"
      "c = 2.0\n"
      "sigma1 = 1.5\n"
      "\n"
      "[campaign]\n"
      "grid = 0, 0.5 , 1.0\n"
      "reps = 250\n"
      "mode = discrete\n"
      "; another comment\n"
      "[diffusion]\n"
      "bridge = true\n";
  const Config cfg = Config::parse_string(text);
  CHECK(cfg.get_double("design.c", 0.0) == 2.0);
  CHECK(cfg.get_double("design.sigma1", 0.0) == 1.5);
  CHECK(cfg.get_double("design.sigma0", 7.25) == 7.25);  // fallback
  CHECK(cfg.get_u64("campaign.reps", 0) == 250);
  CHECK(cfg.get_str("campaign.mode", "") == "discrete");
  CHECK(cfg.get_bool("diffusion.bridge", false));
  CHECK(cfg.get_list("campaign.grid") == std::vector<double>{0.0, 0.5, 1.0});

  CHECK_THROWS_AS(Config::parse_string("[x\n"), config_error);
  CHECK_THROWS_AS(Config::parse_string("key value\n"), config_error);
  CHECK_THROWS_AS(Config::parse_string("k = 1.5x\n").get_double("k", 0), config_error);
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), io_error);
}

TEST_CASE("csv schema golden file", "[harness]") {
  RegretSummary s;
  s.mean_regret = 0.25;
  s.std_error = 0.0625;
  s.q025 = 0.125;
  s.q25 = 0.25;
  s.q50 = 0.5;
  s.q75 = 0.75;
  s.q975 = 1.0;
  s.mean_tau = 2.0;
  s.misid_rate = 0.125;
  s.capped_fraction = 0.0;
  const std::string golden =
      "gap,mean_regret,se,q025,q25,q50,q75,q975,mean_tau,misid_rate,capped_fraction\n"
      "1.5,0.25,0.0625,0.125,0.25,0.5,0.75,1,2,0.125,0\n";
  CHECK(emit_to_string({{1.5, s}}) == golden);

  // header-only table for an empty result set
  CHECK(emit_to_string({}) ==
        "gap,mean_regret,se,q025,q25,q50,q75,q975,mean_tau,misid_rate,capped_fraction\n");
}

TEST_CASE("doubles are emitted with full precision", "[harness]") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(3.141592653589793) == "3.1415926535897931");
  CHECK(format_double(1.0) == "1");
  // parseable back to the identical bit pattern
  CHECK(std::stod(format_double(0.7754946248852452)) == 0.7754946248852452);
}

TEST_CASE("json round trip preserves every bit", "[harness]") {
  RegretSummary s;
  s.mean_regret = 0.7754946248852452;
  s.std_error = 1.234567890123456e-3;
  s.q025 = -0.1;
  s.q25 = 0.3333333333333333;
  s.q50 = 0.5;
  s.q75 = 2.0 / 3.0;
  s.q975 = 1e17;
  s.mean_tau = 0.2584982082950817;
  s.misid_rate = 0.235;
  s.capped_fraction = 0.0;
  EmitMetadata meta;
  meta.seed = 123456789012345ull;
  meta.v_star = 0.7754946248852452;
  meta.reference.push_back({1.0, 0.65004});
  const nlohmann::json j = table_to_json({{2.19613, s}}, meta);
  const nlohmann::json back = nlohmann::json::parse(j.dump());
  CHECK(back["rows"][0]["mean_regret"].get<double>() == s.mean_regret);
  CHECK(back["rows"][0]["q975"].get<double>() == s.q975);
  CHECK(back["rows"][0]["gap"].get<double>() == 2.19613);
  CHECK(back["metadata"]["seed"].get<std::uint64_t>() == meta.seed);
  CHECK(back["metadata"]["v_star"].get<double>() == *meta.v_star);
  CHECK(back["metadata"]["reference"][0]["closed_form_regret"].get<double>() == 0.65004);
}

TEST_CASE("emit surfaces io failures with path context", "[harness]") {
  RegretSummary s;
  try {
    emit({{1.0, s}}, EmitFormat::csv, "/nonexistent-dir/out.csv", EmitMetadata{});
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("/nonexistent-dir/out.csv") != std::string::npos);
  }
}

TEST_CASE("campaign validation", "[harness]") {
  CampaignSpec spec = small_diffusion_campaign();
  spec.grid = {0.0, 0.5, 0.5};
  CHECK_THROWS_AS(spec.validate(), config_error);
  spec.grid = {0.0, 0.5};
  spec.reps = 0;
  CHECK_THROWS_AS(spec.validate(), config_error);
}

TEST_CASE("profile is deterministic across thread counts", "[harness]") {
  CampaignSpec spec = small_diffusion_campaign();
  std::string first;
  for (unsigned threads : {1u, 2u, 8u}) {
    spec.threads = threads;
    const ProfileResult res = regret_profile(spec);
    std::vector<ResultRow> rows;
    for (const auto& pt : res.points) rows.emplace_back(pt.gap, pt.summary);
    const std::string csv = emit_to_string(rows);
    if (first.empty())
      first = csv;
    else
      CHECK(csv == first);
  }
}

TEST_CASE("profile quantiles are ordered and zero gap is pure cost", "[harness]") {
  CampaignSpec spec = small_diffusion_campaign();
  const ProfileResult res = regret_profile(spec);
  REQUIRE(res.points.size() == 4);
  for (const auto& pt : res.points) {
    CHECK(pt.summary.q025 <= pt.summary.q25);
    CHECK(pt.summary.q25 <= pt.summary.q50);
    CHECK(pt.summary.q50 <= pt.summary.q75);
    CHECK(pt.summary.q75 <= pt.summary.q975);
    CHECK(pt.summary.std_error >= 0.0);
  }
  // at zero gap the realized regret is exactly the sampling cost
  CHECK(res.points[0].summary.mean_regret ==
        Catch::Approx(spec.c * res.points[0].summary.mean_tau).epsilon(1e-12));
  CHECK(res.points[0].summary.misid_rate == 0.0);
  CHECK(res.points[0].closed_form ==
        Catch::Approx(spec.c * res.gamma_used * res.gamma_used).epsilon(1e-12));
}

TEST_CASE("profile reference overlay is recomputed from the override", "[harness]") {
  CampaignSpec spec = small_diffusion_campaign();
  spec.reps = 50;
  const ProfileResult base = regret_profile(spec);
  spec.gamma_override = 0.3;
  const ProfileResult overridden = regret_profile(spec);
  CHECK(overridden.gamma_used == 0.3);
  const DesignParams params(1.0, 1.0, 1.0);
  for (std::size_t k = 0; k < spec.grid.size(); ++k) {
    CHECK(base.points[k].closed_form ==
          Catch::Approx(closed_form_regret(params, base.gamma_used, spec.grid[k]))
              .epsilon(1e-14));
    CHECK(overridden.points[k].closed_form ==
          Catch::Approx(closed_form_regret(params, 0.3, spec.grid[k])).epsilon(1e-14));
  }
}

TEST_CASE("diffusion profile peaks near the least favorable gap", "[harness][mc]") {
  CampaignSpec spec;
  spec.mode = CampaignMode::diffusion;
  spec.grid = {1.0, 1.6, 2.2, 2.8, 3.4};
  spec.reps = 30000;
  spec.master_seed = 321;
  const ProfileResult res = regret_profile(spec);
  double best = -1.0, best_gap = 0.0;
  for (const auto& pt : res.points)
    if (pt.summary.mean_regret > best) {
      best = pt.summary.mean_regret;
      best_gap = pt.gap;
    }
  CHECK(std::fabs(best_gap - res.equilibrium.delta_star) <= 0.6 + 1e-12);
}

TEST_CASE("discrete bernoulli profile is near-symmetric in the gap sign", "[harness][mc]") {
  CampaignSpec spec;
  spec.mode = CampaignMode::discrete;
  spec.grid = {-2.5, -1.5, 1.5, 2.5};
  spec.reps = 8000;
  spec.master_seed = 5555;
  spec.discrete.n = 1000;
  spec.discrete.variance_mode = VarianceMode::forced_exploration;
  spec.model.kind = OutcomeModel::Kind::bernoulli;
  spec.model.p0 = 0.4;
  const ProfileResult res = regret_profile(spec);
  const auto match = [&](double a, double b) {
    const RegretSummary* sa = nullptr;
    const RegretSummary* sb = nullptr;
    for (const auto& pt : res.points) {
      if (pt.gap == a) sa = &pt.summary;
      if (pt.gap == b) sb = &pt.summary;
    }
    REQUIRE(sa);
    REQUIRE(sb);
    const double se_joint =
        std::sqrt(sa->std_error * sa->std_error + sb->std_error * sb->std_error);
    CHECK(std::fabs(sa->mean_regret - sb->mean_regret) <= 3.0 * se_joint);
  };
  match(-1.5, 1.5);
  match(-2.5, 2.5);
}

TEST_CASE("least favorable prior runs hit the game value", "[harness][mc]") {
  CampaignSpec spec;
  spec.mode = CampaignMode::diffusion;
  spec.reps = 40000;
  spec.master_seed = 777777;
  const LfpResult res = lfp_bayes_regret(spec);
  CHECK(std::fabs(res.summary.mean_regret - res.v_star) <= 3.0 * res.summary.std_error);
  // regret is the same at both support points
  const double se_joint = std::sqrt(res.se_plus * res.se_plus + res.se_minus * res.se_minus);
  CHECK(std::fabs(res.mean_plus - res.mean_minus) <= 3.0 * se_joint);
  CHECK(res.count_plus + res.count_minus == spec.reps);
  CHECK(std::fabs(res.summary.misid_rate - res.equilibrium.alpha) < 0.01);
}

TEST_CASE("discrete bernoulli lfp stays close to the game value", "[harness][mc]") {
  CampaignSpec spec;
  spec.mode = CampaignMode::discrete;
  spec.reps = 10000;
  spec.master_seed = 424242;
  spec.discrete.n = 10000;
  spec.discrete.variance_mode = VarianceMode::forced_exploration;
  spec.model.kind = OutcomeModel::Kind::bernoulli;
  spec.model.p0 = 0.4;
  const LfpResult res = lfp_bayes_regret(spec);
  CHECK(std::fabs(res.summary.mean_regret - res.v_star) <= 0.05 * res.v_star);
}

TEST_CASE("adaptivity gain report", "[harness][mc]") {
  const GainReport g = adaptivity_gain_report(DesignParams(1.0, 1.0, 1.0), 30000, 31337);
  CHECK(std::fabs(g.ratio_formula - 0.600) < 0.005);
  CHECK(g.reference == Catch::Approx(g.ratio_formula).epsilon(1e-12));
  CHECK(std::fabs(g.e_tau_mc - g.e_tau_formula) <= 3.0 * g.e_tau_mc_se);
  CHECK(g.t_fixed == Catch::Approx(0.4313).margin(1e-3));
  // the ratio is scale free: another parameter triple gives the same number
  const GainReport g2 = adaptivity_gain_report(DesignParams(3.0, 0.7, 1.9), 1000, 1);
  CHECK(g2.ratio_formula == Catch::Approx(g.ratio_formula).epsilon(1e-9));
}

TEST_CASE("gap units convert through the reference design", "[harness]") {
  CampaignSpec spec;
  spec.mode = CampaignMode::diffusion;
  spec.sigma1 = 1.5;
  spec.sigma0 = 0.5;
  spec.gap_unit = GapUnit::standardized;
  CHECK(spec.raw_gap(2.0) == Catch::Approx(2.0).epsilon(1e-15));  // (s1+s0)/2 = 1
  spec.sigma1 = 2.0;
  CHECK(spec.raw_gap(2.0) == Catch::Approx(2.5).epsilon(1e-15));
  spec.gap_unit = GapUnit::raw;
  CHECK(spec.raw_gap(2.0) == 2.0);

  // discrete bernoulli: reference sigma from the base rate
  CampaignSpec bspec;
  bspec.mode = CampaignMode::discrete;
  bspec.model.kind = OutcomeModel::Kind::bernoulli;
  bspec.model.p0 = 0.4;
  const double sref = std::sqrt(0.4 * 0.6);
  CHECK(bspec.raw_gap(1.0) == Catch::Approx(sref).epsilon(1e-12));
  // gap too large for the Bernoulli family errors out with context
  bspec.grid = {40.0};
  bspec.reps = 10;
  bspec.discrete.n = 16;
  CHECK_THROWS_AS(regret_profile(bspec), config_error);
}
