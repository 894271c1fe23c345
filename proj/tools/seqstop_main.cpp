// Command-line harness: equilibrium constants, fixed-horizon comparison,
// Monte Carlo regret profiles, least-favorable-prior runs, adaptivity gain,
// the PDE cross-check, and general cost solves. Data goes to stdout or
// --out; progress and human-readable summaries go to stderr.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqstop/analytics.hpp"
#include "seqstop/campaign.hpp"
#include "seqstop/config.hpp"
#include "seqstop/cost_models.hpp"
#include "seqstop/emit.hpp"
#include "seqstop/engine.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/hjb.hpp"
#include "seqstop/version.hpp"

namespace {

using namespace seqstop;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> n;
  std::optional<double> dt;
  std::optional<double> gamma;
  std::optional<double> c, sigma1, sigma0;
  std::string format;
  std::string out;
  std::optional<unsigned> threads;
  std::string mode;
  std::string grid_text;
  std::string gap_unit;
  std::string model;
  std::optional<double> p0;
  std::string variance_mode;
  std::optional<std::size_t> batch;
  std::optional<double> horizon;
  std::optional<bool> bridge;
  std::optional<std::size_t> nbar;
};

void add_common_options(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "configuration file (flags override it)");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--reps", a.reps, "replications per grid point");
  cmd->add_option("--n", a.n, "discrete-mode scale (observations per unit time)");
  cmd->add_option("--dt", a.dt, "diffusion Euler step");
  cmd->add_option("--gamma", a.gamma, "stopping threshold override");
  cmd->add_option("--c", a.c, "flow sampling cost");
  cmd->add_option("--sigma1", a.sigma1, "arm-1 outcome sd");
  cmd->add_option("--sigma0", a.sigma0, "arm-0 outcome sd");
  cmd->add_option("--format", a.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--out", a.out, "output path ('-' = stdout)");
  cmd->add_option("--threads", a.threads, "worker threads (0 = hardware)");
  cmd->add_option("--mode", a.mode, "diffusion|discrete")
      ->check(CLI::IsMember({"diffusion", "discrete"}));
  cmd->add_option("--grid", a.grid_text, "gap grid: 'lo:hi:step' or comma list");
  cmd->add_option("--gap-unit", a.gap_unit, "delta|raw")->check(CLI::IsMember({"delta", "raw"}));
  cmd->add_option("--model", a.model, "bernoulli|gaussian")
      ->check(CLI::IsMember({"bernoulli", "gaussian"}));
  cmd->add_option("--p0", a.p0, "Bernoulli base rate");
  cmd->add_option("--variance-mode", a.variance_mode, "known|forced|prior")
      ->check(CLI::IsMember({"known", "forced", "prior"}));
  cmd->add_option("--batch", a.batch, "observations per decision epoch");
  cmd->add_option("--horizon", a.horizon, "time cap T");
  cmd->add_option("--bridge", a.bridge, "Brownian-bridge crossing correction");
  cmd->add_option("--nbar", a.nbar, "forced-exploration total observations");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0.0) ||
        !(hi >= lo))
      throw config_error("grid: expected lo:hi:step with hi >= lo, step > 0, got '" + text +
                         "'");
    const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    for (std::size_t i = 0; i < count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
  }
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    grid.push_back(std::stod(tok));
  }
  return grid;
}

struct Resolved {
  Config cfg;
  CommonArgs args;

  double num(const std::optional<double>& flag, const std::string& key, double fallback) const {
    return flag ? *flag : cfg.get_double(key, fallback);
  }
  std::string str(const std::string& flag, const std::string& key,
                  const std::string& fallback) const {
    return !flag.empty() ? flag : cfg.get_str(key, fallback);
  }
};

Resolved resolve(const CommonArgs& args) {
  Resolved r;
  r.args = args;
  if (!args.config_path.empty()) r.cfg = Config::parse_file(args.config_path);
  return r;
}

DesignParams design_from(const Resolved& r) {
  return DesignParams(r.num(r.args.c, "design.c", 1.0), r.num(r.args.sigma1, "design.sigma1", 1.0),
                      r.num(r.args.sigma0, "design.sigma0", 1.0));
}

CampaignSpec campaign_from(const Resolved& r) {
  CampaignSpec spec;
  const std::string mode = r.str(r.args.mode, "campaign.mode", "diffusion");
  spec.mode = (mode == "discrete") ? CampaignMode::discrete : CampaignMode::diffusion;
  spec.c = r.num(r.args.c, "design.c", 1.0);
  spec.sigma1 = r.num(r.args.sigma1, "design.sigma1", 1.0);
  spec.sigma0 = r.num(r.args.sigma0, "design.sigma0", 1.0);
  spec.reps = r.args.reps ? *r.args.reps
                          : static_cast<std::size_t>(r.cfg.get_u64("campaign.reps", 1000));
  spec.master_seed = r.args.seed ? *r.args.seed : r.cfg.get_u64("campaign.seed", 0);
  spec.threads = r.args.threads ? *r.args.threads
                                : static_cast<unsigned>(r.cfg.get_u64("campaign.threads", 0));
  const std::string unit = r.str(r.args.gap_unit, "campaign.gap_unit", "delta");
  spec.gap_unit = (unit == "raw") ? GapUnit::raw : GapUnit::standardized;
  if (!r.args.grid_text.empty())
    spec.grid = parse_grid(r.args.grid_text);
  else if (r.cfg.has("campaign.grid"))
    spec.grid = r.cfg.get_list("campaign.grid");

  spec.dt = r.num(r.args.dt, "diffusion.dt", 1e-3);
  if (r.args.horizon)
    spec.horizon = *r.args.horizon;
  else if (r.cfg.has("diffusion.horizon"))
    spec.horizon = r.cfg.get_double("diffusion.horizon", 0.0);
  spec.bridge_correction =
      r.args.bridge ? *r.args.bridge : r.cfg.get_bool("diffusion.bridge", false);
  if (r.args.gamma)
    spec.gamma_override = *r.args.gamma;
  else if (r.cfg.has("design.gamma"))
    spec.gamma_override = r.cfg.get_double("design.gamma", 0.0);

  spec.discrete.n =
      r.args.n ? *r.args.n : static_cast<std::size_t>(r.cfg.get_u64("discrete.n", 1000));
  spec.discrete.c = spec.c;
  spec.discrete.batch_size =
      r.args.batch ? *r.args.batch
                   : static_cast<std::size_t>(r.cfg.get_u64("discrete.batch", 1));
  spec.discrete.max_periods =
      static_cast<std::size_t>(r.cfg.get_u64("discrete.max_periods", 100000000));
  if (spec.mode == CampaignMode::discrete && spec.horizon) spec.discrete.horizon_T = spec.horizon;
  const std::string vmode = r.str(r.args.variance_mode, "discrete.variance_mode", "known");
  spec.discrete.variance_mode = vmode == "forced"  ? VarianceMode::forced_exploration
                                : vmode == "prior" ? VarianceMode::conjugate_prior
                                                   : VarianceMode::known;
  if (r.args.nbar)
    spec.discrete.exploration.total_override = *r.args.nbar;
  else if (r.cfg.has("discrete.nbar"))
    spec.discrete.exploration.total_override =
        static_cast<std::size_t>(r.cfg.get_u64("discrete.nbar", 0));
  spec.discrete.exploration.floor_obs =
      static_cast<std::size_t>(r.cfg.get_u64("discrete.exploration_floor", 50));
  spec.discrete.exploration.fraction = r.cfg.get_double("discrete.exploration_fraction", 0.05);
  spec.discrete.prior.beta_a0 = r.cfg.get_double("prior.beta_a0", 2.0);
  spec.discrete.prior.beta_b0 = r.cfg.get_double("prior.beta_b0", 3.0);
  spec.discrete.prior.ig_a0 = r.cfg.get_double("prior.ig_a0", 2.0);
  spec.discrete.prior.ig_b0 = r.cfg.get_double("prior.ig_b0", 3.0);

  const std::string model = r.str(r.args.model, "model.kind", "gaussian");
  spec.model.kind =
      model == "bernoulli" ? OutcomeModel::Kind::bernoulli : OutcomeModel::Kind::gaussian;
  spec.model.p0 = r.num(r.args.p0, "model.p0", 0.4);
  spec.model.sd1 = r.num(r.args.sigma1, "model.sd1", spec.sigma1);
  spec.model.sd0 = r.num(r.args.sigma0, "model.sd0", spec.sigma0);
  return spec;
}

EmitFormat format_from(const Resolved& r, EmitFormat fallback = EmitFormat::csv) {
  const std::string fmt = r.str(r.args.format, "campaign.format", "");
  if (fmt == "json") return EmitFormat::json;
  if (fmt == "csv") return EmitFormat::csv;
  return fallback;
}

// report-style commands print text unless json is requested explicitly
bool wants_json(const Resolved& r) {
  return r.str(r.args.format, "campaign.format", "") == "json";
}

std::string out_path(const Resolved& r) {
  const std::string o = r.str(r.args.out, "campaign.out", "-");
  return o.empty() ? "-" : o;
}

void echo_kv(std::vector<std::pair<std::string, std::string>>& echo, const std::string& k,
             const std::string& v) {
  echo.emplace_back(k, v);
}

int cmd_equilibrium(const Resolved& r) {
  const DesignParams params = design_from(r);
  const EquilibriumSolution eq = solve_equilibrium(params);
  if (wants_json(r)) {
    nlohmann::json j{{"gamma_star", eq.gamma_star},
                     {"delta_star", eq.delta_star},
                     {"value", eq.value},
                     {"alpha", eq.alpha},
                     {"eta", params.eta()}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("gamma_star = %.10g\n", eq.gamma_star);
  std::printf("delta_star = %.10g\n", eq.delta_star);
  std::printf("value      = %.10g\n", eq.value);
  std::printf("alpha      = %.10g\n", eq.alpha);
  std::printf("eta        = %.10g\n", params.eta());
  return 0;
}

int cmd_bai(const Resolved& r) {
  const DesignParams params = design_from(r);
  const BaiSolution bai = solve_bai_equilibrium();
  const double d_half = 0.5 * bai.delta_bar;
  const double residual = std::fabs(norm_cdf(-d_half) - d_half * norm_pdf(d_half));
  const double value_scaled = bai_regret(params, 0.5 * params.sigma_sum() * bai.delta_bar);
  if (wants_json(r)) {
    nlohmann::json j{{"delta_bar", bai.delta_bar},
                     {"value_unit_scale", bai.value},
                     {"value", value_scaled},
                     {"stationarity_residual", residual}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("delta_bar             = %.10g\n", bai.delta_bar);
  std::printf("value (unit scale)    = %.10g\n", bai.value);
  std::printf("value (these params)  = %.10g\n", value_scaled);
  std::printf("stationarity residual = %.3e\n", residual);
  return 0;
}

EmitMetadata metadata_for(const CampaignSpec& spec, const ProfileResult& res) {
  EmitMetadata meta;
  meta.seed = spec.master_seed;
  meta.v_star = res.v_star;
  echo_kv(meta.spec_echo, "mode",
          spec.mode == CampaignMode::diffusion ? "diffusion" : "discrete");
  echo_kv(meta.spec_echo, "reps", std::to_string(spec.reps));
  echo_kv(meta.spec_echo, "gamma", format_double(res.gamma_used));
  echo_kv(meta.spec_echo, "gap_unit",
          spec.gap_unit == GapUnit::standardized ? "delta" : "raw");
  if (spec.mode == CampaignMode::diffusion) {
    echo_kv(meta.spec_echo, "dt", format_double(spec.dt));
    echo_kv(meta.spec_echo, "bridge", spec.bridge_correction ? "true" : "false");
  } else {
    echo_kv(meta.spec_echo, "n", std::to_string(spec.discrete.n));
    echo_kv(meta.spec_echo, "batch", std::to_string(spec.discrete.batch_size));
    echo_kv(meta.spec_echo, "model",
            spec.model.kind == OutcomeModel::Kind::bernoulli ? "bernoulli" : "gaussian");
  }
  for (const auto& pt : res.points) meta.reference.push_back({pt.gap, pt.closed_form});
  return meta;
}

int cmd_profile(const Resolved& r) {
  CampaignSpec spec = campaign_from(r);
  if (spec.grid.empty()) spec.grid = parse_grid("0:5:0.5");
  std::fprintf(stderr, "profile: %zu grid points x %zu reps (%s mode)\n", spec.grid.size(),
               spec.reps, spec.mode == CampaignMode::diffusion ? "diffusion" : "discrete");
  const ProfileResult res = regret_profile(spec);
  std::vector<ResultRow> rows;
  rows.reserve(res.points.size());
  for (const auto& pt : res.points) rows.emplace_back(pt.gap, pt.summary);
  emit(rows, format_from(r), out_path(r), metadata_for(spec, res));
  std::fprintf(stderr, "profile: v_star = %.6g, max mean regret = %.6g\n", res.v_star,
               rows.empty() ? 0.0
                            : std::max_element(rows.begin(), rows.end(),
                                               [](const ResultRow& a, const ResultRow& b) {
                                                 return a.second.mean_regret <
                                                        b.second.mean_regret;
                                               })
                                  ->second.mean_regret);
  return 0;
}

int cmd_lfp(const Resolved& r) {
  const CampaignSpec spec = campaign_from(r);
  const LfpResult res = lfp_bayes_regret(spec);
  std::vector<ResultRow> rows{{res.gap_magnitude, res.summary}};
  EmitMetadata meta;
  meta.seed = spec.master_seed;
  meta.v_star = res.v_star;
  echo_kv(meta.spec_echo, "mode",
          spec.mode == CampaignMode::diffusion ? "diffusion" : "discrete");
  echo_kv(meta.spec_echo, "delta_star", format_double(res.equilibrium.delta_star));
  echo_kv(meta.spec_echo, "reps", std::to_string(spec.reps));
  emit(rows, format_from(r), out_path(r), meta);
  std::fprintf(stderr,
               "lfp: mean regret %.6g +- %.2g vs V* = %.6g; per-state means %.6g / %.6g\n",
               res.summary.mean_regret, res.summary.std_error, res.v_star, res.mean_plus,
               res.mean_minus);
  return 0;
}

int cmd_gain(const Resolved& r) {
  const DesignParams params = design_from(r);
  const std::size_t reps =
      r.args.reps ? *r.args.reps : static_cast<std::size_t>(r.cfg.get_u64("campaign.reps", 100000));
  const std::uint64_t seed = r.args.seed ? *r.args.seed : r.cfg.get_u64("campaign.seed", 0);
  const double dt = r.num(r.args.dt, "diffusion.dt", 1e-3);
  const unsigned threads = r.args.threads
                               ? *r.args.threads
                               : static_cast<unsigned>(r.cfg.get_u64("campaign.threads", 0));
  const GainReport g = adaptivity_gain_report(params, reps, seed, dt, threads);
  if (wants_json(r)) {
    nlohmann::json j{{"e_tau_formula", g.e_tau_formula},
                     {"e_tau_mc", g.e_tau_mc},
                     {"e_tau_mc_se", g.e_tau_mc_se},
                     {"t_fixed", g.t_fixed},
                     {"ratio_formula", g.ratio_formula},
                     {"ratio_mc", g.ratio_mc},
                     {"reference", g.reference}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("E[tau] formula        = %.10g\n", g.e_tau_formula);
  std::printf("E[tau] Monte Carlo    = %.10g (se %.3g)\n", g.e_tau_mc, g.e_tau_mc_se);
  std::printf("fixed-design duration = %.10g\n", g.t_fixed);
  std::printf("ratio (formula)       = %.10g\n", g.ratio_formula);
  std::printf("ratio (Monte Carlo)   = %.10g\n", g.ratio_mc);
  std::printf("analytic reference    = %.10g\n", g.reference);
  return 0;
}

int cmd_hjb(const Resolved& r) {
  const DesignParams params = design_from(r);
  const EquilibriumSolution eq = solve_equilibrium(params);
  const double drho = r.cfg.get_double("hjb.drho", 5e-3);
  const double T = r.args.horizon ? *r.args.horizon : r.cfg.get_double("hjb.T", 6.0);
  HjbGrid grid = HjbGrid::for_params(params.c, params.sigma_sum(), eq.delta_star, drho, T);
  grid.keep_slices = static_cast<std::size_t>(r.cfg.get_u64("hjb.keep", 161));
  std::fprintf(stderr, "hjb: %zu rho points, T=%.3g, dt=%.3g\n", grid.n_rho, grid.T,
               0.9 * grid.stable_dt());
  const HjbSolution sol = solve_hjb(grid);
  std::fprintf(stderr, "hjb: V(0,0) = %.6g (closed form %.6g), boundary(0) = %.6g (gamma* %.6g)\n",
               sol.v00, eq.value, sol.boundary_curve.front(), eq.gamma_star);

  const std::string path = out_path(r);
  if (format_from(r) == EmitFormat::json) {
    nlohmann::json j;
    j["metadata"] = {{"v_star", eq.value},       {"gamma_star", eq.gamma_star},
                     {"delta_star", eq.delta_star}, {"v00", sol.v00},
                     {"dt", sol.dt},             {"n_t", sol.n_t},
                     {"dV_dt_at0", sol.dV_dt_at0}};
    j["rho"] = sol.rho;
    j["times"] = sol.times;
    j["boundary"] = sol.boundary_curve;
    j["values"] = sol.values;
    const std::string payload = j.dump() + "\n";
    if (path == "-")
      std::cout << payload;
    else {
      std::ofstream os(path, std::ios::binary);
      if (!os) throw io_error("hjb: cannot open '" + path + "'");
      os << payload;
    }
    return 0;
  }
  std::ostringstream table;
  table << "t,rho,value,obstacle,stopped\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    for (std::size_t i = 0; i < sol.rho.size(); ++i) {
      const double obstacle = hjb_obstacle(sol.rho[i], eq.delta_star, params.sigma_sum());
      table << format_double(sol.times[k]) << ',' << format_double(sol.rho[i]) << ','
            << format_double(sol.values[k][i]) << ',' << format_double(obstacle) << ','
            << (sol.values[k][i] == obstacle ? 1 : 0) << '\n';
    }
  std::ostringstream boundary;
  boundary << "t,boundary\n";
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    boundary << format_double(sol.times[k]) << ',' << format_double(sol.boundary_curve[k])
             << '\n';
  if (path == "-") {
    std::cout << table.str();
    std::fprintf(stderr, "hjb: boundary curve omitted on stdout; use --out to write both files\n");
  } else {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("hjb: cannot open '" + path + "'");
    os << table.str();
    std::ofstream ob(path + ".boundary.csv", std::ios::binary);
    if (!ob) throw io_error("hjb: cannot open '" + path + ".boundary.csv'");
    ob << boundary.str();
  }
  return 0;
}

CostFunction cost_from(const Resolved& r) {
  const std::string kind = r.cfg.get_str("cost.kind", "constant");
  if (kind == "constant")
    return CostFunction::constant(r.cfg.get_double("cost.constant", r.num(r.args.c, "design.c", 1.0)));
  if (kind == "polynomial") return CostFunction::polynomial_abs(r.cfg.get_list("cost.coeffs"));
  if (kind == "table")
    return CostFunction::table(r.cfg.get_list("cost.table_z"), r.cfg.get_list("cost.table_v"));
  throw config_error("cost.kind must be constant|polynomial|table, got '" + kind + "'");
}

int cmd_general_cost(const Resolved& r) {
  const DesignParams params = design_from(r);
  const CostFunction cost = cost_from(r);
  const GeneralEquilibrium ge = solve_general_equilibrium(cost, params.sigma1, params.sigma0);
  if (wants_json(r)) {
    nlohmann::json j{{"gamma_star", ge.gamma_star},
                     {"delta_star", ge.delta_star},
                     {"value", ge.value},
                     {"residual", ge.residual},
                     {"multistart_spread", ge.multistart_spread}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("gamma_star        = %.10g\n", ge.gamma_star);
  std::printf("delta_star        = %.10g\n", ge.delta_star);
  std::printf("value             = %.10g\n", ge.value);
  std::printf("residual          = %.3e\n", ge.residual);
  std::printf("multistart spread = %.3e\n", ge.multistart_spread);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax sequential two-arm experimentation toolkit"};
  app.set_version_flag("--version", std::string("seqstop ") + seqstop::kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const Resolved&) = nullptr;
  const auto wire = [&](const char* name, const char* help, int (*fn)(const Resolved&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common_options(cmd, args);
    cmd->callback([&handler, fn]() { handler = fn; });
    return cmd;
  };
  wire("equilibrium", "print gamma*, Delta*, V*, alpha* for the configured design",
       cmd_equilibrium);
  wire("bai", "fixed-horizon (best-arm identification) equilibrium", cmd_bai);
  wire("profile", "Monte Carlo regret profile over a gap grid", cmd_profile);
  wire("lfp", "Bayes regret under the least favorable prior", cmd_lfp);
  wire("gain", "adaptive vs fixed-length duration comparison", cmd_gain);
  wire("hjb", "variational-inequality cross-check; emits V and the boundary curve",
       cmd_hjb);
  wire("general-cost", "equilibrium under a state-dependent flow cost", cmd_general_cost);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    return handler(resolve(args));
  } catch (const seqstop::parameter_error& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const seqstop::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const seqstop::solver_error& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const seqstop::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const seqstop::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
