#include "driver.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>

#include "rmfem/experiments.hpp"
#include "rmfem/io.hpp"

namespace rmfem::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"adapt1d",      "adapt2d-arctan",      "adapt2d-lshape", "bip1d-smooth",
                                                 "bip1d-discontinuous", "bip2d", "convergence"};
  return names;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out = "rmfem-out";

  // adaptivity
  std::optional<double> gamma, p, c_up, coarsen;
  std::optional<std::size_t> nmc;
  std::optional<int> n, max_iterations;
  std::optional<std::string> estimator, normalization;
  bool fresh_draws = false;

  // Bayesian inverse problems
  std::optional<int> nkl, reference_n, grid_n;
  std::optional<std::size_t> chains, steps, det_steps, n_obs;
  std::optional<double> noise, burn_in, alpha, target_acceptance;
  bool no_deterministic = false, no_probabilistic = false;

  // convergence
  std::vector<int> levels;
  std::optional<double> radius;
};

void add_run_options(CLI::App& app, Options& o) {
  app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();

  app.add_option("--gamma", o.gamma, "Tolerance gamma");
  app.add_option("--p", o.p, "Perturbation exponent p");
  app.add_option("--nmc", o.nmc, "Monte Carlo realizations (convergence: realizations per level)");
  app.add_option("--n", o.n, "Initial mesh size (adaptivity) or inference mesh size (inverse problems)");
  app.add_option("--max-iterations", o.max_iterations, "Iteration cap of the adaptive loop");
  app.add_option("--estimator", o.estimator, "Marking estimator: RM1, RM2, BABUSKA, RESIDUAL2D");
  app.add_option("--normalization", o.normalization, "Estimator normalization: none, squared, estimator");
  app.add_option("--c-up", o.c_up, "Constant C_up in gamma_loc");
  app.add_option("--coarsen", o.coarsen, "1D coarsening factor (0 disables)");
  app.add_flag("--fresh-draws", o.fresh_draws, "Draw new perturbations at every iteration");

  app.add_option("--nkl", o.nkl, "Number of KL modes");
  app.add_option("--chains", o.chains, "Outer chains of the probabilistic posterior");
  app.add_option("--steps", o.steps, "Steps per outer chain");
  app.add_option("--det-steps", o.det_steps, "Steps of the deterministic-posterior chain");
  app.add_option("--noise", o.noise, "Observation noise variance");
  app.add_option("--n-obs", o.n_obs, "Number of observation points (2D)");
  app.add_option("--burn-in", o.burn_in, "Discarded fraction of each chain");
  app.add_option("--alpha", o.alpha, "Prior exponent");
  app.add_option("--target-acceptance", o.target_acceptance, "RAM target acceptance rate");
  app.add_option("--reference-n", o.reference_n, "Mesh size of the synthetic-data solve");
  app.add_option("--grid-n", o.grid_n, "Mesh size of the posterior summary grid");
  app.add_flag("--no-deterministic", o.no_deterministic, "Skip the deterministic posterior");
  app.add_flag("--no-probabilistic", o.no_probabilistic, "Skip the probabilistic posterior");

  app.add_option("--levels", o.levels, "Mesh sizes N of the convergence study")->delimiter(',');
  app.add_option("--radius", o.radius, "Radius of the perturbation law");
}

const std::set<std::string> kCommon = {"--seed", "--threads", "--out", "--experiment", "experiment"};
const std::set<std::string> kAdapt = {"--gamma",  "--p",          "--nmc",     "--n",          "--max-iterations",
                                      "--estimator", "--normalization", "--c-up", "--coarsen", "--fresh-draws"};
const std::set<std::string> kBip = {"--n",          "--p",        "--nkl",     "--chains",  "--steps",
                                    "--det-steps",  "--noise",    "--n-obs",   "--burn-in", "--alpha",
                                    "--target-acceptance", "--reference-n", "--grid-n", "--no-deterministic",
                                    "--no-probabilistic"};
const std::set<std::string> kConvergence = {"--p", "--nmc", "--levels", "--radius"};

void check_applicable(const CLI::App& app, const std::string& experiment, const std::set<std::string>& allowed) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name();
    if (name == "--help" || kCommon.count(name) || allowed.count(name)) continue;
    throw UsageError("option " + name + " does not apply to experiment '" + experiment + "'");
  }
}

// Configuration problems are usage errors; the same exception type raised later is a runtime failure.
template <class F>
void resolve(F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

json seeds_json(std::uint64_t seed) { return {{"master", seed}}; }

json adapt_config_json(const AdaptConfig& c, const SimplicialMesh& initial) {
  json comps = json::array();
  for (EstimatorKind k : c.companions) comps.push_back(to_string(k));
  return {{"gamma", c.gamma},
          {"estimator", to_string(c.estimator)},
          {"n_mc", c.n_realizations},
          {"p", c.p},
          {"c_up", c.c_up},
          {"coarsen_factor", c.coarsen_factor},
          {"max_iterations", c.max_iterations},
          {"include_boundary", c.include_boundary},
          {"common_random_numbers", c.common_random_numbers},
          {"normalization", to_string(c.normalization)},
          {"companions", comps},
          {"error_quad_order", c.error_quad_order},
          {"initial_elements", initial.n_elements()},
          {"initial_h", initial.h()}};
}

json bip_config_json(const experiments::BipConfig& c) {
  return {{"dim", c.dim},
          {"truth", c.dim == 1 ? (c.truth == experiments::Conductivity1D::Smooth ? "smooth" : "discontinuous")
                               : "kl"},
          {"n", c.n},
          {"n_kl", c.n_kl},
          {"alpha", c.alpha},
          {"det_steps", c.det_steps},
          {"n_outer", c.n_outer},
          {"inner_steps", c.inner_steps},
          {"noise_var", c.noise_var},
          {"n_obs", c.n_obs},
          {"burn_in", c.burn_in},
          {"target_acceptance", c.target_acceptance},
          {"p", c.p},
          {"reference_n", c.reference_n},
          {"grid_n", c.grid_n},
          {"deterministic", c.deterministic},
          {"probabilistic", c.probabilistic}};
}

std::vector<std::string> run_adapt(const Options& o, const std::string& name, const CLI::App& app,
                                   const ThreadPool& pool, json& params, json& extra) {
  check_applicable(app, name, kAdapt);
  experiments::AdaptSetup s = name == "adapt1d"          ? experiments::adapt1d_setup()
                              : name == "adapt2d-arctan" ? experiments::arctan_setup()
                                                         : experiments::lshape_setup();
  AdaptConfig& c = s.config;
  resolve([&] {
    if (o.n) {
      if (*o.n < 1) throw UsageError("--n must be positive");
      s.initial = std::make_shared<const SimplicialMesh>(name == "adapt1d"          ? build_uniform_1d(*o.n)
                                                         : name == "adapt2d-arctan" ? build_structured_2d(*o.n)
                                                                                    : build_lshape_2d(*o.n));
    }
    if (o.gamma) c.gamma = *o.gamma;
    if (o.p) c.p = *o.p;
    if (o.nmc) c.n_realizations = *o.nmc;
    if (o.max_iterations) c.max_iterations = *o.max_iterations;
    if (o.c_up) c.c_up = *o.c_up;
    if (o.coarsen) c.coarsen_factor = *o.coarsen;
    if (o.estimator) c.estimator = estimator_kind_from_string(*o.estimator);
    if (o.normalization) c.normalization = normalization_from_string(*o.normalization);
    if (o.fresh_draws) c.common_random_numbers = false;
    c.seed = o.seed;
    c.validate();
  });
  params = adapt_config_json(c, *s.initial);
  params["problem"] = s.problem.name;

  const AdaptResult r = adapt_loop(s.problem.problem, s.initial, c, s.problem.exact, &pool);

  const fs::path out(o.out);
  io::write_adapt_csv(out / "adapt.csv", r);
  io::write_estimators_csv(out / "estimators.csv", r);
  io::write_json(out / "mesh_final.json", io::mesh_to_json(*r.final_mesh, &r.final_values));

  json iters = json::array();
  json gamma_hist = json::array();
  for (const AdaptIteration& it : r.iterations) {
    gamma_hist.push_back(it.gamma_loc);
    iters.push_back({{"iteration", it.iteration},
                     {"n_elements", it.n_elements},
                     {"estimator", it.estimator},
                     {"true_error", it.true_error},
                     {"effectivity", it.effectivity},
                     {"gamma_loc", it.gamma_loc},
                     {"n_refined", it.refined.size()},
                     {"n_coarsened", it.coarsened.size()}});
  }
  const AdaptIteration& last = r.iterations.back();
  json summary = {{"experiment", name},
                  {"converged", r.converged},
                  {"n_iterations", r.iterations.size()},
                  {"final_elements", r.final_mesh->n_elements()},
                  {"final_estimator", last.estimator},
                  {"final_true_error", last.true_error},
                  {"final_relative_error", last.true_error / last.solution_norm},
                  {"iterations", iters}};
  io::write_json(out / "summary.json", summary);
  extra["gamma_loc_history"] = gamma_hist;
  extra["converged"] = r.converged;
  return {"adapt.csv", "estimators.csv", "mesh_final.json", "summary.json"};
}

void write_posterior_csv(const fs::path& path, const experiments::BipResult& r) {
  const bayes::PosteriorSummary& ref = r.det ? *r.det : *r.prob;
  io::CsvWriter w(path, {"vertex", "x", "y", "det_mean", "det_std", "prob_mean", "prob_std"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index i = 0; i < ref.grid->n_vertices(); ++i) {
    const Point x = ref.grid->vertex(i);
    w << static_cast<long long>(i) << x.x << x.y << (r.det ? r.det->kappa_mean[i] : nan)
      << (r.det ? r.det->kappa_std[i] : nan) << (r.prob ? r.prob->kappa_mean[i] : nan)
      << (r.prob ? r.prob->kappa_std[i] : nan);
    w.end_row();
  }
  w.close();
}

std::vector<std::string> run_bip(const Options& o, const std::string& name, const CLI::App& app,
                                 const ThreadPool& pool, json& params, json& extra) {
  check_applicable(app, name, kBip);
  experiments::BipConfig c = name == "bip2d"          ? experiments::bip2d_config()
                             : name == "bip1d-smooth" ? experiments::bip1d_config(experiments::Conductivity1D::Smooth)
                                                      : experiments::bip1d_config(
                                                            experiments::Conductivity1D::Discontinuous);
  resolve([&] {
    if (o.n) c.n = *o.n;
    if (o.p) c.p = *o.p;
    if (o.nkl) c.n_kl = *o.nkl;
    if (o.chains) c.n_outer = *o.chains;
    if (o.steps) c.inner_steps = *o.steps;
    if (o.det_steps) c.det_steps = *o.det_steps;
    if (o.noise) c.noise_var = *o.noise;
    if (o.n_obs) {
      if (c.dim == 1) throw UsageError("--n-obs applies to bip2d only; 1D observations are fixed at i/10");
      c.n_obs = *o.n_obs;
    }
    if (o.burn_in) c.burn_in = *o.burn_in;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.target_acceptance) c.target_acceptance = *o.target_acceptance;
    if (o.reference_n) c.reference_n = *o.reference_n;
    if (o.grid_n) c.grid_n = *o.grid_n;
    if (o.no_deterministic) c.deterministic = false;
    if (o.no_probabilistic) c.probabilistic = false;
    if (!c.deterministic && !c.probabilistic) throw UsageError("nothing to do: both posteriors disabled");
    c.seed = o.seed;
    c.validate();
  });
  params = bip_config_json(c);

  const experiments::BipResult r = experiments::run_bip(c, &pool);

  const fs::path out(o.out);
  std::vector<std::string> files;
  json chains = json::array();
  if (r.det_chain) {
    io::write_chain_csv(out / "chain_0.csv", *r.det_chain, c.burn_in);
    files.push_back("chain_0.csv");
    chains.push_back({{"file", "chain_0.csv"}, {"posterior", "deterministic"},
                      {"acceptance_rate", r.det_chain->acceptance_rate()}});
  }
  for (std::size_t k = 0; k < r.prob_chains.size(); ++k) {
    const std::string f = "chain_" + std::to_string(k + 1) + ".csv";
    io::write_chain_csv(out / f, r.prob_chains[k], c.burn_in);
    files.push_back(f);
    chains.push_back({{"file", f}, {"posterior", "probabilistic"}, {"outer_index", k},
                      {"acceptance_rate", r.prob_chains[k].acceptance_rate()}});
  }
  write_posterior_csv(out / "posterior.csv", r);
  files.push_back("posterior.csv");

  json summary = {{"experiment", name},
                  {"prior", io::prior_to_json(r.prior)},
                  {"observations", io::observations_to_json(r.obs)},
                  {"xi_true", r.xi_true},
                  {"chains", chains}};
  if (r.det) summary["deterministic"] = io::summary_to_json(*r.det);
  if (r.prob) summary["probabilistic"] = io::summary_to_json(*r.prob);
  io::write_json(out / "summary.json", summary);
  files.push_back("summary.json");
  extra["chains"] = chains;
  return files;
}

std::vector<std::string> run_convergence(const Options& o, const CLI::App& app, const ThreadPool& pool,
                                         json& params, json& extra) {
  check_applicable(app, "convergence", kConvergence);
  experiments::ConvergenceConfig c;
  if (!o.levels.empty()) c.n_values = o.levels;
  if (o.p) c.p = *o.p;
  if (o.nmc) c.n_realizations = *o.nmc;
  if (o.radius) c.radius = *o.radius;
  c.seed = o.seed;
  resolve([&] {
    if (c.n_values.size() < 2) throw InvalidArgument("--levels needs at least two mesh sizes");
    for (int n : c.n_values)
      if (n < 1) throw InvalidArgument("--levels entries must be positive");
    if (c.n_realizations == 0) throw InvalidArgument("--nmc must be positive");
    PerturbationConfig pc;
    pc.p = c.p;
    pc.radius = c.radius;
    pc.validate();
  });
  params = {{"problem", "smooth_1d"}, {"levels", c.n_values}, {"p", c.p},
            {"n_realizations", c.n_realizations}, {"radius", c.radius}};

  const experiments::ConvergenceResult r = experiments::run_convergence(c, &pool);

  const fs::path out(o.out);
  {
    io::CsvWriter w(out / "convergence.csv", {"n", "h", "fem_error", "rm_error_mean", "randomization_mean",
                                              "randomization_rms", "balance"});
    for (const auto& l : r.levels) {
      double rm = 0.0, rd = 0.0;
      for (std::size_t i = 0; i < l.rm_errors.size(); ++i) {
        rm += l.rm_errors[i];
        rd += l.randomization[i];
      }
      rm /= l.rm_errors.size();
      rd /= l.randomization.size();
      w << l.n << l.h << l.fem_error << rm << rd << l.randomization_rms() << l.balance();
      w.end_row();
    }
    w.close();
  }
  {
    io::CsvWriter w(out / "realizations.csv", {"n", "realization", "rm_error", "randomization"});
    for (const auto& l : r.levels)
      for (std::size_t i = 0; i < l.rm_errors.size(); ++i) {
        w << l.n << i << l.rm_errors[i] << l.randomization[i];
        w.end_row();
      }
    w.close();
  }
  json summary = {{"experiment", "convergence"},
                  {"fem_slope", r.fem_slope},
                  {"rm_slopes", r.rm_slopes},
                  {"randomization_slope", r.randomization_slope},
                  {"conjectured_randomization_slope", (c.p + 1.0) / 2.0}};
  io::write_json(out / "summary.json", summary);
  extra["randomization_slope"] = r.randomization_slope;
  return {"convergence.csv", "realizations.csv", "summary.json"};
}

int execute(const Options& o, const CLI::App& app) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), o.experiment) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown experiment '" + o.experiment + "' (expected one of: " + list + ")");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ThreadPool pool(o.threads);
  fs::create_directories(o.out);

  json params, extra;
  std::vector<std::string> files;
  const std::string& e = o.experiment;
  if (e.rfind("adapt", 0) == 0)
    files = run_adapt(o, e, app, pool, params, extra);
  else if (e.rfind("bip", 0) == 0)
    files = run_bip(o, e, app, pool, params, extra);
  else
    files = run_convergence(o, app, pool, params, extra);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = {{"library", "rmfem"},
                   {"version", io::library_version()},
                   {"csv_schema", io::kCsvSchema},
                   {"experiment", e},
                   {"seeds", seeds_json(o.seed)},
                   {"threads", pool.size()},
                   {"parameters", params},
                   {"files", files},
                   {"wall_time_seconds", wall}};
  for (auto& [k, v] : extra.items()) manifest[k] = v;
  io::write_json(fs::path(o.out) / "manifest.json", manifest);
  std::cout << e << ": wrote " << files.size() + 1 << " files to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, const char* const* argv) {
  CLI::App app{"Random-mesh finite element experiments", "rmfem"};
  app.require_subcommand(0, 1);
  Options top, sub;
  add_run_options(app, top);
  app.add_option("-e,--experiment", top.experiment, "Experiment to run");

  CLI::App* run = app.add_subcommand("run", "Run an experiment");
  add_run_options(*run, sub);
  run->add_option("experiment", sub.experiment, "Experiment to run")->required();

  CLI::App* list = app.add_subcommand("list", "List the available experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (list->parsed()) {
      for (const auto& n : experiment_names()) std::cout << n << "\n";
      return kExitOk;
    }
    if (run->parsed()) return execute(sub, *run);
    if (top.experiment.empty()) {
      std::cerr << "rmfem: no experiment given (use `run <experiment>` or -e)\n" << app.help();
      return kExitUsage;
    }
    return execute(top, app);
  } catch (const UsageError& e) {
    std::cerr << "rmfem: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "rmfem: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace rmfem::cli
