#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <tuple>

#include "glassmem/cavity.hpp"
#include "glassmem/error.hpp"
#include "glassmem/hopfield.hpp"
#include "glassmem/io.hpp"
#include "glassmem/network_sim.hpp"
#include "glassmem/parallel.hpp"
#include "glassmem/pipeline.hpp"
#include "glassmem/semiclassical.hpp"
#include "glassmem/sk.hpp"
#include "glassmem/stats.hpp"
#include "glassmem/version.hpp"
#include "params.hpp"

namespace fs = std::filesystem;
using namespace glassmem;
using cli::json;
using cli::Params;

namespace {

struct Context {
  std::string command;
  json config;            // verbatim parsed config
  fs::path config_dir;    // relative paths in the config resolve here
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool deterministic = false;
  bool emit_trajectory = false;
  std::vector<std::size_t> n_override;

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(cli::fnv1a(command + "\n" + config.dump())));
    return buf;
  }
  std::string csv_preamble() const {
    return "# glassmem " + std::string(kVersion) + " command=" + command + " config_hash=" + hash() +
           " seed=" + std::to_string(seed) + "\n";
  }
  json meta() const {
    return {{"version", kVersion}, {"command", command}, {"config_hash", hash()},
            {"seed", seed},        {"threads", threads}, {"deterministic", deterministic},
            {"config", config}};
  }
  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : config_dir / path;
  }
};

/// Collects every artifact in memory and writes them only once the whole run succeeded.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void commit() const {
    fs::create_directories(dir_);
    std::vector<fs::path> temps;
    for (const auto& [name, content] : files_) {
      const auto tmp = dir_ / (name + ".tmp");
      std::ofstream out(tmp, std::ios::binary);
      out << content;
      if (!out) throw Error("cannot write " + tmp.string());
      temps.push_back(tmp);
    }
    for (std::size_t k = 0; k < files_.size(); ++k) fs::rename(temps[k], dir_ / files_[k].first);
  }

  const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string with_meta(const Context& ctx, json body) {
  body["meta"] = ctx.meta();
  return body.dump(2) + "\n";
}

std::string num(double v) { return io::format_double(v); }

std::vector<std::size_t> sizes(Params& p, const Context& ctx, std::vector<std::size_t> fallback) {
  auto ns = p.get<std::vector<std::size_t>>("n", std::move(fallback));
  if (!ctx.n_override.empty()) ns = ctx.n_override;
  if (ns.empty()) throw ValidationError("the n list is empty");
  for (const auto n : ns)
    if (n == 0) throw ValidationError("n must be positive");
  return ns;
}

CavityParams read_cavity(Params p) {
  const CavityParams d;
  CavityParams c(p.get("w0", d.w0()), p.get("sigma_A", d.sigma_A()), p.get("eta", d.eta()),
                 p.get("delta_C", d.delta_C()), p.get("kappa", d.kappa()));
  p.finish();
  return c;
}

SimParams read_sim(Params p, const CavityParams& cavity) {
  SimParams s;
  s.omega_z = p.get("omega_z", s.omega_z);
  s.stimulus_amplitude = p.get("stimulus_amplitude", s.stimulus_amplitude);
  s.damping = p.get("damping", s.damping);
  s.atoms_per_site = p.get("atoms_per_site", s.atoms_per_site);
  s.trap_energy = p.get("trap_energy", s.trap_energy);
  s.trap_waist = p.get("trap_waist", s.trap_waist);
  s.elastic = p.get("elastic", s.elastic);
  s.seed_scale = p.get("seed_scale", s.seed_scale);
  s.rel_tol = p.get("rel_tol", s.rel_tol);
  s.abs_tol = p.get("abs_tol", s.abs_tol);
  s.lazy_threshold = p.get("lazy_threshold", s.lazy_threshold);
  s.max_steps = p.get("max_steps", s.max_steps);
  auto sch = p.child("schedule");
  s.schedule.stimulus_on = sch.get("stimulus_on", s.schedule.stimulus_on);
  s.schedule.stimulus_hold = sch.get("stimulus_hold", s.schedule.stimulus_hold);
  s.schedule.stimulus_off = sch.get("stimulus_off", s.schedule.stimulus_off);
  s.schedule.t_end = sch.get("t_end", s.schedule.t_end);
  s.schedule.pump_final = sch.get("pump_final", s.schedule.pump_final);
  s.schedule.pump_tau = sch.get("pump_tau", s.schedule.pump_tau);
  sch.finish();
  p.finish();
  s.cavity = cavity;
  s.validate();
  return s;
}

NoiseModel read_noise(Params p) {
  NoiseModel m;
  m.trap = p.get("trap", m.trap);
  m.stimulus = p.get("stimulus", m.stimulus);
  m.trap_sigma = p.get("trap_sigma", m.trap_sigma);
  m.amp_sigma = p.get("amp_sigma", m.amp_sigma);
  m.phase_sigma = p.get("phase_sigma", m.phase_sigma);
  p.finish();
  m.validate();
  return m;
}

PipelineOptions read_pipeline(Params p, const Context& ctx) {
  PipelineOptions o;
  o.samples = p.get("samples", o.samples);
  o.cut = p.get("cut", o.cut);
  o.noise_floor = p.get("noise_floor", o.noise_floor);
  o.linkage = parse_linkage(p.get<std::string>("linkage", to_string(o.linkage)));
  o.screen_trials = p.get("screen_trials", o.screen_trials);
  o.pass_threshold = p.get("pass_threshold", o.pass_threshold);
  o.basin.threshold = p.get("threshold", o.basin.threshold);
  o.basin.p0_trials = p.get("p0_trials", o.basin.p0_trials);
  o.basin.adaptive_trials = p.get("adaptive_trials", o.basin.adaptive_trials);
  o.basin.bootstrap = p.get("basin_bootstrap", o.basin.bootstrap);
  o.basin.sampling_width = p.get("sampling_width", o.basin.sampling_width);
  o.basin.default_err = p.get("default_basin_err", o.basin.default_err);
  o.capacity_bootstrap = p.get("capacity_bootstrap", o.capacity_bootstrap);
  o.samples_bootstrap = p.get("samples_bootstrap", o.samples_bootstrap);
  o.strict_match = p.get("strict_match", o.strict_match);
  o.exact_single_flip = p.get("exact_single_flip", o.exact_single_flip);
  p.finish();
  if (!(o.cut > 0.0) || !(o.noise_floor >= 0.0)) throw ValidationError("pipeline: cut and noise_floor must be positive");
  if (!(o.basin.threshold > 0.0 && o.basin.threshold < 1.0)) throw ValidationError("pipeline: threshold must lie in (0, 1)");
  o.threads = ctx.threads;
  return o;
}

SitePlan read_plan(Params& p, const Context& ctx) {
  if (!p.has("plan")) throw ValidationError("params: missing 'plan'");
  const auto raw = p.raw("plan");
  if (raw.is_string()) return SitePlan::load(ctx.resolve(raw.get<std::string>()));
  return SitePlan::from_json(raw.dump());
}

Vec2 read_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(what + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------------------

void hopfield_capacity(Params& p, const Context& ctx, Artifacts& out) {
  const auto ns = sizes(p, ctx, {16});
  std::vector<std::size_t> Ps(8);
  std::iota(Ps.begin(), Ps.end(), 1);
  Ps = p.get("P", Ps);
  if (Ps.empty()) throw ValidationError("the P list is empty");
  HopfieldOptions opts;
  const auto realizations = p.get<std::size_t>("realizations", 10000);
  opts.trials = p.get("trials", opts.trials);
  opts.threshold = p.get("threshold", opts.threshold);
  opts.kind = parse_dynamics_kind(p.get<std::string>("dynamics", to_string(opts.kind)));
  p.finish();

  const RandomSource rng(ctx.seed);
  std::ostringstream csv;
  csv << ctx.csv_preamble() << "n,P,mean,std,realizations\n";
  json per_n = json::array();
  std::vector<double> xs, ys;
  for (const auto n : ns) {
    const auto sweep = capacity_sweep(n, Ps, realizations, rng.split(n), opts, ctx.threads);
    for (const auto& r : sweep.rows)
      csv << r.n << ',' << r.P << ',' << num(r.mean) << ',' << num(r.std) << ',' << r.realizations << '\n';
    per_n.push_back({{"n", n}, {"argmax_P", sweep.argmax_P}, {"max_mean", sweep.max_mean}});
    xs.push_back(static_cast<double>(n));
    ys.push_back(sweep.max_mean);
  }
  json summary{{"maxima", per_n}, {"dynamics", to_string(opts.kind)}, {"realizations", realizations}};
  if (ns.size() >= 2) {
    const auto fit = stats::fit_line(xs, ys);
    summary["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
  }
  out.add("hopfield_capacity.csv", csv.str());
  out.add("hopfield_summary.json", with_meta(ctx, summary));
}

void sk(Params& p, const Context& ctx, Artifacts& out) {
  const auto ns = sizes(p, ctx, {8, 12, 16, 20});
  const auto realizations = p.get<std::size_t>("realizations", 1000);
  const auto kinds = p.get<std::vector<std::string>>("dynamics", {"SD", "MH"});
  const auto thresholds = p.get<std::vector<double>>("thresholds", {0.5, 0.75});
  SKOptions base;
  base.exhaustive_limit = p.get("exhaustive_limit", base.exhaustive_limit);
  base.starts = p.get("starts", base.starts);
  base.trials = p.get("trials", base.trials);
  const auto scoring = p.get<std::string>("scoring", "exact");
  p.finish();
  if (scoring == "twin") base.scoring = RecallScoring::TwinTolerant;
  else if (scoring != "exact") throw ValidationError("scoring must be 'exact' or 'twin'");
  if (base.exhaustive_limit > 24) throw ValidationError("exhaustive enumeration is refused above n = 24");
  if (kinds.empty() || thresholds.empty()) throw ValidationError("dynamics and thresholds must be nonempty");

  const RandomSource rng(ctx.seed);
  std::ostringstream csv;
  csv << ctx.csv_preamble()
      << "dynamics,threshold,n,realizations,capacity_mean,capacity_std,capacity_stderr,fraction_mean,fraction_stderr,"
         "minima_mean\n";
  for (const auto& k : kinds) {
    for (const double thr : thresholds) {
      SKOptions o = base;
      o.kind = parse_dynamics_kind(k);
      o.threshold = thr;
      for (const auto n : ns) {
        const auto s = sk_statistics(n, realizations, rng, o, ctx.threads);
        csv << to_string(o.kind) << ',' << num(thr) << ',' << n << ',' << s.realizations << ','
            << num(s.capacity_mean) << ',' << num(s.capacity_std) << ',' << num(s.capacity_stderr) << ','
            << num(s.fraction_mean) << ',' << num(s.fraction_stderr) << ',' << num(s.minima_mean) << '\n';
      }
    }
  }
  out.add("sk.csv", csv.str());
}

void cavity_j(Params& p, const Context& ctx, Artifacts& out) {
  const auto plan = read_plan(p, ctx);
  const auto cavity = read_cavity(p.child("cavity"));
  const auto scans = p.raw("scans");
  auto ms = p.child("mode_sum");
  const int cutoff = ms.get("cutoff", 0);
  const auto pairs = ms.get<std::size_t>("pairs", 20);
  const double radius = ms.get("radius", 100.0);
  ms.finish();
  p.finish();

  const auto J = coupling_matrix(plan, cavity);
  std::ostringstream jcsv;
  jcsv << ctx.csv_preamble();
  io::write_matrix_csv(jcsv, J);
  out.add("J.csv", jcsv.str());

  double diag = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) diag += J(i, i);
  json summary{{"n", J.size()}, {"diagonal_mean", diag / static_cast<double>(J.size())},
               {"largest_eigenvalue", largest_eigenvalue(J)}};

  if (!scans.is_null()) {
    if (!scans.is_array()) throw ValidationError("scans: expected a list");
    std::ostringstream csv;
    csv << ctx.csv_preamble() << "scan,index,x,y,J\n";
    const CouplingKernel kernel(cavity);
    for (std::size_t s = 0; s < scans.size(); ++s) {
      Params sp(scans[s], "scans[" + std::to_string(s) + "]");
      const Vec2 src = read_point(sp.raw("source"), "source");
      const Vec2 a = read_point(sp.raw("from"), "from");
      const Vec2 b = read_point(sp.raw("to"), "to");
      const auto points = sp.get<std::size_t>("points", 201);
      sp.finish();
      if (points < 2) throw ValidationError("scans need at least two points");
      for (std::size_t k = 0; k < points; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(points - 1);
        const Vec2 r = a + t * (b - a);
        csv << s << ',' << k << ',' << num(r.x) << ',' << num(r.y) << ',' << num(kernel.value(r, src)) << '\n';
      }
    }
    out.add("kernel_scans.csv", csv.str());
  }

  if (cutoff > 0) {
    RandomSource rng(ctx.seed);
    auto disk = [&] {
      for (;;) {
        const Vec2 v{rng.uniform(-radius, radius), rng.uniform(-radius, radius)};
        if (norm(v) <= radius) return v;
      }
    };
    std::ostringstream csv;
    csv << ctx.csv_preamble() << "x,y,xp,yp,closed_form,mode_sum,relative_error\n";
    double worst = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const Vec2 r = disk();
      const Vec2 rp = disk();
      const double c = coupling(r, rp, cavity);
      const double m = mode_sum_coupling(r, rp, cavity, cutoff);
      const double rel = std::abs(m - c) / std::abs(c);
      worst = std::max(worst, rel);
      csv << num(r.x) << ',' << num(r.y) << ',' << num(rp.x) << ',' << num(rp.y) << ',' << num(c) << ',' << num(m)
          << ',' << num(rel) << '\n';
    }
    summary["mode_sum"] = {{"cutoff", cutoff}, {"pairs", pairs}, {"max_relative_error", worst}};
    out.add("mode_sum_check.csv", csv.str());
  }
  out.add("cavity_summary.json", with_meta(ctx, summary));
}

void recall(Params& p, const Context& ctx, Artifacts& out) {
  const auto plan = read_plan(p, ctx);
  const auto cavity = read_cavity(p.child("cavity"));
  const auto sim = read_sim(p.child("sim"), cavity);
  const auto noise = read_noise(p.child("noise"));
  auto st = p.child("stimulus");
  const auto pattern = st.get<std::string>("pattern", "");
  const auto flips = st.get<std::vector<std::size_t>>("flips", {});
  const auto attempts = st.get<std::size_t>("search_attempts", 0);
  st.finish();
  p.finish();

  const RandomSource rng(ctx.seed);
  std::optional<SpinConfig> memory;
  if (!pattern.empty()) {
    memory = io::parse_spin_config(pattern);
    if (memory->size() != plan.size() || !memory->is_binary())
      throw ValidationError("stimulus pattern must be binary with one entry per site");
  } else if (attempts > 0) {
    memory = find_correctable_memory(plan, sim, flips, rng.split(1), attempts);
    if (!memory) throw ConvergenceError("no memory corrected the requested flips within the search budget");
  }
  RandomSource r = rng.split(2);
  const SpinConfig base = memory ? *memory : SpinConfig::random_binary(plan.size(), r);
  const SpinConfig stimulus = flip_sites(base, flips);
  const auto result = run_recall_trial(plan, stimulus, sim, noise, r, ctx.emit_trajectory);

  std::vector<std::size_t> changed;
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (result.signs[i] != stimulus[i]) changed.push_back(i);
  const auto& e = result.final_energy;
  json outcome{{"stimulus", io::format_spin_config(stimulus)},
               {"output", io::format_spin_config(result.signs)},
               {"flipped_during_trial", changed},
               {"corrupted_sites", flips},
               {"recalled_memory", memory ? json(result.signs == *memory) : json()},
               {"energy_per_spin_length",
                {{"transverse", e.transverse / kSpinLength},
                 {"ising", e.ising / kSpinLength},
                 {"stimulus", e.stimulus / kSpinLength},
                 {"trap", e.trap / kSpinLength}}},
               {"ising_over_omega_z_per_spin_length", e.ising / kSpinLength / sim.omega_z},
               {"mean_deviation_um", result.mean_deviation()},
               {"max_spin_length_error", result.max_spin_length_error},
               {"steps", result.steps},
               {"rejected_steps", result.rejected}};
  if (memory) outcome["memory"] = io::format_spin_config(*memory);
  out.add("outcome.json", with_meta(ctx, outcome));
  if (ctx.emit_trajectory) {
    std::ostringstream csv;
    csv << ctx.csv_preamble();
    write_trial_trajectory_csv(csv, result);
    out.add("trajectory.csv", csv.str());
  }
}

void calibrate(Params& p, const Context& ctx, Artifacts& out) {
  const auto plan = read_plan(p, ctx);
  const auto cavity = read_cavity(p.child("cavity"));
  const auto sim = read_sim(p.child("sim"), cavity);
  const double target = p.get("target_um", 1.32);
  const auto trials = p.get<std::size_t>("trials", 20);
  const double rel_tol = p.get("rel_tol", 0.02);
  const auto multipliers = p.get<std::vector<double>>("multipliers", {0.25});
  p.finish();

  const RandomSource rng(ctx.seed);
  const auto cal = calibrate_trap_energy(plan, sim, target, rng, trials, rel_tol, ctx.threads);
  json scan = json::array();
  for (const double m : multipliers) {
    SimParams q = sim;
    q.trap_energy = cal.trap_energy * m;
    scan.push_back({{"multiplier", m}, {"trap_energy", q.trap_energy},
                    {"deviation_um", mean_trap_deviation(plan, q, trials, rng, ctx.threads)}});
  }
  out.add("calibration.json",
          with_meta(ctx, {{"trap_energy", cal.trap_energy},
                          {"deviation_um", cal.deviation},
                          {"evaluations", cal.evaluations},
                          {"target_um", target},
                          {"scan", scan}}));
}

void discover(Params& p, const Context& ctx, Artifacts& out) {
  const auto kind = p.get<std::string>("oracle", "sk");
  const auto opts = read_pipeline(p.child("pipeline"), ctx);
  const RandomSource rng(ctx.seed);

  struct Run {
    std::string label;
    json condition;
    PipelineReport report;
  };
  std::vector<Run> runs;

  if (kind == "semiclassical") {
    const auto plan = read_plan(p, ctx);
    const auto cavity = read_cavity(p.child("cavity"));
    const auto sim = read_sim(p.child("sim"), cavity);
    const auto noise = read_noise(p.child("noise"));
    auto conditions = p.raw("conditions");
    p.finish();
    if (conditions.is_null()) conditions = json::array({json::object()});
    if (!conditions.is_array() || conditions.empty()) throw ValidationError("conditions: expected a nonempty list");
    std::vector<std::tuple<Elasticity, NoiseModel, std::string>> parsed;
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      Params cp(conditions[c], "conditions[" + std::to_string(c) + "]");
      const auto el = parse_elasticity(cp.get<std::string>("elasticity", "default"));
      NoiseModel nm = noise;
      nm.trap = cp.get("trap_noise", noise.trap);
      nm.stimulus = cp.get("stimulus_noise", noise.stimulus);
      cp.finish();
      const std::string label = to_string(el) + (nm.trap ? "_trap" : "") + (nm.stimulus ? "_stim" : "") +
                                (!nm.trap && !nm.stimulus ? "_none" : "");
      parsed.emplace_back(el, nm, label);
    }
    for (const auto& [el, nm, label] : parsed) {
      auto report = network_capacity_sim(plan, with_elasticity(sim, el), nm, rng.split(1), opts);
      runs.push_back({label,
                      {{"elasticity", to_string(el)}, {"trap_noise", nm.trap}, {"stimulus_noise", nm.stimulus}},
                      std::move(report)});
    }
  } else {
    const auto ns = sizes(p, ctx, {12});
    const auto dynamics = parse_dynamics_kind(p.get<std::string>("dynamics", "SD"));
    const auto P = p.get<std::size_t>("P", 3);
    p.finish();
    for (const auto n : ns) {
      RandomSource net = rng.split(0, n);
      std::unique_ptr<NetworkOracle> oracle;
      if (kind == "sk") oracle = std::make_unique<RelaxOracle>(sample_sk(n, net).J, dynamics);
      else if (kind == "hopfield")
        oracle = std::make_unique<RelaxOracle>(hebbian(PatternSet::random(n, P, net)), dynamics);
      else if (kind == "identity") oracle = std::make_unique<IdentityOracle>(n);
      else throw ValidationError("oracle must be sk, hopfield, identity or semiclassical");
      runs.push_back({kind + "_n" + std::to_string(n),
                      {{"oracle", kind}, {"n", n}, {"dynamics", to_string(dynamics)}},
                      capacity(*oracle, rng.split(1, n), opts)});
    }
  }

  std::ostringstream table;
  table << ctx.csv_preamble() << "label,n,samples,candidates,capacity,capacity_mean,capacity_std,volume_bound,"
                                 "samples_intercept,fraction_found\n";
  for (const auto& run : runs) {
    const auto& r = run.report;
    table << run.label << ',' << r.n << ',' << r.samples.size() << ',' << r.candidates.size() << ',' << r.capacity
          << ',' << num(r.capacity_mean) << ',' << num(r.capacity_std) << ',' << num(r.volume_bound) << ','
          << num(r.samples_curve.intercept) << ',' << num(r.samples_curve.fraction_found) << '\n';
    auto body = json::parse(report_json(r));
    body["condition"] = run.condition;
    out.add("report_" + run.label + ".json", with_meta(ctx, body));
    std::ostringstream trials;
    trials << ctx.csv_preamble();
    write_recall_trials_csv(trials, r);
    out.add("recall_trials_" + run.label + ".csv", trials.str());
    out.add("tree_" + run.label + ".json", ClusterTree::build(r.samples, opts.linkage).to_json() + "\n");
  }
  out.add("capacity.csv", table.str());
}

using Command = void (*)(Params&, const Context&, Artifacts&);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Associative-memory capacity experiments on spin-glass networks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned threads = 0;
  bool deterministic = false;
  bool emit_trajectory = false;
  std::vector<std::size_t> n_override;

  app.add_option("--config", config_path, "JSON experiment config")->envname("GLASSMEM_CONFIG");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)")->envname("GLASSMEM_SEED");
  app.add_option("--out", out_dir, "Output directory")->envname("GLASSMEM_OUT");
  app.add_option("--threads", threads, "Worker threads (0 = hardware concurrency)")->envname("GLASSMEM_THREADS");
  app.add_flag("--deterministic", deterministic, "Single worker and recorded deterministic mode")
      ->envname("GLASSMEM_DETERMINISTIC");
  app.add_flag("--emit-trajectory", emit_trajectory, "Write the per-step trial trajectory (recall)");

  const std::vector<std::pair<std::string, std::pair<Command, std::string>>> commands = {
      {"hopfield-capacity", {hopfield_capacity, "Hebbian network capacity versus pattern count"}},
      {"sk", {sk, "SK capacity and memory fraction under SD and MH"}},
      {"cavity-j", {cavity_j, "Cavity coupling matrix, kernel scans and mode-sum check"}},
      {"recall", {recall, "One semiclassical recall trial"}},
      {"calibrate", {calibrate, "Trap energy calibration against a target deviation"}},
      {"discover", {discover, "Memory discovery pipeline over a network oracle"}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, cmd] : commands) {
    auto* sub = app.add_subcommand(name, cmd.second);
    if (name == "hopfield-capacity" || name == "sk" || name == "discover")
      sub->add_option("--n", n_override, "System sizes (overrides the config)");
    subs[name] = sub;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    Context ctx;
    const auto it = std::find_if(commands.begin(), commands.end(),
                                 [&](const auto& c) { return subs.at(c.first)->parsed(); });
    ctx.command = it->first;
    json config = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config " + config_path);
      try {
        config = json::parse(in);
      } catch (const json::exception& e) {
        throw ValidationError("config " + config_path + ": " + e.what());
      }
      ctx.config_dir = fs::path(config_path).parent_path();
    } else {
      ctx.config_dir = fs::current_path();
    }
    ctx.config = config;
    Params top(config, "config");
    const auto declared = top.get<std::string>("command", ctx.command);
    if (declared != ctx.command)
      throw ValidationError("config is for '" + declared + "', not '" + ctx.command + "'");
    ctx.seed = top.get<std::uint64_t>("seed", 0);
    if (seed_opt->count() > 0 || std::getenv("GLASSMEM_SEED")) ctx.seed = seed;
    auto params = top.child("params");
    top.get<std::string>("description", "");
    top.finish();

    ctx.deterministic = deterministic;
    ctx.threads = deterministic ? 1U : (threads ? threads : default_threads());
    ctx.emit_trajectory = emit_trajectory;
    ctx.n_override = n_override;

    Artifacts artifacts(out_dir.empty() ? fs::path("out") / ctx.command : fs::path(out_dir));
    it->second.first(params, ctx, artifacts);
    params.finish();
    artifacts.commit();
    for (const auto& [name, _] : artifacts.files()) std::cout << (fs::path(out_dir.empty() ? "out/" + ctx.command : out_dir) / name).string() << '\n';
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "glassmem: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "glassmem: " << e.what() << '\n';
    return 1;
  }
}
