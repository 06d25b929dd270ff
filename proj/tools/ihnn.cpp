// ihnn command-line driver: data generation, training, evaluation, profiling
// and a few diagnostic tools. See `ihnn --help`.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ihnn/profile/counting_new.hpp"

#include "ihnn/adjoint/adjoint.hpp"
#include "ihnn/adjoint/backprop.hpp"
#include "ihnn/data/dataset.hpp"
#include "ihnn/model/checkpoint.hpp"
#include "ihnn/profile/profiler.hpp"
#include "ihnn/training/eval.hpp"
#include "ihnn/training/train.hpp"

namespace fs = std::filesystem;
using namespace ihnn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// Options whose value may also come from the --config JSON file. A flag given
// on the command line wins; otherwise the config key (long name, dashes turned
// into underscores) is used; otherwise the built-in default stays.
class Layered {
 public:
  template <class T>
  CLI::Option* add(CLI::App& app, const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = app.add_option(name, var, help)->capture_default_str();
    remember(opt, &app, name, var);
    return opt;
  }

  CLI::Option* flag(CLI::App& app, const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app.add_flag(name, var, help);
    remember(opt, &app, name, var);
    return opt;
  }

  void apply(const nlohmann::json& cfg, const CLI::App& active) const {
    for (const auto& e : entries_) {
      if (e.owner != &active && e.owner != active.get_parent()) continue;
      if (e.opt->count() > 0 || !cfg.contains(e.key)) continue;
      try {
        e.set(cfg.at(e.key));
      } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("config key '" + e.key + "': " + ex.what());
      }
    }
  }

 private:
  struct Entry {
    CLI::Option* opt;
    const CLI::App* owner;
    std::string key;
    std::function<void(const nlohmann::json&)> set;
  };

  template <class T>
  void remember(CLI::Option* opt, const CLI::App* owner, const std::string& name, T& var) {
    std::string key = name.substr(name.find_first_not_of('-'));
    for (auto& c : key) c = c == '-' ? '_' : c;
    entries_.push_back({opt, owner, key, [&var](const nlohmann::json& j) { var = j.get<T>(); }});
  }

  std::vector<Entry> entries_;
};

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::size_t threads = 0;
};

fs::path prepare_out(const Globals& g) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir);
}

void write_file(const fs::path& path, const std::string& text) { io::write_text(path, text); }

std::map<std::string, double> system_params(const std::string& system, double alpha, double energy_cap) {
  std::map<std::string, double> p;
  if (system == "coupled_ho") p["alpha"] = alpha;
  if (system == "henon_heiles") p["energy_cap"] = energy_cap;
  return p;
}

FpiConfig make_fpi(double tol, int max_iters, const std::string& guess, bool fixed) {
  FpiConfig f;
  f.tol = tol;
  f.max_iters = max_iters;
  f.guess = parse_guess_source(guess);
  f.early_exit = !fixed;
  f.validate();
  return f;
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
  std::string system = "double_well";
  double alpha = 0.5;
  double energy_cap = 1.0 / 6.0;
  bool smoke = false;
  std::size_t n_train = 16384;
  std::size_t n_val = 8192;
  std::size_t n_steps = 64;
  double dt = 0.001;
  double noise = 0.01;
  std::vector<double> bounds;  // lo,hi pairs for each of the 2d coordinates
  std::string name = "data";
  std::size_t csv = 0;
};

int cmd_gen_data(const Globals& g, GenDataOpts o, const CLI::App& sub) {
  if (o.smoke) {
    if (sub.count("--n-train") == 0) o.n_train = 1024;
    if (sub.count("--n-val") == 0) o.n_val = 256;
    if (sub.count("--n-steps") == 0) o.n_steps = 600;
  }
  const auto spec = system_by_name(o.system, system_params(o.system, o.alpha, o.energy_cap));
  DatasetManifest m;
  m.n_train = o.n_train;
  m.n_val = o.n_val;
  m.n_steps = o.n_steps;
  m.dt = o.dt;
  m.noise_coeff = o.noise;
  m.seed = g.seed;
  if (!o.bounds.empty()) {
    if (o.bounds.size() != 4 * spec.d) throw ConfigError("--bounds needs lo,hi for each of the 2d coordinates");
    for (std::size_t i = 0; i < o.bounds.size(); i += 2) m.bounds.push_back({o.bounds[i], o.bounds[i + 1]});
  }
  const auto ds = generate_dataset(spec, m, g.threads);
  const fs::path dir = prepare_out(g) / o.name;
  save_dataset(dir, ds);
  if (o.csv > 0) {
    std::ostringstream os;
    write_dataset_csv(os, ds, o.csv);
    write_file(dir / "trajectories.csv", os.str());
  }
  std::cout << "wrote " << ds.n_traj() << " trajectories (" << m.n_train << " train / " << m.n_val << " val, "
            << m.n_steps << " steps of dt=" << m.dt << ") to " << dir.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainOpts {
  std::string data;
  bool smoke = false;
  std::size_t tau = 6;
  std::size_t stride = 1;
  double h = 0.0;
  std::size_t batch_size = 512;
  std::size_t epochs = 25;
  std::size_t steps_per_epoch = 0;
  double lr = 0.01;
  double plateau_factor = 0.5;
  int plateau_patience = 3;
  std::string grad_mode = "adjoint";
  std::string shooting = "single";
  std::size_t segment_len = 2;
  double fpi_tol = 1e-10;
  int fpi_max_iters = 50;
  std::string guess = "predictor";
  bool fpi_fixed = false;
  std::vector<std::size_t> arch;
  std::size_t monitor_windows = 256;
  std::string name = "model";
};

int cmd_train(const Globals& g, TrainOpts o, const CLI::App& sub) {
  if (o.smoke) {
    if (sub.count("--stride") == 0) o.stride = 100;
    if (sub.count("--batch-size") == 0) o.batch_size = 64;
    if (sub.count("--epochs") == 0) o.epochs = 10;
  }
  if (o.data.empty()) throw ConfigError("train: --data <dataset dir> is required");
  const auto ds = load_dataset(o.data);
  TrainConfig cfg;
  cfg.tau = o.tau;
  cfg.stride = o.stride;
  cfg.h = o.h;
  cfg.batch_size = o.batch_size;
  cfg.epochs = o.epochs;
  cfg.steps_per_epoch = o.steps_per_epoch;
  cfg.lr0 = o.lr;
  cfg.scheduler.factor = o.plateau_factor;
  cfg.scheduler.patience = o.plateau_patience;
  cfg.grad_mode = parse_grad_mode(o.grad_mode);
  cfg.shooting = parse_shooting(o.shooting);
  cfg.segment_len = o.segment_len;
  cfg.fpi = make_fpi(o.fpi_tol, o.fpi_max_iters, o.guess, o.fpi_fixed);
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  cfg.monitor_windows = o.monitor_windows;
  const Architecture arch = o.arch.empty() ? default_architecture(ds.manifest.d) : Architecture(o.arch);
  const auto theta0 = init_params(arch, g.seed);

  const auto result = train(ds, theta0, cfg, [](const EpochMetrics& m) {
    std::printf("epoch %3zu  train %.6e  val %.6e  lr %.3g  %.1fs\n", m.epoch, m.train_loss, m.val_loss, m.lr,
                m.wall_time_s);
    std::fflush(stdout);
  });
  const fs::path out = prepare_out(g);
  save_checkpoint(out / (o.name + ".json"), result.params, g.seed, ds.manifest.system);
  std::ostringstream metrics;
  write_metrics_csv(metrics, result.metrics);
  write_file(out / "metrics.csv", metrics.str());
  const std::size_t sat = saturation_epoch(result.metrics);
  std::cout << "checkpoint " << (out / (o.name + ".json")).string() << "; validation loss saturated at epoch " << sat
            << " (" << result.metrics[sat].wall_time_s << " s)\n";
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalOpts {
  std::string checkpoint;
  bool oracle = false;
  std::string system;
  double alpha = 0.5;
  double energy_cap = 1.0 / 6.0;
  std::string data;
  std::size_t grid_n = 33;
  std::vector<double> slice;
  std::vector<double> q_range;
  std::vector<double> p_range;
  std::size_t drift_steps = 1000;
  double drift_h = 0.01;
  std::string metrics;
};

int cmd_eval(const Globals& g, EvalOpts o) {
  if (o.oracle == !o.checkpoint.empty()) throw ConfigError("eval: give exactly one of --checkpoint or --oracle");
  std::optional<CheckpointInfo> ckpt;
  if (!o.checkpoint.empty()) ckpt = load_checkpoint(o.checkpoint);
  std::string system = o.system;
  if (system.empty() && ckpt) system = ckpt->system;
  if (system.empty()) throw ConfigError("eval: --system is required (checkpoint does not name one)");
  const auto spec = system_by_name(system, system_params(system, o.alpha, o.energy_cap));
  if (ckpt && ckpt->params.arch.input_dim() != 2 * spec.d) {
    throw ConfigError("eval: checkpoint expects d=" + std::to_string(ckpt->params.arch.state_dim()) + " but " +
                      system + " has d=" + std::to_string(spec.d));
  }
  if (!o.data.empty()) {
    const auto m = manifest_from_json(io::read_json(fs::path(o.data) / "manifest.json"));
    if (m.d != spec.d) {
      throw ConfigError("eval: dataset has d=" + std::to_string(m.d) + ", system " + system + " has d=" +
                        std::to_string(spec.d));
    }
  }
  const auto model = ckpt ? HamiltonianModel::from_params(ckpt->params) : HamiltonianModel::from_system(spec);
  GridSpec grid = default_grid(spec, o.grid_n);
  if (!o.slice.empty()) grid.slice = o.slice;
  if (o.q_range.size() == 2) grid.q_range = {o.q_range[0], o.q_range[1]};
  if (o.p_range.size() == 2) grid.p_range = {o.p_range[0], o.p_range[1]};
  auto report = evaluate_ood(model, spec, grid);

  // Drift start: a quarter of the way from the plane centre to the upper corner.
  const std::size_t k = (grid.n - 1) * 5 / 8;
  const PhasePoint y0 = grid.point(spec.d, k, k);
  report.energy_drift = energy_drift(model, y0, o.drift_h, o.drift_steps);

  const fs::path out = prepare_out(g);
  write_file(out / "eval.json", to_json(report).dump(2) + "\n");
  std::ostringstream csv;
  write_grid_csv(csv, report);
  write_file(out / "eval_grid.csv", csv.str());
  if (!o.metrics.empty()) {
    // Table row: error plus runtime until validation saturation from a metrics CSV.
    std::ifstream in(o.metrics);
    if (!in) throw IoError("cannot read metrics file " + o.metrics);
    std::string line;
    std::getline(in, line);
    std::vector<EpochMetrics> rows;
    while (std::getline(in, line)) {
      EpochMetrics m;
      if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf", &m.epoch, &m.train_loss, &m.val_loss, &m.lr,
                      &m.wall_time_s) == 5) {
        rows.push_back(m);
      }
    }
    if (rows.empty()) throw IoError("metrics file " + o.metrics + " has no rows");
    const std::size_t sat = saturation_epoch(rows);
    const std::vector<ReportRow> table{{spec.name, report.h_l1_mean, report.h_l1_mean_raw, rows[sat].wall_time_s}};
    write_file(out / "table.md", report_markdown(table));
    write_file(out / "table.csv", report_csv(table));
  }
  std::printf("%s: h_l1_mean %.6g (raw %.6g, offset %.6g), h_l1_max %.6g, dyn_l2_mean %.6g, energy_drift %.3g\n",
              spec.name.c_str(), report.h_l1_mean, report.h_l1_mean_raw, report.alignment_offset, report.h_l1_max,
              report.dyn_l2_mean, report.energy_drift);
  return 0;
}

// -------------------------------------------------------------- integrate

struct IntegrateOpts {
  std::string system = "double_well";
  double alpha = 0.5;
  double energy_cap = 1.0 / 6.0;
  std::string checkpoint;
  std::string method = "implicit_midpoint";
  std::vector<double> y0;
  double h = 0.01;
  std::size_t n = 1000;
  double fpi_tol = 1e-10;
  int fpi_max_iters = 50;
  std::string name = "trajectory.csv";
};

int cmd_integrate(const Globals& g, IntegrateOpts o) {
  const auto spec = system_by_name(o.system, system_params(o.system, o.alpha, o.energy_cap));
  HamiltonianModel model = HamiltonianModel::from_system(spec);
  if (!o.checkpoint.empty()) {
    auto ck = load_checkpoint(o.checkpoint);
    if (ck.params.arch.input_dim() != 2 * spec.d) throw ConfigError("integrate: checkpoint dimension mismatch");
    model = HamiltonianModel::from_params(std::move(ck.params));
  }
  if (o.y0.empty()) o.y0 = std::vector<double>(2 * spec.d, 0.25);
  require_dims(o.y0.size(), 2 * spec.d, "--y0");
  const auto y0 = PhasePoint::from_flat(o.y0);
  FpiConfig fpi;
  fpi.tol = o.fpi_tol;
  fpi.max_iters = o.fpi_max_iters;
  Trajectory traj;
  std::size_t unconverged = 0;
  if (o.method == "reference") {
    traj = reference_integrate(model.dynamics, y0, o.h, o.n);
  } else {
    auto r = integrate(model.dynamics, y0, o.h, o.n, StepMethod::by_name(o.method), fpi);
    for (const auto& rep : r.reports) unconverged += rep.converged ? 0 : 1;
    traj = std::move(r.trajectory);
  }
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  const fs::path path = prepare_out(g) / o.name;
  write_file(path, os.str());
  std::cout << "wrote " << traj.points.size() << " points to " << path.string();
  if (unconverged > 0) std::cout << " (" << unconverged << " steps did not reach the FPI tolerance)";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------- profile

struct ProfileOpts {
  std::string data;
  std::vector<std::size_t> steps{4, 8, 16, 32};
  std::vector<std::string> modes{"adjoint", "backprop"};
  std::size_t batch_size = 512;
  std::size_t stride = 1;
  double fpi_tol = 1e-10;
  int fpi_max_iters = 50;
};

int cmd_profile(const Globals& g, const ProfileOpts& o) {
  Dataset ds;
  if (!o.data.empty()) {
    ds = load_dataset(o.data);
    if (ds.manifest.system != "coupled_ho") throw ConfigError("profile: expects a coupled_ho dataset");
  } else {
    DatasetManifest m;
    m.n_train = o.batch_size;
    m.n_val = 0;
    m.dt = 0.01;
    m.n_steps = 64;
    m.seed = g.seed;
    ds = generate_dataset(coupled_ho(0.5), m, 1);
  }
  profile::ProfileConfig pc;
  pc.steps = o.steps;
  pc.modes.clear();
  for (const auto& m : o.modes) pc.modes.push_back(parse_grad_mode(m));
  pc.batch_size = o.batch_size;
  pc.stride = o.stride;
  pc.fpi.tol = o.fpi_tol;
  pc.fpi.max_iters = o.fpi_max_iters;
  pc.seed = g.seed;
  const auto rows = profile::run_profile(ds, init_params(default_architecture(ds.manifest.d), g.seed), pc);
  std::ostringstream os;
  profile::write_profile_csv(os, rows);
  write_file(prepare_out(g) / "profile.csv", os.str());
  std::cout << os.str();
  return 0;
}

// ----------------------------------------------------------- check-tableau

PrkTableau tableau_from_json(const nlohmann::json& j) {
  try {
    using M = std::vector<std::vector<double>>;
    using V = std::vector<double>;
    auto t = make_tableau(j.value("name", std::string("custom")), j.at("a").get<M>(), j.at("b").get<V>(),
                          j.at("A").get<M>(), j.at("B").get<V>());
    if (j.contains("c")) t.c = j.at("c").get<V>();
    if (j.contains("C")) t.C = j.at("C").get<V>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("tableau json: ") + e.what());
  }
}

int cmd_check_tableau(const Globals& g, const std::string& name, const std::string& json_path) {
  if (name.empty() == json_path.empty()) throw ConfigError("check-tableau: give a tableau name or --tableau-json");
  const PrkTableau t = json_path.empty() ? tableau_by_name(name) : tableau_from_json(io::read_json(json_path));
  const auto r = check_symplectic_tableau(t);
  std::printf("tableau %s (%zu stage%s)\n", t.name.c_str(), t.stages(), t.stages() == 1 ? "" : "s");
  std::printf("  weights  max|b_i - B_i|                     = %.3e\n", r.weights_violation);
  std::printf("  nodes    max|c_i - C_i|                     = %.3e  (informational)\n", r.nodes_violation);
  std::printf("  coupling max|b_i A_ij + B_j a_ji - b_i B_j| = %.3e\n", r.cross_violation);
  std::printf("  max violation %.3e -> %s\n", r.max_violation, r.symplectic ? "PASS (symplectic)" : "FAIL");
  nlohmann::json j{{"name", t.name},
                   {"symplectic", r.symplectic},
                   {"weights_violation", r.weights_violation},
                   {"nodes_violation", r.nodes_violation},
                   {"cross_violation", r.cross_violation},
                   {"max_violation", r.max_violation}};
  write_file(prepare_out(g) / "tableau_check.json", j.dump(2) + "\n");
  return 0;
}

// ------------------------------------------------------------- grad-check

struct GradCheckOpts {
  std::string system = "double_well";
  std::vector<std::size_t> arch{2, 8, 1};
  std::size_t tau = 4;
  double h = 0.01;
  double fd_step = 1e-5;
  double noise = 0.01;
};

int cmd_grad_check(const Globals& g, const GradCheckOpts& o) {
  const auto spec = system_by_name(o.system);
  const Architecture arch(o.arch);
  if (arch.input_dim() != 2 * spec.d) throw ConfigError("grad-check: --arch input width must be 2d");
  const auto theta = init_params(arch, g.seed);
  FpiConfig fpi;
  fpi.tol = 1e-12;
  fpi.max_iters = 100;
  // Observed window: reference trajectory at spacing h plus noise.
  const auto y0 = sample_initial_conditions(1, spec.domain, g.seed, spec.admissible)[0];
  auto obs = reference_integrate([&](const PhasePoint& y) { return spec.dynamics(y); }, y0, o.h, o.tau).points;
  Rng rng(g.seed);
  for (auto& p : obs)
    for (auto& x : p.flat()) x += o.noise * rng.normal();

  const auto adj = window_gradient(theta, obs, o.h, fpi, GradMode::adjoint).grad;
  const auto bp = window_gradient(theta, obs, o.h, fpi, GradMode::backprop).grad;
  std::vector<double> fd(theta.size());
  auto v = theta.values;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = v[k];
    v[k] = x + o.fd_step;
    const double up = window_loss_value(ParamVector(arch, v), obs, o.h, fpi);
    v[k] = x - o.fd_step;
    const double down = window_loss_value(ParamVector(arch, v), obs, o.h, fpi);
    v[k] = x;
    fd[k] = (up - down) / (2 * o.fd_step);
  }
  double scale = 0.0;
  for (double x : fd) scale = std::max(scale, std::abs(x));
  auto rel = [&](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3 * scale, 1e-300});
  };
  std::ostringstream os;
  os << "index,adjoint,backprop,finite_difference,max_rel_error\n" << std::setprecision(17);
  double worst_fd = 0.0, worst_bp = 0.0;
  for (std::size_t k = 0; k < fd.size(); ++k) {
    const double e_fd = std::max(rel(adj[k], fd[k]), rel(bp[k], fd[k]));
    const double e_bp = rel(adj[k], bp[k]);
    worst_fd = std::max(worst_fd, e_fd);
    worst_bp = std::max(worst_bp, e_bp);
    os << k << ',' << adj[k] << ',' << bp[k] << ',' << fd[k] << ',' << std::max(e_fd, e_bp) << '\n';
  }
  write_file(prepare_out(g) / "grad_check.csv", os.str());
  std::printf("%zu parameters: max rel error vs finite differences %.3e, adjoint vs backprop %.3e\n", fd.size(),
              worst_fd, worst_bp);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian neural network identification with symplectic adjoint gradients"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Layered layered;
  app.add_option("--config", g.config, "JSON file with option values (command-line flags take precedence)");
  layered.add(app, "--seed", g.seed, "Random seed");
  layered.add(app, "--out-dir", g.out_dir, "Directory receiving every output artifact");
  layered.add(app, "--threads", g.threads, "Worker threads (0 = all cores)");

  GenDataOpts gd;
  auto* gen = app.add_subcommand("gen-data", "Generate a noisy trajectory dataset");
  layered.add(*gen, "--system", gd.system, "double_well | coupled_ho | henon_heiles");
  layered.add(*gen, "--alpha", gd.alpha, "Coupling of coupled_ho");
  layered.add(*gen, "--energy-cap", gd.energy_cap, "Energy bound for henon_heiles initial conditions");
  layered.flag(*gen, "--smoke", gd.smoke, "Reduced preset: 1024 train / 256 val trajectories, 600 stored steps");
  layered.add(*gen, "--n-train", gd.n_train, "Training trajectories");
  layered.add(*gen, "--n-val", gd.n_val, "Validation trajectories");
  layered.add(*gen, "--n-steps", gd.n_steps, "Stored steps per trajectory");
  layered.add(*gen, "--dt", gd.dt, "Time between stored points");
  layered.add(*gen, "--noise", gd.noise, "Noise coefficient");
  layered.add(*gen, "--bounds", gd.bounds, "Sampling box as lo,hi per coordinate (q first)")->delimiter(',');
  layered.add(*gen, "--name", gd.name, "Dataset subdirectory inside --out-dir");
  layered.add(*gen, "--csv", gd.csv, "Also export the first N trajectories as CSV");

  TrainOpts tr;
  auto* trn = app.add_subcommand("train", "Train a Hamiltonian network on a dataset");
  layered.add(*trn, "--data", tr.data, "Dataset directory");
  layered.flag(*trn, "--smoke", tr.smoke, "Reduced preset: stride 100, batch 64, 10 epochs");
  layered.add(*trn, "--tau", tr.tau, "Rollout length in steps");
  layered.add(*trn, "--stride", tr.stride, "Use every stride-th stored point");
  layered.add(*trn, "--h", tr.h, "Integrator step (0 = dataset dt * stride)");
  layered.add(*trn, "--batch-size", tr.batch_size, "Windows per batch");
  layered.add(*trn, "--epochs", tr.epochs, "Epochs");
  layered.add(*trn, "--steps-per-epoch", tr.steps_per_epoch, "Batches per epoch (0 = n_train / batch size)");
  layered.add(*trn, "--lr", tr.lr, "Initial learning rate");
  layered.add(*trn, "--plateau-factor", tr.plateau_factor, "Learning-rate reduction factor");
  layered.add(*trn, "--plateau-patience", tr.plateau_patience, "Epochs without improvement before reducing");
  layered.add(*trn, "--grad-mode", tr.grad_mode, "adjoint | backprop");
  layered.add(*trn, "--shooting", tr.shooting, "single | multiple");
  layered.add(*trn, "--segment-len", tr.segment_len, "Steps per segment under multiple shooting");
  layered.add(*trn, "--fpi-tol", tr.fpi_tol, "Fixed-point tolerance");
  layered.add(*trn, "--fpi-max-iters", tr.fpi_max_iters, "Fixed-point iteration cap");
  layered.add(*trn, "--guess", tr.guess, "predictor | observation | previous_state");
  layered.flag(*trn, "--fpi-fixed", tr.fpi_fixed, "Always run --fpi-max-iters iterations");
  layered.add(*trn, "--arch", tr.arch, "Layer widths, e.g. 2,16,32,16,1")->delimiter(',');
  layered.add(*trn, "--monitor-windows", tr.monitor_windows, "Fixed windows for per-epoch losses");
  layered.add(*trn, "--name", tr.name, "Checkpoint base name");

  EvalOpts ev;
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a phase-space grid");
  layered.add(*evl, "--checkpoint", ev.checkpoint, "Checkpoint header (.json)");
  layered.flag(*evl, "--oracle", ev.oracle, "Evaluate the true Hamiltonian instead of a checkpoint");
  layered.add(*evl, "--system", ev.system, "System (defaults to the checkpoint's)");
  layered.add(*evl, "--alpha", ev.alpha, "Coupling of coupled_ho");
  layered.add(*evl, "--energy-cap", ev.energy_cap, "Energy cap of henon_heiles");
  layered.add(*evl, "--data", ev.data, "Dataset to check the dimension against");
  layered.add(*evl, "--grid-n", ev.grid_n, "Grid points per axis");
  layered.add(*evl, "--slice", ev.slice, "Full state holding the off-plane coordinates")->delimiter(',');
  layered.add(*evl, "--q-range", ev.q_range, "lo,hi of the plane's q axis")->delimiter(',');
  layered.add(*evl, "--p-range", ev.p_range, "lo,hi of the plane's p axis")->delimiter(',');
  layered.add(*evl, "--drift-steps", ev.drift_steps, "Steps of the energy-drift run");
  layered.add(*evl, "--drift-h", ev.drift_h, "Step of the energy-drift run");
  layered.add(*evl, "--metrics", ev.metrics, "metrics.csv from training; adds a comparison table");

  IntegrateOpts in;
  auto* itg = app.add_subcommand("integrate", "Dump one trajectory as CSV");
  layered.add(*itg, "--system", in.system, "System");
  layered.add(*itg, "--alpha", in.alpha, "Coupling of coupled_ho");
  layered.add(*itg, "--energy-cap", in.energy_cap, "Energy cap of henon_heiles");
  layered.add(*itg, "--checkpoint", in.checkpoint, "Use a learned Hamiltonian instead of the true one");
  layered.add(*itg, "--method", in.method,
              "implicit_midpoint | semi_implicit_euler | rk2 | reference | any tableau name");
  layered.add(*itg, "--y0", in.y0, "Initial state q..,p..")->delimiter(',');
  layered.add(*itg, "--h", in.h, "Step size");
  layered.add(*itg, "--n", in.n, "Number of steps");
  layered.add(*itg, "--fpi-tol", in.fpi_tol, "Fixed-point tolerance");
  layered.add(*itg, "--fpi-max-iters", in.fpi_max_iters, "Fixed-point iteration cap");
  layered.add(*itg, "--name", in.name, "Output file name");

  ProfileOpts pr;
  auto* prf = app.add_subcommand("profile", "Peak memory and runtime of adjoint vs backprop gradients");
  layered.add(*prf, "--data", pr.data, "coupled_ho dataset (default: generated, dt=0.01)");
  layered.add(*prf, "--steps", pr.steps, "Rollout lengths")->delimiter(',');
  layered.add(*prf, "--modes", pr.modes, "Gradient modes")->delimiter(',');
  layered.add(*prf, "--batch-size", pr.batch_size, "Batch size");
  layered.add(*prf, "--stride", pr.stride, "Stride over stored points");
  layered.add(*prf, "--fpi-tol", pr.fpi_tol, "Fixed-point tolerance");
  layered.add(*prf, "--fpi-max-iters", pr.fpi_max_iters, "Fixed-point iteration cap");

  std::string tableau_name, tableau_json;
  auto* chk = app.add_subcommand("check-tableau", "Check the symplecticity conditions of a PRK tableau");
  chk->add_option("name", tableau_name, "Registered tableau: implicit_midpoint, symplectic_euler, gauss2, explicit_euler");
  layered.add(*chk, "--tableau-json", tableau_json, "Tableau file with a, b, A, B (and optionally c, C)");

  GradCheckOpts gc;
  auto* grd = app.add_subcommand("grad-check", "Compare adjoint, backprop and finite-difference gradients");
  layered.add(*grd, "--system", gc.system, "System generating the observed window");
  layered.add(*grd, "--arch", gc.arch, "Layer widths")->delimiter(',');
  layered.add(*grd, "--tau", gc.tau, "Window length");
  layered.add(*grd, "--h", gc.h, "Step size");
  layered.add(*grd, "--fd-step", gc.fd_step, "Finite-difference step");
  layered.add(*grd, "--noise", gc.noise, "Observation noise");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const CLI::App* active = app.get_subcommands().front();
    if (!g.config.empty()) layered.apply(io::read_json(g.config), *active);
    if (active == gen) return cmd_gen_data(g, gd, *gen);
    if (active == trn) return cmd_train(g, tr, *trn);
    if (active == evl) return cmd_eval(g, ev);
    if (active == itg) return cmd_integrate(g, in);
    if (active == prf) return cmd_profile(g, pr);
    if (active == chk) return cmd_check_tableau(g, tableau_name, tableau_json);
    if (active == grd) return cmd_grad_check(g, gc);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
