#include "disclab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "disclab/errors.hpp"

namespace disclab::experiment {
namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_noise(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// JSON number token: finite values at 17 significant digits, null otherwise.
std::string json_num(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt17(v);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (system != "vanderpol" && system != "lorenz" && system != "burgers") {
    throw ConfigError("unknown system: " + system);
  }
  if (epsilon < 0) throw ConfigError("epsilon must be >= 0");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(tf > t0)) throw ConfigError("t_span must be increasing");
  if (!(t_split > t0) || !(t_split < tf)) {
    throw ConfigError("t_split must lie strictly inside t_span");
  }
  if (noise_levels.empty() || approaches.empty() || methods.empty()) {
    throw ConfigError("noise_levels, approaches and methods must be non-empty");
  }
  for (double level : noise_levels) {
    if (level < 0) throw ConfigError("noise levels must be >= 0");
  }
  for (Method m : methods) {
    if (m != Method::sindy && m != Method::dmd && m != Method::gpr &&
        m != Method::nn) {
      throw ConfigError("grid methods must be one of sindy/dmd/gpr/nn");
    }
  }
}

std::string CellKey::label(const std::string& system) const {
  return system + "_n" + fmt_noise(noise_percent) + "_" +
         discrepancy::to_string(approach) + "_" + discrepancy::to_string(method);
}

int GridResult::failed_count() const {
  int failed = 0;
  for (const auto& cell : cells) {
    if (cell.status != "ok") ++failed;
  }
  return failed;
}

std::uint64_t cell_seed(std::uint64_t seed, const CellKey& key) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (0x10001ULL + key.noise_idx));
  h = splitmix64(h ^ (0x20002ULL + key.approach_idx));
  h = splitmix64(h ^ (0x30003ULL + key.method_idx));
  return h;
}

// ---------------------------------------------------------------------------
// Cell pipeline
// ---------------------------------------------------------------------------

namespace {

CellResult run_cell(const ExperimentConfig& config, const CellKey& key) {
  using discrepancy::Approach;
  using eval::Interval;

  CellResult cell;
  cell.key = key;
  cell.beyond_paper =
      config.system == "burgers" &&
      (key.method != Method::dmd || key.approach != Approach::missing_physics);

  const std::uint64_t rng_seed = cell_seed(config.seed, key);

  try {
    dynsys::ParamMap overrides;
    if (config.system == "vanderpol") overrides["mu"] = config.mu;
    auto setup_true = dynsys::make_benchmark(config.system,
                                             dynsys::Variant::truth,
                                             config.epsilon, overrides);
    auto setup_approx = dynsys::make_benchmark(config.system,
                                               dynsys::Variant::approximate,
                                               config.epsilon, overrides);
    const auto span = std::make_pair(config.t0, config.tf);

    eval::PhaseClock clock;
    discrepancy::DiscrepancySignal signal;
    clock.time("data_gen", [&] {
      cell.truth = dynsys::simulate(setup_true.system, setup_true.x0, span,
                                    config.dt);
      // The reconstruction baseline is the approximate solution from x0. The
      // forecast baseline depends on the approach: missing-physics forecasts
      // launch both models from the last measurement, the residual approach
      // keeps correcting the running approximate solution.
      cell.approx = dynsys::simulate(setup_approx.system, setup_approx.x0, span,
                                     config.dt);
      cell.measurements = dynsys::add_noise(
          cell.truth, {key.noise_percent, rng_seed});

      const TrajectoryMatrix meas_train =
          cell.measurements.restrict_to(config.t0, config.t_split);
      if (key.approach == Approach::missing_physics) {
        const auto smoothing = key.noise_percent > 0
                                   ? dynsys::Smoothing::local_poly()
                                   : dynsys::Smoothing::none();
        signal = discrepancy::compute_dynamical_error(
            meas_train, setup_approx.system, smoothing);
      } else {
        signal = discrepancy::compute_state_residual(
            meas_train, cell.approx.restrict_to(config.t0, config.t_split));
      }
    });

    discrepancy::EngineOptions opts = config.method_configs;
    opts.nn.seed = splitmix64(rng_seed ^ 0x4e4eULL);
    opts.gpr.fit.jitter_seed = splitmix64(rng_seed ^ 0x6767ULL);

    discrepancy::DiscrepancyModel model = clock.time("fit", [&] {
      return discrepancy::fit_discrepancy(signal, key.method, opts);
    });
    cell.fit_metadata = model.metadata;

    const Eigen::Index split_idx = cell.measurements.index_of(config.t_split);
    const Eigen::VectorXd y_split =
        cell.measurements.values.row(split_idx).transpose();

    if (key.approach == Approach::missing_physics) {
      const TrajectoryMatrix approx_restart = dynsys::simulate(
          setup_approx.system, y_split, {config.t_split, config.tf}, config.dt);
      cell.approx = TrajectoryMatrix::concat(
          cell.approx.restrict_to(config.t0, config.t_split),
          approx_restart.slice(1, approx_restart.samples() - 1));
    }

    TrajectoryMatrix aug_recon = clock.time("reconstruct", [&] {
      if (key.approach == Approach::missing_physics) {
        return discrepancy::augment_missing_physics(
                   setup_approx.system, model, setup_approx.x0,
                   {config.t0, config.t_split}, config.dt)
            .x_tilde;
      }
      return discrepancy::correct_state_space(
                 cell.approx.restrict_to(config.t0, config.t_split), model)
          .x_tilde;
    });

    TrajectoryMatrix aug_fcst = clock.time("forecast", [&] {
      // Missing-physics forecasts restart the augmented model from the
      // measured state at the split (the last observation in hand); the
      // residual approach keeps correcting the approximate solution as it
      // runs on past the split.
      if (key.approach == Approach::missing_physics) {
        return discrepancy::augment_missing_physics(
                   setup_approx.system, model, y_split,
                   {config.t_split, config.tf}, config.dt)
            .x_tilde;
      }
      return discrepancy::correct_state_space(
                 cell.approx.restrict_to(config.t_split, config.tf), model)
          .x_tilde;
    });

    cell.augmented = TrajectoryMatrix::concat(
        aug_recon, aug_fcst.slice(1, aug_fcst.samples() - 1));

    const auto recon = Interval::closed(config.t0, config.t_split);
    const auto fcst = Interval::left_open(config.t_split, config.tf);
    auto& rep = cell.report;
    rep.rmse_approx_recon = eval::rmse(cell.approx, cell.truth, recon);
    rep.rmse_aug_recon = eval::rmse(cell.augmented, cell.truth, recon);
    rep.rmse_approx_fcst = eval::rmse(cell.approx, cell.truth, fcst);
    rep.rmse_aug_fcst = eval::rmse(cell.augmented, cell.truth, fcst);
    rep.per_component_approx_recon =
        eval::rmse_per_component(cell.approx, cell.truth, recon);
    rep.per_component_aug_recon =
        eval::rmse_per_component(cell.augmented, cell.truth, recon);
    rep.per_component_approx_fcst =
        eval::rmse_per_component(cell.approx, cell.truth, fcst);
    rep.per_component_aug_fcst =
        eval::rmse_per_component(cell.augmented, cell.truth, fcst);

    try {
      rep.pct_accuracy_increase_recon =
          eval::pct_accuracy_increase(rep.rmse_aug_recon, rep.rmse_approx_recon);
    } catch (const DivisionByZeroRmse&) {
      rep.already_exact_recon = true;
      rep.pct_accuracy_increase_recon = std::numeric_limits<double>::quiet_NaN();
    }
    try {
      rep.pct_accuracy_increase_fcst =
          eval::pct_accuracy_increase(rep.rmse_aug_fcst, rep.rmse_approx_fcst);
      rep.window_curve = eval::windowed_rmse_curve(
          cell.truth, cell.approx, cell.augmented, config.t_split,
          eval::default_horizons(config.tf - config.t_split));
    } catch (const DivisionByZeroRmse&) {
      rep.already_exact_fcst = true;
      rep.pct_accuracy_increase_fcst = std::numeric_limits<double>::quiet_NaN();
    }
    rep.wall_clock = clock.seconds();
  } catch (const Error& e) {
    cell.status = "failed";
    cell.error_kind = e.kind();
    cell.error_message = e.what();
  } catch (const std::exception& e) {
    cell.status = "failed";
    cell.error_kind = "Unhandled";
    cell.error_message = e.what();
  }
  return cell;
}

int resolve_threads(const ExperimentConfig& config, std::size_t cells) {
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* env = std::getenv("DISCREPANCY_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return std::min<int>(threads, static_cast<int>(cells));
}

}  // namespace

GridResult run_grid(const ExperimentConfig& config) {
  config.validate();

  std::vector<CellKey> keys;
  for (std::size_t ni = 0; ni < config.noise_levels.size(); ++ni) {
    for (std::size_t ai = 0; ai < config.approaches.size(); ++ai) {
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        CellKey key;
        key.noise_idx = ni;
        key.approach_idx = ai;
        key.method_idx = mi;
        key.noise_percent = config.noise_levels[ni];
        key.approach = config.approaches[ai];
        key.method = config.methods[mi];
        keys.push_back(key);
      }
    }
  }

  GridResult grid;
  grid.config = config;
  grid.cells.resize(keys.size());

  const int workers = resolve_threads(config, keys.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      grid.cells[i] = run_cell(config, keys[i]);
    }
    return grid;
  }

  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= keys.size()) break;
        grid.cells[i] = run_cell(config, keys[i]);
      }
    });
  }
  for (auto& t : pool) t.join();
  return grid;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_summary_csv(const GridResult& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "system,noise_pct,approach,method,status,error_kind,beyond_paper,"
         "already_exact_recon,already_exact_fcst,"
         "rmse_approx_recon,rmse_aug_recon,rmse_approx_fcst,rmse_aug_fcst,"
         "pct_accuracy_increase_recon,pct_accuracy_increase_fcst\n";
  for (const auto& cell : grid.cells) {
    const auto& r = cell.report;
    out << grid.config.system << ',' << fmt_noise(cell.key.noise_percent) << ','
        << discrepancy::to_string(cell.key.approach) << ','
        << discrepancy::to_string(cell.key.method) << ',' << cell.status << ','
        << cell.error_kind << ',' << (cell.beyond_paper ? 1 : 0) << ','
        << (r.already_exact_recon ? 1 : 0) << ','
        << (r.already_exact_fcst ? 1 : 0) << ',' << fmt17(r.rmse_approx_recon)
        << ',' << fmt17(r.rmse_aug_recon) << ',' << fmt17(r.rmse_approx_fcst)
        << ',' << fmt17(r.rmse_aug_fcst) << ','
        << fmt17(r.pct_accuracy_increase_recon) << ','
        << fmt17(r.pct_accuracy_increase_fcst) << '\n';
  }
}

void write_timings_csv(const GridResult& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "system,noise_pct,approach,method,data_gen_s,fit_s,reconstruct_s,"
         "forecast_s,total_s\n";
  for (const auto& cell : grid.cells) {
    const auto& wc = cell.report.wall_clock;
    auto get = [&wc](const char* k) {
      auto it = wc.find(k);
      return it == wc.end() ? 0.0 : it->second;
    };
    const double total =
        get("data_gen") + get("fit") + get("reconstruct") + get("forecast");
    out << grid.config.system << ',' << fmt_noise(cell.key.noise_percent) << ','
        << discrepancy::to_string(cell.key.approach) << ','
        << discrepancy::to_string(cell.key.method) << ','
        << fmt17(get("data_gen")) << ',' << fmt17(get("fit")) << ','
        << fmt17(get("reconstruct")) << ',' << fmt17(get("forecast")) << ','
        << fmt17(total) << '\n';
  }
}

void write_report_json(const GridResult& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "{\n\"config\": " << config_to_json(grid.config) << ",\n\"cells\": [";
  bool first_cell = true;
  for (const auto& cell : grid.cells) {
    const auto& r = cell.report;
    out << (first_cell ? "\n" : ",\n");
    first_cell = false;
    out << "{\"system\": \"" << grid.config.system << "\""
        << ", \"noise_percent\": " << json_num(cell.key.noise_percent)
        << ", \"approach\": \"" << discrepancy::to_string(cell.key.approach)
        << "\", \"method\": \"" << discrepancy::to_string(cell.key.method)
        << "\", \"status\": \"" << cell.status << "\", \"error_kind\": \""
        << json_escape(cell.error_kind) << "\", \"error_message\": \""
        << json_escape(cell.error_message) << "\", \"beyond_paper\": "
        << (cell.beyond_paper ? "true" : "false");
    out << ", \"fit\": {\"training_rmse\": "
        << json_num(cell.fit_metadata.training_rmse)
        << ", \"fit_seconds\": " << json_num(cell.fit_metadata.fit_seconds)
        << ", \"rank_deficient\": "
        << (cell.fit_metadata.rank_deficient ? "true" : "false")
        << ", \"descended\": "
        << (cell.fit_metadata.descended ? "true" : "false") << "}";
    out << ", \"report\": {"
        << "\"rmse_approx_recon\": " << json_num(r.rmse_approx_recon)
        << ", \"rmse_aug_recon\": " << json_num(r.rmse_aug_recon)
        << ", \"rmse_approx_fcst\": " << json_num(r.rmse_approx_fcst)
        << ", \"rmse_aug_fcst\": " << json_num(r.rmse_aug_fcst)
        << ", \"pct_accuracy_increase_recon\": "
        << json_num(r.pct_accuracy_increase_recon)
        << ", \"pct_accuracy_increase_fcst\": "
        << json_num(r.pct_accuracy_increase_fcst)
        << ", \"already_exact_recon\": "
        << (r.already_exact_recon ? "true" : "false")
        << ", \"already_exact_fcst\": "
        << (r.already_exact_fcst ? "true" : "false");
    out << ", \"window_curve\": [";
    for (std::size_t i = 0; i < r.window_curve.size(); ++i) {
      out << (i ? "," : "") << "[" << json_num(r.window_curve[i].first) << ","
          << json_num(r.window_curve[i].second) << "]";
    }
    out << "]";
    auto emit_vec = [&out](const char* name, const Eigen::VectorXd& v) {
      out << ", \"" << name << "\": [";
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << (i ? "," : "") << json_num(v[i]);
      }
      out << "]";
    };
    emit_vec("per_component_approx_recon", r.per_component_approx_recon);
    emit_vec("per_component_aug_recon", r.per_component_aug_recon);
    emit_vec("per_component_approx_fcst", r.per_component_approx_fcst);
    emit_vec("per_component_aug_fcst", r.per_component_aug_fcst);
    out << ", \"wall_clock\": {";
    bool first = true;
    for (const auto& [phase, seconds] : r.wall_clock) {
      out << (first ? "" : ", ") << "\"" << phase
          << "\": " << json_num(seconds);
      first = false;
    }
    out << "}}}";
  }
  out << "\n]\n}\n";
}

void write_cell_csv(const GridResult& grid, const CellResult& cell,
                    const std::filesystem::path& path) {
  auto out = open_for_write(path);
  const auto& labels = cell.truth.labels;
  auto col_name = [&labels](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(labels.size())
               ? labels[j]
               : "c" + std::to_string(j);
  };
  out << "t";
  const Eigen::Index n = cell.truth.dim();
  for (const char* prefix : {"true_", "approx_", "augmented_", "measurement_"}) {
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << prefix << col_name(j);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < cell.truth.samples(); ++i) {
    out << fmt17(cell.truth.times[i]);
    for (const Eigen::MatrixXd* values :
         {&cell.truth.values, &cell.approx.values, &cell.augmented.values,
          &cell.measurements.values}) {
      for (Eigen::Index j = 0; j < n; ++j) out << ',' << fmt17((*values)(i, j));
    }
    out << '\n';
  }
  static_cast<void>(grid);
}

}  // namespace

std::vector<std::string> emit_outputs(const GridResult& grid,
                                      const std::string& output_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create " + output_dir + ": " + ec.message());

  std::vector<std::string> manifest;
  const fs::path root(output_dir);

  write_summary_csv(grid, root / "summary.csv");
  manifest.push_back((root / "summary.csv").string());
  write_timings_csv(grid, root / "timings.csv");
  manifest.push_back((root / "timings.csv").string());
  write_report_json(grid, root / "report.json");
  manifest.push_back((root / "report.json").string());

  if (grid.config.dump_trajectories) {
    for (const auto& cell : grid.cells) {
      if (cell.status != "ok") continue;
      const fs::path path =
          root / ("cell_" + cell.key.label(grid.config.system) + ".csv");
      write_cell_csv(grid, cell, path);
      manifest.push_back(path.string());
    }
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

json engine_options_to_json(const discrepancy::EngineOptions& opts) {
  return json{
      {"sindy",
       {{"poly_degree", opts.sindy.library.poly_degree},
        {"include_trig", opts.sindy.library.include_trig},
        {"include_constant", opts.sindy.library.include_constant},
        {"lambda", opts.sindy.lambda},
        {"max_iter", opts.sindy.max_iter}}},
      {"dmd",
       {{"delays", opts.dmd.delays},
        {"rank", opts.dmd.rank},
        {"energy", opts.dmd.energy},
        {"sv_floor", opts.dmd.sv_floor},
        {"rank_cap", opts.dmd.rank_cap},
        {"opt_max_iter", opts.dmd.opt_max_iter},
        {"opt_tol", opts.dmd.opt_tol}}},
      {"gpr",
       {{"stride", opts.gpr.stride},
        {"init_noise_variance", opts.gpr.init_noise_variance},
        {"max_iter", opts.gpr.fit.max_iter},
        {"starts", opts.gpr.fit.starts},
        {"optimize_noise", opts.gpr.fit.optimize_noise},
        {"noise_floor", opts.gpr.fit.noise_floor}}},
      {"nn",
       {{"hidden", opts.nn.hidden},
        {"epochs", opts.nn.epochs},
        {"batch", opts.nn.batch},
        {"lr", opts.nn.lr},
        {"l2", opts.nn.l2}}}};
}

void engine_options_from_json(const json& j, discrepancy::EngineOptions* opts) {
  if (j.contains("sindy")) {
    const auto& s = j["sindy"];
    opts->sindy.library.poly_degree =
        s.value("poly_degree", opts->sindy.library.poly_degree);
    opts->sindy.library.include_trig =
        s.value("include_trig", opts->sindy.library.include_trig);
    opts->sindy.library.include_constant =
        s.value("include_constant", opts->sindy.library.include_constant);
    opts->sindy.lambda = s.value("lambda", opts->sindy.lambda);
    opts->sindy.max_iter = s.value("max_iter", opts->sindy.max_iter);
  }
  if (j.contains("dmd")) {
    const auto& d = j["dmd"];
    opts->dmd.delays = d.value("delays", opts->dmd.delays);
    opts->dmd.rank = d.value("rank", opts->dmd.rank);
    opts->dmd.energy = d.value("energy", opts->dmd.energy);
    opts->dmd.sv_floor = d.value("sv_floor", opts->dmd.sv_floor);
    opts->dmd.rank_cap = d.value("rank_cap", opts->dmd.rank_cap);
    opts->dmd.opt_max_iter = d.value("opt_max_iter", opts->dmd.opt_max_iter);
    opts->dmd.opt_tol = d.value("opt_tol", opts->dmd.opt_tol);
  }
  if (j.contains("gpr")) {
    const auto& g = j["gpr"];
    opts->gpr.stride = g.value("stride", opts->gpr.stride);
    opts->gpr.init_noise_variance =
        g.value("init_noise_variance", opts->gpr.init_noise_variance);
    opts->gpr.fit.max_iter = g.value("max_iter", opts->gpr.fit.max_iter);
    opts->gpr.fit.starts = g.value("starts", opts->gpr.fit.starts);
    opts->gpr.fit.optimize_noise =
        g.value("optimize_noise", opts->gpr.fit.optimize_noise);
    opts->gpr.fit.noise_floor = g.value("noise_floor", opts->gpr.fit.noise_floor);
  }
  if (j.contains("nn")) {
    const auto& n = j["nn"];
    opts->nn.hidden = n.value("hidden", opts->nn.hidden);
    opts->nn.epochs = n.value("epochs", opts->nn.epochs);
    opts->nn.batch = n.value("batch", opts->nn.batch);
    opts->nn.lr = n.value("lr", opts->nn.lr);
    opts->nn.l2 = n.value("l2", opts->nn.l2);
  }
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  j["system"] = config.system;
  j["epsilon"] = config.epsilon;
  j["mu"] = config.mu;
  j["noise_levels"] = config.noise_levels;
  std::vector<std::string> approaches, methods;
  for (auto a : config.approaches) approaches.push_back(discrepancy::to_string(a));
  for (auto m : config.methods) methods.push_back(discrepancy::to_string(m));
  j["approaches"] = approaches;
  j["methods"] = methods;
  j["t_span"] = {config.t0, config.tf};
  j["t_split"] = config.t_split;
  j["dt"] = config.dt;
  j["seed"] = config.seed;
  j["threads"] = config.threads;
  j["dump_trajectories"] = config.dump_trajectories;
  j["output_dir"] = config.output_dir;
  j["method_configs"] = engine_options_to_json(config.method_configs);
  return j.dump();
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  ExperimentConfig config;
  config.system = j.value("system", config.system);
  config.epsilon = j.value("epsilon", config.epsilon);
  config.mu = j.value("mu", config.mu);
  config.noise_levels = j.value("noise_levels", config.noise_levels);
  if (j.contains("approaches")) {
    config.approaches.clear();
    for (const auto& a : j["approaches"]) {
      config.approaches.push_back(
          discrepancy::approach_from_string(a.get<std::string>()));
    }
  }
  if (j.contains("methods")) {
    config.methods.clear();
    for (const auto& m : j["methods"]) {
      config.methods.push_back(
          discrepancy::method_from_string(m.get<std::string>()));
    }
  }
  if (j.contains("t_span")) {
    config.t0 = j["t_span"][0].get<double>();
    config.tf = j["t_span"][1].get<double>();
  }
  config.t_split = j.value("t_split", config.t_split);
  config.dt = j.value("dt", config.dt);
  config.seed = j.value("seed", config.seed);
  config.threads = j.value("threads", config.threads);
  config.dump_trajectories =
      j.value("dump_trajectories", config.dump_trajectories);
  config.output_dir = j.value("output_dir", config.output_dir);
  if (j.contains("method_configs")) {
    engine_options_from_json(j["method_configs"], &config.method_configs);
  }
  config.validate();
  return config;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

// ---------------------------------------------------------------------------
// Figure presets
// ---------------------------------------------------------------------------

ExperimentConfig replicate_preset(const std::string& figure) {
  ExperimentConfig config;
  config.noise_levels = {0.0};
  config.approaches = {Approach::missing_physics};
  config.methods = {Method::sindy, Method::dmd, Method::gpr, Method::nn};

  const std::vector<double> full_noise = {0.0, 0.1, 1.0, 10.0};
  const std::vector<Approach> both = {Approach::missing_physics,
                                      Approach::residual};

  if (figure == "fig2") {
    config.system = "vanderpol";
  } else if (figure == "fig3") {
    config.system = "vanderpol";
    config.approaches = {Approach::residual};
  } else if (figure == "fig4" || figure == "fig10") {
    config.system = "vanderpol";
    config.noise_levels = full_noise;
    config.approaches = both;
  } else if (figure == "fig5" || figure == "fig9") {
    config.system = "lorenz";
  } else if (figure == "fig6") {
    config.system = "lorenz";
    config.approaches = {Approach::residual};
  } else if (figure == "fig7") {
    config.system = "lorenz";
    config.noise_levels = full_noise;
    config.approaches = both;
  } else if (figure == "fig8") {
    config.system = "burgers";
    config.methods = {Method::dmd};
  } else {
    throw ConfigError("unknown figure preset: " + figure +
                      " (expected fig2..fig10)");
  }
  config.output_dir = "out/" + figure;
  return config;
}

}  // namespace disclab::experiment
