// Command-line front end: collect | train | dimstudy | run | compare.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dkmpc/harness/closed_loop.hpp"
#include "dkmpc/harness/collect.hpp"
#include "dkmpc/harness/config.hpp"
#include "dkmpc/harness/metrics.hpp"
#include "dkmpc/koopman/checkpoint.hpp"
#include "dkmpc/koopman/dim_study.hpp"
#include "dkmpc/koopman/training.hpp"
#include "dkmpc/eso/eso.hpp"

namespace {

using namespace dkmpc;

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kCheckpoint = 4,
  kDiverged = 5,
  kData = 6,
};

class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

int fail(ExitCode code, const char* kind, const std::string& message)
{
  std::string m = message;
  for (char& c : m)
    if (c == '\n')
      c = ' ';
  std::cerr << "error: kind=" << kind << " exit=" << code << " message=\"" << m << "\"\n";
  return code;
}

std::ofstream open_out(const std::string& path)
{
  std::ofstream os(path);
  if (!os)
    throw DataError("cannot write '" + path + "'");
  return os;
}

std::vector<koopman::Trajectory> load_trajectories(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open data file '" + path + "'");
  try {
    return harness::read_trajectories_csv(in);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
}

koopman::KoopmanModel load_model(const std::string& path)
{
  return koopman::load_checkpoint(path);
}

struct Options
{
  std::string config;
  std::uint64_t seed = 1;
  bool quiet = false;

  std::string out;
  std::string data;
  std::string model;
  std::string scenario = "dlc_highmu";
  std::string controller = "eso-dkmpc";
  std::string controllers = "eso-dkmpc,dkmpc,lmpc";
  std::string dims = "2,3,5,10,15";
  std::string traces_dir;
  std::string models_prefix;
  int trajectories = 0;
  int phi = 0;
  int epochs = 0;
  bool timing = false;
};

harness::HarnessConfig config_for(const Options& o)
{
  return o.config.empty() ? harness::default_config() : harness::load_config(o.config);
}

std::vector<int> parse_list(const std::string& text)
{
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(item, &pos);
      if (pos != item.size())
        throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw harness::UsageError("bad integer list '" + text + "'");
    }
  }
  if (out.empty())
    throw harness::UsageError("empty integer list");
  return out;
}

koopman::EpochCallback progress(const Options& o)
{
  if (o.quiet)
    return {};
  return [](const koopman::EpochRecord& r) {
    std::fprintf(stderr, "epoch %d train %.6g val %.6g lr %.3g\n", r.epoch, r.train_loss, r.validation_loss,
                 r.learning_rate);
  };
}

int cmd_collect(const Options& o)
{
  harness::HarnessConfig cfg = config_for(o);
  if (o.trajectories > 0)
    cfg.collect.trajectories = o.trajectories;
  const harness::CollectResult res = harness::collect_trajectories(cfg.vehicle, cfg.collect, o.seed);
  for (const auto& d : res.dropped)
    std::cerr << "dropped: " << d << "\n";
  const harness::Coverage cov = harness::coverage(res.trajectories, cfg.collect);
  if (!o.quiet) {
    std::cerr << "coverage vx:";
    for (int c : cov.vx)
      std::cerr << ' ' << c;
    std::cerr << "\ncoverage |delta_f|:";
    for (int c : cov.steer)
      std::cerr << ' ' << c;
    std::cerr << "\n";
  }
  auto os = open_out(o.out);
  harness::write_trajectories_csv(os, res.trajectories);
  return kOk;
}

koopman::TrainingConfig training_for(const harness::HarnessConfig& cfg, const Options& o)
{
  koopman::TrainingConfig tc = cfg.training;
  if (o.phi > 0)
    tc.phi = o.phi;
  if (o.epochs > 0)
    tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.validate();
  return tc;
}

int cmd_train(const Options& o)
{
  const harness::HarnessConfig cfg = config_for(o);
  const koopman::TrainingConfig tc = training_for(cfg, o);
  const auto trajectories = load_trajectories(o.data);
  const auto dataset = koopman::make_dataset(trajectories, tc.seq_len, tc.validation_fraction, tc.seed);
  const koopman::TrainingResult res = koopman::train(dataset, tc, progress(o));
  koopman::save_checkpoint(o.out, res.model, tc);
  if (!o.quiet)
    std::cerr << "best epoch " << res.best_epoch << "\n";
  return kOk;
}

int cmd_dimstudy(const Options& o)
{
  const harness::HarnessConfig cfg = config_for(o);
  const koopman::TrainingConfig tc = training_for(cfg, o);
  const std::vector<int> dims = parse_list(o.dims);
  const auto trajectories = load_trajectories(o.data);
  const auto dataset = koopman::make_dataset(trajectories, tc.seq_len, tc.validation_fraction, tc.seed);
  const koopman::DimStudyResult res = koopman::one_step_error_study(dataset, dims, tc, progress(o));

  std::ostringstream os;
  os << "phi,vx_max,vx_avg,vx_rmse,vy_max,vy_avg,vy_rmse,wr_max,wr_avg,wr_rmse\n";
  char buf[512];
  for (const auto& r : res.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.phi, r.vx.max, r.vx.avg,
                  r.vx.rmse, r.vy.max, r.vy.avg, r.vy.rmse, r.wr.max, r.wr.avg, r.wr.rmse);
    os << buf;
  }
  if (o.out.empty())
    std::cout << os.str();
  else
    open_out(o.out) << os.str();
  if (!o.models_prefix.empty())
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      koopman::TrainingConfig c = tc;
      c.phi = res.rows[i].phi;
      koopman::save_checkpoint(o.models_prefix + std::to_string(res.rows[i].phi) + ".json", res.models[i], c);
    }
  return kOk;
}

std::vector<harness::ControllerKind> parse_controllers(const std::string& text)
{
  std::vector<harness::ControllerKind> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(harness::controller_from_string(item));
  if (out.empty())
    throw harness::UsageError("no controllers requested");
  return out;
}

bool needs_model(const std::vector<harness::ControllerKind>& kinds)
{
  for (auto k : kinds)
    if (k != harness::ControllerKind::Lmpc)
      return true;
  return false;
}

void report_gains(const Options& o, const harness::ControllerSetup& s)
{
  if (o.quiet || !s.gains)
    return;
  const double rho = eso::spectral_radius(eso::error_matrix(s.model->A(), *s.gains));
  std::fprintf(stderr, "observer gains beta1=%.2f beta2=%.2f rho=%.4f\n", s.gains->beta1(), s.gains->beta2(), rho);
}

int cmd_run(const Options& o)
{
  const harness::HarnessConfig cfg = config_for(o);
  const harness::ControllerKind kind = harness::controller_from_string(o.controller);
  const harness::Scenario& scenario = cfg.scenario(o.scenario);
  koopman::KoopmanModel model;
  if (kind != harness::ControllerKind::Lmpc) {
    if (o.model.empty())
      throw harness::UsageError(o.controller + " needs --model");
    model = load_model(o.model);
  }
  harness::ControllerSetup setup =
      harness::make_setup(cfg, kind, kind == harness::ControllerKind::Lmpc ? nullptr : &model);
  setup.record_timing = o.timing;
  report_gains(o, setup);
  const harness::RunTrace trace = harness::run_closed_loop(scenario, setup, o.seed);
  auto os = open_out(o.out);
  harness::write_trace_csv(os, trace);
  if (trace.diverged)
    return fail(kDiverged, "divergence", o.controller + " diverged at t=" + std::to_string(trace.rows.back().t) +
                                            ": " + trace.reason);
  return kOk;
}

int cmd_compare(const Options& o)
{
  const harness::HarnessConfig cfg = config_for(o);
  const auto kinds = parse_controllers(o.controllers);
  const harness::Scenario& scenario = cfg.scenario(o.scenario);
  koopman::KoopmanModel model;
  if (needs_model(kinds)) {
    if (o.model.empty())
      throw harness::UsageError("lifted controllers need --model");
    model = load_model(o.model);
  }
  std::vector<harness::ControllerSetup> setups;
  for (auto k : kinds) {
    setups.push_back(harness::make_setup(cfg, k, k == harness::ControllerKind::Lmpc ? nullptr : &model));
    setups.back().record_timing = o.timing;
    report_gains(o, setups.back());
  }
  std::vector<harness::RunTrace> traces;
  const auto rows = harness::compare(scenario, setups, o.seed, &traces);
  auto os = open_out(o.out);
  harness::write_metrics_csv(os, rows);
  if (!o.traces_dir.empty()) {
    std::filesystem::create_directories(o.traces_dir);
    for (const auto& t : traces) {
      auto ts = open_out((std::filesystem::path(o.traces_dir) / (scenario.name + "_" + t.controller + ".csv")).string());
      harness::write_trace_csv(ts, t);
    }
  }
  for (const auto& t : traces)
    if (t.diverged)
      std::cerr << "warning: " << t.controller << " diverged: " << t.reason << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Koopman-model MPC with a disturbance observer for vehicle path tracking"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "random seed");
  app.add_flag("--quiet", o.quiet, "suppress progress output");

  auto* collect = app.add_subcommand("collect", "simulate excitation runs and write a trajectory CSV");
  collect->add_option("--out", o.out, "output CSV")->required();
  collect->add_option("--trajectories", o.trajectories, "number of runs (overrides config)");

  auto* train = app.add_subcommand("train", "train a lifted model and write a checkpoint");
  train->add_option("--data", o.data, "trajectory CSV")->required();
  train->add_option("--out", o.out, "checkpoint path")->required();
  train->add_option("--phi", o.phi, "number of learned lifting functions");
  train->add_option("--epochs", o.epochs, "training epochs");

  auto* dim = app.add_subcommand("dimstudy", "one-step prediction error versus lifting dimension");
  dim->add_option("--data", o.data, "trajectory CSV")->required();
  dim->add_option("--dims", o.dims, "comma-separated dimensions");
  dim->add_option("--out", o.out, "report CSV (stdout if omitted)");
  dim->add_option("--epochs", o.epochs, "training epochs");
  dim->add_option("--save-models", o.models_prefix, "checkpoint path prefix for the trained models");

  auto* run = app.add_subcommand("run", "closed-loop run of one controller");
  run->add_option("--scenario", o.scenario, "scenario name");
  run->add_option("--controller", o.controller, "eso-dkmpc | dkmpc | lmpc");
  run->add_option("--model", o.model, "checkpoint path");
  run->add_option("--out", o.out, "trace CSV")->required();
  run->add_flag("--timing", o.timing, "record wall-clock solve times");

  auto* cmp = app.add_subcommand("compare", "closed-loop metrics for several controllers");
  cmp->add_option("--scenario", o.scenario, "scenario name");
  cmp->add_option("--controllers", o.controllers, "comma-separated controller list");
  cmp->add_option("--model", o.model, "checkpoint path");
  cmp->add_option("--out", o.out, "metrics CSV")->required();
  cmp->add_option("--traces-dir", o.traces_dir, "also write one trace CSV per controller");
  cmp->add_flag("--timing", o.timing, "record wall-clock solve times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*collect)
      return cmd_collect(o);
    if (*train)
      return cmd_train(o);
    if (*dim)
      return cmd_dimstudy(o);
    if (*run)
      return cmd_run(o);
    if (*cmp)
      return cmd_compare(o);
  } catch (const harness::UsageError& e) {
    return fail(kUsage, "usage", e.what());
  } catch (const harness::ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const koopman::CheckpointError& e) {
    return fail(kCheckpoint, "checkpoint", e.what());
  } catch (const koopman::DivergenceError& e) {
    return fail(kDiverged, "divergence", e.what());
  } catch (const DataError& e) {
    return fail(kData, "data", e.what());
  } catch (const std::exception& e) {
    return fail(kFailure, "failure", e.what());
  }
  return kFailure;
}
