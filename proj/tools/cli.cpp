#include "aimassist/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "aimassist/calibrate.hpp"
#include "aimassist/error.hpp"
#include "aimassist/harness.hpp"
#include "aimassist/server.hpp"
#include "aimassist/training.hpp"

namespace aimassist {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kModes{"locate", "select", "follow"};
const std::vector<std::string> kAgents{"head", "image", "mouse", "controller", "all"};
const std::vector<std::string> kMethods{"none", "lerp", "gravity", "predictor"};

struct RunOptions {
  std::string mode = "locate";
  std::string agent = "mouse";
  std::string assist = "none";
  std::string assist_config;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string format = "csv";
  std::size_t jobs = 1;
  std::string presets;
  std::string model;
  double blend = 0.5;
  std::vector<double> speeds{2.0, 5.0, 10.0};
  bool quiet = false;
};

struct CalibrateOptionsCli {
  std::size_t budget = 200;
  std::uint64_t seed = 0;
  std::string presets;
  std::string out = "presets.json";
  std::string report = "calibration.json";
  double tolerance = 10.0;
};

struct TrainOptionsCli {
  std::size_t examples = 10000;
  std::size_t heldout = 2000;
  std::size_t epochs = 20;
  std::size_t batch = 64;
  double lr = 2e-3;
  double lambda = 0.1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{64, 64};
  std::string presets;
  std::string out = "model.json";
  std::string loss = "loss.csv";
};

struct ServeOptionsCli {
  std::uint16_t port = 8080;
  std::string address = "0.0.0.0";
  double heartbeat = 5.0;
  std::string model;
  std::string presets;
};

struct ReportOptionsCli {
  std::string input;
  std::string out = "report";
};

PresetTable resolve_presets(const std::string& path) {
  if (!path.empty()) return load_presets(path);
  return presets_from_environment();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

AssistConfig resolve_assist(const RunOptions& o) {
  AssistConfig config;
  if (!o.assist_config.empty()) {
    std::ifstream in(o.assist_config, std::ios::binary);
    if (!in) throw IoError("cannot open assist config: " + o.assist_config);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError(o.assist_config + ": assist config is not valid JSON");
    try {
      config = j.get<AssistConfig>();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("--assist-config: ") + e.what());
    }
  }
  config.method = parse_assist_method(o.assist);
  config.blend = o.blend;
  if (config.method == AssistMethod::predictor) {
    if (o.model.empty()) throw ConfigError("--model is required with --assist predictor");
    config.model_path = o.model;
    config.model =
        std::make_shared<const PredictorModel>(load_checkpoint(o.model, EncodingContract{}));
  }
  return config;
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  const PresetTable presets = resolve_presets(o.presets);
  BatchConfig base;
  base.mode = parse_mode(o.mode);
  base.assist = resolve_assist(o);
  base.trials = o.trials;
  base.seed = o.seed;
  base.jobs = o.jobs;
  base.speeds = o.speeds;

  std::vector<Device> devices;
  if (o.agent == "all") {
    devices.assign(kAllDevices.begin(), kAllDevices.end());
  } else {
    devices.push_back(parse_device(o.agent));
  }
  std::vector<SubtaskRecord> records;
  for (Device d : devices) {
    BatchConfig config = base;
    config.device = d;
    const auto it = presets.find(d);
    if (it == presets.end()) {
      throw SchemaError("presets lack device class '" + std::string(to_string(d)) + "'");
    }
    config.agent = it->second;
    auto part = run_batch(config);
    records.insert(records.end(), part.begin(), part.end());
  }

  const fs::path dir = o.out;
  ensure_dir(dir);
  const SummaryTable table = aggregate(records);
  if (o.format == "csv" || o.format == "both") export_records_csv(records, dir / "records.csv");
  if (o.format == "json" || o.format == "both") {
    export_json(records_json(records), dir / "records.json");
  }
  nlohmann::json summary = summary_json(table);
  summary["run"] = {{"mode", o.mode},     {"agent", o.agent}, {"assist", o.assist},
                    {"trials", o.trials}, {"seed", o.seed}};
  export_json(summary, dir / "summary.json");
  if (!o.quiet) print_table(out, table);
  return kExitOk;
}

int cmd_calibrate(const CalibrateOptionsCli& o, std::ostream& out) {
  const PresetTable base = resolve_presets(o.presets);
  CalibrationOptions options;
  options.budget = o.budget;
  options.seed = o.seed;
  options.tolerance_pp = o.tolerance;
  const auto targets = table_targets();
  const CalibrationResult result = calibrate(targets, base, options);
  save_presets(result.presets, o.out);
  export_json(result.report(targets), o.report);
  for (const CalibrationOutcome& c : result.outcomes) {
    const CalibrationTarget& t = targets.at(c.device);
    out << std::left << std::setw(11) << to_string(c.device) << std::right << std::fixed
        << std::setprecision(1) << " select " << c.select_success << "% (target "
        << t.select_success << "%)  locate " << c.locate_success << "% (target "
        << t.locate_success << "%)  time " << std::setprecision(2) << c.locate_score
        << " s (target " << t.locate_score << " s)  "
        << (c.converged ? "converged" : "not converged") << '\n';
  }
  out << (result.converged() ? "calibration converged\n"
                             : "calibration did not converge within tolerance\n");
  return kExitOk;
}

int cmd_train(const TrainOptionsCli& o, std::ostream& out) {
  TrainingSetOptions gen;
  gen.examples = o.examples;
  gen.seed = o.seed;
  gen.presets = resolve_presets(o.presets);
  const GeneratedSet data = generate_training_set(gen);
  out << "training set: " << data.set.examples.size() << " examples "
      << data.balance.to_json().dump() << '\n';

  TrainHyper hyper;
  hyper.learning_rate = o.lr;
  hyper.epochs = o.epochs;
  hyper.batch_size = o.batch;
  hyper.lambda = o.lambda;
  hyper.seed = split_seed(o.seed, streams::kTraining);
  if (o.hidden.empty()) throw ConfigError("--hidden needs at least one layer width");
  PredictorModel model =
      PredictorModel::create(gen.contract, o.hidden, split_seed(o.seed, streams::kModel));
  const TrainResult result = train(std::move(model), data.set, hyper);

  save_checkpoint(result.model, o.out);
  std::ostringstream csv;
  csv << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.9f\n", e + 1, result.loss_curve[e]);
    csv << buf;
  }
  write_text(o.loss, csv.str());
  if (o.heldout > 0) {
    const TrainingSet held =
        generate_straight_set(o.heldout, split_seed(o.seed, streams::kHeldOut), gen.contract);
    out << "held-out straight-trajectory cosine: " << std::fixed << std::setprecision(4)
        << mean_cosine(result.model, held) << '\n';
  }
  out << "final loss: " << std::setprecision(6) << result.loss_curve.back() << '\n';
  return kExitOk;
}

Server* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const ServeOptionsCli& o, std::ostream& out) {
  auto context = std::make_shared<ServiceContext>();
  context->presets = resolve_presets(o.presets);
  if (!o.model.empty()) {
    context->model =
        std::make_shared<const PredictorModel>(load_checkpoint(o.model, EncodingContract{}));
  }
  ServerOptions options;
  options.address = o.address;
  options.port = o.port;
  options.heartbeat = o.heartbeat;
  Server server(context, options);
  out << "listening on " << o.address << ':' << server.port() << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;
  return kExitOk;
}

int cmd_report(const ReportOptionsCli& o, std::ostream& out, std::ostream& err) {
  const auto records = import_records_csv(o.input);
  if (records.empty()) err << "warning: " << o.input << " contains no records\n";
  const fs::path dir = o.out;
  ensure_dir(dir);
  const SummaryTable table = aggregate(records);
  export_json(summary_json(table), dir / "summary.json");
  for (const auto& p : write_plot_data(records, dir)) out << "wrote " << p.string() << '\n';
  if (!records.empty()) print_table(out, table);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aim assistance experiment harness", "aimassist"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run seeded agent trials and summarize them");
  run_cmd->add_option("--mode", run.mode, "Trial mode")->check(CLI::IsMember(kModes))
      ->capture_default_str();
  run_cmd->add_option("--agent", run.agent, "Device class, or all")
      ->check(CLI::IsMember(kAgents))->capture_default_str();
  run_cmd->add_option("--assist", run.assist, "Assistance method")
      ->check(CLI::IsMember(kMethods))->capture_default_str();
  run_cmd->add_option("--assist-config", run.assist_config,
                      "JSON file with assistance parameters")->check(CLI::ExistingFile);
  run_cmd->add_option("--trials", run.trials, "Trials per device class")
      ->check(CLI::PositiveNumber)->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Master seed")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--format", run.format, "Records format")
      ->check(CLI::IsMember({"csv", "json", "both"}))->capture_default_str();
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--presets", run.presets, "Agent presets JSON (overrides AIMASSIST_PRESETS)");
  run_cmd->add_option("--model", run.model, "Predictor checkpoint for --assist predictor");
  run_cmd->add_option("--blend", run.blend, "Predictor blend factor")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  run_cmd->add_option("--speeds", run.speeds, "Follow speed bands, m/s")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--quiet", run.quiet, "Do not print the summary table");

  CalibrateOptionsCli cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit agent presets to the reference tables");
  cal_cmd->add_option("--budget", cal.budget, "Trials per mode per grid point (>= 100)")
      ->capture_default_str();
  cal_cmd->add_option("--seed", cal.seed, "Master seed")->capture_default_str();
  cal_cmd->add_option("--presets", cal.presets, "Base presets JSON (overrides AIMASSIST_PRESETS)");
  cal_cmd->add_option("--out", cal.out, "Calibrated presets JSON")->capture_default_str();
  cal_cmd->add_option("--report", cal.report, "Achieved-vs-target report JSON")
      ->capture_default_str();
  cal_cmd->add_option("--tolerance", cal.tolerance, "Convergence tolerance, percentage points")
      ->check(CLI::NonNegativeNumber)->capture_default_str();

  TrainOptionsCli tr;
  auto* train_cmd = app.add_subcommand("train", "Train the movement predictor");
  train_cmd->add_option("--examples", tr.examples, "Training examples")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--heldout", tr.heldout, "Held-out straight-trajectory examples, 0 to skip")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Learning rate")->check(CLI::PositiveNumber)
      ->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "Confidence regularizer weight")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden, "Hidden layer widths")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Master seed")->capture_default_str();
  train_cmd->add_option("--presets", tr.presets, "Agent presets JSON (overrides AIMASSIST_PRESETS)");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->capture_default_str();
  train_cmd->add_option("--loss", tr.loss, "Loss curve CSV path")->capture_default_str();

  ServeOptionsCli sv;
  auto* serve_cmd = app.add_subcommand("serve", "Run the WebSocket session server");
  serve_cmd->add_option("--port", sv.port, "Listen port")->capture_default_str();
  serve_cmd->add_option("--address", sv.address, "Listen address")->capture_default_str();
  serve_cmd->add_option("--heartbeat", sv.heartbeat, "Seconds between pings")
      ->check(CLI::PositiveNumber)->capture_default_str();
  serve_cmd->add_option("--model", sv.model, "Predictor checkpoint enabling predictor assist");
  serve_cmd->add_option("--presets", sv.presets, "Agent presets JSON (overrides AIMASSIST_PRESETS)");

  ReportOptionsCli rep;
  auto* report_cmd = app.add_subcommand("report", "Summarize a records CSV and emit plot data");
  report_cmd->add_option("--in", rep.input, "Records CSV")->required();
  report_cmd->add_option("--out", rep.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << '\n';
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*cal_cmd) return cmd_calibrate(cal, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*serve_cmd) return cmd_serve(sv, out);
    if (*report_cmd) return cmd_report(rep, out, err);
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace aimassist
