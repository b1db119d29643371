#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csv_io.hpp"
#include "p2ot/bench.hpp"
#include "p2ot/dataset.hpp"
#include "p2ot/metrics.hpp"
#include "p2ot/oracle.hpp"
#include "p2ot/parallel.hpp"
#include "p2ot/schedule.hpp"
#include "p2ot/simulation.hpp"
#include "p2ot/solvers.hpp"

namespace p2ot::cli {
namespace {

using Json = nlohmann::ordered_json;

// Bundles every flag so a subcommand's callback can read what it needs.
struct RunConfig {
  SolverConfig solver;
  std::uint64_t seed = 0;

  std::string input;
  std::string output;
  std::string report;

  std::string formulation = "p2ot";
  double sla_upper = kDefaultSlaUpper;
  bool extended = false;
  bool no_timing = false;

  std::string size = "6x3";
  std::size_t seeds = 20;
  std::string formulations = "ot,uot,pot,sla,p2ot,gsa";
  std::string rhos = "0.3,0.5,1.0";
  double threshold = 1e-4;

  std::size_t n = 2000;
  std::size_t k = 10;
  std::size_t dim = 16;
  double ratio = 10.0;
  double separation = sim::BlobOptions{}.separation;
  double noise = sim::BlobOptions{}.noise;
  std::size_t epochs = 20;
  std::size_t batch = 512;
  std::size_t buffer_capacity = sim::kDefaultBufferCapacity;
  std::size_t buffer_warmup = 1;
  std::string ramp = "sigmoid";
  double rho0 = 0.1;
  double learning_rate = 0.5;
  std::size_t hidden = 0;
  bool augment = false;
  std::string summary;

  std::string sizes = "1000,10000";
  std::size_t bench_k = 100;
  std::size_t repeats = 3;
  bool include_failures = false;
  bool parallel = false;
};

void add_solver_flags(CLI::App& app, RunConfig& rc) {
  app.add_option("--epsilon", rc.solver.epsilon, "Entropic weight")->capture_default_str();
  app.add_option("--lambda", rc.solver.lambda, "Column KL weight")->capture_default_str();
  app.add_option("--rho", rc.solver.rho, "Selected-mass fraction in (0, 1]")->capture_default_str();
  app.add_option("--iota", rc.solver.iota, "Virtual-cluster KL weight")->capture_default_str();
  app.add_option("--tol", rc.solver.tol, "Stop when max |b_new - b_old| <= tol")->capture_default_str();
  app.add_option("--max-iter", rc.solver.max_iter, "Iteration cap")->capture_default_str();
  app.add_flag("--log-domain", rc.solver.log_domain, "Run the scaling loop on log potentials");
  app.add_option("--prediction-floor", rc.solver.prediction_floor, "Clamp for P before -log")
      ->capture_default_str();
}

void add_seed_flag(CLI::App& app, RunConfig& rc) {
  app.add_option("--seed", rc.seed, "Seed for every random draw")->capture_default_str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_invalid_input("cannot open '" + path + "'");
  return in;
}

// Writes to `path`, or to `fallback` when the path is empty.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw_invalid_input("cannot write '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& get() { return *stream_; }
  void finish(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw_invalid_input("write to '" + (path.empty() ? "stdout" : path) + "' failed");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    parts.push_back(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::pair<std::size_t, std::size_t> parse_shape(const std::string& text) {
  const std::size_t x = text.find('x');
  if (x == std::string::npos) throw_invalid_config("size must look like NxK, got '" + text + "'");
  try {
    std::size_t used = 0;
    const unsigned long n = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const std::string rest = text.substr(x + 1);
    const unsigned long k = std::stoul(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    if (n == 0 || k == 0) throw std::invalid_argument(text);
    return {n, k};
  } catch (const std::logic_error&) {
    throw_invalid_config("size must look like NxK with positive N and K, got '" + text + "'");
  }
}

std::string scientific(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.3e", value);
  return buffer;
}

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json to_json(const metrics::EvalReport& r) {
  Json j;
  j["acc"] = r.acc;
  j["nmi"] = r.nmi;
  j["f1"] = r.f1;
  j["head_acc"] = r.head_acc;
  j["medium_acc"] = r.medium_acc;
  j["tail_acc"] = r.tail_acc;
  j["head_classes"] = r.head_classes;
  j["medium_classes"] = r.medium_classes;
  j["tail_classes"] = r.tail_classes;
  j["per_class_acc"] = r.per_class_acc;
  j["assignment"] = r.assignment;
  return j;
}

bool row_is_capped(Formulation f) { return f != Formulation::kOt && f != Formulation::kUot; }

int cmd_solve(const RunConfig& rc, std::ostream& out) {
  const Formulation formulation = parse_formulation(rc.formulation);
  rc.solver.validate();
  std::ifstream in = open_input(rc.input);
  const CostMatrix cost(read_matrix_csv(in, rc.input));

  Matrix plan;
  ConvergenceReport report;
  if (formulation == Formulation::kP2ot) {
    P2otResult res = solve_p2ot(cost, rc.solver);
    plan = rc.extended ? res.extended.plan.values : res.plan.values;
    report = res.report;
  } else {
    SolveResult res = solve(formulation, cost, rc.solver, rc.sla_upper);
    plan = std::move(res.plan.values);
    report = res.report;
  }

  const Matrix real = plan.leftCols(cost.cols());
  const double row_target = 1.0 / static_cast<double>(cost.rows());
  const Vector rows = real.rowwise().sum();
  double violation = 0.0;
  for (Index i = 0; i < rows.size(); ++i) {
    const double gap = rows[i] - row_target;
    violation = std::max(violation, row_is_capped(formulation) ? gap : std::abs(gap));
  }

  Json j;
  j["formulation"] = std::string(to_string(formulation));
  j["n"] = cost.rows();
  j["k"] = cost.cols();
  j["mass"] = real.sum();
  j["row_violation_max"] = violation;
  j["col_targets"] = to_json(column_targets(formulation, cost.cols(), rc.solver, rc.sla_upper));
  j["col_sums"] = to_json(real.colwise().sum().transpose());
  j["iterations"] = report.iterations;
  j["final_b_change"] = report.final_b_change;
  if (!rc.no_timing) j["wall_time"] = report.wall_time.count();
  j["converged"] = report.converged;

  Sink plan_sink(rc.output, out);
  write_matrix_csv(plan_sink.get(), plan);
  plan_sink.finish(rc.output);
  // With the plan on stdout the report needs its own file.
  if (!rc.report.empty() || !rc.output.empty()) {
    Sink report_sink(rc.report, out);
    report_sink.get() << j.dump(2) << '\n';
    report_sink.finish(rc.report);
  }
  return kExitSuccess;
}

int cmd_verify(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (rc.seeds == 0) throw_invalid_config("--seeds must be at least 1");
  if (!(rc.threshold > 0.0)) throw_invalid_config("--threshold must be positive");
  const auto [n, k] = parse_shape(rc.size);
  if (n > oracle::kMaxBregmanRows || k > oracle::kMaxBregmanCols) {
    throw_invalid_config("size exceeds the oracle limits (N <= 64, K <= 8)");
  }
  std::vector<Formulation> forms;
  for (const std::string& name : split_list(rc.formulations)) forms.push_back(parse_formulation(name));
  const std::vector<double> rhos = bench::parse_rho_list(rc.rhos);
  rc.solver.validate();

  Sink sink(rc.output, out);
  std::ostream& table = sink.get();
  table << "formulation,instances,max_plan_dev,max_objective_dev,status\n";
  bool all_pass = true;
  bool oracle_failed = false;
  for (Formulation form : forms) {
    double plan_dev = 0.0;
    double objective_dev = 0.0;
    std::size_t instances = 0;
    bool failed = false;
    for (std::size_t s = 0; s < rc.seeds && !failed; ++s) {
      const CostMatrix cost = bench::uniform_cost(n, k, rc.seed + s);
      for (double rho : rhos) {
        SolverConfig cfg = rc.solver;
        cfg.rho = rho;
        oracle::OracleResult reference;
        try {
          reference = oracle::oracle_bregman(cost, form, cfg);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kOracleFailure) throw;
          err << "seed " << rc.seed + s << ", rho " << rho << ": " << e.what() << '\n';
          failed = true;
          break;
        }
        const Matrix fast = form == Formulation::kP2ot ? solve_p2ot(cost, cfg).extended.plan.values
                                                       : solve(form, cost, cfg).plan.values;
        plan_dev = std::max(plan_dev, (fast - reference.plan.values).cwiseAbs().maxCoeff());
        objective_dev = std::max(
            objective_dev, std::abs(oracle::entropic_objective(cost, form, cfg, fast) - reference.objective));
        ++instances;
      }
    }
    const bool pass = !failed && plan_dev <= rc.threshold;
    all_pass = all_pass && pass;
    oracle_failed = oracle_failed || failed;
    table << to_string(form) << ',' << instances << ',' << scientific(plan_dev) << ','
          << scientific(objective_dev) << ',' << (failed ? "oracle-failure" : pass ? "pass" : "fail")
          << '\n';
  }
  sink.finish(rc.output);
  if (oracle_failed) err << "oracle failed to converge\n";
  else if (!all_pass) err << "plan deviation above " << scientific(rc.threshold) << '\n';
  return all_pass ? kExitSuccess : kExitNumerical;
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  sim::BlobOptions blobs;
  blobs.separation = rc.separation;
  blobs.noise = rc.noise;
  const sim::SyntheticDataset data = sim::generate_dataset(rc.n, rc.k, rc.dim, rc.ratio, rc.seed, blobs);

  sim::SimulationConfig config;
  config.solver = rc.solver;
  config.train.formulation = parse_formulation(rc.formulation);
  config.train.batch = rc.batch;
  config.train.buffer_warmup_epochs = rc.buffer_warmup;
  config.train.augment = rc.augment;
  config.train.sla_upper = rc.sla_upper;
  config.schedule.kind = parse_ramp(rc.ramp);
  config.schedule.rho0 = rc.rho0;
  config.epochs = rc.epochs;
  config.buffer_capacity = rc.buffer_capacity;
  config.hidden_units = rc.hidden;
  config.learning_rate = rc.learning_rate;
  config.seed = rc.seed;
  config.schedule.validate();
  const sim::SimulationResult result = sim::simulate(data, config);

  Sink log_sink(rc.output, out);
  std::ostream& log = log_sink.get();
  log << "epoch,loss,acc,nmi,f1,weighted_precision,weighted_recall,rho\n";
  for (const sim::TrainLogRow& r : result.log.rows) {
    log << r.epoch << ',' << format_double(r.loss) << ',' << format_double(r.acc) << ','
        << format_double(r.nmi) << ',' << format_double(r.f1) << ','
        << format_double(r.weighted_precision) << ',' << format_double(r.weighted_recall) << ','
        << format_double(r.rho) << '\n';
  }
  log_sink.finish(rc.output);

  if (!rc.summary.empty() || !rc.output.empty()) {
    Json j;
    j["formulation"] = std::string(to_string(config.train.formulation));
    j["n"] = rc.n;
    j["k"] = rc.k;
    j["dim"] = rc.dim;
    j["ratio"] = rc.ratio;
    j["epochs"] = rc.epochs;
    j["seed"] = rc.seed;
    j["class_sizes"] = data.class_sizes;
    j["final"] = to_json(result.final_report);
    Sink summary_sink(rc.summary, out);
    summary_sink.get() << j.dump(2) << '\n';
    summary_sink.finish(rc.summary);
  }
  return kExitSuccess;
}

int cmd_metrics(const RunConfig& rc, std::ostream& out) {
  std::ifstream in = open_input(rc.input);
  const LabelColumns labels = read_label_csv(in, rc.input);
  const metrics::EvalReport report = metrics::evaluate(labels.first, labels.second);
  Sink sink(rc.output, out);
  sink.get() << to_json(report).dump(2) << '\n';
  sink.finish(rc.output);
  return kExitSuccess;
}

int cmd_bench(const RunConfig& rc, std::ostream& out) {
  bench::BenchGrid grid;
  grid.sizes = bench::parse_size_list(rc.sizes);
  grid.rhos = bench::parse_rho_list(rc.rhos);
  bench::BenchOptions options;
  options.k = rc.bench_k;
  options.repeats = rc.repeats;
  options.solver = rc.solver;
  options.seed = rc.seed;
  options.include_failures = rc.include_failures;
  options.parallel = rc.parallel;
  const auto records = bench::run_bench(grid, options);
  Sink sink(rc.output, out);
  bench::write_csv(sink.get(), records);
  sink.finish(rc.output);
  return kExitSuccess;
}

std::string json_scalar(const nlohmann::json& value, const std::string& key) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number()) return format_double(value.get<double>());
  throw_invalid_input("config key '" + key + "' must be a string, number, boolean or list");
}

// Splices the keys of a JSON config file in as flags right after the
// subcommand, so flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return a == "--config" || a.rfind("--config=", 0) == 0;
  });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw CLI::ArgumentMismatch("--config needs a file path");
    path = *std::next(it);
    args.erase(it, std::next(it, 2));
  } else {
    path = it->substr(9);
    args.erase(it);
  }

  std::ifstream in = open_input(path);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw_invalid_input(path + ": " + e.what());
  }
  if (!config.is_object()) throw_invalid_input(path + ": top level must be an object");

  std::vector<std::string> flags;
  for (const auto& [key, value] : config.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back("--" + key);
      continue;
    }
    flags.push_back("--" + key);
    if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) joined += (joined.empty() ? "" : ",") + json_scalar(item, key);
      flags.push_back(joined);
    } else {
      flags.push_back(json_scalar(value, key));
    }
  }
  auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
  const auto at = sub == args.end() ? args.end() : std::next(sub);
  args.insert(at, flags.begin(), flags.end());
  return args;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidConfig:
      return kExitUsage;
    case ErrorKind::kInvalidInput:
      return kExitInput;
    case ErrorKind::kNumericUnderflow:
    case ErrorKind::kDivergence:
    case ErrorKind::kOracleFailure:
      return kExitNumerical;
  }
  return kExitNumerical;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
  set_thread_limit(thread_limit_from_env(hardware));

  RunConfig rc;
  CLI::App app{"Entropic transport solvers for imbalanced pseudo-labelling", "p2ot"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "p2ot 0.1.0");

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one transport problem from a cost CSV");
  solve_cmd->add_option("--input", rc.input, "Cost matrix CSV (header c0,c1,…)")->required();
  solve_cmd->add_option("--output", rc.output, "Plan CSV (default stdout)");
  solve_cmd->add_option("--report", rc.report, "Report JSON (default stdout when --output is set)");
  solve_cmd->add_option("--formulation", rc.formulation, "ot, uot, pot, sla, p2ot or gsa")->capture_default_str();
  solve_cmd->add_option("--sla-upper", rc.sla_upper, "SLA column cap")->capture_default_str();
  solve_cmd->add_flag("--extended", rc.extended, "For p2ot, also write the virtual column");
  solve_cmd->add_flag("--no-timing", rc.no_timing, "Leave wall_time out of the report");
  add_solver_flags(*solve_cmd, rc);

  CLI::App* verify_cmd = app.add_subcommand("verify", "Compare the fast solvers with the oracle");
  verify_cmd->add_option("--size", rc.size, "Instance shape NxK")->capture_default_str();
  verify_cmd->add_option("--seeds", rc.seeds, "Random instances per formulation")->capture_default_str();
  verify_cmd->add_option("--formulations", rc.formulations, "Comma-separated list")->capture_default_str();
  verify_cmd->add_option("--rhos", rc.rhos, "Comma-separated rho grid")->capture_default_str();
  verify_cmd->add_option("--threshold", rc.threshold, "Largest accepted plan deviation")->capture_default_str();
  verify_cmd->add_option("--output", rc.output, "Table CSV (default stdout)");
  add_solver_flags(*verify_cmd, rc);
  add_seed_flag(*verify_cmd, rc);

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Train a probe on synthetic long-tailed blobs");
  simulate_cmd->add_option("--n", rc.n, "Samples")->capture_default_str();
  simulate_cmd->add_option("--k", rc.k, "Classes")->capture_default_str();
  simulate_cmd->add_option("--dim", rc.dim, "Feature dimension")->capture_default_str();
  simulate_cmd->add_option("--ratio", rc.ratio, "Imbalance ratio N_max/N_min")->capture_default_str();
  simulate_cmd->add_option("--separation", rc.separation, "Blob centre radius")->capture_default_str();
  simulate_cmd->add_option("--noise", rc.noise, "Blob standard deviation")->capture_default_str();
  simulate_cmd->add_option("--epochs", rc.epochs, "Training epochs")->capture_default_str();
  simulate_cmd->add_option("--formulation", rc.formulation, "Pseudo-label solver")->capture_default_str();
  simulate_cmd->add_option("--sla-upper", rc.sla_upper, "SLA column cap")->capture_default_str();
  simulate_cmd->add_option("--batch", rc.batch, "Mini-batch size")->capture_default_str();
  simulate_cmd->add_option("--buffer-capacity", rc.buffer_capacity, "Memory buffer rows (0 disables)")
      ->capture_default_str();
  simulate_cmd->add_option("--buffer-warmup", rc.buffer_warmup, "First epoch that uses the buffer")
      ->capture_default_str();
  simulate_cmd->add_option("--ramp", rc.ramp, "sigmoid, linear or fixed")->capture_default_str();
  simulate_cmd->add_option("--rho0", rc.rho0, "Initial rho")->capture_default_str();
  simulate_cmd->add_option("--learning-rate", rc.learning_rate, "Gradient step size")->capture_default_str();
  simulate_cmd->add_option("--hidden", rc.hidden, "Hidden units (0 for a linear probe)")->capture_default_str();
  simulate_cmd->add_flag("--augment", rc.augment, "Two noisy views with crossed pseudo-labels");
  simulate_cmd->add_option("--output", rc.output, "Training log CSV (default stdout)");
  simulate_cmd->add_option("--summary", rc.summary, "Summary JSON (default stdout when --output is set)");
  add_solver_flags(*simulate_cmd, rc);
  add_seed_flag(*simulate_cmd, rc);

  CLI::App* metrics_cmd = app.add_subcommand("metrics", "Score predicted labels against true labels");
  metrics_cmd->add_option("--input", rc.input, "CSV with columns pred,true")->required();
  metrics_cmd->add_option("--output", rc.output, "Report JSON (default stdout)");

  CLI::App* bench_cmd = app.add_subcommand("bench", "Time the virtual-cluster solver against GSA");
  bench_cmd->add_option("--sizes", rc.sizes, "Comma-separated N grid")->capture_default_str();
  bench_cmd->add_option("--rhos", rc.rhos, "Comma-separated rho grid")->capture_default_str();
  bench_cmd->add_option("--k", rc.bench_k, "Clusters")->capture_default_str();
  bench_cmd->add_option("--repeats", rc.repeats, "Runs per cell (median reported)")->capture_default_str();
  bench_cmd->add_flag("--include-failures", rc.include_failures, "Keep cells that hit the iteration cap");
  bench_cmd->add_flag("--parallel", rc.parallel, "Run cells concurrently");
  bench_cmd->add_option("--output", rc.output, "CSV (default stdout)");
  add_solver_flags(*bench_cmd, rc);
  add_seed_flag(*bench_cmd, rc);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(rc, out);
    if (verify_cmd->parsed()) return cmd_verify(rc, out, err);
    if (simulate_cmd->parsed()) return cmd_simulate(rc, out);
    if (metrics_cmd->parsed()) return cmd_metrics(rc, out);
    if (bench_cmd->parsed()) return cmd_bench(rc, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << " (iteration " << e.iteration() << ")\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  return kExitUsage;
}

}  // namespace p2ot::cli
