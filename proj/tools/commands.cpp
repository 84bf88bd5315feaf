#include "commands.hpp"

#include "lsstream/diagnostics.hpp"
#include "lsstream/error.hpp"
#include "lsstream/experiment.hpp"
#include "lsstream/ingest.hpp"
#include "lsstream/io.hpp"
#include "lsstream/model.hpp"
#include "lsstream/pipeline.hpp"
#include "lsstream/random.hpp"
#include "lsstream/samplers.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;

namespace lsstream::cli {

namespace {

constexpr const char* kVersion = LSSTREAM_VERSION_STRING;

// Keys handled as global flags rather than per-command options.
bool is_global(const std::string& key) {
  return key == "seed" || key == "out" || key == "parallelism";
}

const Settings& command_defaults(const std::string& command) {
  static const std::map<std::string, Settings> table = {
      {"simulate", {}},
      {"run", {}},
      {"bench", {{"n", "5000"}, {"replicates", "50"}}},
      {"power",
       {{"model", "seasonal_varx"}, {"p1", "2"}, {"p2_seasonal", "1"}, {"period", "24"},
        {"q", "0.05"}, {"q0", "0.025"}, {"u", "0.025"}, {"n0", "500"},
        {"cadence", "step"}, {"reference", "full_sample"}}},
      {"doptcheck", {{"q", "0.5"}, {"q0", "0"}}},
  };
  auto it = table.find(command);
  if (it == table.end()) throw ValidationError("unknown command '" + command + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Typed access

const std::string& get(const Settings& s, const std::string& key) {
  auto it = s.find(key);
  if (it == s.end()) throw ValidationError("missing setting '" + key + "'");
  return it->second;
}

long get_long(const Settings& s, const std::string& key) {
  const std::string& text = get(s, key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("setting '" + key + "' is not an integer: '" + text + "'");
  }
  return v;
}

int get_int(const Settings& s, const std::string& key) {
  return static_cast<int>(get_long(s, key));
}

std::uint64_t get_u64(const Settings& s, const std::string& key) {
  const std::string& text = get(s, key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("setting '" + key + "' is not an unsigned integer: '" + text + "'");
  }
  return v;
}

double get_double(const Settings& s, const std::string& key) {
  try {
    return io::parse_double(get(s, key));
  } catch (const DataError&) {
    throw ValidationError("setting '" + key + "' is not a number: '" + get(s, key) + "'");
  }
}

bool get_bool(const Settings& s, const std::string& key) {
  const std::string& v = get(s, key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("setting '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared pieces

SamplerConfig sampler_config(const Settings& s) {
  SamplerConfig c;
  c.mode = parse_sampler_mode(get(s, "mode"));
  c.q = get_double(s, "q");
  c.q0 = get_double(s, "q0");
  c.u = get_double(s, "u");
  c.n0 = get_int(s, "n0");
  const long window = get_long(s, "quantile_window");
  if (window < 0) throw ValidationError("quantile_window must be non-negative");
  c.quantile_window = static_cast<std::size_t>(window);
  c.refresh_every = get_int(s, "refresh_every");
  c.debias_precision = get_bool(s, "debias_precision");
  return c;
}

NoiseSpec noise_spec(const Settings& s) {
  NoiseSpec n;
  n.family = parse_noise_family(get(s, "noise"));
  if (n.family == NoiseFamily::kStudentT) n.df = get_double(s, "df");
  validate_noise(n);
  return n;
}

PipelineConfig pipeline_config(const Settings& s) {
  PipelineConfig c;
  c.sampler = sampler_config(s);
  c.seed = derive_seed(get_u64(s, "seed"), SeedPurpose::kSelection);
  if (!get(s, "ridge").empty()) c.ridge = get_double(s, "ridge");
  return c;
}

bool is_seasonal(const Settings& s) {
  const std::string& m = get(s, "model");
  if (m == "varx") return false;
  if (m == "seasonal_varx" || m == "seasonal") return true;
  throw ValidationError("unknown model '" + m + "' (expected varx or seasonal_varx)");
}

/// The model is either read from `spec` or generated from the seed.
struct ModelChoice {
  bool seasonal = false;
  VarxSpec varx;
  SeasonalVarxSpec sarx;

  LagLayout layout() const { return seasonal ? sarx.layout() : varx.layout(); }
  Matrix coefficients() const {
    return seasonal ? sarx.coefficient_stack() : varx.coefficient_stack();
  }
  io::KeyValues key_values() const {
    return seasonal ? io::spec_to_key_values(sarx) : io::spec_to_key_values(varx);
  }
  std::vector<StreamPoint> simulate(const NoiseSpec& noise, long n, int burn_in,
                                    std::uint64_t seed) const {
    const int burn = burn_in >= 0 ? burn_in : default_burn_in(layout());
    return seasonal ? lsstream::simulate(sarx, noise, n, burn, seed)
                    : lsstream::simulate(varx, noise, n, burn, seed);
  }
};

ModelChoice model_choice(const Settings& s) {
  ModelChoice m;
  const std::string& path = get(s, "spec");
  if (!path.empty()) {
    const io::KeyValues kv = io::read_key_values(fs::path(path));
    auto it = kv.find("model");
    m.seasonal = it != kv.end() && (it->second == "seasonal_varx" || it->second == "seasonal");
    if (m.seasonal) {
      m.sarx = io::seasonal_spec_from_key_values(kv);
    } else {
      m.varx = io::spec_from_key_values(kv);
    }
    return m;
  }
  m.seasonal = is_seasonal(s);
  const std::uint64_t seed = derive_seed(get_u64(s, "seed"), SeedPurpose::kCoefficients);
  const double level = get_double(s, "mean_level");
  if (m.seasonal) {
    m.sarx = generate_random_stable_seasonal(get_int(s, "K"), get_int(s, "p1"),
                                             get_int(s, "p2_seasonal"), get_int(s, "period"),
                                             get_double(s, "radius"), seed);
    m.sarx.mu_y.setConstant(level);
    validate_spec(m.sarx);
  } else {
    m.varx = generate_random_stable_coefficients(get_int(s, "K"), get_int(s, "p1"),
                                                 get_int(s, "p2"), get_double(s, "radius"),
                                                 seed);
    m.varx.mu_y.setConstant(level);
    validate_spec(m.varx);
  }
  return m;
}

fs::path output_dir(const Settings& s) {
  fs::path dir = get(s, "out");
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
  return f;
}

void write_manifest(const fs::path& dir, const std::string& command, const Settings& s,
                    const std::vector<std::string>& input_keys) {
  io::KeyValues kv;
  kv["tool_version"] = kVersion;
  kv["command"] = command;
  for (const auto& [k, v] : s) kv["config." + k] = v;
  for (const auto& key : input_keys) {
    auto it = s.find(key);
    if (it != s.end() && !it->second.empty()) {
      kv["checksum." + key] = io::file_checksum(it->second);
    }
  }
  auto f = open_out(dir / "manifest.txt");
  io::write_key_values(f, kv);
}

void write_metrics(const fs::path& path, const std::vector<MetricRecord>& metrics) {
  auto f = open_out(path);
  io::write_metric_header(f);
  for (const auto& m : metrics) io::write_metric_row(f, m);
}

void write_decisions(const fs::path& path, const std::vector<Decision>& decisions) {
  auto f = open_out(path);
  io::write_decision_header(f);
  for (const auto& d : decisions) io::write_decision_row(f, d);
}

MetricCadence parse_cadence(const std::string& text) {
  if (text == "update") return MetricCadence::kPerUpdate;
  if (text == "step") return MetricCadence::kPerStep;
  throw ValidationError("unknown cadence '" + text + "' (expected update or step)");
}

void print_run_summary(std::ostream& out, const RunResult& r) {
  out << "steps " << r.steps << " selected " << r.selected << " rate "
      << io::format_double(r.rate()) << '\n';
  if (!r.metrics.empty()) {
    out << "final est_error " << io::format_double(r.metrics.back().est_error) << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"seed", "0", "master seed"},
      {"out", ".", "output directory"},
      {"parallelism", "1", "worker threads for replicate runs"},
      {"model", "varx", "varx or seasonal_varx"},
      {"spec", "", "model spec file (key = value); generated from the seed when empty"},
      {"K", "10", "response dimension"},
      {"p1", "1", "autoregressive order"},
      {"p2", "1", "exogenous order (varx)"},
      {"p2_seasonal", "1", "number of seasonal lags (seasonal_varx)"},
      {"period", "24", "seasonal period"},
      {"radius", "0.8", "companion spectral radius of a generated model"},
      {"mean_level", "0", "response mean of a generated model"},
      {"noise", "gaussian", "gaussian or student_t"},
      {"df", "3", "Student-t degrees of freedom"},
      {"n", "25000", "stream length"},
      {"burn_in", "-1", "discarded warm-up steps; negative selects the default"},
      {"mode", "relaxed", "bernoulli, lss or relaxed"},
      {"q", "0.1", "target sampling rate"},
      {"q0", "0.05", "base sampling rate (relaxed)"},
      {"u", "0.1", "precision update rate"},
      {"n0", "100", "pilot size"},
      {"quantile_window", "0", "leverage window for the threshold; 0 keeps all"},
      {"refresh_every", "1", "threshold refresh cadence in steps"},
      {"debias_precision", "true", "scale the precision estimate by M - p - 1 instead of M"},
      {"ridge", "", "estimator initialization ridge; automatic when empty"},
      {"stream", "", "stream CSV for run; simulated when empty"},
      {"cadence", "update", "metric cadence: update or step"},
      {"reference", "true", "est_error reference: true or full_sample"},
      {"decisions", "true", "write the decision log"},
      {"replicates", "50", "bench replicate count"},
      {"csv", "", "wide load CSV for power"},
      {"columns", "", "comma separated series columns for power"},
      {"timestamp_column", "utc_timestamp", "timestamp column for power"},
      {"missing", "forward_fill", "missing-value policy: fail, drop_row, forward_fill"},
      {"p", "2", "covariate dimension for doptcheck"},
      {"distribution", "gaussian", "doptcheck covariate law: gaussian or student_t"},
      {"n_mc", "100000", "Monte Carlo draws per doptcheck candidate"},
  };
  return keys;
}

Settings resolve_settings(const std::string& command,
                          const std::optional<fs::path>& config_file,
                          const Settings& flags) {
  Settings s;
  for (const auto& k : config_keys()) s[k.name] = k.fallback;
  for (const auto& [k, v] : command_defaults(command)) s[k] = v;
  auto overlay = [&s](const Settings& src, const std::string& origin) {
    for (const auto& [k, v] : src) {
      if (!s.count(k)) throw ValidationError("unknown key '" + k + "' in " + origin);
      s[k] = v;
    }
  };
  if (config_file) {
    if (!fs::exists(*config_file)) {
      throw ValidationError("config file '" + config_file->string() + "' does not exist");
    }
    overlay(io::read_key_values(*config_file), "config file");
    s["config"] = config_file->string();
  }
  overlay(flags, "flags");
  return s;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Settings& s, std::ostream& out) {
  const long n = get_long(s, "n");
  if (n <= 0) throw ValidationError("stream length n must be positive");
  const ModelChoice model = model_choice(s);
  const NoiseSpec noise = noise_spec(s);
  const auto points = model.simulate(noise, n, get_int(s, "burn_in"), get_u64(s, "seed"));

  const fs::path dir = output_dir(s);
  {
    auto f = open_out(dir / "stream.csv");
    io::write_stream_csv(f, points);
  }
  {
    io::KeyValues kv = model.key_values();
    auto f = open_out(dir / "spec.txt");
    io::write_key_values(f, kv);
  }
  write_manifest(dir, "simulate", s, {"config", "spec"});
  out << "wrote " << points.size() << " points to " << (dir / "stream.csv").string() << '\n';
  return kSuccess;
}

int cmd_run(const Settings& s, std::ostream& out) {
  const ModelChoice model = model_choice(s);
  std::vector<StreamPoint> points;
  if (!get(s, "stream").empty()) {
    points = io::read_stream_csv(fs::path(get(s, "stream")));
  } else {
    const long n = get_long(s, "n");
    if (n <= 0) throw ValidationError("stream length n must be positive");
    points = model.simulate(noise_spec(s), n, get_int(s, "burn_in"), get_u64(s, "seed"));
  }
  const auto obs = observations_from_stream(points, model.layout());

  RunOptions options;
  options.pipeline = pipeline_config(s);
  options.cadence = parse_cadence(get(s, "cadence"));
  options.keep_decisions = get_bool(s, "decisions");
  const std::string& ref = get(s, "reference");
  if (ref == "true") {
    options.reference_b = model.coefficients();
  } else if (ref == "full_sample") {
    options.reference_b = full_sample_fit(obs);
  } else {
    throw ValidationError("unknown reference '" + ref + "' (expected true or full_sample)");
  }
  const RunResult result = run_online(obs, options);

  const fs::path dir = output_dir(s);
  write_metrics(dir / "metrics.csv", result.metrics);
  if (options.keep_decisions) write_decisions(dir / "decisions.csv", result.decisions);
  {
    auto f = open_out(dir / "snapshot.json");
    io::write_snapshot_json(f, result.final_state.n_selected, result.final_state);
  }
  write_manifest(dir, "run", s, {"config", "spec", "stream"});
  print_run_summary(out, result);
  return kSuccess;
}

int cmd_bench(const Settings& s, std::ostream& out) {
  BenchConfig config;
  config.K = get_int(s, "K");
  config.p1 = get_int(s, "p1");
  config.p2 = get_int(s, "p2");
  config.radius = get_double(s, "radius");
  config.noise = noise_spec(s);
  config.n = get_long(s, "n");
  config.burn_in = get_int(s, "burn_in");
  config.sampler = sampler_config(s);
  config.seed = get_u64(s, "seed");
  const BenchResult result =
      run_bench(config, get_int(s, "replicates"), get_int(s, "parallelism"));

  const fs::path dir = output_dir(s);
  {
    auto f = open_out(dir / "bench.csv");
    write_bench_table(f, result);
  }
  write_manifest(dir, "bench", s, {"config"});
  out << "common tau " << result.common_tau << '\n';
  for (std::size_t m = 0; m < result.modes.size(); ++m) {
    out << to_string(result.modes[m]) << " final mean est_error "
        << io::format_double(result.mean(result.common_tau - 1, static_cast<Eigen::Index>(m)))
        << '\n';
  }
  return kSuccess;
}

int cmd_power(const Settings& s, std::ostream& out) {
  if (get(s, "csv").empty()) throw ValidationError("power needs --csv");
  const auto columns = split_list(get(s, "columns"));
  if (columns.empty()) throw ValidationError("power needs --columns");
  MissingPolicy policy{parse_missing_mode(get(s, "missing"))};
  const LoadTable table =
      parse_wide_csv(fs::path(get(s, "csv")), get(s, "timestamp_column"), columns, policy);

  SeasonalVarxSpec shape;
  shape.K = table.series();
  shape.p1 = get_int(s, "p1");
  shape.p2_seasonal = get_int(s, "p2_seasonal");
  shape.period = get_int(s, "period");
  if (shape.p1 < 0 || shape.p2_seasonal < 0 || shape.p1 + shape.p2_seasonal == 0 ||
      shape.period < 1) {
    throw ValidationError("power needs p1 >= 0, p2_seasonal >= 0 (not both zero), period >= 1");
  }
  const LagLayout layout = shape.layout();
  const auto obs = observations_from_table(table, layout);

  RunOptions options;
  options.pipeline = pipeline_config(s);
  options.cadence = parse_cadence(get(s, "cadence"));
  options.keep_decisions = get_bool(s, "decisions");
  options.reference_b = full_sample_fit(obs);
  const RunResult result = run_online(obs, options);

  const fs::path dir = output_dir(s);
  write_metrics(dir / "metrics.csv", result.metrics);
  if (options.keep_decisions) write_decisions(dir / "decisions.csv", result.decisions);
  {
    auto f = open_out(dir / "snapshot.json");
    io::write_snapshot_json(f, result.final_state.n_selected, result.final_state);
  }
  {
    auto f = open_out(dir / "missing.log");
    for (const auto& e : table.missing_log) f << format_missing_event(e) << '\n';
  }
  write_manifest(dir, "power", s, {"config", "csv"});
  out << "rows " << table.rows() << " series " << table.series() << '\n';
  print_run_summary(out, result);
  return kSuccess;
}

int cmd_doptcheck(const Settings& s, std::ostream& out) {
  const int p = get_int(s, "p");
  if (p < 1) throw ValidationError("doptcheck needs p >= 1");
  const double q = get_double(s, "q");
  const double q0 = get_double(s, "q0");
  const long n_mc = get_long(s, "n_mc");
  LeverageLaw law;
  law.p = p;
  law.family = parse_noise_family(get(s, "distribution"));
  if (law.family == NoiseFamily::kStudentT) {
    law.df = get_double(s, "df");
    if (!(law.df > 2.0)) throw ValidationError("Student-t df must exceed 2");
  }

  const Vector mu = Vector::Zero(p);
  const Matrix scatter = Matrix::Identity(p, p);
  const EllipticalSampler sampler(mu, scatter, law.family, law.df);
  const CovariateSampler draw = [&sampler](Rng& rng, Eigen::Ref<Vector> x) {
    sampler.draw_into(rng, x);
  };
  const auto candidates = builtin_candidates(q, q0, law, scatter);
  const OracleReport report =
      d_optimality_oracle(q, q0, draw, mu, candidates, n_mc, get_u64(s, "seed"));

  const fs::path dir = output_dir(s);
  {
    auto f = open_out(dir / "doptcheck.csv");
    f << "rank,candidate,admissible,det_gamma,det_se,q_hat\n";
    int rank = 1;
    for (const auto& r : report.ranked) {
      f << rank++ << ',' << r.name << ',' << (r.admissible ? "true" : "false") << ','
        << io::format_double(r.summary.det_gamma) << ','
        << io::format_double(r.summary.det_se) << ','
        << io::format_double(r.summary.q_hat) << '\n';
    }
  }
  write_manifest(dir, "doptcheck", s, {"config"});

  int rank = 1;
  for (const auto& r : report.ranked) {
    out << rank++ << ' ' << r.name << (r.admissible ? "" : " (not admissible)")
        << " det " << io::format_double(r.summary.det_gamma) << " +- "
        << io::format_double(r.summary.det_se) << '\n';
  }
  out << "leader " << report.leader << " gap " << io::format_double(report.gap)
      << " se " << io::format_double(report.gap_se) << '\n';
  out << (report.optimum_first ? "optimum ranked first" : "optimum not separated") << '\n';
  return report.optimum_first ? kSuccess : kCheckFailure;
}

int dispatch(const std::string& command, const Settings& s, std::ostream& out,
             std::ostream& err) {
  try {
    if (command == "simulate") return cmd_simulate(s, out);
    if (command == "run") return cmd_run(s, out);
    if (command == "bench") return cmd_bench(s, out);
    if (command == "power") return cmd_power(s, out);
    if (command == "doptcheck") return cmd_doptcheck(s, out);
    err << "error: unknown command '" << command << "'\n";
    return kValidationFailure;
  } catch (const IngestError& e) {
    err << "data error: " << e.what();
    if (e.row() >= 0) err << " (row " << e.row() << ')';
    err << '\n';
    return kDataFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidationFailure;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leverage-score-sampled online estimation for stationary VARX streams",
               "lsstream"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Settings flags;
  std::map<std::string, std::optional<std::string>> values;
  for (const auto& k : config_keys()) values[k.name];

  app.add_option("--config", config_path, "key = value configuration file");
  for (const auto& k : config_keys()) {
    if (is_global(k.name)) app.add_option("--" + k.name, values[k.name], k.help);
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate a stream and write it as CSV"},
      {"run", "run sampler-assisted online estimation over one stream"},
      {"bench", "replicate benchmark of every sampler mode"},
      {"power", "replay a wide load CSV through the seasonal model"},
      {"doptcheck", "rank sampling rules by det(Gamma)"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    for (const auto& k : config_keys()) {
      if (!is_global(k.name)) sub->add_option("--" + k.name, values[k.name], k.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kValidationFailure;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  for (const auto& [k, v] : values) {
    if (v) flags[k] = *v;
  }
  Settings settings;
  try {
    settings = resolve_settings(
        command, config_path ? std::optional<fs::path>(*config_path) : std::nullopt, flags);
  } catch (const std::exception& e) {
    err << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return dispatch(command, settings, out, err);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lsstream");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lsstream::cli
