// copydraw: command-line entry point for the decoding pipelines.
//
// Exit codes: 0 success, 1 runtime error, 2 validation or usage error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "copydraw/copydraw.hpp"

namespace fs = std::filesystem;
using namespace copydraw;
using json = nlohmann::json;

namespace {

constexpr const char* kOutputDirEnv = "COPYDRAW_OUTPUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<FrequencyBand> parse_bands(const std::vector<std::string>& specs) {
  if (specs.empty()) return canonical_bands();
  std::vector<FrequencyBand> out;
  for (const auto& s : specs) {
    // "name" from the canonical set, or "name:lo:hi"
    const auto c1 = s.find(':');
    if (c1 == std::string::npos) {
      out.push_back(band_by_name(s));
      continue;
    }
    const auto c2 = s.find(':', c1 + 1);
    if (c2 == std::string::npos) throw UsageError("band \"" + s + "\" must be NAME or NAME:LO:HI");
    try {
      out.push_back({s.substr(0, c1), std::stod(s.substr(c1 + 1, c2 - c1 - 1)), std::stod(s.substr(c2 + 1))});
    } catch (const std::logic_error&) {
      throw UsageError("band \"" + s + "\" has non-numeric edges");
    }
  }
  return out;
}

/// Shared analysis options.
struct Options {
  std::string session;
  std::string feature_set = "standard";
  std::vector<std::string> bands;
  int k_spoc = 8;
  int k_select = 8;
  double alpha = 1.0;
  std::size_t n_perm = 1000;
  double percentile = 95.0;
  double icc_threshold = kDefaultIccThreshold;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string target = "copydraw-score";
  unsigned workers = 0;

  void add_to(CLI::App* cmd, bool neural) {
    cmd->add_option("session", session, "session directory or manifest.json")->required();
    cmd->add_option("--feature-set", feature_set, "standard | extended | angular (behavioral features and CopyDraw scores)")
        ->capture_default_str();
    cmd->add_option("--n-perm", n_perm, "label shuffles for the chance level (0 disables)")->capture_default_str();
    cmd->add_option("--percentile", percentile, "chance-level percentile")->capture_default_str();
    cmd->add_option("--seed", seed, "permutation seed")->capture_default_str();
    cmd->add_option("-o,--output-dir", output_dir,
                    std::string("output directory (default: $") + kOutputDirEnv + ", else next to the session)");
    cmd->add_option("--workers", workers, "worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
    if (neural) {
      cmd->add_option("--bands", bands, "filterbank, e.g. theta,beta or mu:8:13 (default: canonical five)")->delimiter(',');
      cmd->add_option("--k-spoc", k_spoc, "SPoC filters per band")->capture_default_str();
      cmd->add_option("--k-select", k_select, "features kept by MRMR")->capture_default_str();
      cmd->add_option("--alpha", alpha, "ridge penalty")->capture_default_str();
      cmd->add_option("--target", target, "copydraw-score | task-performance")->capture_default_str();
    }
  }

  RunConfig resolve() const {
    try {
      return resolve_unchecked();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  RunConfig resolve_unchecked() const {
    RunConfig c;
    c.sessions = {session};
    c.feature_set = parse_feature_set(feature_set);
    c.bands = parse_bands(bands);
    c.k_spoc = k_spoc;
    c.k_select = k_select;
    c.ridge_alpha = alpha;
    c.n_perm = n_perm;
    c.percentile = percentile;
    c.icc_threshold = icc_threshold;
    c.seed = seed;
    c.output_dir = resolve_output_dir().string();
    c.target = parse_target_kind(target);
    c.workers = workers;
    return c;
  }

  fs::path resolve_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return session_root().parent_path();
  }

  fs::path session_root() const {
    fs::path p = fs::absolute(session).lexically_normal();
    if (p.has_filename() && !fs::is_directory(p)) p = p.parent_path();
    if (!p.has_filename()) p = p.parent_path();  // trailing slash
    return p;
  }

  std::string basename() const { return session_root().filename().string(); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) fail(Errc::IoError, "cannot write " + p.string());
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(Errc::MissingFile, p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::SchemaViolation, p.string() + ": " + e.what());
  }
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Combined per-session report: `<out>/<session>-report.json`. Sections from
/// earlier subcommands are kept; run timestamps go to a sidecar so the report
/// itself stays byte-identical across reruns.
class SessionReport {
 public:
  SessionReport(const Options& o, const Session& s)
      : path_(o.resolve_output_dir() / (o.basename() + "-report.json")),
        sidecar_(o.resolve_output_dir() / (o.basename() + "-report.run.json")) {
    if (fs::exists(path_)) {
      doc_ = read_json(path_);
      if (doc_.value("session_id", std::string()) != s.id) doc_ = json::object();
    }
    if (fs::exists(sidecar_)) {
      try {
        runs_ = read_json(sidecar_);
      } catch (const Error&) {
        runs_ = json::object();
      }
    }
    doc_["schema_version"] = kReportSchemaVersion;
    doc_["session_id"] = s.id;
  }

  void set(const json::json_pointer& where, json section, unsigned workers) {
    doc_[where] = std::move(section);
    runs_[where] = {{"finished_utc", utc_now()}, {"workers", resolve_workers(workers)}};
  }

  void save() const {
    write_file(path_, doc_.dump(2) + "\n");
    write_file(sidecar_, runs_.dump(2) + "\n");
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_, sidecar_;
  json doc_ = json::object();
  json runs_ = json::object();
};

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string chance_note(const EvaluationReport& r) {
  if (!r.chance) return "";
  return " (chance " + fixed(r.chance->value) + ", " + (r.significant() ? "significant" : "not significant") + ")";
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string spec = "default";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> blocks, trials;
  bool no_neural = false;
};

int run_simulate(const SimulateArgs& a) {
  SynthSpec spec;
  if (fs::exists(a.spec)) {
    json j = read_json(a.spec);
    if (a.seed) j["seed"] = *a.seed;
    spec = spec_from_json(j);
  } else {
    if (!a.seed) throw UsageError("--seed is required with a preset spec");
    spec = preset_spec(a.spec, *a.seed);
  }
  if (a.blocks) spec.n_blocks = *a.blocks;
  if (a.trials) spec.trials_per_block = *a.trials;
  if (a.no_neural) spec.neural.enabled = false;
  const auto ss = generate_session(spec);
  const fs::path dir = a.out;
  save_session(ss.session, dir);
  write_file(dir / "ground_truth.json", truth_to_json(ss.truth).dump(2) + "\n");
  write_file(dir / "spec.json", spec_to_json(spec).dump(2) + "\n");
  std::size_t trials = 0;
  for (const auto& b : ss.session.blocks) trials += b.trials.size();
  std::cout << "session " << ss.session.id << ": " << ss.session.blocks.size() << " blocks, " << trials << " trials -> "
            << dir.string() << "\n";
  return 0;
}

int run_behavioral(const Options& o, bool dump_features) {
  const auto cfg = o.resolve();
  const auto s = load_session(o.session);
  const auto r = behavioral_decode(s, cfg.feature_set, cfg.permutation());
  SessionReport rep(o, s);
  rep.set(json::json_pointer("/behavioral"), behavioral_to_json(r, s, cfg), cfg.workers);
  rep.save();
  const fs::path out = o.resolve_output_dir();
  write_file(out / (o.basename() + "-scores.csv"), scores_csv(r));
  if (dump_features) write_file(out / (o.basename() + "-features.csv"), features_csv(r.data));
  std::cout << "behavioral " << s.id << ": mean ROC AUC " << fixed(r.report.mean) << chance_note(r.report) << ", ICC "
            << fixed(r.icc) << "\nreport: " << rep.path().string() << "\n";
  return 0;
}

fs::path marker_path(const Options& o, TargetKind t) {
  return o.resolve_output_dir() / (o.basename() + "-marker-" + std::string(to_string(t)) + ".json");
}

int run_neural(const Options& o) {
  const auto cfg = o.resolve();
  if (cfg.target == TargetKind::Custom) throw UsageError("--target must be copydraw-score or task-performance");
  const auto s = load_session(o.session);
  const auto trials = included_trials(s);
  const auto targets = cfg.target == TargetKind::CopyDrawScore ? copydraw_scores(s, cfg.feature_set) : task_performance_targets(s);
  const auto r = neural_decode(s, trials, targets, cfg.target, cfg.neural(), cfg.permutation(), cfg.workers);
  SessionReport rep(o, s);
  const std::string key(to_string(cfg.target));
  rep.set(json::json_pointer("/neural/" + key), neural_to_json(r, s, cfg), cfg.workers);
  rep.save();
  const fs::path out = o.resolve_output_dir();
  write_file(marker_path(o, cfg.target), marker_to_json(r.marker).dump(2) + "\n");
  write_file(out / (o.basename() + "-predictions-" + key + ".csv"), predictions_csv(r));
  write_file(out / (o.basename() + "-band-counts-" + key + ".csv"), band_counts_csv(r, cfg.bands));
  std::cout << "neural " << s.id << " [" << key << "]: mean r " << fixed(r.report.mean) << chance_note(r.report)
            << "\nreport: " << rep.path().string() << "\n";
  return 0;
}

int run_controllability(const Options& o, const std::string& marker_file) {
  const auto cfg = o.resolve();
  const auto s = load_session(o.session);
  const fs::path mp = marker_file.empty() ? marker_path(o, cfg.target) : fs::path(marker_file);
  if (!fs::exists(mp)) fail(Errc::MissingFile, mp.string() + " (run neural-decode first or pass --marker)");
  const auto marker = marker_from_json(read_json(mp));
  const auto r = controllability(s, marker, cfg.permutation(), cfg.workers);
  auto section = controllability_to_json(r, s, cfg);
  section["marker"] = mp.filename().string();
  section["marker_target"] = std::string(to_string(marker.target));
  SessionReport rep(o, s);
  rep.set(json::json_pointer("/controllability/" + std::string(to_string(marker.target))), section, cfg.workers);
  rep.save();
  std::cout << "controllability " << s.id << ": regression-feature ROC AUC " << fixed(r.report.mean) << chance_note(r.report)
            << "\nreport: " << rep.path().string() << "\n";
  return 0;
}

int run_outcome(const std::string& report_path, const std::string& target, double icc_threshold) {
  const auto report = read_json(report_path);
  json detail;
  outcome_from_report(report, parse_target_kind(target), icc_threshold, &detail);
  detail["session_id"] = report.value("session_id", std::string());
  detail["target"] = target;
  std::cout << detail.dump(2) << "\n";
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_dir, double icc_threshold) {
  std::vector<json> reports;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) {
      // a session directory: its report sits next to it
      const auto abs = fs::absolute(p).lexically_normal();
      const auto root = abs.has_filename() ? abs : abs.parent_path();
      p = root.parent_path() / (root.filename().string() + "-report.json");
    }
    reports.push_back(read_json(p));
  }
  const auto t = cross_session_tables(reports, icc_threshold);
  const fs::path out = out_dir.empty() ? fs::path(std::getenv(kOutputDirEnv) ? std::getenv(kOutputDirEnv) : ".") : fs::path(out_dir);
  write_file(out / "sessions.csv", t.sessions_csv);
  write_file(out / "shap.csv", t.shap_csv);
  write_file(out / "task_performance.csv", t.task_performance_csv);
  write_file(out / "band_counts.csv", t.band_counts_csv);
  write_file(out / "summary.json", t.summary.dump(2) + "\n");
  std::cout << "merged " << reports.size() << " session reports into " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CopyDraw marker identification: behavioral and neural decoding of DBS condition"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic session with known ground truth");
  simulate->add_option("--spec", sim.spec, "preset (default, null, white-noise, noncontrollable, dbs-marker, ecog) or spec JSON file")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "generator seed (required for presets)");
  simulate->add_option("-o,--out", sim.out, "session directory to create")->required();
  simulate->add_option("--blocks", sim.blocks, "override the number of blocks");
  simulate->add_option("--trials", sim.trials, "override trials per block");
  simulate->add_flag("--no-neural", sim.no_neural, "traces only");

  Options beh_opts, neu_opts, ctl_opts;
  bool dump_features = false;
  auto* behavioral = app.add_subcommand("behavioral-decode", "decode DBS condition from drawing kinematics");
  beh_opts.add_to(behavioral, false);
  behavioral->add_flag("--dump-features", dump_features, "also write the per-trial feature matrix as CSV");

  auto* neural = app.add_subcommand("neural-decode", "decode CopyDraw score or task performance from neural epochs");
  neu_opts.add_to(neural, true);

  std::string marker_file;
  auto* control = app.add_subcommand("controllability", "classify DBS condition from a fitted marker's features");
  ctl_opts.add_to(control, false);
  control->add_option("--target", ctl_opts.target, "target of the marker to load")->capture_default_str();
  control->add_option("--marker", marker_file, "marker JSON (default: the one neural-decode wrote)");

  std::string report_path, outcome_target = "copydraw-score";
  double outcome_icc = kDefaultIccThreshold;
  auto* outcome = app.add_subcommand("outcome-type", "classify a session report into outcome Type1..Type6");
  outcome->add_option("report", report_path, "combined session report JSON")->required();
  outcome->add_option("--target", outcome_target, "neural section to use")->capture_default_str();
  outcome->add_option("--icc-threshold", outcome_icc, "ICC level separating bimodal scores")->capture_default_str();

  std::vector<std::string> report_inputs;
  std::string report_out;
  double report_icc = kDefaultIccThreshold;
  auto* report = app.add_subcommand("report", "merge session reports into cross-session tables");
  report->add_option("reports", report_inputs, "session report JSON files or session directories")->required();
  report->add_option("-o,--output-dir", report_out, "where to write the tables (default: $COPYDRAW_OUTPUT_DIR or .)");
  report->add_option("--icc-threshold", report_icc, "ICC level for outcome types")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*behavioral) return run_behavioral(beh_opts, dump_features);
    if (*neural) return run_neural(neu_opts);
    if (*control) return run_controllability(ctl_opts, marker_file);
    if (*outcome) return run_outcome(report_path, outcome_target, outcome_icc);
    if (*report) return run_report(report_inputs, report_out, report_icc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
