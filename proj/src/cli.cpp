#include "rgd/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgd/bench.hpp"
#include "rgd/config.hpp"
#include "rgd/errors.hpp"
#include "rgd/ingest.hpp"
#include "rgd/mest.hpp"

namespace rgd {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

std::vector<double> read_column(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open " + path.string());
  }
  std::vector<double> out;
  std::string tok;
  long line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    while (ls >> tok) {
      double v = 0.0;
      const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw InvalidInput(path.string() + ": line " + std::to_string(line_no) +
                           ": not a finite number: '" + tok + "'");
      }
      out.push_back(v);
    }
  }
  if (out.empty()) {
    throw InvalidInput(path.string() + ": no numbers found");
  }
  return out;
}

std::vector<long> parse_counts(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    long v = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size() || v < 0) {
      throw InvalidConfig("per-class counts must be non-negative integers, got '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

/// First unused <root>/run_NNN; created here so concurrent runs cannot collide.
fs::path claim_run_dir(const fs::path& root) {
  fs::create_directories(root);
  for (int k = 1; k < 100000; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03d", k);
    const fs::path dir = root / name;
    if (fs::create_directory(dir)) {
      return dir;
    }
  }
  throw std::runtime_error("no free run directory under " + root.string());
}

struct RunFlags {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> trials;
  std::vector<std::string> methods;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  try {
    rc = load_config(f.config);
  } catch (const ConfigError& e) {
    err << "config error: " << f.config << ": " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidConfig& e) {
    err << "config error: " << f.config << ": " << e.what() << '\n';
    return kUsage;
  }
  bench::ExperimentConfig& x = rc.experiment;
  if (f.seed) {
    x.seed = *f.seed;
  }
  if (f.jobs) {
    rc.parallelism = *f.jobs;
  }
  if (f.trials) {
    x.trials = *f.trials;
  }
  if (!f.methods.empty()) {
    x.methods = f.methods;
  }
  try {
    if (!rc.train_path.empty()) {
      IngestSchema schema;
      schema.label_column = rc.label_column;
      LabeledTable train = read_dataset_csv(rc.train_path, schema);
      LabeledTable test = read_dataset_csv(rc.test_path, schema);
      const int classes = std::max(train.data.classes, test.data.classes);
      train.data.classes = classes;
      test.data.classes = classes;
      x.train_data = std::move(train.data);
      x.test_data = std::move(test.data);
    }
    x.validate();
  } catch (const std::invalid_argument& e) {
    err << "config error: " << f.config << ": " << e.what() << '\n';
    return kUsage;
  }

  fs::path dir;
  try {
    dir = claim_run_dir(fs::path(f.out) / x.name);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }

  bench::ExperimentResult res;
  std::string abort_message;
  try {
    res = bench::run_experiment(x, rc.parallelism);
  } catch (const std::exception& e) {
    abort_message = e.what();
  }
  const bool partial = !abort_message.empty() || !res.failures.empty();

  {
    std::ofstream csv(dir / "results.csv", std::ios::binary);
    bench::write_results_csv(csv, res);
    std::ofstream sum(dir / "summary.csv", std::ios::binary);
    bench::write_summary_csv(sum, res);
    std::ofstream man(dir / "manifest.echo", std::ios::binary);
    // Header lines are comments, so the manifest is itself a runnable config.
    man << "# rgd run manifest\n"
        << "# version = " << RGD_VERSION << '\n'
        << "# config = " << f.config << '\n'
        << "# base_seed = " << x.seed << '\n'
        << "# output = " << dir.string() << '\n'
        << "# completed_trials = " << res.completed_trials << " / " << x.trials << '\n'
        << "# status = " << (partial ? "partial" : "complete") << '\n';
    if (!abort_message.empty()) {
      man << "# abort = " << abort_message << '\n';
    }
    for (const std::string& failure : res.failures) {
      man << "# failed = " << failure << '\n';
    }
    for (const std::string& note : res.notes) {
      man << "# note = " << note << '\n';
    }
    man << '\n' << describe(rc);
  }

  if (partial) {
    err << "run incomplete: " << (abort_message.empty() ? std::to_string(res.failures.size()) +
                                                              " trial(s) failed"
                                                        : abort_message)
        << "; partial results in " << dir.string() << '\n';
    return kRuntime;
  }
  out << dir.string() << '\n';
  return kOk;
}

struct IngestFlags {
  std::string csv;
  std::string out_train;
  std::string out_test;
  std::string label = "label";
  std::vector<std::string> features;
  std::optional<int> classes;
  bool regression = false;
  double test_fraction = 0.0;
  std::string test_per_class;
  std::string train_per_class;
  std::uint64_t seed = 1;
};

int cmd_ingest(const IngestFlags& f, std::ostream& out, std::ostream& err) {
  try {
    IngestSchema schema;
    schema.label_column = f.label;
    schema.feature_columns = f.features;
    schema.classes = f.classes;
    schema.regression = f.regression;
    const LabeledTable table = read_dataset_csv(fs::path(f.csv), schema);
    SplitSpec split;
    split.seed = f.seed;
    split.test_fraction = f.test_fraction;
    if (!f.test_per_class.empty()) {
      split.test_per_class = parse_counts(f.test_per_class);
    }
    if (!f.train_per_class.empty()) {
      split.train_per_class = parse_counts(f.train_per_class);
    }
    const IngestResult r = ingest(table, split);
    if (r.test.size() > 0 && f.out_test.empty()) {
      throw InvalidConfig("a test split was requested but --out-test is missing");
    }
    {
      std::ofstream o(f.out_train, std::ios::binary);
      if (!o) {
        throw std::runtime_error("cannot write " + f.out_train);
      }
      write_dataset_csv(o, r.train, r.features, f.label);
    }
    if (!f.out_test.empty()) {
      std::ofstream o(f.out_test, std::ios::binary);
      if (!o) {
        throw std::runtime_error("cannot write " + f.out_test);
      }
      write_dataset_csv(o, r.test, r.features, f.label);
    }
    out << "train rows " << r.train.size() << ", test rows " << r.test.size() << ", features "
        << r.features.size() << '\n';
    return kOk;
  } catch (const std::invalid_argument& e) {
    err << "ingest error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "ingest error: " << e.what() << '\n';
    return kRuntime;
  }
}

struct MestFlags {
  std::string file;
  std::string rho = "gudermannian";
  double delta = 0.005;
  std::optional<double> scale;
};

int cmd_mest(const MestFlags& f, std::ostream& out, std::ostream& err) {
  try {
    const auto kind = mest::parse_rho_kind(f.rho);
    if (!kind) {
      throw InvalidConfig("unknown rho '" + f.rho + "'");
    }
    const std::vector<double> x = read_column(f.file);
    double mean = 0.0;
    for (double v : x) {
      mean += v;
    }
    mean /= static_cast<double>(x.size());
    const mest::Estimate sigma = mest::rescale(x, mean, mest::ChiFunction());
    const double s =
        f.scale ? *f.scale : mest::confidence_scale(sigma.value, static_cast<long>(x.size()), f.delta);
    if (!(s > 0.0)) {
      throw InvalidConfig("scale must be positive");
    }
    const mest::Estimate theta = mest::locate(x, s, mest::RhoFunction(*kind));
    nlohmann::ordered_json j;
    j["n"] = x.size();
    j["rho"] = std::string(mest::to_string(*kind));
    j["delta"] = f.delta;
    j["theta"] = theta.value;
    j["sigma"] = sigma.value;
    j["scale"] = s;
    j["converged"] = theta.converged;
    j["used_fallback"] = theta.used_fallback || sigma.used_fallback;
    out << j.dump() << '\n';
    return kOk;
  } catch (const std::invalid_argument& e) {
    err << "mest error: " << e.what() << '\n';
    return kUsage;
  }
}

void cmd_families(std::ostream& out) {
  out << "family   long_name       level  target_sd  param_a     param_b\n";
  for (NoiseFamily fam : all_noise_families()) {
    for (int level = 1; level <= kNoiseLevels; ++level) {
      const NoiseSpec s = NoiseSpec::at_level(fam, level);
      std::ostringstream row;
      row.imbue(std::locale::classic());
      row << std::left << std::setw(9) << short_name(fam) << std::setw(16)
          << long_name(fam) << std::right << std::setw(5) << level << "  "
          << std::setw(9) << bench::format_number(ladder_sd(level)) << "  " << std::left
          << std::setw(10) << bench::format_number(s.param_a()) << "  "
          << bench::format_number(s.param_b()) << '\n';
      out << row.str();
    }
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust gradient descent experiments and M-estimation utilities", "rgd"};
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config and write CSV results");
  run_cmd->add_option("config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output root; results go to <out>/<name>/run_NNN");
  run_cmd->add_option("--seed", run.seed, "Override the base seed");
  run_cmd->add_option("--jobs", run.jobs, "Parallel trials")->check(CLI::PositiveNumber);
  run_cmd->add_option("--trials", run.trials, "Override the trial count")->check(CLI::PositiveNumber);
  run_cmd->add_option("--methods", run.methods, "Override the method list")->delimiter(',');

  IngestFlags ing;
  auto* ingest_cmd = app.add_subcommand("ingest", "Normalize a labeled CSV and split it");
  ingest_cmd->add_option("csv", ing.csv, "Input CSV with a header row")->required();
  ingest_cmd->add_option("--out-train", ing.out_train, "Training split output")->required();
  ingest_cmd->add_option("--out-test", ing.out_test, "Test split output");
  ingest_cmd->add_option("--label", ing.label, "Label column name");
  ingest_cmd->add_option("--features", ing.features, "Feature columns (default: all others)")
      ->delimiter(',');
  ingest_cmd->add_option("--classes", ing.classes, "Number of classes");
  ingest_cmd->add_flag("--regression", ing.regression, "Real-valued label");
  ingest_cmd->add_option("--test-fraction", ing.test_fraction, "Random test fraction");
  ingest_cmd->add_option("--test-per-class", ing.test_per_class, "Test rows per class, e.g. 296,296");
  ingest_cmd->add_option("--train-per-class", ing.train_per_class, "Training rows per class");
  ingest_cmd->add_option("--seed", ing.seed, "Sampling seed");

  MestFlags me;
  auto* mest_cmd = app.add_subcommand("mest", "Location, dispersion and scale of one column of numbers");
  mest_cmd->add_option("file", me.file, "Whitespace-separated numbers")->required();
  mest_cmd->add_option("--rho", me.rho, "gudermannian, log_cosh, pseudo_huber or quadratic");
  mest_cmd->add_option("--delta", me.delta, "Confidence level in (0, 1)")
      ->check(CLI::Range(0.0, 1.0));
  mest_cmd->add_option("--scale", me.scale, "Use this scale instead of the confidence scale");

  app.add_subcommand("families", "List noise families and their calibrated levels");
  app.add_subcommand("version", "Print the library version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << "run 'rgd --help' for usage\n";
    return kUsage;
  }

  if (run_cmd->parsed()) {
    return cmd_run(run, out, err);
  }
  if (ingest_cmd->parsed()) {
    return cmd_ingest(ing, out, err);
  }
  if (mest_cmd->parsed()) {
    return cmd_mest(me, out, err);
  }
  if (app.got_subcommand("families")) {
    cmd_families(out);
    return kOk;
  }
  out << "rgd " << RGD_VERSION << '\n';
  return kOk;
}

}  // namespace rgd
