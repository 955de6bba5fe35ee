// Command-line driver for the marked point pattern experiments.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "geomark/errors.hpp"
#include "geomark/harness.hpp"
#include "geomark/io.hpp"

namespace fs = std::filesystem;
using namespace geomark;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "geomark-out";
  std::string preset;
  std::string mark;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Experiment config JSON");
  cmd->add_option("--seed", f.seed, "Root random seed");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--preset", f.preset, "desk or paper");
  cmd->add_option("--mark", f.mark, "shot_noise | nearest_neighbor | voronoi_area | voronoi_inertia | voronoi_shot_noise");
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

// Preset and mark choose the base; file keys overlay it; --seed wins last.
// Stages after `generate` fall back to the config recorded in --out.
ExperimentConfig load_config(const CommonFlags& f, bool use_recorded) {
  json file = json::object();
  if (!f.config_path.empty()) {
    file = parse_json_file(f.config_path);
  } else if (use_recorded && fs::exists(fs::path(f.out) / "config.json")) {
    file = parse_json_file(fs::path(f.out) / "config.json");
  }
  if (!file.is_object()) throw ConfigError("config must be a JSON object");
  std::string preset = f.preset.empty() ? file.value("preset", std::string("desk")) : f.preset;
  std::string mark = f.mark.empty() ? file.value("mark", std::string("shot_noise")) : f.mark;
  ExperimentConfig cfg = ExperimentConfig::preset_for(preset, parse_mark_model(mark));
  if (!f.config_path.empty() || use_recorded) cfg = config_from_json(file, cfg);
  cfg.preset = preset;
  cfg.mark = parse_mark_model(mark);
  if (f.seed) cfg.seed = *f.seed;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const CommonFlags& f) {
  fs::create_directories(f.out);
  return f.out;
}

std::vector<MarkedPattern> load_split(const fs::path& dir, Split s) {
  const fs::path path = dir / (std::string(to_string(s)) + ".ndjson");
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing " + path.string() + " (run `geomark generate` first)");
  return read_marked_patterns(is);
}

void save_matrix(const fs::path& path, const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  std::ofstream os = open_output(path);
  write_matrix_csv(os, labels, m);
}

Eigen::MatrixXd load_matrix(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing " + path.string() + " (run `geomark scatter` first)");
  return read_matrix_csv(is).values;
}

SplitFeatures load_features(const fs::path& dir, Split s) {
  const std::string stem = std::string(to_string(s));
  return {load_matrix(dir / "features" / (stem + "_unmarked.csv")),
          load_matrix(dir / "features" / (stem + "_marked.csv"))};
}

RidgeModel load_model(const fs::path& dir) {
  return ridge_from_json(parse_json_file(dir / "model.json"));
}

void write_config(const fs::path& dir, const ExperimentConfig& cfg) {
  open_output(dir / "config.json") << config_to_json(cfg).dump(2) << '\n';
}

int cmd_generate(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, false);
  const fs::path dir = out_dir(f);
  write_config(dir, cfg);
  for (Split s : {Split::train, Split::test, Split::validation}) {
    const std::vector<MarkedPattern> data = generate_dataset(cfg, s);
    std::ofstream os = open_output(dir / (std::string(to_string(s)) + ".ndjson"));
    write_patterns_ndjson(os, data);
    std::cerr << to_string(s) << ": " << data.size() << " patterns\n";
  }
  return 0;
}

int cmd_scatter(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, true);
  const fs::path dir = out_dir(f);
  const FilterBank bank(cfg.bank_params());
  fs::create_directories(dir / "features");
  for (Split s : {Split::train, Split::test, Split::validation}) {
    const std::vector<MarkedPattern> data = load_split(dir, s);
    const SplitFeatures feat = extract_features(cfg, s, data, bank, &std::cerr);
    const std::string stem = std::string(to_string(s));
    save_matrix(dir / "features" / (stem + "_unmarked.csv"), feature_labels(bank, 2), feat.unmarked);
    save_matrix(dir / "features" / (stem + "_marked.csv"), bank.first_order_labels(), feat.marked);
  }
  return 0;
}

int cmd_train(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, true);
  const fs::path dir = out_dir(f);
  const FilterBank bank(cfg.bank_params());
  const TrainedRegression reg = train_regression(cfg, load_features(dir, Split::train), bank);
  open_output(dir / "model.json") << ridge_to_json(reg.model).dump() << '\n';
  std::ofstream cv = open_output(dir / "cv_report.csv");
  write_cv_report(cv, reg.model.output_labels, reg.cv);
  if (!reg.model.ill_conditioned.empty()) {
    std::cerr << "warning: " << reg.model.ill_conditioned.size() << " outputs solved by pseudoinverse\n";
  }
  return 0;
}

int cmd_reconstruct(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, true);
  const fs::path dir = out_dir(f);
  const FilterBank bank(cfg.bank_params());
  const RidgeModel model = load_model(dir);
  const double init = mean_mark(load_split(dir, Split::train));
  const std::vector<MarkedPattern> test = load_split(dir, Split::test);
  const std::vector<MarkedPattern> val = load_split(dir, Split::validation);
  const SplitFeatures f_test = load_features(dir, Split::test);
  const SplitFeatures f_val = load_features(dir, Split::validation);
  const ReconstructionRun runs[] = {reconstruct_estimated(cfg, bank, model, init, test, f_test, val, f_val),
                                    reconstruct_exact(cfg, bank, init, test, f_test, val, f_val)};
  for (const ReconstructionRun& run : runs) {
    std::ofstream os = open_output(dir / ("reconstruction_" + run.method + ".ndjson"));
    write_reconstruction_report(os, run);
    std::cerr << run.method << ": cap " << run.cap << ", RMSE " << run.pooled().metrics.rmse << '\n';
  }
  if (cfg.tune_caps) {
    std::ofstream os = open_output(dir / "cap_tuning.csv");
    write_cap_tuning(os, runs);
  }
  return 0;
}

int cmd_baseline(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, true);
  const fs::path dir = out_dir(f);
  const BaselineRun run = run_baseline(cfg, load_split(dir, Split::train), load_split(dir, Split::test));
  if (!run.notice.empty()) std::cerr << run.notice << '\n';
  std::ofstream os = open_output(dir / "baseline.csv");
  os << "pattern,index,true,predicted\n" << std::setprecision(17);
  if (run.result) {
    for (std::size_t i = 0; i < run.result->truth.size(); ++i) {
      os << run.result->pattern[i] << ',' << run.result->index[i] << ',' << run.result->truth[i] << ','
         << run.result->predicted[i] << '\n';
    }
  }
  open_output(dir / "baseline_notice.txt") << run.notice << '\n';
  return 0;
}

std::optional<MethodResult> load_baseline(const fs::path& dir) {
  std::ifstream is(dir / "baseline.csv");
  if (!is) return std::nullopt;
  MethodResult r;
  r.method = "baseline";
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell[4];
    for (auto& c : cell) std::getline(ss, c, ',');
    r.pattern.push_back(std::stoul(cell[0]));
    r.index.push_back(std::stoul(cell[1]));
    r.truth.push_back(std::stod(cell[2]));
    r.predicted.push_back(std::stod(cell[3]));
  }
  if (r.truth.empty()) return std::nullopt;
  r.metrics = compute_metrics(r.truth, r.predicted);
  return r;
}

int cmd_evaluate(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, true);
  const fs::path dir = out_dir(f);
  const RidgeModel model = load_model(dir);
  EvaluationReport report;
  report.config = cfg;
  report.output_labels = model.output_labels;
  report.lambdas = model.lambdas;
  report.init_value = mean_mark(load_split(dir, Split::train));
  report.regression_error_train = regression_relative_errors(model, load_features(dir, Split::train));
  report.regression_error_test = regression_relative_errors(model, load_features(dir, Split::test));
  for (const char* method : {"estimated", "exact"}) {
    std::ifstream is(dir / (std::string("reconstruction_") + method + ".ndjson"));
    if (!is) throw std::runtime_error(std::string("missing reconstruction_") + method + ".ndjson");
    report.runs.push_back(read_reconstruction_report(is, method));
    report.methods.push_back(report.runs.back().pooled());
  }
  if (auto base = load_baseline(dir)) report.methods.push_back(std::move(*base));
  if (std::ifstream note(dir / "baseline_notice.txt"); note) std::getline(note, report.baseline_notice);
  export_outputs(report, dir);
  return 0;
}

void print_summary(const EvaluationReport& report) {
  std::cout << std::setprecision(4);
  for (const MethodResult& m : report.methods) {
    std::cout << std::left << std::setw(10) << m.method << " rmse " << m.metrics.rmse << "  nrmse1 "
              << (m.metrics.nrmse1 ? std::to_string(*m.metrics.nrmse1) : "undefined") << "  nrmse2 "
              << (m.metrics.nrmse2 ? std::to_string(*m.metrics.nrmse2) : "undefined") << '\n';
  }
  if (!report.baseline_notice.empty()) std::cout << report.baseline_notice << '\n';
}

int cmd_pipeline(const CommonFlags& f) {
  const ExperimentConfig cfg = load_config(f, false);
  const fs::path dir = out_dir(f);
  write_config(dir, cfg);
  const EvaluationReport report = run_pipeline(cfg, &std::cerr);
  export_outputs(report, dir);
  print_summary(report);
  return 0;
}

int cmd_config(const CommonFlags& f, bool dump_defaults) {
  ExperimentConfig cfg = dump_defaults ? ExperimentConfig::preset_for(f.preset.empty() ? "desk" : f.preset,
                                                                      parse_mark_model(f.mark.empty() ? "shot_noise" : f.mark))
                                       : load_config(f, false);
  if (dump_defaults && f.seed) cfg.seed = *f.seed;
  std::cout << config_to_json(cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct geometric marks of point patterns from scattering moments"};
  app.require_subcommand(1);
  CommonFlags flags;
  bool dump_defaults = false;

  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const CommonFlags&);
  };
  const Entry stages[] = {
      {"generate", "Sample train, test and validation patterns", cmd_generate},
      {"scatter", "Compute scattering features for every split", cmd_scatter},
      {"train", "Cross-validate and fit the ridge regression", cmd_train},
      {"reconstruct", "Reconstruct test marks from estimated and exact moments", cmd_reconstruct},
      {"baseline", "Fit and score the local distance-matrix baseline", cmd_baseline},
      {"evaluate", "Compute metrics and write CSV outputs", cmd_evaluate},
      {"pipeline", "Run every stage in one process", cmd_pipeline},
  };
  std::vector<std::pair<CLI::App*, int (*)(const CommonFlags&)>> commands;
  for (const Entry& e : stages) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, flags);
    commands.emplace_back(cmd, e.run);
  }
  CLI::App* config_cmd = app.add_subcommand("config", "Print the resolved configuration");
  add_common(config_cmd, flags);
  config_cmd->add_flag("--dump-defaults", dump_defaults, "Print preset defaults and ignore --config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (config_cmd->parsed()) return cmd_config(flags, dump_defaults);
    for (const auto& [cmd, run] : commands) {
      if (cmd->parsed()) return run(flags);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
