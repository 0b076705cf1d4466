// vulnpred: config-driven malware-detection training pipeline.
//
//   vulnpred run --config cfg.json
//   vulnpred run --preset paper-msft --input train.csv --out-dir out
//   vulnpred train ... ; vulnpred evaluate ...   (score later from saved artifacts)

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vulnpred/error.hpp"
#include "vulnpred/pipeline.hpp"

namespace {

using vulnpred::ErrorKind;
using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string preset;
  std::string input;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
};

ojson load_document(const Options& o) {
  ojson doc;
  if (!o.preset.empty()) {
    if (o.preset != "paper-msft") vulnpred::fail(ErrorKind::kConfig, "unknown preset '" + o.preset + "'");
    doc = vulnpred::paper_msft_preset();
  } else if (!o.config.empty()) {
    std::ifstream f(o.config, std::ios::binary);
    if (!f) vulnpred::fail(ErrorKind::kConfig, "cannot read config " + o.config);
    std::stringstream buf;
    buf << f.rdbuf();
    try {
      doc = ojson::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      vulnpred::fail(ErrorKind::kConfig, o.config + ": " + e.what());
    }
  } else {
    vulnpred::fail(ErrorKind::kConfig, "one of --config or --preset is required");
  }
  if (!doc.is_object()) return doc;
  if (!o.input.empty()) {
    doc.erase("synthetic");
    doc["input"] = o.input;
  }
  if (!o.out_dir.empty()) doc["output_dir"] = o.out_dir;
  if (o.seed) doc["seed"] = *o.seed;
  return doc;
}

void print_paths(const std::string& root, const std::vector<std::string>& paths) {
  for (const auto& p : paths) std::cout << root << "/" << p << "\n";
}

void print_summary(const vulnpred::RunReport& rep, const std::string& root) {
  std::printf("%-16s %-15s %9s %9s %9s %9s\n", "model", "family", "accuracy", "auc", "type_i", "type_ii");
  for (const auto& m : rep.models) {
    const double t1 = m.error_rates ? m.error_rates->type_i : 0.0;
    const double t2 = m.error_rates ? m.error_rates->type_ii : 0.0;
    std::printf("%-16s %-15s %9.4f %9.4f %9.4f %9.4f\n", m.name.c_str(), m.family.c_str(), m.report.accuracy,
                m.roc.auc, t1, t2);
  }
  for (const auto& [stage, secs] : rep.timings) std::fprintf(stderr, "time %-10s %8.2fs\n", stage.c_str(), secs);
  std::cout << "artifacts: " << root << "\n";
}

int dispatch(const std::string& command, const Options& o) {
  const ojson doc = load_document(o);
  const auto v = vulnpred::validate_config(doc);
  if (!v.config) {
    std::cerr << v.errors.size() << " config error(s):\n" << vulnpred::format_issues(v.errors);
    return vulnpred::exit_code_for(ErrorKind::kConfig);
  }
  const auto& cfg = *v.config;
  if (o.print_config) {
    std::cout << vulnpred::to_json(cfg).dump(2) << "\n";
    return 0;
  }
  if (command == "profile") {
    print_paths(cfg.output_dir, vulnpred::run_profile(cfg));
  } else if (command == "cleanse") {
    print_paths(cfg.output_dir, vulnpred::run_cleanse(cfg));
  } else if (command == "encode") {
    print_paths(cfg.output_dir, vulnpred::run_encode(cfg));
  } else if (command == "train") {
    print_paths(cfg.output_dir, vulnpred::run_train(cfg));
  } else if (command == "evaluate") {
    print_summary(vulnpred::run_evaluate(cfg), cfg.output_dir);
  } else {
    print_summary(vulnpred::run(cfg), cfg.output_dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulnpred: malware-detection pipeline over tabular machine telemetry"};
  app.require_subcommand(1, 1);

  Options o;
  std::uint64_t seed = 0;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"profile", "missingness, cardinality and skew per column"},
      {"cleanse", "drop sparse/skewed features and incomplete rows"},
      {"encode", "fit encoders on the train partition and export encoded CSVs"},
      {"train", "fit the model roster and save model artifacts"},
      {"evaluate", "score the test partition with saved artifacts"},
      {"run", "all stages end to end"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    auto* cfg = sub->add_option("--config", o.config, "JSON config file");
    auto* preset = sub->add_option("--preset", o.preset, "built-in config")->check(CLI::IsMember({"paper-msft"}));
    cfg->excludes(preset);
    sub->add_option("--input", o.input, "input CSV (replaces the config's data source)");
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_option("--seed", seed, "master seed");
    sub->add_flag("--print-config", o.print_config, "print the normalized config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : vulnpred::exit_code_for(ErrorKind::kConfig);
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) o.seed = seed;
  try {
    return dispatch(sub->get_name(), o);
  } catch (const vulnpred::Error& e) {
    std::cerr << "error (" << vulnpred::to_string(e.kind()) << "): " << e.what() << "\n";
    return vulnpred::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return vulnpred::exit_code_for(ErrorKind::kTraining);
  }
}
