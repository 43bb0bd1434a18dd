#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfaprint/collector.hpp"
#include "dfaprint/evaluation.hpp"
#include "dfaprint/features.hpp"
#include "dfaprint/manifest.hpp"
#include "dfaprint/model_io.hpp"
#include "dfaprint/pipeline.hpp"
#include "dfaprint/synth.hpp"
#include "dfaprint/trace.hpp"

namespace fs = std::filesystem;
using namespace dfaprint;

namespace {

void add_dfa_flags(CLI::App* cmd, DfaConfig& dfa) {
  cmd->add_option("--min-box", dfa.min_box, "Smallest DFA box size")->capture_default_str();
  cmd->add_option("--max-box-fraction", dfa.max_box_fraction, "Largest box as a fraction of the trace length")
      ->capture_default_str();
  cmd->add_option("--boxes-per-decade", dfa.boxes_per_decade, "Log-spaced box sizes per decade")->capture_default_str();
  cmd->add_option("--detrend-order", dfa.detrend_order, "Polynomial order removed in each box")->capture_default_str();
}

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& p) {
  cmd->add_option("--q-grid", p.q_grid, "Candidate Q percentages")->delimiter(',')->capture_default_str();
  cmd->add_option("--bins", p.bins, "Equal-frequency bins for mutual information")->capture_default_str();
  cmd->add_option("--variance-fraction", p.variance_fraction, "Variance kept by PCA")->capture_default_str();
  cmd->add_option("--c-grid", p.c_grid, "Candidate SVM C values")->delimiter(',')->capture_default_str();
  cmd->add_option("--gamma-grid", p.gamma_scales, "Candidate RBF gamma values as multiples of 1/d")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--folds", p.folds, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--seed", p.seed, "Random seed")->capture_default_str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioural fingerprints from resource-usage traces: DFA exponents, cross-metric correlations, "
               "MI/PCA selection and a one-vs-one RBF SVM."};
  app.require_subcommand(1);

  // synth
  struct {
    std::string spec, out_dir;
    std::size_t count = 1, length = 8192;
    std::uint64_t seed = 0;
  } synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic traces from a family spec");
  synth_cmd->add_option("--spec", synth.spec, "Family spec JSON")->required();
  synth_cmd->add_option("--count", synth.count, "Number of traces")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "First seed")->capture_default_str();
  synth_cmd->add_option("--length", synth.length, "Samples per trace (power of two)")->capture_default_str();
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  // collect
  struct {
    std::string rules, schema, root = "/proc", pid = "self", iface = "eth0", out;
    double interval = 0.25;
    std::optional<double> duration;
    std::optional<std::size_t> samples;
  } coll;
  auto* collect_cmd = app.add_subcommand("collect", "Sample a proc-style tree into a trace");
  collect_cmd->add_option("--rules", coll.rules, "Extraction rule JSON (default: built-in Linux rules)");
  collect_cmd->add_option("--schema", coll.schema, "Expected comma-separated metric names");
  collect_cmd->add_option("--interval", coll.interval, "Sampling interval in seconds")->capture_default_str();
  collect_cmd->add_option("--duration", coll.duration, "Collection time in seconds");
  collect_cmd->add_option("--samples", coll.samples, "Number of samples");
  collect_cmd->add_option("--root", coll.root, "Root of the proc tree")->capture_default_str();
  collect_cmd->add_option("--pid", coll.pid, "Process substituted for {pid}")->capture_default_str();
  collect_cmd->add_option("--iface", coll.iface, "Network interface for the built-in rules")->capture_default_str();
  collect_cmd->add_option("--out", coll.out, "Output trace CSV")->required();

  // fingerprint
  std::string fp_trace;
  DfaConfig fp_dfa;
  auto* fp_cmd = app.add_subcommand("fingerprint", "Print the fingerprint of a trace as CSV");
  fp_cmd->add_option("trace", fp_trace, "Trace CSV")->required();
  add_dfa_flags(fp_cmd, fp_dfa);

  // train
  struct {
    std::string manifest, model_out;
    std::size_t q_runs = 1;
    DfaConfig dfa;
    PipelineConfig pipeline;
  } train;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier from a labelled manifest");
  train_cmd->add_option("--manifest", train.manifest, "CSV of path,family[,sample]")->required();
  train_cmd->add_option("--model-out", train.model_out, "Model file to write")->required();
  train_cmd->add_option("--q-runs", train.q_runs, "Consecutive runs per sample when no sample column is given")
      ->capture_default_str();
  add_pipeline_flags(train_cmd, train.pipeline);
  add_dfa_flags(train_cmd, train.dfa);

  // classify
  std::string cls_model;
  std::vector<std::string> cls_traces;
  auto* classify_cmd = app.add_subcommand("classify", "Predict the family of traces");
  classify_cmd->add_option("--model", cls_model, "Model file")->required();
  classify_cmd->add_option("traces", cls_traces, "Trace CSVs")->required();

  // evaluate
  struct {
    std::string manifest, out_dir;
    std::size_t q_runs = 2;
    DfaConfig dfa;
    HoldoutConfig holdout;
  } eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Repeated stratified holdout evaluation");
  eval_cmd->add_option("--manifest", eval.manifest, "CSV of path,family[,sample]")->required();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Directory for report files")->required();
  eval_cmd->add_option("--repetitions", eval.holdout.repetitions, "Random partitions")->capture_default_str();
  eval_cmd->add_option("--train-fraction", eval.holdout.train_fraction, "Training share of each family")
      ->capture_default_str();
  eval_cmd->add_option("--q-runs", eval.q_runs, "Consecutive runs per sample when no sample column is given")
      ->capture_default_str();
  add_pipeline_flags(eval_cmd, eval.holdout.pipeline);
  add_dfa_flags(eval_cmd, eval.dfa);

  // stability
  struct {
    std::string spec, mode = "box", out;
    std::size_t runs = 30, length = 8192, runs_per_length = 5;
    std::vector<std::size_t> lengths = {512, 1024, 2048, 4096, 8192, 16384};
    std::uint64_t seed = 0;
    DfaConfig dfa;
  } stab;
  auto* stab_cmd = app.add_subcommand("stability", "DFA exponent spread across seeded runs");
  stab_cmd->add_option("--spec", stab.spec, "Family spec JSON")->required();
  stab_cmd->add_option("--mode", stab.mode, "box or sweep")
      ->check(CLI::IsMember({"box", "sweep"}))
      ->capture_default_str();
  stab_cmd->add_option("--runs", stab.runs, "Runs in box mode")->capture_default_str();
  stab_cmd->add_option("--length", stab.length, "Trace length in box mode")->capture_default_str();
  stab_cmd->add_option("--lengths", stab.lengths, "Trace lengths in sweep mode")->delimiter(',')->capture_default_str();
  stab_cmd->add_option("--runs-per-length", stab.runs_per_length, "Runs per length in sweep mode")
      ->capture_default_str();
  stab_cmd->add_option("--seed", stab.seed, "First seed")->capture_default_str();
  stab_cmd->add_option("--out", stab.out, "Output CSV (default: standard output)");
  add_dfa_flags(stab_cmd, stab.dfa);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      const FamilySpec spec = load_family_spec(synth.spec);
      ensure_dir(synth.out_dir);
      for (std::size_t i = 0; i < synth.count; ++i) {
        const std::uint64_t seed = synth.seed + i;
        const Trace trace = generate_synthetic_trace(spec, seed, synth.length);
        const fs::path path = fs::path(synth.out_dir) / (spec.name + "_" + std::to_string(seed) + ".csv");
        write_file(path.string(), write_trace(trace));
        std::cout << path.string() << "\n";
      }
    } else if (*collect_cmd) {
      ProcSourceSpec source;
      source.root = coll.root;
      source.pid = coll.pid;
      source.rules = coll.rules.empty() ? default_linux_rules(coll.iface) : parse_rules_json(read_file(coll.rules));
      if (!coll.schema.empty()) {
        std::vector<std::string> names;
        for (auto part : split(coll.schema, ',')) names.emplace_back(part);
        const MetricSchema expected(std::move(names));
        if (!(expected == source.schema())) {
          throw Error("schema mismatch: requested [" + expected.to_string() + "] but rules produce [" +
                      source.schema().to_string() + "]");
        }
      }
      SamplerConfig cfg;
      cfg.interval = coll.interval;
      cfg.duration = coll.duration;
      cfg.max_samples = coll.samples;
      const CollectResult result = collect(source, cfg, coll.out);
      std::cerr << "collected " << result.samples << " samples, max jitter " << format_real(result.max_jitter)
                << " s\n";
      if (result.error) throw Error(*result.error);
    } else if (*fp_cmd) {
      fp_dfa.validate();
      std::cout << write_fingerprint_csv(fingerprint(load_trace(fp_trace), fp_dfa));
    } else if (*train_cmd) {
      const auto entries = load_manifest(train.manifest);
      const ModelFile model =
          train_model(load_labeled_traces(entries), sample_ids(entries, train.q_runs), train.pipeline, train.dfa);
      save_model(model, train.model_out);
      const QCandidate& best = model.pipeline.chosen();
      std::cout << "q," << best.q << "\n"
                << "features," << best.num_features << "\n"
                << "reduced_dim," << best.reduced_dim << "\n"
                << "c," << format_real(best.params.c) << "\n"
                << "gamma," << format_real(best.params.gamma) << "\n"
                << "cv_accuracy," << format_real(best.cv_accuracy) << "\n";
    } else if (*classify_cmd) {
      const ModelFile model = load_model(cls_model);
      const auto& classes = model.pipeline.svm.classes;
      std::cout << "trace,family";
      for (const auto& c : classes) std::cout << ",votes:" << c;
      std::cout << "\n";
      for (const auto& path : cls_traces) {
        const Prediction p = classify_trace(model, load_trace(path));
        std::cout << path << "," << p.label;
        for (int v : p.votes) std::cout << "," << v;
        std::cout << "\n";
      }
    } else if (*eval_cmd) {
      eval.dfa.validate();
      eval.holdout.seed = eval.holdout.pipeline.seed;
      const auto entries = load_manifest(eval.manifest);
      const auto traces = load_labeled_traces(entries);
      const auto ids = sample_ids(entries, eval.q_runs);
      const auto samples = build_samples(traces, ids, eval.dfa);
      const ExperimentReport report = repeated_holdout(samples, eval.holdout);
      ensure_dir(eval.out_dir);
      const fs::path dir(eval.out_dir);
      write_file((dir / "report.json").string(), report_json(report));
      write_file((dir / "repetitions.csv").string(), repetitions_csv(report));
      write_file((dir / "confusion.csv").string(), confusion_csv(report.normalized_confusion, report.classes));
      write_file((dir / "precision_recall.csv").string(), precision_recall_csv(report));
      std::cout << "accuracy_mean," << format_real(report.accuracy_mean) << "\n"
                << "accuracy_std," << format_real(report.accuracy_std) << "\n";
    } else if (*stab_cmd) {
      stab.dfa.validate();
      const FamilySpec spec = load_family_spec(stab.spec);
      if (stab.mode == "box") {
        write_output(stab.out, stability_box_csv(dfa_stability_report(spec, stab.runs, stab.length, stab.dfa, stab.seed)));
      } else {
        write_output(stab.out, length_sweep_csv(dfa_length_sweep(spec, stab.lengths, stab.runs_per_length, stab.dfa, stab.seed)));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "dfaprint: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
