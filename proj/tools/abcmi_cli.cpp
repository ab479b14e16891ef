// abcmi: band selection and evaluation from the command line.
//
//   abcmi stats    --cube C --gt G [--mi-bins 64] [--out stats.csv]
//   abcmi select   --cube C --gt G [--bands-count 5] [--tolerance 0] ... [--out result.json]
//   abcmi evaluate --cube C --gt G (--bands "3;96;107" | --bands-count N ...) [--baseline ubs]
//   abcmi sweep    --cube C --gt G [--bands-count 5:5:50] [--tolerance 0,0.01,0.05]
//
// Exit status: 0 success, 2 invalid input, 3 infeasible request, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "abcmi/abcmi.hpp"

namespace {

using namespace abcmi;

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::vector<std::string> cube;
  std::string gt;
  std::size_t mi_bins = kDefaultMiBins;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  std::string out;
};

struct SelectOptions {
  std::string bands_count = "5";
  std::string tolerance = "0";
  std::size_t restarts = 40;
  std::string variant = "abc-mi-vif";
  bool rescale = false;
};

struct EvalOptions {
  std::string bands;
  double train_fraction = 0.10;
  std::size_t repeats = 10;
  std::string classifier = "knn";
  std::string baseline = "none";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--cube", o.cube,
                  "HSIC cube file, or one comma-separated text matrix per band")
      ->required();
  cmd->add_option("--gt", o.gt, "HSIG ground-truth file or text matrix")->required();
  cmd->add_option("--mi-bins", o.mi_bins, "Equal-width bins for MI estimation")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output file (default: standard output)");
}

void add_selection(CLI::App* cmd, SelectOptions& o, bool sweep) {
  cmd->add_option("--bands-count", o.bands_count,
                  sweep ? "Band counts: start:step:stop or comma list"
                        : "Number of bands to select (n')")
      ->capture_default_str();
  cmd->add_option("--tolerance", o.tolerance,
                  sweep ? "Comma-separated VIF tolerance factors y (percent)"
                        : "VIF tolerance factor y (percent)")
      ->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "k-means restarts")->capture_default_str();
  cmd->add_option("--variant", o.variant,
                  "abc-mi-vif, abc-mi-novif, abc-only or mi-only")
      ->capture_default_str();
  cmd->add_flag("--rescale-axes", o.rescale,
                "Min-max scale the score axes before clustering");
}

void add_evaluation(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("--train-fraction", o.train_fraction, "Per-class training fraction")
      ->capture_default_str();
  cmd->add_option("--repeats", o.repeats, "Independent split/classify runs")
      ->capture_default_str();
  cmd->add_option("--classifier", o.classifier, "knn or knn:<k>")->capture_default_str();
  cmd->add_option("--baseline", o.baseline, "none or ubs")->capture_default_str();
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3) fail_validation("band-count range must be start:step:stop");
    const auto start = detail::parse_size(parts[0], "band-count start");
    const auto step = detail::parse_size(parts[1], "band-count step");
    const auto stop = detail::parse_size(parts[2], "band-count stop");
    if (step == 0 || start == 0 || start > stop)
      fail_validation("band-count range '" + text + "' is empty or has step 0");
    for (auto v = start; v <= stop; v += step) out.push_back(v);
    return out;
  }
  for (auto part : detail::split(text, ','))
    out.push_back(detail::parse_size(part, "band count"));
  return out;
}

std::vector<double> parse_tolerances(const std::string& text) {
  std::vector<double> out;
  for (auto part : detail::split(text, ','))
    out.push_back(detail::parse_double(part, "tolerance"));
  return out;
}

PixelMatrix load_inputs(const CommonOptions& o) {
  std::vector<std::filesystem::path> cube_paths(o.cube.begin(), o.cube.end());
  const auto cube = read_cube(cube_paths);
  const auto gt = read_ground_truth(o.gt);
  auto pm = mask_and_standardize(cube, gt);
  for (const auto& w : pm.warnings()) std::cerr << "warning: " << w << '\n';
  return pm;
}

SelectionConfig selection_config(const CommonOptions& c, const SelectOptions& s) {
  SelectionConfig cfg;
  const auto counts = parse_counts(s.bands_count);
  if (counts.size() != 1) fail_validation("--bands-count takes a single value here");
  cfg.n_prime = counts.front();
  cfg.tolerance_y = detail::parse_double(s.tolerance, "tolerance");
  cfg.mi_bins = c.mi_bins;
  cfg.kmeans_restarts = s.restarts;
  cfg.seed = c.seed;
  cfg.variant = parse_variant(s.variant);
  cfg.rescale_axes = s.rescale;
  cfg.threads = c.threads;
  return cfg;
}

EvalConfig eval_config(const CommonOptions& c, const EvalOptions& e) {
  EvalConfig cfg;
  cfg.train_fraction = e.train_fraction;
  cfg.repeats = e.repeats;
  cfg.seed = c.seed;
  cfg.classifier = e.classifier;
  cfg.threads = c.threads;
  cfg.validate();
  make_classifier(cfg.classifier);
  if (e.baseline != "none" && e.baseline != "ubs")
    fail_validation("unknown baseline '" + e.baseline + "' (expected none or ubs)");
  return cfg;
}

void emit(const CommonOptions& c, const std::string& text) {
  if (c.out.empty() || c.out == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) fail_io("error writing to standard output");
    return;
  }
  detail::write_file(c.out, text);
}

std::string run_stats(const CommonOptions& c) {
  const auto pm = load_inputs(c);
  const auto cm = correlation_matrix(pm, c.threads);
  std::vector<std::size_t> all(pm.n_bands());
  for (std::size_t b = 0; b < all.size(); ++b) all[b] = b;
  return stats_csv(cm, abc_scores(cm), mi_scores(pm, all, c.mi_bins, c.threads));
}

std::string run_select(const CommonOptions& c, const SelectOptions& s) {
  const auto cfg = selection_config(c, s);
  const auto pm = load_inputs(c);
  return to_json(run_pipeline(pm, cfg)).dump(2) + "\n";
}

std::string run_evaluate(const CommonOptions& c, const SelectOptions& s,
                         const EvalOptions& e) {
  const auto ecfg = eval_config(c, e);
  const auto pm = load_inputs(c);
  Json out;
  out["eval_config"] = to_json(ecfg);
  std::vector<std::size_t> bands;
  if (!e.bands.empty()) {
    bands = parse_band_list(e.bands);
  } else {
    const auto result = run_pipeline(pm, selection_config(c, s));
    out["selection"] = to_json(result);
    bands = result.selected_bands;
  }
  out["report"] = to_json(evaluate_bands(pm, bands, ecfg));
  if (e.baseline == "ubs") {
    const auto ubs = ubs_baseline(pm.n_bands(), bands.size());
    Json b;
    b["method"] = "ubs";
    b["report"] = to_json(evaluate_bands(pm, ubs, ecfg));
    out["baseline"] = std::move(b);
  }
  return out.dump(2) + "\n";
}

std::string run_sweep(const CommonOptions& c, const SelectOptions& s,
                      const EvalOptions& e) {
  const auto ecfg = eval_config(c, e);
  SelectOptions single = s;
  single.bands_count = "1";
  single.tolerance = "0";
  auto base = selection_config(c, single);
  const auto counts = parse_counts(s.bands_count);
  const auto tolerances = parse_tolerances(s.tolerance);
  const auto pm = load_inputs(c);
  const auto table = sweep(pm, counts, tolerances, base, ecfg, e.baseline == "ubs");
  for (const auto& cell : table.cells)
    if (!cell.report)
      std::cerr << "skipped n'=" << cell.n_prime << " y=" << cell.method << ": "
                << cell.skip_reason << '\n';
  return sweep_csv(table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral band selection with ABC, MI and pairwise VIF"};
  app.require_subcommand(1);

  CommonOptions common;
  SelectOptions select_opts;
  EvalOptions eval_opts;
  SelectOptions sweep_sel;
  sweep_sel.bands_count = "5:5:50";

  auto* stats = app.add_subcommand("stats", "Per-band ABC, MI and the pairwise VIF matrix (CSV)");
  add_common(stats, common);

  auto* select = app.add_subcommand("select", "Run band selection (JSON result)");
  add_common(select, common);
  add_selection(select, select_opts, false);

  auto* evaluate = app.add_subcommand("evaluate", "Classify with a band set (JSON report)");
  add_common(evaluate, common);
  add_selection(evaluate, select_opts, false);
  add_evaluation(evaluate, eval_opts);
  evaluate->add_option("--bands", eval_opts.bands,
                       "Explicit 1-based band ids, e.g. \"3;96;107\" (skips selection)");

  auto* sweep_cmd = app.add_subcommand("sweep", "n' x y grid of selection + evaluation (CSV)");
  add_common(sweep_cmd, common);
  add_selection(sweep_cmd, sweep_sel, true);
  add_evaluation(sweep_cmd, eval_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    std::string text;
    if (*stats) text = run_stats(common);
    else if (*select) text = run_select(common, select_opts);
    else if (*evaluate) text = run_evaluate(common, select_opts, eval_opts);
    else text = run_sweep(common, sweep_sel, eval_opts);
    emit(common, text);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::validation: return kExitValidation;
      case ErrorKind::infeasible: return kExitInfeasible;
      case ErrorKind::io: return kExitIo;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
