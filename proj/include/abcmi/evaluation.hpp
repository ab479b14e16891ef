#pragma once

// Classification protocol: stratified train/test splits, a pluggable
// classifier (k-NN by default), overall accuracy, Cohen's kappa, uniform
// band selection and the n' x y sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abcmi/data_io.hpp"
#include "abcmi/error.hpp"
#include "abcmi/parallel.hpp"
#include "abcmi/random.hpp"
#include "abcmi/selection.hpp"

namespace abcmi {

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;   // ascending row indices
};

/// Number of training samples for a class of `size` members: ceil of
/// fraction * size, kept in [1, size - 1]. A 1e-9 slack absorbs products
/// such as 0.1 * 30 that land just above an integer.
inline std::size_t train_count(double fraction, std::size_t size) {
  auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(size) - 1e-9));
  return std::clamp<std::size_t>(n, 1, size - 1);
}

/// Per class (ascending id), a uniform draw without replacement of
/// train_count() members goes to train, the rest to test.
inline Split stratified_split(std::span<const ClassId> labels, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    fail_validation("train fraction must lie in (0, 1)");
  std::map<ClassId, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  if (members.empty()) fail_validation("split: no samples");

  Rng rng(seed);
  Split split;
  for (auto& [cls, idx] : members) {
    if (idx.size() < 2)
      fail_validation("split: class " + std::to_string(cls) + " has " +
                      std::to_string(idx.size()) +
                      " member(s); at least 2 are required");
    const std::size_t n_train = train_count(fraction, idx.size());
    const auto picks = sample_without_replacement(rng, idx.size(), n_train);
    std::vector<char> in_train(idx.size(), 0);
    for (auto p : picks) in_train[p] = 1;
    for (std::size_t k = 0; k < idx.size(); ++k)
      (in_train[k] ? split.train : split.test).push_back(idx[k]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ---------------------------------------------------------------------------
// Classifiers

/// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * dims, dims};
  }
};

/// Gathers `bands` of `pm` for the listed rows.
inline FeatureMatrix gather_features(const PixelMatrix& pm,
                                     std::span<const std::size_t> rows,
                                     std::span<const std::size_t> bands) {
  FeatureMatrix fm{rows.size(), bands.size(),
                   std::vector<double>(rows.size() * bands.size())};
  for (std::size_t d = 0; d < bands.size(); ++d) {
    const auto col = pm.column(bands[d]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      fm.values[r * bands.size() + d] = col[rows[r]];
  }
  return fm;
}

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const FeatureMatrix& features, std::span<const ClassId> labels) = 0;
  virtual std::vector<ClassId> predict(const FeatureMatrix& features) const = 0;
  virtual std::string name() const = 0;
};

/// k nearest neighbours under Euclidean distance. Distance ties go to the
/// lower training index; vote ties go to the smaller class id.
class KnnClassifier final : public Classifier {
 public:
  explicit KnnClassifier(std::size_t k = 3, unsigned threads = 1)
      : k_(k), threads_(threads) {
    if (k_ == 0) fail_validation("k-NN: k must be at least 1");
  }

  void fit(const FeatureMatrix& features, std::span<const ClassId> labels) override {
    if (features.rows == 0) fail_validation("k-NN: empty training set");
    if (features.rows != labels.size())
      fail_validation("k-NN: feature rows and labels differ in length");
    train_ = features;
    labels_.assign(labels.begin(), labels.end());
  }

  std::vector<ClassId> predict(const FeatureMatrix& features) const override {
    if (train_.rows == 0) fail_validation("k-NN: predict called before fit");
    if (features.dims != train_.dims)
      fail_validation("k-NN: test features have " + std::to_string(features.dims) +
                      " dimensions, training features have " +
                      std::to_string(train_.dims));
    const std::size_t k = std::min(k_, train_.rows);
    std::vector<ClassId> out(features.rows);
    parallel_for(features.rows, threads_, [&](std::size_t t) {
      // (distance, train index) of the current k best, kept sorted.
      std::vector<std::pair<double, std::size_t>> nearest;
      nearest.reserve(k + 1);
      const auto x = features.row(t);
      for (std::size_t i = 0; i < train_.rows; ++i) {
        const auto y = train_.row(i);
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - y[j]) * (x[j] - y[j]);
        if (nearest.size() == k && !(d < nearest.back().first)) continue;
        const auto pos = std::upper_bound(
            nearest.begin(), nearest.end(), std::pair{d, i});
        nearest.insert(pos, {d, i});
        if (nearest.size() > k) nearest.pop_back();
      }
      std::map<ClassId, std::size_t> votes;
      for (const auto& [_, i] : nearest) ++votes[labels_[i]];
      ClassId best = votes.begin()->first;
      std::size_t best_votes = 0;
      for (const auto& [cls, v] : votes)
        if (v > best_votes) {
          best = cls;
          best_votes = v;
        }
      out[t] = best;
    });
    return out;
  }

  std::string name() const override { return "knn:" + std::to_string(k_); }

 private:
  std::size_t k_;
  unsigned threads_;
  FeatureMatrix train_;
  std::vector<ClassId> labels_;
};

/// "knn" (k = 3) or "knn:<k>".
inline std::unique_ptr<Classifier> make_classifier(std::string_view id,
                                                   unsigned threads = 1) {
  if (id == "knn") return std::make_unique<KnnClassifier>(3, threads);
  if (id.substr(0, 4) == "knn:") {
    const auto k = detail::parse_size(id.substr(4), "classifier k");
    return std::make_unique<KnnClassifier>(k, threads);
  }
  fail_validation("unknown classifier '" + std::string(id) + "' (expected knn or knn:<k>)");
}

inline std::vector<ClassId> classify(const FeatureMatrix& train,
                                     std::span<const ClassId> train_labels,
                                     const FeatureMatrix& test,
                                     std::string_view classifier_id = "knn",
                                     unsigned threads = 1) {
  auto clf = make_classifier(classifier_id, threads);
  clf->fit(train, train_labels);
  return clf->predict(test);
}

// ---------------------------------------------------------------------------
// Scores

/// counts[actual][predicted] over the union of observed class ids.
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::span<const ClassId> predicted, std::span<const ClassId> actual) {
    if (predicted.size() != actual.size())
      fail_validation("confusion matrix: " + std::to_string(predicted.size()) +
                      " predictions but " + std::to_string(actual.size()) +
                      " reference labels");
    if (predicted.empty()) fail_validation("confusion matrix: no samples");
    for (auto c : predicted) classes_.push_back(c);
    for (auto c : actual) classes_.push_back(c);
    std::sort(classes_.begin(), classes_.end());
    classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
    counts_.assign(classes_.size() * classes_.size(), 0);
    for (std::size_t i = 0; i < actual.size(); ++i)
      ++counts_[index(actual[i]) * classes_.size() + index(predicted[i])];
  }

  ConfusionMatrix(std::vector<ClassId> classes, std::vector<std::uint64_t> counts)
      : classes_(std::move(classes)), counts_(std::move(counts)) {
    if (counts_.size() != classes_.size() * classes_.size() || classes_.empty())
      fail_validation("confusion matrix: counts do not match class count");
    if (total() == 0) fail_validation("confusion matrix: no samples");
  }

  const std::vector<ClassId>& classes() const noexcept { return classes_; }
  std::uint64_t at(std::size_t actual, std::size_t predicted) const {
    return counts_[actual * classes_.size() + predicted];
  }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }

  double overall_accuracy() const {
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < classes_.size(); ++c) diag += at(c, c);
    return static_cast<double>(diag) / static_cast<double>(total());
  }

  /// (p_o - p_e) / (1 - p_e). When p_e = 1 (one class on both sides) the
  /// score is 1 for perfect agreement and undefined otherwise.
  double kappa() const {
    const std::size_t m = classes_.size();
    const double n = static_cast<double>(total());
    double po = 0.0, pe = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      po += static_cast<double>(at(c, c));
      double row = 0.0, col = 0.0;
      for (std::size_t o = 0; o < m; ++o) {
        row += static_cast<double>(at(c, o));
        col += static_cast<double>(at(o, c));
      }
      pe += row * col;
    }
    po /= n;
    pe /= n * n;
    if (pe == 1.0) {
      if (po == 1.0) return 1.0;
      fail_validation("kappa: undefined, chance agreement is 1");
    }
    return (po - pe) / (1.0 - pe);
  }

 private:
  std::size_t index(ClassId c) const {
    return static_cast<std::size_t>(
        std::lower_bound(classes_.begin(), classes_.end(), c) - classes_.begin());
  }

  std::vector<ClassId> classes_;
  std::vector<std::uint64_t> counts_;
};

inline double overall_accuracy(std::span<const ClassId> predicted,
                               std::span<const ClassId> actual) {
  return ConfusionMatrix(predicted, actual).overall_accuracy();
}

inline double cohens_kappa(std::span<const ClassId> predicted,
                           std::span<const ClassId> actual) {
  return ConfusionMatrix(predicted, actual).kappa();
}

// ---------------------------------------------------------------------------
// Baselines

/// n' band indices (0-based) spread evenly over [0, n-1], endpoints
/// included.
inline std::vector<std::size_t> ubs_baseline(std::size_t n_bands, std::size_t n_prime) {
  if (n_prime < 1 || n_prime > n_bands)
    fail_validation("UBS: need 1 <= n' <= n, got n' = " + std::to_string(n_prime) +
                    ", n = " + std::to_string(n_bands));
  std::vector<std::size_t> out;
  if (n_prime == 1) return {0};
  for (std::size_t i = 0; i < n_prime; ++i) {
    auto b = static_cast<std::size_t>(std::llround(
        static_cast<double>(i) * static_cast<double>(n_bands - 1) /
        static_cast<double>(n_prime - 1)));
    if (!out.empty() && b <= out.back()) b = out.back() + 1;
    out.push_back(b);
  }
  return out;
}

/// n' distinct bands drawn uniformly (0-based, ascending).
inline std::vector<std::size_t> random_bands(std::size_t n_bands, std::size_t n_prime,
                                             std::uint64_t seed) {
  if (n_prime < 1 || n_prime > n_bands)
    fail_validation("random bands: need 1 <= n' <= n");
  Rng rng(seed);
  auto out = sample_without_replacement(rng, n_bands, n_prime);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Protocol

struct EvalConfig {
  double train_fraction = 0.10;
  std::size_t repeats = 10;
  std::uint64_t seed = 42;
  std::string classifier = "knn";
  unsigned threads = 1;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      fail_validation("train fraction must lie in (0, 1)");
    if (repeats < 1) fail_validation("repeats must be >= 1");
  }
};

struct RunScore {
  double oa = 0.0;
  double kappa = 0.0;
};

struct EvalReport {
  std::vector<std::size_t> band_set;  // 0-based
  std::vector<RunScore> per_run;
  double oa_mean = 0.0, oa_std = 0.0;
  double kappa_mean = 0.0, kappa_std = 0.0;
  std::vector<ConfusionMatrix> confusions;  // one per run

  const ConfusionMatrix& confusion() const { return confusions.back(); }
};

/// Mean and population standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

/// `repeats` independent stratified splits; repeat r uses
/// derive_seed(cfg.seed, r).
inline EvalReport evaluate_bands(const PixelMatrix& pm,
                                 std::span<const std::size_t> bands,
                                 const EvalConfig& cfg) {
  cfg.validate();
  if (bands.empty()) fail_validation("evaluate: empty band set");
  for (auto b : bands)
    if (b >= pm.n_bands())
      fail_validation("evaluate: band " + std::to_string(b + 1) +
                      " out of range (cube has " + std::to_string(pm.n_bands()) +
                      " bands)");
  (void)make_classifier(cfg.classifier);

  EvalReport report;
  report.band_set.assign(bands.begin(), bands.end());
  const auto labels = pm.labels();
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto split = stratified_split(labels, cfg.train_fraction,
                                        derive_seed(cfg.seed, r));
    std::vector<ClassId> train_labels, test_labels;
    for (auto i : split.train) train_labels.push_back(labels[i]);
    for (auto i : split.test) test_labels.push_back(labels[i]);
    const auto predicted =
        classify(gather_features(pm, split.train, bands), train_labels,
                 gather_features(pm, split.test, bands), cfg.classifier, cfg.threads);
    ConfusionMatrix cm(predicted, test_labels);
    report.per_run.push_back({cm.overall_accuracy(), cm.kappa()});
    report.confusions.push_back(std::move(cm));
  }
  std::vector<double> oa, kappa;
  for (const auto& s : report.per_run) {
    oa.push_back(s.oa);
    kappa.push_back(s.kappa);
  }
  std::tie(report.oa_mean, report.oa_std) = mean_std(oa);
  std::tie(report.kappa_mean, report.kappa_std) = mean_std(kappa);
  return report;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepCell {
  std::size_t n_prime = 0;
  std::string method;  // tolerance y as text, or "ubs"
  double tolerance_y = 0.0;
  std::optional<EvalReport> report;  // empty when skipped
  std::vector<std::size_t> selected;
  std::string skip_reason;
};

struct SweepAggregate {
  std::string method;
  std::size_t cells = 0;  // evaluated (non-skipped) cells
  double oa_mean = 0.0, oa_std = 0.0;
  double kappa_mean = 0.0, kappa_std = 0.0;
};

struct SweepTable {
  std::vector<SweepCell> cells;         // ordered by (n', method)
  std::vector<SweepAggregate> aggregates;  // one per method, input order
};

/// Every (n', y) cell runs the selection pipeline and the evaluation
/// protocol. Infeasible cells are kept as explicit skips. Aggregates are the
/// unweighted mean over the evaluated n' cells of each method (with the
/// population spread of the per-cell means).
inline SweepTable sweep(const PixelMatrix& pm, std::span<const std::size_t> n_primes,
                        std::span<const double> tolerances,
                        const SelectionConfig& base, const EvalConfig& eval,
                        bool include_ubs = false) {
  if (n_primes.empty() || tolerances.empty())
    fail_validation("sweep: band-count and tolerance lists must be non-empty");

  std::vector<std::string> methods;
  for (double y : tolerances) methods.push_back(detail::format_double(y));
  if (include_ubs) methods.push_back("ubs");

  SweepTable table;
  for (auto np : n_primes) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      SweepCell cell;
      cell.n_prime = np;
      cell.method = methods[m];
      try {
        if (m < tolerances.size()) {
          cell.tolerance_y = tolerances[m];
          SelectionConfig cfg = base;
          cfg.n_prime = np;
          cfg.tolerance_y = tolerances[m];
          cell.selected = run_pipeline(pm, cfg).selected_bands;
        } else {
          if (np > pm.n_bands())
            fail_infeasible("cannot select " + std::to_string(np) + " bands from a " +
                            std::to_string(pm.n_bands()) + "-band cube");
          cell.selected = ubs_baseline(pm.n_bands(), np);
        }
        cell.report = evaluate_bands(pm, cell.selected, eval);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::infeasible) throw;
        cell.skip_reason = e.what();
      }
      table.cells.push_back(std::move(cell));
    }
  }

  for (const auto& method : methods) {
    SweepAggregate agg;
    agg.method = method;
    std::vector<double> oa, kappa;
    for (const auto& cell : table.cells)
      if (cell.method == method && cell.report) {
        oa.push_back(cell.report->oa_mean);
        kappa.push_back(cell.report->kappa_mean);
      }
    agg.cells = oa.size();
    if (!oa.empty()) {
      std::tie(agg.oa_mean, agg.oa_std) = mean_std(oa);
      std::tie(agg.kappa_mean, agg.kappa_std) = mean_std(kappa);
    }
    table.aggregates.push_back(agg);
  }
  return table;
}

}  // namespace abcmi
