#pragma once

// Pairwise band statistics: Pearson correlation, average band correlation,
// pairwise variance inflation factor, histogram entropy and band/label
// mutual information.
//
// The pairwise VIF uses 1 / (1 - r^2): for a simple regression of one band on
// another, the coefficient of determination equals the squared Pearson
// coefficient, so no regression is fitted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abcmi/data_io.hpp"
#include "abcmi/error.hpp"
#include "abcmi/parallel.hpp"

namespace abcmi {

/// Symmetric n x n matrix of correlation coefficients (row-major).
class CorrelationMatrix {
 public:
  CorrelationMatrix(std::size_t n, std::vector<double> values)
      : n_(n), values_(std::move(values)) {
    if (n_ < 2) fail_validation("correlation matrix: at least 2 bands required");
    if (values_.size() != n_ * n_)
      fail_validation("correlation matrix: expected " +
                      std::to_string(n_ * n_) + " entries, got " +
                      std::to_string(values_.size()));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = (*this)(i, j);
        if (!(v >= -1.0 && v <= 1.0))
          fail_validation("correlation matrix: entry (" + std::to_string(i) +
                          ", " + std::to_string(j) + ") outside [-1, 1]");
        if (v != (*this)(j, i))
          fail_validation("correlation matrix: not symmetric at (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
      }
  }

  std::size_t n_bands() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * n_ + j];
  }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

namespace detail {

// Fixed-order dot product with four interleaved accumulators.
inline double dot(const double* a, const double* b, std::size_t len) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < len; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

/// Pearson correlation of every band pair over the retained pixels. Pairs
/// that involve a constant band are 0; the diagonal is 1 except for constant
/// bands. Each unordered pair is computed once with a fixed summation order,
/// so the output does not depend on `threads`.
inline CorrelationMatrix correlation_matrix(const PixelMatrix& pm,
                                            unsigned threads = 1) {
  const std::size_t n = pm.n_bands();
  const std::size_t rows = pm.rows();
  if (rows < 2) fail_validation("correlation: at least 2 pixels required");

  // Centre each column again; standardized input is already close to zero
  // mean but the coefficient is computed in full Pearson form.
  std::vector<double> centred(rows * n);
  std::vector<double> norm(n, 0.0);
  std::vector<char> flat(n, 0);  // not vector<bool>: written concurrently
  parallel_for(n, threads, [&](std::size_t b) {
    const auto col = pm.column(b);
    double sum = 0.0;
    for (double v : col) sum += v;
    const double mean = sum / static_cast<double>(rows);
    double* out = centred.data() + b * rows;
    for (std::size_t r = 0; r < rows; ++r) out[r] = col[r] - mean;
    const double ss = detail::dot(out, out, rows);
    flat[b] = pm.is_constant(b) || ss == 0.0;
    norm[b] = std::sqrt(ss);
  });

  std::vector<double> values(n * n, 0.0);
  const std::size_t pairs = n * (n - 1) / 2;
  parallel_for(pairs, threads, [&](std::size_t p) {
    // Unrank p into (i, j), i < j, row by row.
    std::size_t i = 0, remaining = p;
    while (remaining >= n - 1 - i) {
      remaining -= n - 1 - i;
      ++i;
    }
    const std::size_t j = i + 1 + remaining;
    double r = 0.0;
    if (!flat[i] && !flat[j]) {
      r = detail::dot(centred.data() + i * rows, centred.data() + j * rows, rows) /
          (norm[i] * norm[j]);
      r = std::clamp(r, -1.0, 1.0);
    }
    values[i * n + j] = r;
    values[j * n + i] = r;
  });
  for (std::size_t b = 0; b < n; ++b) values[b * n + b] = flat[b] ? 0.0 : 1.0;
  return CorrelationMatrix(n, std::move(values));
}

/// Average band correlation: mean absolute off-diagonal coefficient per row.
inline std::vector<double> abc_scores(const CorrelationMatrix& cm) {
  const std::size_t n = cm.n_bands();
  std::vector<double> abc(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum += std::abs(cm(i, j));
    abc[i] = sum / static_cast<double>(n - 1);
  }
  return abc;
}

inline constexpr double kUnitCorrelationTolerance = 1e-12;

/// 1 / (1 - r^2); +infinity for perfectly collinear pairs.
inline double pairwise_vif(double r) {
  const double a = std::abs(r);
  if (!(a <= 1.0 + kUnitCorrelationTolerance))
    throw Error(ErrorKind::validation,
                "pairwise VIF: |r| must not exceed 1, got " +
                    detail::format_double(r));
  if (a >= 1.0 - kUnitCorrelationTolerance)
    return std::numeric_limits<double>::infinity();
  return 1.0 / (1.0 - r * r);
}

/// Shannon entropy in bits of the distribution given by `counts`.
inline double entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) fail_validation("entropy: histogram is empty");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

/// Contingency table of (discretized band value, class) counts.
struct JointHistogram {
  std::size_t rows = 0;  // band bins
  std::size_t cols = 0;  // classes
  std::vector<std::uint64_t> counts;  // row-major

  std::uint64_t& at(std::size_t r, std::size_t c) { return counts[r * cols + c]; }
  std::uint64_t at(std::size_t r, std::size_t c) const { return counts[r * cols + c]; }

  JointHistogram transposed() const {
    JointHistogram t{cols, rows, std::vector<std::uint64_t>(counts.size())};
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) t.at(c, r) = at(r, c);
    return t;
  }
};

/// I(X; Y) = H(X) + H(Y) - H(X, Y) from a joint count table, clamped at 0.
inline double mutual_information(const JointHistogram& joint) {
  if (joint.counts.size() != joint.rows * joint.cols || joint.counts.empty())
    fail_validation("mutual information: malformed joint histogram");
  std::vector<std::uint64_t> row_marg(joint.rows, 0), col_marg(joint.cols, 0);
  for (std::size_t r = 0; r < joint.rows; ++r)
    for (std::size_t c = 0; c < joint.cols; ++c) {
      row_marg[r] += joint.at(r, c);
      col_marg[c] += joint.at(r, c);
    }
  const double mi = entropy(row_marg) + entropy(col_marg) - entropy(joint.counts);
  return std::max(0.0, mi);
}

/// Equal-width bin of `v` over [lo, hi] with `bins` intervals; the maximum
/// falls into the last bin. A degenerate range maps everything to bin 0.
inline std::size_t equal_width_bin(double v, double lo, double hi,
                                   std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(t), bins - 1);
}

/// Joint histogram of a band discretized into `bins` equal-width intervals
/// over its observed range and the raw class ids (columns in ascending id
/// order).
inline JointHistogram joint_histogram(std::span<const double> values,
                                      std::span<const ClassId> labels,
                                      std::size_t bins) {
  if (values.size() != labels.size())
    fail_validation("joint histogram: " + std::to_string(values.size()) +
                    " values but " + std::to_string(labels.size()) + " labels");
  if (values.size() < 2)
    fail_validation("joint histogram: at least 2 samples required");
  if (bins < 2) fail_validation("joint histogram: at least 2 bins required");

  std::map<ClassId, std::size_t> class_index;
  for (auto l : labels) class_index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [_, idx] : class_index) idx = next++;

  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  JointHistogram joint{bins, class_index.size(),
                       std::vector<std::uint64_t>(bins * class_index.size(), 0)};
  for (std::size_t i = 0; i < values.size(); ++i)
    ++joint.at(equal_width_bin(values[i], *lo, *hi, bins),
               class_index.at(labels[i]));
  return joint;
}

/// Mutual information in bits between one band and the class labels.
inline double mutual_information(std::span<const double> values,
                                 std::span<const ClassId> labels,
                                 std::size_t bins) {
  return mutual_information(joint_histogram(values, labels, bins));
}

inline constexpr std::size_t kDefaultMiBins = 64;

/// MI for the listed bands (0-based); entries for unlisted bands stay empty.
inline std::vector<std::optional<double>> mi_scores(
    const PixelMatrix& pm, std::span<const std::size_t> bands,
    std::size_t bins = kDefaultMiBins, unsigned threads = 1) {
  std::vector<std::optional<double>> mi(pm.n_bands());
  std::vector<double> computed(bands.size(), 0.0);
  for (auto b : bands)
    if (b >= pm.n_bands())
      fail_validation("band " + std::to_string(b + 1) + " out of range");
  parallel_for(bands.size(), threads, [&](std::size_t k) {
    computed[k] = pm.is_constant(bands[k])
                      ? 0.0
                      : mutual_information(pm.column(bands[k]), pm.labels(), bins);
  });
  for (std::size_t k = 0; k < bands.size(); ++k) mi[bands[k]] = computed[k];
  return mi;
}

}  // namespace abcmi
