#pragma once

// Band selection: VIF-limited candidate set, (ABC, MI) feature space,
// restarted k-means and centroid-nearest representatives, plus the
// single-score and no-gate ablation variants.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "abcmi/data_io.hpp"
#include "abcmi/error.hpp"
#include "abcmi/kmeans.hpp"
#include "abcmi/stats.hpp"

namespace abcmi {

enum class Variant {
  abc_mi_vif,    // full pipeline
  abc_mi_novif,  // no VIF gate, every band is a candidate
  abc_only,      // no VIF gate, cluster on ABC alone
  mi_only,       // no VIF gate, cluster on MI alone
};

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::abc_mi_vif: return "abc-mi-vif";
    case Variant::abc_mi_novif: return "abc-mi-novif";
    case Variant::abc_only: return "abc-only";
    case Variant::mi_only: return "mi-only";
  }
  return "?";
}

inline Variant parse_variant(std::string_view text) {
  for (auto v : {Variant::abc_mi_vif, Variant::abc_mi_novif, Variant::abc_only,
                 Variant::mi_only})
    if (to_string(v) == text) return v;
  fail_validation("unknown variant '" + std::string(text) +
                  "' (expected abc-mi-vif, abc-mi-novif, abc-only or mi-only)");
}

struct SelectionConfig {
  std::size_t n_prime = 5;
  double tolerance_y = 0.0;  // percent
  std::size_t mi_bins = kDefaultMiBins;
  std::size_t kmeans_restarts = 40;
  std::uint64_t seed = 42;
  Variant variant = Variant::abc_mi_vif;
  bool rescale_axes = false;  // min-max scale each score axis before k-means
  unsigned threads = 1;       // 0 = all hardware threads; never affects output

  void validate() const {
    if (n_prime < 1) fail_validation("number of bands to select must be >= 1");
    if (!(tolerance_y >= 0.0) || !std::isfinite(tolerance_y))
      fail_validation("tolerance y must be a finite value >= 0");
    if (mi_bins < 2) fail_validation("MI bin count must be >= 2");
    if (kmeans_restarts < 1) fail_validation("k-means restarts must be >= 1");
  }
};

struct SelectionResult {
  SelectionConfig config;
  double vif_lim = 1.0;
  std::vector<std::size_t> candidate_bands;    // 0-based, ascending
  std::vector<double> abc;                     // per candidate (empty for mi-only)
  std::vector<double> mi;                      // per candidate (empty for abc-only)
  std::vector<std::size_t> cluster_assignment; // per candidate
  std::vector<std::vector<double>> centroids;  // n' points in the clustered space
  double inertia = 0.0;
  std::vector<std::size_t> selected_bands;     // 0-based, ascending
};

/// Admission limit 1 + y/100 (the minimum pairwise VIF is 1).
inline double vif_limit(double tolerance_y) {
  if (!(tolerance_y >= 0.0))
    fail_validation("tolerance y must be >= 0");
  return 1.0 + tolerance_y / 100.0;
}

/// Bands that take part in at least one pair with VIF <= limit, ascending.
/// May be empty.
inline std::vector<std::size_t> admitted_bands(const CorrelationMatrix& cm,
                                               double limit) {
  const std::size_t n = cm.n_bands();
  std::vector<char> admitted(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (pairwise_vif(cm(i, j)) <= limit) admitted[i] = admitted[j] = 1;
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n; ++b)
    if (admitted[b]) out.push_back(b);
  return out;
}

/// VIF pre-selection; fails when nothing passes the gate.
inline std::vector<std::size_t> vif_preselect(const CorrelationMatrix& cm,
                                              double limit) {
  auto out = admitted_bands(cm, limit);
  if (out.empty())
    fail_infeasible("no candidates: no band pair has VIF <= " +
                    detail::format_double(limit) +
                    "; use a larger tolerance y");
  return out;
}

using ScoreTable = std::vector<std::optional<double>>;  // indexed by band

/// One (ABC, MI) point per candidate, in candidate order, unscaled.
inline std::vector<Point<2>> build_abc_mi_space(
    std::span<const std::size_t> candidates, const ScoreTable& abc,
    const ScoreTable& mi) {
  if (candidates.empty()) fail_validation("ABC-MI space: no candidates");
  std::vector<Point<2>> points;
  points.reserve(candidates.size());
  for (auto b : candidates) {
    if (b >= abc.size() || !abc[b])
      fail_validation("ABC-MI space: band " + std::to_string(b + 1) +
                      " has no ABC score");
    if (b >= mi.size() || !mi[b])
      fail_validation("ABC-MI space: band " + std::to_string(b + 1) +
                      " has no MI score");
    points.push_back({*abc[b], *mi[b]});
  }
  return points;
}

/// Per cluster, the candidate nearest its centroid (ties: lowest band id).
/// Returned ascending.
template <std::size_t Dim>
std::vector<std::size_t> select_representatives(
    std::span<const Point<Dim>> points, std::span<const std::size_t> assignments,
    std::span<const Point<Dim>> centroids, std::span<const std::size_t> candidates) {
  if (points.size() != assignments.size() || points.size() != candidates.size())
    fail_validation("representatives: points, assignments and candidates differ in length");
  const std::size_t k = centroids.size();
  std::vector<std::size_t> best(k, candidates.size());
  std::vector<double> best_d(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t c = assignments[i];
    if (c >= k) fail_validation("representatives: assignment out of range");
    const double d = squared_distance(points[i], centroids[c]);
    if (best[c] == candidates.size() || d < best_d[c] ||
        (d == best_d[c] && candidates[i] < candidates[best[c]])) {
      best[c] = i;
      best_d[c] = d;
    }
  }
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (best[c] == candidates.size())
      fail_validation("representatives: cluster " + std::to_string(c) + " is empty");
    out.push_back(candidates[best[c]]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

template <std::size_t Dim>
void rescale_min_max(std::vector<Point<Dim>>& points) {
  for (std::size_t d = 0; d < Dim; ++d) {
    double lo = points.front()[d], hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    if (hi > lo)
      for (auto& p : points) p[d] = (p[d] - lo) / (hi - lo);
  }
}

template <std::size_t Dim>
void cluster_and_pick(std::vector<Point<Dim>> points,
                      const SelectionConfig& cfg, SelectionResult& out) {
  if (cfg.rescale_axes) rescale_min_max(points);
  KMeansOptions opt;
  opt.k = cfg.n_prime;
  opt.restarts = cfg.kmeans_restarts;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  const auto km = kmeans<Dim>(std::span<const Point<Dim>>(points), opt);
  out.cluster_assignment = km.assignments;
  out.inertia = km.inertia;
  for (const auto& c : km.centroids)
    out.centroids.emplace_back(c.begin(), c.end());
  out.selected_bands = select_representatives<Dim>(
      points, km.assignments, km.centroids, out.candidate_bands);
}

}  // namespace detail

/// Full selection for one configuration. `pm` carries the class labels.
inline SelectionResult run_pipeline(const PixelMatrix& pm,
                                    const SelectionConfig& cfg) {
  cfg.validate();
  const std::size_t n = pm.n_bands();
  if (cfg.n_prime > n)
    fail_infeasible("cannot select " + std::to_string(cfg.n_prime) +
                    " bands from a " + std::to_string(n) + "-band cube");

  SelectionResult out;
  out.config = cfg;
  out.vif_lim = vif_limit(cfg.tolerance_y);

  const bool needs_abc = cfg.variant != Variant::mi_only;
  const bool needs_mi = cfg.variant != Variant::abc_only;

  ScoreTable abc(n);
  if (needs_abc) {
    // ABC always spans the full band set, before any gating.
    const auto cm = correlation_matrix(pm, cfg.threads);
    const auto scores = abc_scores(cm);
    for (std::size_t b = 0; b < n; ++b) abc[b] = scores[b];
    if (cfg.variant == Variant::abc_mi_vif)
      out.candidate_bands = vif_preselect(cm, out.vif_lim);
  }
  if (out.candidate_bands.empty()) {
    out.candidate_bands.resize(n);
    for (std::size_t b = 0; b < n; ++b) out.candidate_bands[b] = b;
  }
  if (cfg.n_prime > out.candidate_bands.size())
    fail_infeasible("n' = " + std::to_string(cfg.n_prime) + " exceeds n'' = " +
                    std::to_string(out.candidate_bands.size()) +
                    " candidate bands after the VIF gate (y = " +
                    detail::format_double(cfg.tolerance_y) +
                    "); use a larger tolerance y");

  ScoreTable mi(n);
  if (needs_mi) mi = mi_scores(pm, out.candidate_bands, cfg.mi_bins, cfg.threads);

  for (auto b : out.candidate_bands) {
    if (needs_abc) out.abc.push_back(*abc[b]);
    if (needs_mi) out.mi.push_back(*mi[b]);
  }

  switch (cfg.variant) {
    case Variant::abc_mi_vif:
    case Variant::abc_mi_novif:
      detail::cluster_and_pick<2>(build_abc_mi_space(out.candidate_bands, abc, mi),
                                  cfg, out);
      break;
    case Variant::abc_only: {
      std::vector<Point<1>> pts;
      for (double v : out.abc) pts.push_back({v});
      detail::cluster_and_pick<1>(std::move(pts), cfg, out);
      break;
    }
    case Variant::mi_only: {
      std::vector<Point<1>> pts;
      for (double v : out.mi) pts.push_back({v});
      detail::cluster_and_pick<1>(std::move(pts), cfg, out);
      break;
    }
  }
  return out;
}

}  // namespace abcmi
