#pragma once

// Test-only fixtures and brute-force oracles. Nothing here calls into the
// library's statistics code; the oracles are straight transcriptions of the
// textbook formulas.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "abcmi/data_io.hpp"
#include "abcmi/random.hpp"

namespace abcmi::testing {

// ---------------------------------------------------------------------------
// Oracles

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> naive_abc(const std::vector<std::vector<double>>& r) {
  const std::size_t n = r.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s += std::fabs(r[i][j]);
    out[i] = s / static_cast<double>(n - 1);
  }
  return out;
}

/// Double-sum form: sum p(x,y) log2(p(x,y) / (p(x) p(y))).
inline double naive_mi_from_counts(const std::vector<std::vector<double>>& joint) {
  double total = 0;
  for (const auto& row : joint)
    for (double c : row) total += c;
  std::vector<double> px(joint.size(), 0), py(joint.front().size(), 0);
  for (std::size_t i = 0; i < joint.size(); ++i)
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      px[i] += joint[i][j] / total;
      py[j] += joint[i][j] / total;
    }
  double mi = 0;
  for (std::size_t i = 0; i < joint.size(); ++i)
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      const double pxy = joint[i][j] / total;
      if (pxy > 0) mi += pxy * std::log2(pxy / (px[i] * py[j]));
    }
  return mi;
}

/// Bins `values` into `bins` equal-width intervals over [min, max] and
/// evaluates the double-sum MI against the labels.
inline double naive_mi(const std::vector<double>& values, const std::vector<int>& labels,
                       std::size_t bins) {
  const double lo = *std::min_element(values.begin(), values.end());
  const double hi = *std::max_element(values.begin(), values.end());
  std::map<int, std::size_t> cls;
  for (int l : labels) cls[l] = 0;
  std::size_t k = 0;
  for (auto& [_, v] : cls) v = k++;
  std::vector<std::vector<double>> joint(bins, std::vector<double>(cls.size(), 0));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t b = 0;
    if (hi > lo) {
      const double pos = (values[i] - lo) / (hi - lo) * static_cast<double>(bins);
      b = pos <= 0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    joint[b][cls[labels[i]]] += 1;
  }
  return naive_mi_from_counts(joint);
}

/// Minimum within-cluster sum of squares over every partition of `pts` into
/// exactly k non-empty groups (k^m labelings).
inline double exhaustive_kmeans_optimum(const std::vector<std::array<double, 2>>& pts,
                                        std::size_t k) {
  const std::size_t m = pts.size();
  std::vector<std::size_t> lab(m, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<double> sx(k, 0), sy(k, 0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      sx[lab[i]] += pts[i][0];
      sy[lab[i]] += pts[i][1];
      ++cnt[lab[i]];
    }
    if (std::all_of(cnt.begin(), cnt.end(), [](std::size_t c) { return c > 0; })) {
      double sse = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double cx = sx[lab[i]] / cnt[lab[i]], cy = sy[lab[i]] / cnt[lab[i]];
        sse += (pts[i][0] - cx) * (pts[i][0] - cx) + (pts[i][1] - cy) * (pts[i][1] - cy);
      }
      best = std::min(best, sse);
    }
    std::size_t pos = 0;
    while (pos < m && ++lab[pos] == k) lab[pos++] = 0;
    if (pos == m) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Random fixtures

/// Small random pixel matrix with labels in {1, 2, 3}; columns are
/// standardized by the library.
inline PixelMatrix random_pixel_matrix(Rng& rng, std::size_t bands, std::size_t pixels,
                                       std::vector<std::vector<double>>* raw = nullptr) {
  std::vector<std::vector<double>> cols(bands, std::vector<double>(pixels));
  for (auto& col : cols)
    for (auto& v : col) v = uniform_unit(rng) * 10.0 - 5.0;
  // Mix in a shared component so correlations span a useful range.
  for (std::size_t p = 0; p < pixels; ++p) {
    const double shared = uniform_unit(rng) * 4.0 - 2.0;
    for (std::size_t b = 0; b < bands; ++b)
      cols[b][p] += shared * static_cast<double>(b % 3);
  }
  std::vector<ClassId> labels(pixels);
  for (auto& l : labels) l = 1 + static_cast<int>(uniform_below(rng, 3));
  if (raw) *raw = cols;
  return PixelMatrix::standardize(std::move(cols), std::move(labels));
}

// ---------------------------------------------------------------------------
// Planted-structure scene
//
// 1024 labelled pixels enumerate every value of 10 binary factors:
// bits 0-4 are group latents, bits 5-8 corrupt the labels, bit 9 drives the
// per-band noise. Every band of group g is
//     (-1)^latent_g + sigma * (-1)^parity(pixel & mask)
// with a distinct mask that always contains bit 9, so bands from different
// groups are exactly uncorrelated and within-group |r| >= 0.96.
// Labels combine latents 0-3 with label noise of probability 0, 1/16, 1/8
// and 1/4, giving the groups MI levels 1, 0.663, 0.456, 0.189 and 0 bits.
// A trailing image row is background (label 0) filled with junk values.

struct PlantedScene {
  HsiCube cube;
  GroundTruth gt;
  std::vector<std::size_t> group_of_band;
};

inline int bit_of(std::size_t i, int k) { return static_cast<int>((i >> k) & 1u); }

inline int planted_label(std::size_t i, std::size_t n_groups,
                         const std::vector<int>& latent_bit) {
  const int x0 = bit_of(i, 5), x1 = bit_of(i, 6), x2 = bit_of(i, 7), x3 = bit_of(i, 8);
  const int noise[4] = {0, x0 & x1 & x2 & x3, x0 & x1 & x2, x2 & x3};
  int label = 1;
  for (std::size_t g = 0; g < std::min<std::size_t>(n_groups, 4); ++g)
    label += (bit_of(i, latent_bit[g]) ^ noise[g]) << g;
  return label;
}

inline PlantedScene planted_scene(std::uint64_t seed, std::size_t n_groups = 5,
                                  std::size_t per_group = 6) {
  Rng rng(seed);
  constexpr std::size_t kSide = 32;
  constexpr std::size_t kPixels = kSide * kSide;
  const std::size_t n_bands = n_groups * per_group;

  // Latent bit per group: a permutation of 0..4 restricted to the groups.
  std::vector<int> latent_bit{0, 1, 2, 3, 4};
  shuffle(latent_bit, rng);
  // Label noise schedule follows the group index, so keep the latent bits
  // attached to the group (group g's information level is fixed by g).
  std::vector<std::size_t> band_order(n_bands);
  std::iota(band_order.begin(), band_order.end(), std::size_t{0});
  shuffle(band_order, rng);

  std::vector<std::size_t> masks;
  while (masks.size() < n_bands) {
    const std::size_t m = (std::size_t{1} << 9) | static_cast<std::size_t>(uniform_below(rng, 512));
    if (std::find(masks.begin(), masks.end(), m) == masks.end()) masks.push_back(m);
  }

  const std::size_t height = kSide + 1;
  std::vector<float> bsq(height * kSide * n_bands, 0.0f);
  std::vector<std::size_t> group_of_band(n_bands);
  for (std::size_t logical = 0; logical < n_bands; ++logical) {
    const std::size_t band = band_order[logical];
    const std::size_t g = logical / per_group;
    group_of_band[band] = g;
    const double sigma = 0.1 + 0.1 * uniform_unit(rng);
    float* plane = bsq.data() + band * height * kSide;
    for (std::size_t i = 0; i < kPixels; ++i) {
      const double a = bit_of(i, latent_bit[g]) ? -1.0 : 1.0;
      const double b = (std::popcount(i & masks[logical]) & 1) ? -1.0 : 1.0;
      plane[i] = static_cast<float>(a + sigma * b);
    }
    for (std::size_t c = 0; c < kSide; ++c)
      plane[kPixels + c] = static_cast<float>(50.0 * uniform_unit(rng) - 25.0);
  }

  std::vector<std::uint16_t> labels(height * kSide, 0);
  for (std::size_t i = 0; i < kPixels; ++i)
    labels[i] = static_cast<std::uint16_t>(planted_label(i, n_groups, latent_bit));

  return {HsiCube::from_bsq(height, kSide, n_bands, bsq),
          GroundTruth(height, kSide, std::move(labels)), std::move(group_of_band)};
}

}  // namespace abcmi::testing
