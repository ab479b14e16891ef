#pragma once

// Text serializations used by the command-line tool. Band ids are 1-based
// in every output.

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "abcmi/data_io.hpp"
#include "abcmi/evaluation.hpp"
#include "abcmi/selection.hpp"
#include "abcmi/stats.hpp"

namespace abcmi {

using Json = nlohmann::ordered_json;

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return detail::format_double(v);
}

inline std::vector<std::size_t> one_based(std::span<const std::size_t> bands) {
  std::vector<std::size_t> out(bands.begin(), bands.end());
  for (auto& b : out) ++b;
  return out;
}

/// "3;96;107"
inline std::string join_bands(std::span<const std::size_t> bands0) {
  std::string out;
  for (std::size_t i = 0; i < bands0.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(bands0[i] + 1);
  }
  return out;
}

/// Parses "3;96;107" (1-based, ';' or ',' separated) into 0-based ids.
inline std::vector<std::size_t> parse_band_list(std::string_view text) {
  std::vector<std::size_t> out;
  std::string normalized(text);
  for (auto& ch : normalized)
    if (ch == ',') ch = ';';
  for (auto part : detail::split(normalized, ';')) {
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (part.empty()) continue;
    const auto id = detail::parse_size(part, "band list");
    if (id == 0) fail_validation("band list: ids are 1-based, got 0");
    out.push_back(id - 1);
  }
  if (out.empty()) fail_validation("band list is empty");
  return out;
}

/// Header "band,abc,mi,vif_1..vif_n", one row per band.
inline std::string stats_csv(const CorrelationMatrix& cm,
                             std::span<const double> abc,
                             const ScoreTable& mi) {
  const std::size_t n = cm.n_bands();
  std::ostringstream out;
  out << "band,abc,mi";
  for (std::size_t j = 0; j < n; ++j) out << ",vif_" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    out << i + 1 << ',' << format_number(abc[i]) << ','
        << (mi[i] ? format_number(*mi[i]) : "");
    for (std::size_t j = 0; j < n; ++j)
      out << ',' << (i == j ? "" : format_number(pairwise_vif(cm(i, j))));
    out << '\n';
  }
  return out.str();
}

inline Json to_json(const SelectionConfig& cfg) {
  Json j;
  j["variant"] = std::string(to_string(cfg.variant));
  j["n_prime"] = cfg.n_prime;
  j["tolerance_y"] = cfg.tolerance_y;
  j["mi_bins"] = cfg.mi_bins;
  j["kmeans_restarts"] = cfg.kmeans_restarts;
  j["seed"] = cfg.seed;
  j["rescale_axes"] = cfg.rescale_axes;
  return j;
}

inline Json to_json(const SelectionResult& r) {
  Json j;
  j["config"] = to_json(r.config);
  j["vif_lim"] = r.vif_lim;
  j["n_candidates"] = r.candidate_bands.size();
  Json candidates = Json::array();
  for (std::size_t i = 0; i < r.candidate_bands.size(); ++i) {
    Json c;
    c["band"] = r.candidate_bands[i] + 1;
    if (!r.abc.empty()) c["abc"] = r.abc[i];
    if (!r.mi.empty()) c["mi"] = r.mi[i];
    c["cluster"] = r.cluster_assignment[i];
    candidates.push_back(std::move(c));
  }
  j["candidates"] = std::move(candidates);
  j["centroids"] = r.centroids;
  j["inertia"] = r.inertia;
  j["selected_bands"] = one_based(r.selected_bands);
  return j;
}

inline Json to_json(const ConfusionMatrix& cm) {
  Json j;
  j["classes"] = cm.classes();
  Json rows = Json::array();
  const std::size_t m = cm.classes().size();
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<std::uint64_t> row;
    for (std::size_t p = 0; p < m; ++p) row.push_back(cm.at(a, p));
    rows.push_back(row);
  }
  j["counts"] = std::move(rows);  // [actual][predicted]
  return j;
}

inline Json to_json(const EvalReport& r) {
  Json j;
  j["band_set"] = one_based(r.band_set);
  Json runs = Json::array();
  for (const auto& s : r.per_run) runs.push_back({{"oa", s.oa}, {"kappa", s.kappa}});
  j["per_run"] = std::move(runs);
  j["oa_mean"] = r.oa_mean;
  j["oa_std"] = r.oa_std;
  j["kappa_mean"] = r.kappa_mean;
  j["kappa_std"] = r.kappa_std;
  j["confusion"] = to_json(r.confusion());
  return j;
}

inline Json to_json(const EvalConfig& cfg) {
  Json j;
  j["train_fraction"] = cfg.train_fraction;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.seed;
  j["classifier"] = cfg.classifier;
  return j;
}

/// Header n_prime,tolerance_y,oa_mean,oa_std,kappa_mean,kappa_std,selected_bands.
/// Skipped cells leave the metric columns empty and carry "skipped" in the
/// band column; aggregate rows use n_prime = "avg" and list no bands.
inline std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "n_prime,tolerance_y,oa_mean,oa_std,kappa_mean,kappa_std,selected_bands\n";
  for (const auto& cell : table.cells) {
    out << cell.n_prime << ',' << cell.method << ',';
    if (cell.report) {
      const auto& r = *cell.report;
      out << format_number(r.oa_mean) << ',' << format_number(r.oa_std) << ','
          << format_number(r.kappa_mean) << ',' << format_number(r.kappa_std) << ','
          << join_bands(cell.selected);
    } else {
      out << ",,,,skipped";
    }
    out << '\n';
  }
  for (const auto& agg : table.aggregates) {
    out << "avg," << agg.method << ',';
    if (agg.cells > 0)
      out << format_number(agg.oa_mean) << ',' << format_number(agg.oa_std) << ','
          << format_number(agg.kappa_mean) << ',' << format_number(agg.kappa_std) << ',';
    else
      out << ",,,,";
    out << '\n';
  }
  return out.str();
}

}  // namespace abcmi
