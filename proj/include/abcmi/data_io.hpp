#pragma once

// Hyperspectral cube / ground-truth containers and the masking +
// standardization step that turns them into the analysis matrix.
//
// HSIC v1 (cube):
//   HSIC1 height=<h> width=<w> n_bands=<n> dtype=f32le order=bsq[ wavelengths=<w1>,<w2>,...]\n
//   followed by h*w*n little-endian float32 values, band-major, row-major
//   within a band.
// HSIG v1 (ground truth):
//   HSIG1 height=<h> width=<w> dtype=u16le\n
//   followed by h*w little-endian uint16 labels, row-major. 0 = background.
//
// Writers always emit the fields in the order above, separated by single
// spaces. Readers accept the fields in any order.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "abcmi/error.hpp"

namespace abcmi {

using ClassId = int;

struct PixelPos {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// h x w x n spectral image. Values are stored pixel-interleaved:
/// index (row * width + col) * n_bands + band.
class HsiCube {
 public:
  HsiCube(std::size_t height, std::size_t width, std::size_t n_bands,
          std::vector<float> values, std::vector<double> wavelengths = {})
      : height_(height),
        width_(width),
        n_bands_(n_bands),
        values_(std::move(values)),
        wavelengths_(std::move(wavelengths)) {
    if (height_ == 0 || width_ == 0)
      fail_validation("cube: spatial dimensions must be positive");
    if (n_bands_ < 2)
      fail_validation("cube: at least 2 bands required, got " +
                      std::to_string(n_bands_));
    if (values_.size() != height_ * width_ * n_bands_)
      fail_validation("cube: expected " +
                      std::to_string(height_ * width_ * n_bands_) +
                      " values, got " + std::to_string(values_.size()));
    if (!wavelengths_.empty() && wavelengths_.size() != n_bands_)
      fail_validation("cube: wavelength count does not match band count");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        const std::size_t band = i % n_bands_;
        const std::size_t pixel = i / n_bands_;
        fail_validation("cube: non-finite value at (row " +
                        std::to_string(pixel / width_) + ", col " +
                        std::to_string(pixel % width_) + ", band " +
                        std::to_string(band) + ")");
      }
    }
  }

  /// Builds a cube from band-sequential samples.
  static HsiCube from_bsq(std::size_t height, std::size_t width,
                          std::size_t n_bands, std::span<const float> bsq,
                          std::vector<double> wavelengths = {}) {
    const std::size_t plane = height * width;
    if (bsq.size() != plane * n_bands)
      fail_validation("cube: expected " + std::to_string(plane * n_bands) +
                      " band-sequential values, got " +
                      std::to_string(bsq.size()));
    for (std::size_t i = 0; i < bsq.size(); ++i)
      if (!std::isfinite(bsq[i]))
        fail_validation("cube: non-finite value at flat index " +
                        std::to_string(i));
    std::vector<float> interleaved(bsq.size());
    for (std::size_t b = 0; b < n_bands; ++b)
      for (std::size_t p = 0; p < plane; ++p)
        interleaved[p * n_bands + b] = bsq[b * plane + p];
    return HsiCube(height, width, n_bands, std::move(interleaved),
                   std::move(wavelengths));
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t n_bands() const noexcept { return n_bands_; }
  std::span<const float> values() const noexcept { return values_; }
  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }

  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return values_[(row * width_ + col) * n_bands_ + band];
  }

  std::vector<float> to_bsq() const {
    const std::size_t plane = height_ * width_;
    std::vector<float> out(values_.size());
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t b = 0; b < n_bands_; ++b)
        out[b * plane + p] = values_[p * n_bands_ + b];
    return out;
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t n_bands_;
  std::vector<float> values_;
  std::vector<double> wavelengths_;
};

class GroundTruth {
 public:
  GroundTruth(std::size_t height, std::size_t width,
              std::vector<std::uint16_t> labels)
      : height_(height), width_(width), labels_(std::move(labels)) {
    if (labels_.size() != height_ * width_)
      fail_validation("ground truth: expected " +
                      std::to_string(height_ * width_) + " labels, got " +
                      std::to_string(labels_.size()));
    if (std::all_of(labels_.begin(), labels_.end(),
                    [](std::uint16_t l) { return l == 0; }))
      fail_validation("ground truth: every pixel is background (label 0)");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const std::uint16_t> labels() const noexcept { return labels_; }
  std::uint16_t at(std::size_t row, std::size_t col) const {
    return labels_[row * width_ + col];
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint16_t> labels_;
};

/// Standardized p' x n matrix over the non-background pixels, stored
/// column-major so each band is a contiguous span.
class PixelMatrix {
 public:
  /// Z-scores each raw column over its samples (sample standard deviation,
  /// divisor p' - 1). Constant columns become all zeros and are flagged.
  static PixelMatrix standardize(std::vector<std::vector<double>> columns,
                                 std::vector<ClassId> labels,
                                 std::vector<PixelPos> positions = {}) {
    if (columns.size() < 2)
      fail_validation("pixel matrix: at least 2 bands required");
    const std::size_t rows = labels.size();
    if (rows < 2)
      fail_validation("pixel matrix: at least 2 non-background pixels "
                      "required, got " + std::to_string(rows));
    if (positions.empty()) {
      positions.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) positions[r] = {0, r};
    }
    if (positions.size() != rows)
      fail_validation("pixel matrix: position count does not match rows");

    PixelMatrix pm;
    pm.rows_ = rows;
    pm.n_bands_ = columns.size();
    pm.values_.resize(rows * columns.size());
    pm.constant_.assign(columns.size(), false);
    for (std::size_t b = 0; b < columns.size(); ++b) {
      const auto& col = columns[b];
      if (col.size() != rows)
        fail_validation("pixel matrix: band " + std::to_string(b) +
                        " has " + std::to_string(col.size()) +
                        " samples, expected " + std::to_string(rows));
      double* out = pm.values_.data() + b * rows;
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      if (*lo == *hi) {
        pm.constant_[b] = true;
        pm.warnings_.push_back("band " + std::to_string(b + 1) +
                               " is constant over the labelled pixels; "
                               "standardized to zeros");
        std::fill(out, out + rows, 0.0);
        continue;
      }
      double sum = 0.0;
      for (double v : col) sum += v;
      const double mean = sum / static_cast<double>(rows);
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(rows - 1));
      for (std::size_t r = 0; r < rows; ++r) out[r] = (col[r] - mean) / sd;
    }
    pm.labels_ = std::move(labels);
    pm.positions_ = std::move(positions);
    return pm;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t p_prime() const noexcept { return rows_; }
  std::size_t n_bands() const noexcept { return n_bands_; }

  std::span<const double> column(std::size_t band) const {
    return {values_.data() + band * rows_, rows_};
  }
  double operator()(std::size_t row, std::size_t band) const {
    return values_[band * rows_ + row];
  }
  std::span<const ClassId> labels() const noexcept { return labels_; }
  const std::vector<PixelPos>& positions() const noexcept { return positions_; }
  bool is_constant(std::size_t band) const { return constant_[band]; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  PixelMatrix() = default;

  std::size_t rows_ = 0;
  std::size_t n_bands_ = 0;
  std::vector<double> values_;
  std::vector<ClassId> labels_;
  std::vector<PixelPos> positions_;
  std::vector<bool> constant_;
  std::vector<std::string> warnings_;
};

/// Keeps the pixels whose label is non-zero (row-major order) and z-scores
/// every band over them.
inline PixelMatrix mask_and_standardize(const HsiCube& cube,
                                        const GroundTruth& gt) {
  if (cube.height() != gt.height() || cube.width() != gt.width())
    fail_validation("cube is " + std::to_string(cube.height()) + "x" +
                    std::to_string(cube.width()) + " but ground truth is " +
                    std::to_string(gt.height()) + "x" +
                    std::to_string(gt.width()));
  std::vector<PixelPos> positions;
  std::vector<ClassId> labels;
  for (std::size_t r = 0; r < cube.height(); ++r)
    for (std::size_t c = 0; c < cube.width(); ++c)
      if (const auto l = gt.at(r, c); l != 0) {
        positions.push_back({r, c});
        labels.push_back(l);
      }
  if (positions.size() < 2)
    fail_validation("at least 2 non-background pixels required, got " +
                    std::to_string(positions.size()));

  std::vector<std::vector<double>> columns(
      cube.n_bands(), std::vector<double>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t b = 0; b < cube.n_bands(); ++b)
      columns[b][i] = cube.at(positions[i].row, positions[i].col, b);
  return PixelMatrix::standardize(std::move(columns), std::move(labels),
                                  std::move(positions));
}

// ---------------------------------------------------------------------------
// Container encoding

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::size_t parse_size(std::string_view text, const std::string& what) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    fail_validation(what + ": not a non-negative integer: '" +
                    std::string(text) + "'");
  return v;
}

inline double parse_double(std::string_view text, const std::string& what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    fail_validation(what + ": not a number: '" + std::string(text) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

struct Header {
  std::string magic;
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t payload_offset = 0;
};

inline Header parse_header(std::string_view bytes, std::string_view magic,
                           const std::string& source) {
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos)
    fail_validation(source + ": malformed header: no terminating newline");
  const auto line = bytes.substr(0, eol);
  Header h;
  h.payload_offset = eol + 1;
  const auto tokens = split(line, ' ');
  h.magic = std::string(tokens.front());
  if (h.magic != magic)
    fail_validation(source + ": malformed header: expected magic '" +
                    std::string(magic) + "', found '" + h.magic + "'");
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto tok = tokens[i];
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos || eq == 0)
      fail_validation(source + ": malformed header field '" +
                      std::string(tok) + "'");
    auto [it, inserted] = h.fields.emplace(std::string(tok.substr(0, eq)),
                                           std::string(tok.substr(eq + 1)));
    if (!inserted)
      fail_validation(source + ": duplicate header field '" + it->first + "'");
  }
  return h;
}

inline const std::string& require_field(const Header& h, std::string_view key,
                                        const std::string& source) {
  const auto it = h.fields.find(key);
  if (it == h.fields.end())
    fail_validation(source + ": malformed header: missing field '" +
                    std::string(key) + "'");
  return it->second;
}

inline void reject_unknown_fields(const Header& h,
                                  std::initializer_list<std::string_view> known,
                                  const std::string& source) {
  for (const auto& [key, _] : h.fields)
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail_validation(source + ": malformed header: unknown field '" + key +
                      "'");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open '" + path.string() + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) fail_io("error while reading '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path,
                       std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail_io("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail_io("error while writing '" + path.string() + "'");
}

inline void append_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t read_u32le(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace detail

inline std::string encode_cube(const HsiCube& cube) {
  std::string out = "HSIC1 height=" + std::to_string(cube.height()) +
                    " width=" + std::to_string(cube.width()) +
                    " n_bands=" + std::to_string(cube.n_bands()) +
                    " dtype=f32le order=bsq";
  if (!cube.wavelengths().empty()) {
    out += " wavelengths=";
    for (std::size_t i = 0; i < cube.wavelengths().size(); ++i) {
      if (i) out += ',';
      out += detail::format_double(cube.wavelengths()[i]);
    }
  }
  out += '\n';
  const auto bsq = cube.to_bsq();
  out.reserve(out.size() + bsq.size() * 4);
  for (float v : bsq) detail::append_u32le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline HsiCube decode_cube(std::string_view bytes,
                           const std::string& source = "cube") {
  const auto h = detail::parse_header(bytes, "HSIC1", source);
  detail::reject_unknown_fields(
      h, {"height", "width", "n_bands", "dtype", "order", "wavelengths"},
      source);
  const auto height =
      detail::parse_size(detail::require_field(h, "height", source), source + ": height");
  const auto width =
      detail::parse_size(detail::require_field(h, "width", source), source + ": width");
  const auto n_bands =
      detail::parse_size(detail::require_field(h, "n_bands", source), source + ": n_bands");
  if (detail::require_field(h, "dtype", source) != "f32le")
    fail_validation(source + ": unsupported dtype '" +
                    detail::require_field(h, "dtype", source) + "'");
  if (detail::require_field(h, "order", source) != "bsq")
    fail_validation(source + ": unsupported order '" +
                    detail::require_field(h, "order", source) + "'");
  std::vector<double> wavelengths;
  if (const auto it = h.fields.find("wavelengths"); it != h.fields.end())
    for (auto part : detail::split(it->second, ','))
      wavelengths.push_back(detail::parse_double(part, source + ": wavelengths"));

  const std::size_t expected = height * width * n_bands;
  const std::size_t payload = bytes.size() - h.payload_offset;
  if (payload != expected * 4)
    fail_validation(source + ": payload size mismatch: header declares " +
                    std::to_string(height) + "x" + std::to_string(width) +
                    "x" + std::to_string(n_bands) + " = " +
                    std::to_string(expected) + " values, payload holds " +
                    std::to_string(payload) + " bytes (" +
                    std::to_string(payload / 4) + " values)");
  std::vector<float> bsq(expected);
  const char* p = bytes.data() + h.payload_offset;
  for (std::size_t i = 0; i < expected; ++i)
    bsq[i] = std::bit_cast<float>(detail::read_u32le(p + 4 * i));
  try {
    return HsiCube::from_bsq(height, width, n_bands, bsq, std::move(wavelengths));
  } catch (const Error& e) {
    throw Error(e.kind(), source + ": " + e.what());
  }
}

inline std::string encode_ground_truth(const GroundTruth& gt) {
  std::string out = "HSIG1 height=" + std::to_string(gt.height()) +
                    " width=" + std::to_string(gt.width()) + " dtype=u16le\n";
  for (std::uint16_t l : gt.labels()) {
    out.push_back(static_cast<char>(l & 0xff));
    out.push_back(static_cast<char>(l >> 8));
  }
  return out;
}

inline GroundTruth decode_ground_truth(std::string_view bytes,
                                       const std::string& source = "ground truth") {
  const auto h = detail::parse_header(bytes, "HSIG1", source);
  detail::reject_unknown_fields(h, {"height", "width", "dtype"}, source);
  const auto height =
      detail::parse_size(detail::require_field(h, "height", source), source + ": height");
  const auto width =
      detail::parse_size(detail::require_field(h, "width", source), source + ": width");
  if (detail::require_field(h, "dtype", source) != "u16le")
    fail_validation(source + ": unsupported dtype '" +
                    detail::require_field(h, "dtype", source) + "'");
  const std::size_t expected = height * width;
  const std::size_t payload = bytes.size() - h.payload_offset;
  if (payload != expected * 2)
    fail_validation(source + ": payload size mismatch: header declares " +
                    std::to_string(expected) + " labels, payload holds " +
                    std::to_string(payload) + " bytes");
  std::vector<std::uint16_t> labels(expected);
  const auto* p =
      reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  for (std::size_t i = 0; i < expected; ++i)
    labels[i] = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
  try {
    return GroundTruth(height, width, std::move(labels));
  } catch (const Error& e) {
    throw Error(e.kind(), source + ": " + e.what());
  }
}

inline HsiCube load_cube(const std::filesystem::path& path) {
  return decode_cube(detail::read_file(path), path.string());
}

inline void write_cube(const HsiCube& cube, const std::filesystem::path& path) {
  detail::write_file(path, encode_cube(cube));
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  return decode_ground_truth(detail::read_file(path), path.string());
}

inline void write_ground_truth(const GroundTruth& gt,
                               const std::filesystem::path& path) {
  detail::write_file(path, encode_ground_truth(gt));
}

// ---------------------------------------------------------------------------
// Plain-text matrices (small fixtures): comma-separated, one image row per
// line. A cube is given as one file per band.

struct TextMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
};

inline TextMatrix parse_text_matrix(std::string_view text,
                                    const std::string& source) {
  TextMatrix m;
  std::size_t line_no = 0;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto cells = detail::split(line, ',');
    if (m.rows == 0) m.cols = cells.size();
    if (cells.size() != m.cols)
      fail_validation(source + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(m.cols));
    for (auto cell : cells)
      m.values.push_back(detail::parse_double(
          cell, source + ": line " + std::to_string(line_no)));
    ++m.rows;
  }
  if (m.rows == 0) fail_validation(source + ": empty matrix");
  return m;
}

inline HsiCube load_cube_text(std::span<const std::filesystem::path> band_files) {
  if (band_files.size() < 2)
    fail_validation("text cube: at least 2 band files required");
  std::vector<float> bsq;
  std::size_t rows = 0, cols = 0;
  for (std::size_t b = 0; b < band_files.size(); ++b) {
    const auto m = parse_text_matrix(detail::read_file(band_files[b]),
                                     band_files[b].string());
    if (b == 0) {
      rows = m.rows;
      cols = m.cols;
    } else if (m.rows != rows || m.cols != cols) {
      fail_validation(band_files[b].string() + ": band is " +
                      std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                      ", first band is " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
    for (double v : m.values) bsq.push_back(static_cast<float>(v));
  }
  return HsiCube::from_bsq(rows, cols, band_files.size(), bsq);
}

inline GroundTruth load_ground_truth_text(const std::filesystem::path& path) {
  const auto m = parse_text_matrix(detail::read_file(path), path.string());
  std::vector<std::uint16_t> labels;
  labels.reserve(m.values.size());
  for (double v : m.values) {
    if (v < 0 || v > 65535 || v != std::floor(v))
      fail_validation(path.string() + ": label " + detail::format_double(v) +
                      " is not an integer in [0, 65535]");
    labels.push_back(static_cast<std::uint16_t>(v));
  }
  return GroundTruth(m.rows, m.cols, std::move(labels));
}

namespace detail {
inline bool starts_with_magic(const std::filesystem::path& path,
                              std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open '" + path.string() + "' for reading");
  std::string head(magic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return in.gcount() == static_cast<std::streamsize>(magic.size()) &&
         head == magic;
}
}  // namespace detail

/// One HSIC file, or one text matrix per band.
inline HsiCube read_cube(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) fail_validation("no cube file given");
  if (paths.size() == 1 && detail::starts_with_magic(paths.front(), "HSIC1"))
    return load_cube(paths.front());
  return load_cube_text(paths);
}

/// HSIG file or text matrix.
inline GroundTruth read_ground_truth(const std::filesystem::path& path) {
  if (detail::starts_with_magic(path, "HSIG1")) return load_ground_truth(path);
  return load_ground_truth_text(path);
}

}  // namespace abcmi
