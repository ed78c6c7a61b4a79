#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aepg/errors.hpp"
#include "aepg/rng.hpp"

namespace aepg {

// Row-major storage matches the per-measurement access pattern of the
// finite-sum problems.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64_le(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64_le(os, bits);
}

inline double get_f64_le(std::istream& is) {
  const std::uint64_t bits = get_u64_le(is);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace detail

inline constexpr char kDatasetMagic[8] = {'A', 'E', 'P', 'G', 'D', 'A', 'T', '1'};

// Flat binary container: magic "AEPGDAT1", little-endian u64 rows and cols,
// then row-major f64 payload.
inline void write_dataset_binary(const std::string& path, const RowMatrix& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kDatasetMagic, 8);
  detail::put_u64_le(os, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64_le(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) detail::put_f64_le(os, m(i, j));
  if (!os) throw IoError("write failed: " + path);
}

inline RowMatrix read_dataset_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw ParseError("bad magic in dataset file: " + path);
  const std::uint64_t rows_u = detail::get_u64_le(is);
  const std::uint64_t cols_u = detail::get_u64_le(is);
  if (!is || rows_u > (1ULL << 24) || cols_u > (1ULL << 24))
    throw ParseError("implausible shape in dataset file: " + path);
  const auto rows = static_cast<Eigen::Index>(rows_u);
  const auto cols = static_cast<Eigen::Index>(cols_u);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = detail::get_f64_le(is);
  if (!is) throw ParseError("truncated dataset file: " + path);
  return m;
}

// Parses LIBSVM text ("label idx:val idx:val ...", 1-based indices) into a
// dense matrix; labels are discarded. Feature indices may appear out of
// order. The column count is the largest index seen.
inline RowMatrix read_libsvm(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);

  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  Eigen::Index max_index = 0;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line
    // first token is the label; ignore its value but require it is numeric
    try {
      (void)std::stod(tok);
    } catch (const std::exception&) {
      throw ParseError("expected numeric label, got '" + tok + "'", line_no);
    }
    std::vector<std::pair<Eigen::Index, double>> entries;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError("expected idx:val, got '" + tok + "'", line_no);
      long idx = 0;
      double val = 0.0;
      try {
        idx = std::stol(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw ParseError("malformed idx:val '" + tok + "'", line_no);
      }
      if (idx < 1) throw ParseError("feature index must be >= 1", line_no);
      entries.emplace_back(static_cast<Eigen::Index>(idx - 1), val);
      max_index = std::max<Eigen::Index>(max_index, idx);
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ParseError("empty input: " + path);

  RowMatrix m = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()), max_index);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, v] : rows[i]) m(static_cast<Eigen::Index>(i), j) = v;
  return m;
}

// Seeded selection of `rows` examples and `cols` dimensions, without
// replacement; the chosen indices are kept in ascending order.
inline RowMatrix subsample(const RowMatrix& m, Eigen::Index rows,
                           Eigen::Index cols, std::uint64_t seed) {
  if (rows < 1 || rows > m.rows() || cols < 1 || cols > m.cols())
    throw DimensionError("subsample: requested shape exceeds source");
  Rng rng = domain_rng(seed, "subsample");

  const auto pick = [&](Eigen::Index total, Eigen::Index want) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < want; ++i) {
      const auto j =
          i + static_cast<Eigen::Index>(rng.uniform_index(
                  static_cast<std::uint64_t>(total - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(want));
    std::sort(idx.begin(), idx.end());
    return idx;
  };

  const auto ri = pick(m.rows(), rows);
  const auto ci = pick(m.cols(), cols);
  RowMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = m(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace aepg
