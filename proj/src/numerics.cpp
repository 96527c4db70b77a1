// Copyright 2026 The fsc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fsc/numerics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fsc/error.hpp"

namespace fsc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_,
          "matrix data length " + std::to_string(data_.size()) + " does not match " +
              shape_string());
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "ragged initializer list for matrix");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(),
          "matmul: shape mismatch " + a.shape_string() + " times " + b.shape_string());
  Matrix out(a.rows(), b.cols());
  // i-k-j order still adds the k terms of every output entry in increasing k.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(),
          "matmul_bt: shape mismatch " + a.shape_string() + " times transpose of " +
              b.shape_string());
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(),
          "matmul_at: shape mismatch transpose of " + a.shape_string() + " times " +
              b.shape_string());
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double logsumexp(std::span<const double> v) {
  require(!v.empty(), "logsumexp: empty input");
  const double top = *std::max_element(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - top);
  return top + std::log(acc);
}

// ---------------------------------------------------------------------------
// Random stream

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ mix64(tag + kGoldenGamma));
}

std::uint64_t RandomStream::next_u64() {
  state_ += kGoldenGamma;
  return mix64(state_);
}

double RandomStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

RandomStream RandomStream::child(std::uint64_t tag) const {
  return RandomStream(derive_seed(seed_, tag));
}

std::vector<double> sample_uniform(RandomStream& stream, double lo, double hi, std::size_t n) {
  require(lo < hi, "sample_uniform: lo must be < hi (got lo=" + format_double(lo) +
                       ", hi=" + format_double(hi) + ")");
  std::vector<double> out(n);
  const double width = hi - lo;
  for (auto& v : out) {
    v = lo + width * stream.next_uniform();
    if (v >= hi) v = std::nextafter(hi, lo);  // rounding can land on hi
  }
  return out;
}

std::vector<double> sample_normal(RandomStream& stream, double mean, double variance,
                                  std::size_t n) {
  require(variance >= 0.0, "sample_normal: negative variance " + format_double(variance));
  const double stddev = std::sqrt(variance);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = stream.next_uniform();
    const double u2 = stream.next_uniform();
    const double radius = std::sqrt(-2.0 * std::log1p(-u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = mean + stddev * (radius * std::cos(angle));
    if (i + 1 < n) out[i + 1] = mean + stddev * (radius * std::sin(angle));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigen / PCA

EigenDecomposition symmetric_eigen(const Matrix& input) {
  require(input.rows() == input.cols(), "symmetric_eigen: matrix must be square, got " +
                                            input.shape_string());
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (double x : a.values()) scale += x * x;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale || off == 0.0) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition result{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    result.values[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) result.vectors(k, j) = v(k, order[j]);
  }
  return result;
}

Matrix pca_project(const Matrix& x, std::size_t dims) {
  require(dims <= x.cols(), "pca_project: dims " + std::to_string(dims) +
                                " exceeds column count " + std::to_string(x.cols()));
  require(x.rows() >= 2, "pca_project: need at least 2 rows, got " + std::to_string(x.rows()));

  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) mean[k] += x(i, k);
  for (auto& m : mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) centered(i, k) = x(i, k) - mean[k];

  Matrix cov = matmul_at(centered, centered);
  for (auto& c : cov.values()) c /= static_cast<double>(n - 1);

  const auto eig = symmetric_eigen(cov);
  Matrix basis(d, dims);
  for (std::size_t j = 0; j < dims; ++j) {
    std::size_t arg = 0;
    for (std::size_t k = 1; k < d; ++k)
      if (std::abs(eig.vectors(k, j)) > std::abs(eig.vectors(arg, j))) arg = k;
    const double sign = eig.vectors(arg, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < d; ++k) basis(k, j) = sign * eig.vectors(k, j);
  }
  return matmul(centered, basis);
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("failed to format double");
  return std::string(buf, end);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing matrix CSV");
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw IoError("matrix CSV line " + std::to_string(line_no) + ": bad number");
      data.push_back(v);
      ++count;
      p = next;
      if (p == end) break;
      if (*p != ',')
        throw IoError("matrix CSV line " + std::to_string(line_no) + ": expected ','");
      ++p;
    }
    if (rows == 0) cols = count;
    if (count != cols)
      throw IoError("matrix CSV line " + std::to_string(line_no) + ": expected " +
                    std::to_string(cols) + " values, got " + std::to_string(count));
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

namespace {

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little_endian(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("truncated binary matrix header");
  return to_little_endian(v);
}

}  // namespace

void write_matrix_binary(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  for (double v : m.values()) {
    const double le = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(le));
  }
  if (!out) throw IoError("failed writing binary matrix");
}

Matrix read_matrix_binary(std::istream& in) {
  const std::uint64_t rows = read_u64(in);
  const std::uint64_t cols = read_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols)
    throw IoError("binary matrix dimensions implausibly large");
  std::vector<double> data(rows * cols);
  for (auto& v : data) {
    double raw = 0.0;
    in.read(reinterpret_cast<char*>(&raw), sizeof(raw));
    if (!in) throw IoError("truncated binary matrix payload");
    v = to_little_endian(raw);
  }
  return Matrix(rows, cols, std::move(data));
}

void save_matrix_binary(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_binary(out, m);
}

Matrix load_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_matrix_binary(in);
}

std::string content_hash(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fsc
