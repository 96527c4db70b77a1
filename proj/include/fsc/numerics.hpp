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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fsc {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a · b. Each output entry accumulates over the inner index left to right.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ without materializing the transpose.
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// aᵀ · b without materializing the transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// max(v) + ln Σ exp(v_i − max(v)).
double logsumexp(std::span<const double> v);

/// SplitMix64 stream. The state is a Weyl counter advanced by the golden
/// gamma and passed through a fixed 64-bit finalizer, so any port that
/// implements the same three lines reproduces the sequence bit for bit.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_uniform();
  /// Stream for an independent purpose, derived from the seed only (not from
  /// how far this stream has advanced).
  RandomStream child(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::uint64_t mix64(std::uint64_t z);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

std::vector<double> sample_uniform(RandomStream& stream, double lo, double hi, std::size_t n);
/// Box–Muller over consecutive uniform pairs (u1, u2): emits
/// r·cos(2πu2) then r·sin(2πu2), r = sqrt(−2 ln(1 − u1)). An odd tail
/// discards the sine half of its pair.
std::vector<double> sample_normal(RandomStream& stream, double mean, double variance,
                                  std::size_t n);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
EigenDecomposition symmetric_eigen(const Matrix& a);

/// Projects centered rows of x onto the top `dims` principal directions.
/// Each direction's largest-magnitude component is made positive.
Matrix pca_project(const Matrix& x, std::size_t dims);

// Serialization. CSV: one row per line, shortest round-trip decimal form.
// Binary: u64 rows, u64 cols, then row-major f64, all little-endian.
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);
void write_matrix_binary(std::ostream& out, const Matrix& m);
Matrix read_matrix_binary(std::istream& in);
void save_matrix_binary(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix_binary(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
/// FNV-1a over the little-endian bytes of the values, as 16 hex digits.
std::string content_hash(std::span<const double> values);

}  // namespace fsc
