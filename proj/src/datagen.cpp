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

#include "fsc/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>

#include "fsc/error.hpp"

namespace fsc {

void MixtureSpec::validate() const {
  require(classes >= 1 && modes_per_class >= 1 && input_dim >= 1 && samples_per_mode >= 1,
          "mixture counts must all be >= 1");
  require(mode_separation > 0.0 && class_separation > 0.0,
          "mixture separations must be > 0");
  require(mode_stddev > 0.0, "mixture mode_stddev must be > 0");
  require(classes <= input_dim,
          "cannot place " + std::to_string(classes) + " classes at guaranteed separation in " +
              std::to_string(input_dim) + " dimensions (need classes <= input_dim)");
  require(modes_per_class <= input_dim,
          "cannot place " + std::to_string(modes_per_class) +
              " equidistant modes per class in " + std::to_string(input_dim) +
              " dimensions (need modes_per_class <= input_dim)");
}

std::size_t LabeledDataset::class_count() const {
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

Matrix random_orthonormal_rows(std::size_t count, std::size_t dim, RandomStream& stream) {
  require(count <= dim, "random_orthonormal_rows: count exceeds dimension");
  Matrix q(count, dim);
  std::size_t filled = 0;
  while (filled < count) {
    auto draw = sample_normal(stream, 0.0, 1.0, dim);
    for (std::size_t r = 0; r < filled; ++r) {
      const double proj = dot(draw, q.row(r));
      for (std::size_t k = 0; k < dim; ++k) draw[k] -= proj * q(r, k);
    }
    const double norm = std::sqrt(dot(draw, draw));
    if (norm < 1e-8) continue;  // degenerate draw, resample
    for (std::size_t k = 0; k < dim; ++k) q(filled, k) = draw[k] / norm;
    ++filled;
  }
  return q;
}

MixtureData generate_mixture(const MixtureSpec& spec) {
  spec.validate();
  const std::size_t dim = spec.input_dim;
  RandomStream root(spec.seed);
  auto rotation_stream = root.child(1);
  auto mode_stream = root.child(2);
  auto sample_stream = root.child(3);

  // Rows of a random rotation, scaled so ‖a − b‖ = class_separation.
  const Matrix rotation = random_orthonormal_rows(spec.classes, dim, rotation_stream);
  const double class_scale = spec.class_separation / std::sqrt(2.0);
  const double mode_scale = spec.mode_separation / std::sqrt(2.0);

  const std::size_t cells = spec.classes * spec.modes_per_class;
  Matrix mode_centers(cells, dim);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const Matrix frame = random_orthonormal_rows(spec.modes_per_class, dim, mode_stream);
    for (std::size_t m = 0; m < spec.modes_per_class; ++m)
      for (std::size_t k = 0; k < dim; ++k)
        mode_centers(c * spec.modes_per_class + m, k) =
            class_scale * rotation(c, k) + mode_scale * frame(m, k);
  }

  const std::size_t per = spec.samples_per_mode;
  const std::size_t train_per = per == 1 ? 1 : std::max<std::size_t>(1, (per * 4) / 5);
  const std::size_t test_per = per - train_per;

  MixtureData out;
  out.train.split = Split::kTrain;
  out.test.split = Split::kTest;
  out.train.inputs = Matrix(cells * train_per, dim);
  out.test.inputs = Matrix(cells * test_per, dim);
  const double variance = spec.mode_stddev * spec.mode_stddev;

  std::size_t train_row = 0;
  std::size_t test_row = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t m = 0; m < spec.modes_per_class; ++m) {
      const auto center = mode_centers.row(c * spec.modes_per_class + m);
      for (std::size_t t = 0; t < per; ++t) {
        const auto noise = sample_normal(sample_stream, 0.0, variance, dim);
        const bool to_train = t < train_per;
        LabeledDataset& target = to_train ? out.train : out.test;
        const std::size_t row = to_train ? train_row++ : test_row++;
        for (std::size_t k = 0; k < dim; ++k) target.inputs(row, k) = center[k] + noise[k];
        target.labels.push_back(static_cast<int>(c));
        target.mode_ids.push_back(static_cast<int>(m));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> parse_label(std::string_view s) {
  s = trim(s);
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty() || v < 0) return std::nullopt;
  return v;
}

struct RawTable {
  std::vector<std::string> header;  // empty when the file has no header row
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

RawTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      width = fields.size();
      const bool is_header = std::any_of(fields.begin(), fields.end(), [](std::string_view f) {
        return !parse_double(f).has_value();
      });
      if (is_header) {
        for (auto f : fields) table.header.emplace_back(trim(f));
        continue;
      }
    }
    if (fields.size() != width)
      throw IoError(path.string() + ": line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
    std::vector<std::string> row;
    for (auto f : fields) row.emplace_back(trim(f));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (table.rows.empty()) throw IoError(path.string() + ": no data rows");
  return table;
}

std::size_t resolve_column(const RawTable& table, const std::string& name, std::size_t width) {
  for (std::size_t j = 0; j < table.header.size(); ++j)
    if (table.header[j] == name) return j;
  if (auto idx = parse_label(name); idx && static_cast<std::size_t>(*idx) < width)
    return static_cast<std::size_t>(*idx);
  if (table.header.empty() && name == "label") return width - 1;
  throw IoError("label column '" + name + "' not found");
}

}  // namespace

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data,
                       bool include_mode) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::size_t dim = data.inputs.cols();
  for (std::size_t k = 0; k < dim; ++k) out << 'f' << k << ',';
  out << "label";
  if (include_mode) out << ",mode";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) out << format_double(data.inputs(i, k)) << ',';
    out << data.labels[i];
    if (include_mode) out << ',' << (i < data.mode_ids.size() ? data.mode_ids[i] : 0);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  const RawTable table = read_table(path);
  if (table.header.empty()) throw IoError(path.string() + ": missing header row");
  const std::size_t width = table.header.size();
  const std::size_t label_col = resolve_column(table, "label", width);
  std::optional<std::size_t> mode_col;
  for (std::size_t j = 0; j < width; ++j)
    if (table.header[j] == "mode") mode_col = j;

  LabeledDataset data;
  const std::size_t dim = width - 1 - (mode_col ? 1 : 0);
  data.inputs = Matrix(table.rows.size(), dim);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ": line " + std::to_string(table.line_numbers[i]);
    std::size_t k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_col || (mode_col && j == *mode_col)) continue;
      auto v = parse_double(row[j]);
      if (!v) throw IoError(where + ": bad number '" + row[j] + "'");
      data.inputs(i, k++) = *v;
    }
    auto label = parse_label(row[label_col]);
    if (!label) throw IoError(where + ": label '" + row[label_col] + "' is not a non-negative integer");
    data.labels.push_back(*label);
    int mode = 0;
    if (mode_col) {
      auto m = parse_label(row[*mode_col]);
      if (!m) throw IoError(where + ": bad mode id '" + row[*mode_col] + "'");
      mode = *m;
    }
    data.mode_ids.push_back(mode);
  }
  return data;
}

LabeledDataset load_feature_csv(const std::filesystem::path& path, const std::string& label_column) {
  const RawTable table = read_table(path);
  const std::size_t width = table.rows.front().size();
  require(width >= 2, "feature CSV needs at least one feature column and a label column");
  const std::size_t label_col = resolve_column(table, label_column, width);

  LabeledDataset data;
  data.inputs = Matrix(table.rows.size(), width - 1);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path.string() + ": line " + std::to_string(table.line_numbers[i]);
    std::size_t k = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_col) continue;
      auto v = parse_double(row[j]);
      if (!v || !std::isfinite(*v)) throw IoError(where + ": bad number '" + row[j] + "'");
      data.inputs(i, k++) = *v;
    }
    auto label = parse_label(row[label_col]);
    if (!label) throw IoError(where + ": label '" + row[label_col] + "' is not a non-negative integer");
    data.labels.push_back(*label);
    data.mode_ids.push_back(0);
  }
  return data;
}

}  // namespace fsc
