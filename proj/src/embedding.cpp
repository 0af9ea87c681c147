// Copyright 2026 The fuserank Authors
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

#include "fuserank/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fuserank/error.hpp"

namespace fuserank {

namespace {

constexpr double kUnitTolerance = 1e-7;
constexpr double kDegenerateVariance = 1e-12;

void normalize_in_place(std::span<float> v, std::size_t row_index) {
  double sq = 0.0;
  for (float x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite value in row " + std::to_string(row_index));
    }
    sq += static_cast<double>(x) * x;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "row " + std::to_string(row_index) + " has zero norm");
  }
  if (std::abs(norm - 1.0) <= kUnitTolerance) return;
  for (float& x : v) x = static_cast<float>(x / norm);
}

}  // namespace

MultiVector::MultiVector(std::vector<float> data, std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (rows_ == 0 || dim_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "multi-vector needs at least one row and dim >= 1");
  }
  if (data_.size() != rows_ * dim_) {
    throw Error(ErrorCode::kInvalidArgument,
                "multi-vector payload has " + std::to_string(data_.size()) +
                    " values, expected " + std::to_string(rows_ * dim_));
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    normalize_in_place({data_.data() + i * dim_, dim_}, i);
  }
}

MultiVector MultiVector::from_rows(const std::vector<std::vector<float>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "multi-vector needs at least one row");
  const std::size_t dim = rows.front().size();
  std::vector<float> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorCode::kDimMismatch, "rows of unequal dim");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return MultiVector(std::move(flat), rows.size(), dim);
}

SimilarityMatrix::SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kInvalidArgument, "similarity matrix size mismatch");
  }
}

SimilarityMatrix SimilarityMatrix::transposed() const {
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out[j * rows_ + i] = values_[i * cols_ + j];
  return {cols_, rows_, std::move(out)};
}

SimilarityMatrix SimilarityMatrix::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return {rows_, cols_, std::move(out)};
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double acc = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

SimilarityMatrix similarity_matrix(const MultiVector& query, const MultiVector& doc) {
  if (query.dim() != doc.dim()) {
    throw Error(ErrorCode::kDimMismatch, "query dim " + std::to_string(query.dim()) +
                                             " != document dim " + std::to_string(doc.dim()));
  }
  std::vector<double> values(query.rows() * doc.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const auto q = query.row(i);
    for (std::size_t j = 0; j < doc.rows(); ++j) values[i * doc.rows() + j] = dot(q, doc.row(j));
  }
  return {query.rows(), doc.rows(), std::move(values)};
}

RowStats row_stats(std::span<const double> row) {
  if (row.empty()) throw Error(ErrorCode::kInvalidArgument, "row_stats of an empty row");
  const double n = static_cast<double>(row.size());
  double sum = 0.0;
  double mx = row.front();
  for (double x : row) {
    sum += x;
    mx = std::max(mx, x);
  }
  const double mean = sum / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : row) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  RowStats s;
  s.mean = mean;
  s.max = mx;
  s.std = std::sqrt(m2);
  s.kurtosis = m2 < kDegenerateVariance ? 0.0 : m4 / (m2 * m2);
  return s;
}

std::vector<float> column_pool(const MultiVector& mv) {
  if (mv.empty()) throw Error(ErrorCode::kInvalidArgument, "column_pool of an empty multi-vector");
  std::vector<double> acc(mv.dim(), 0.0);
  for (std::size_t i = 0; i < mv.rows(); ++i) {
    const auto r = mv.row(i);
    for (std::size_t d = 0; d < mv.dim(); ++d) acc[d] += r[d];
  }
  double sq = 0.0;
  for (double& x : acc) {
    x /= static_cast<double>(mv.rows());
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "rows cancel out; pooled vector is zero");
  }
  std::vector<float> out(mv.dim());
  for (std::size_t d = 0; d < mv.dim(); ++d) out[d] = static_cast<float>(acc[d] / norm);
  return out;
}

}  // namespace fuserank
