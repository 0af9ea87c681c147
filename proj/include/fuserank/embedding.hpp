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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fuserank {

/// A bag of unit-normalized embedding rows sharing one dimension: query text
/// tokens, query image patches, or the tokens of a document page.
///
/// Storage is row-major 32-bit floats. Construction normalizes every row;
/// rows already within 1e-7 of unit norm are kept bit-for-bit so that a
/// serialize/ingest cycle is lossless.
class MultiVector {
 public:
  MultiVector() = default;

  /// Throws Error(kInvalidArgument) for zero rows, zero dim, a data size that
  /// is not rows*dim, non-finite values, or an all-zero row.
  MultiVector(std::vector<float> data, std::size_t rows, std::size_t dim);

  static MultiVector from_rows(const std::vector<std::vector<float>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const MultiVector&, const MultiVector&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

/// Query rows x document tokens. values(i, j) = <query_i, doc_j>.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * cols_ + j];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return values_; }

  SimilarityMatrix transposed() const;
  SimilarityMatrix scaled(double factor) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct RowStats {
  double mean = 0.0;
  double max = 0.0;
  double std = 0.0;
  double kurtosis = 0.0;
};

/// Inner product with 64-bit accumulation in index order.
double dot(std::span<const float> a, std::span<const float> b) noexcept;

SimilarityMatrix similarity_matrix(const MultiVector& query, const MultiVector& doc);

/// Population mean / max / std and Pearson kurtosis m4 / m2^2 (no excess
/// subtraction). Rows with m2 < 1e-12 report kurtosis 0.
RowStats row_stats(std::span<const double> row);

/// Element-wise mean over rows, re-normalized to unit length.
std::vector<float> column_pool(const MultiVector& mv);

}  // namespace fuserank
