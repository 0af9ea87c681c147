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

// Second implementations written from the definitions, independent of the
// library code paths. Only test binaries use these.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fuserank/embedding.hpp"

namespace fuserank::oracle {

// ---------------------------------------------------------------- moments

struct Moments {
  long double mean, max, std, kurt;
};

inline Moments moments(const std::vector<long double>& row) {
  const long double n = static_cast<long double>(row.size());
  long double sum = 0, mx = -std::numeric_limits<long double>::infinity();
  for (auto x : row) {
    sum += x;
    mx = std::max(mx, x);
  }
  const long double mean = sum / n;
  long double m2 = 0, m4 = 0;
  for (auto x : row) {
    const long double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const long double kurt = m2 < 1e-12L ? 0.0L : m4 / (m2 * m2);
  return {mean, mx, std::sqrt(m2), kurt};
}

struct Fusion {
  long double std_of_std, text_kurt, image_kurt, mean_max, total;
};

/// Rows are query tokens, columns are document tokens.
inline Fusion fusion(const std::vector<std::vector<long double>>& st,
                     const std::vector<std::vector<long double>>& sv, long double exponent = 2,
                     long double weight = 1) {
  std::vector<long double> stds;
  long double tk = 0, mm = 0, ik = 0;
  for (const auto& r : st) {
    const auto m = moments(r);
    stds.push_back(m.std);
    tk += m.kurt;
    mm += m.max;
  }
  for (const auto& r : sv) ik += moments(r).kurt;
  tk /= st.size();
  mm /= st.size();
  ik /= sv.size();
  const long double sos = moments(stds).std;
  return {sos, tk, ik, mm, weight * sos * std::pow(tk, exponent) * ik + mm};
}

inline std::vector<std::vector<long double>> rows_of(const SimilarityMatrix& m) {
  std::vector<std::vector<long double>> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i].push_back(m(i, j));
  }
  return out;
}

// ---------------------------------------------------------------- late interaction

inline double maxsim(const MultiVector& q, const MultiVector& d) {
  double total = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.dim(); ++k) s += double(q.row(i)[k]) * double(d.row(j)[k]);
      if (s > best) best = s;
    }
    total += best;
  }
  return total;
}

// ---------------------------------------------------------------- metrics

/// 1-based position of target in ranking, 0 when absent.
inline std::size_t position(const std::vector<std::string>& ranking, const std::string& target) {
  const auto it = std::find(ranking.begin(), ranking.end(), target);
  return it == ranking.end() ? 0 : static_cast<std::size_t>(it - ranking.begin()) + 1;
}

inline double recall(const std::vector<std::size_t>& positions, std::size_t k) {
  double hit = 0;
  for (auto p : positions) hit += (p >= 1 && p <= k);
  return hit / positions.size();
}

inline double mrr(const std::vector<std::size_t>& positions, std::size_t k) {
  double s = 0;
  for (auto p : positions) s += (p >= 1 && p <= k) ? 1.0 / p : 0.0;
  return s / positions.size();
}

/// rel: graded relevance by page id (target 2, neighbours 1).
inline double ndcg(const std::vector<std::string>& ranking, const std::map<std::string, int>& rel,
                   std::size_t k) {
  auto grade = [&](const std::string& id) {
    auto it = rel.find(id);
    return it == rel.end() ? 0 : it->second;
  };
  double dcg = 0;
  for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
    dcg += (std::pow(2.0, grade(ranking[i])) - 1.0) * std::log(2.0) / std::log(i + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [id, g] : rel) grades.push_back(g);
  std::sort(grades.rbegin(), grades.rend());
  double idcg = 0;
  for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
    idcg += (std::pow(2.0, grades[i]) - 1.0) * std::log(2.0) / std::log(i + 2.0);
  }
  return dcg / idcg;
}

// ---------------------------------------------------------------- reward

/// Plain transcription of the stepwise reward over loose fields.
struct LoosePath {
  bool rag = false;
  long rewrite = -1;   // -1: absent
  int classifier = -1; // -1: absent, 0/1
  int partition = -1;  // -1: absent
};

inline int reward(const LoosePath& p, const LoosePath& gt) {
  int r = 0;
  if (p.rag != gt.rag) return r;
  if (gt.rag == false) {
    r = 4;
  } else {
    r = 1;
    if (p.rewrite == gt.rewrite) r = r + 1;
    if (p.classifier == gt.classifier) {
      if (p.classifier == 0) {
        r = r + 2;
      } else {
        r = r + 1;
        if (p.partition == gt.partition) r = r + 1;
      }
    }
  }
  return r;
}

}  // namespace fuserank::oracle
