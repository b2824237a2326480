// Copyright 2026 The Karma Economies Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "karma/markov.h"

#include <algorithm>
#include <cmath>

namespace karma {

double SparseMatrix::RowSum(int row) const {
  double total = 0.0;
  for (std::int64_t i = row_ptr[row]; i < row_ptr[row + 1]; ++i) total += val[i];
  return total;
}

SparseRowBuilder::SparseRowBuilder(int cols) : dense_(cols, 0.0), seen_(cols, 0) {}

void SparseRowBuilder::Add(int col, double value) {
  if (!seen_[col]) {
    if (value == 0.0) return;
    seen_[col] = 1;
    touched_.push_back(col);
  }
  dense_[col] += value;
}

void SparseRowBuilder::Flush(SparseMatrix& matrix) {
  for (int c : touched_) {
    if (dense_[c] != 0.0) {
      matrix.col.push_back(c);
      matrix.val.push_back(dense_[c]);
    }
    dense_[c] = 0.0;
    seen_[c] = 0;
  }
  touched_.clear();
  matrix.row_ptr.push_back(matrix.nnz());
  ++matrix.rows;
}

SparseMatrix DenseToSparse(std::span<const double> dense, int rows, int cols) {
  SparseMatrix m;
  m.cols = cols;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double v = dense[static_cast<std::size_t>(i) * cols + j];
      if (v != 0.0) {
        m.col.push_back(j);
        m.val.push_back(v);
      }
    }
    m.row_ptr.push_back(m.nnz());
    ++m.rows;
  }
  return m;
}

std::vector<double> LeftMultiply(std::span<const double> d, const SparseMatrix& p) {
  std::vector<double> out(p.cols, 0.0);
  for (int i = 0; i < p.rows; ++i) {
    const double mass = d[i];
    if (mass == 0.0) continue;
    for (std::int64_t k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      out[p.col[k]] += mass * p.val[k];
    }
  }
  return out;
}

double TotalVariation(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return 0.5 * total;
}

StationaryResult PowerIteration(const SparseMatrix& p, std::span<const double> init,
                                double tol, int max_iter) {
  StationaryResult result;
  result.distribution.assign(init.begin(), init.end());
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> next = LeftMultiply(result.distribution, p);
    result.residual = TotalVariation(next, result.distribution);
    result.distribution = std::move(next);
    result.iterations = it;
    if (result.residual <= tol) return result;
  }
  throw NonConvergence("power iteration did not converge", result.residual);
}

double ValueSweep(const SparseMatrix& p, std::span<const double> reward,
                  std::span<const double> discount, std::span<const StateBlock> blocks,
                  std::span<double> value) {
  double change = 0.0;
  for (const StateBlock& block : blocks) {
    for (int x = block.begin; x < block.end; ++x) {
      double continuation = 0.0;
      for (std::int64_t k = p.row_ptr[x]; k < p.row_ptr[x + 1]; ++k) {
        continuation += p.val[k] * value[p.col[k]];
      }
      const double updated = reward[x] + discount[x] * continuation;
      change = std::max(change, std::abs(updated - value[x]));
      value[x] = updated;
    }
  }
  return change;
}

double BellmanResidual(const SparseMatrix& p, std::span<const double> reward,
                       std::span<const double> discount, std::span<const double> value) {
  double residual = 0.0;
  for (int x = 0; x < p.rows; ++x) {
    double continuation = 0.0;
    for (std::int64_t k = p.row_ptr[x]; k < p.row_ptr[x + 1]; ++k) {
      continuation += p.val[k] * value[p.col[k]];
    }
    residual = std::max(residual,
                        std::abs(reward[x] + discount[x] * continuation - value[x]));
  }
  return residual;
}

ValueIterationResult ValueIteration(const SparseMatrix& p, std::span<const double> reward,
                                    std::span<const double> discount,
                                    std::span<const StateBlock> blocks,
                                    std::span<const double> init, double tol,
                                    int max_sweeps) {
  ValueIterationResult result;
  result.value.assign(init.begin(), init.end());
  result.residual = BellmanResidual(p, reward, discount, result.value);
  while (result.residual > tol) {
    if (result.sweeps >= max_sweeps) {
      throw NonConvergence("value iteration did not converge", result.residual);
    }
    const double change = ValueSweep(p, reward, discount, blocks, result.value);
    ++result.sweeps;
    if (change <= tol) result.residual = BellmanResidual(p, reward, discount, result.value);
  }
  return result;
}

}  // namespace karma
