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

// Sparse row-stochastic matrices with power iteration and block-sweep value
// iteration.

#ifndef KARMA_MARKOV_H_
#define KARMA_MARKOV_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace karma {

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Compressed sparse rows.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col.size()); }
  double RowSum(int row) const;
};

// Accumulates one row at a time, merging duplicate columns.
class SparseRowBuilder {
 public:
  explicit SparseRowBuilder(int cols);
  void Add(int col, double value);
  // Appends the accumulated row to `matrix` and resets.
  void Flush(SparseMatrix& matrix);

 private:
  std::vector<double> dense_;
  std::vector<char> seen_;
  std::vector<int> touched_;
};

SparseMatrix DenseToSparse(std::span<const double> dense, int rows, int cols);

// out = d * P.
std::vector<double> LeftMultiply(std::span<const double> d, const SparseMatrix& p);

// 0.5 * ||a - b||_1.
double TotalVariation(std::span<const double> a, std::span<const double> b);

struct StationaryResult {
  std::vector<double> distribution;
  double residual = 0.0;  // 0.5 * ||d P - d||_1 at return
  int iterations = 0;
};

// Power iteration d <- d P from `init` until the total-variation step falls
// below `tol`. Throws NonConvergence after max_iter steps.
StationaryResult PowerIteration(const SparseMatrix& p, std::span<const double> init,
                                double tol, int max_iter);

struct StateBlock {
  int begin;
  int end;
};

struct ValueIterationResult {
  std::vector<double> value;
  double residual = 0.0;  // ||V - (R + diag(discount) P V)||_inf
  int sweeps = 0;
};

// Solves V = R + diag(discount) P V by Gauss-Seidel sweeps over `blocks` in
// the given order. When transitions only move from one block to the block
// swept just before it (a daily cycle swept backwards), a sweep is one full
// day backup and contracts by the product of the discounts.
ValueIterationResult ValueIteration(const SparseMatrix& p, std::span<const double> reward,
                                    std::span<const double> discount,
                                    std::span<const StateBlock> blocks,
                                    std::span<const double> init, double tol,
                                    int max_sweeps);

// One in-place Gauss-Seidel sweep; returns the largest change.
double ValueSweep(const SparseMatrix& p, std::span<const double> reward,
                  std::span<const double> discount, std::span<const StateBlock> blocks,
                  std::span<double> value);

// ||V - (R + diag(discount) P V)||_inf.
double BellmanResidual(const SparseMatrix& p, std::span<const double> reward,
                       std::span<const double> discount, std::span<const double> value);

}  // namespace karma

#endif  // KARMA_MARKOV_H_
