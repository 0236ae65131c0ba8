// Copyright 2026 The kpi Authors
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

#ifndef KPI_KERNEL_HPP_
#define KPI_KERNEL_HPP_

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace kpi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class KernelFamily { kGaussianRbf, kLinear, kPolynomial };

std::string_view KernelFamilyName(KernelFamily family);
KernelFamily ParseKernelFamily(std::string_view name);

struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussianRbf;
  double length_scale = 1.0;  // rbf only
  int degree = 2;             // polynomial only
  double offset = 1.0;        // polynomial only

  // Throws std::invalid_argument when a family parameter is out of range.
  void Validate() const;
};

// Fixed expansion centers for one stage. Points are stored column-wise,
// so `points` is n x M.
struct Dictionary {
  Matrix points;
  int stage = 0;

  int size() const { return static_cast<int>(points.cols()); }
  int dim() const { return static_cast<int>(points.rows()); }
  bool empty() const { return points.cols() == 0; }
  bool HasDuplicates(double tol = 0.0) const;
};

// One stage of a kernel-expanded policy: pi_t(x) = sum_j k(x, xbar_j) c_j,
// where row j of `coefficients` is c_j.
struct StagePolicy {
  Dictionary dictionary;
  Matrix coefficients;  // M x m
};

// Stage-major sequence of kernel expansions covering stages
// [first_stage, first_stage + stages.size()).
class KernelPolicy {
 public:
  KernelPolicy() = default;
  KernelPolicy(KernelSpec kernel, int first_stage, int state_dim,
               int input_dim, int num_stages);

  const KernelSpec& kernel() const { return kernel_; }
  void set_kernel(const KernelSpec& kernel) { kernel_ = kernel; }
  int first_stage() const { return first_stage_; }
  int end_stage() const { return first_stage_ + num_stages(); }
  int num_stages() const { return static_cast<int>(stages_.size()); }
  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }

  bool Covers(int t) const { return t >= first_stage_ && t < end_stage(); }
  const StagePolicy& stage(int t) const;
  StagePolicy& mutable_stage(int t);

  // Replaces the dictionary for stage t and resets its coefficients to zero.
  void SetDictionary(int t, Dictionary dictionary);
  void SetCoefficients(int t, const Matrix& coefficients);

  // An empty dictionary evaluates to the zero control.
  Vector Evaluate(int t, const Vector& x) const;

 private:
  KernelSpec kernel_;
  int first_stage_ = 0;
  int state_dim_ = 0;
  int input_dim_ = 0;
  std::vector<StagePolicy> stages_;
};

struct GramPair {
  Matrix gram;   // M x M over dictionary points (ridge included)
  Matrix cross;  // N x M between samples and dictionary points
};

double EvalKernel(const KernelSpec& spec, const Vector& x, const Vector& y);

// Kernel values between x and every dictionary point (length M).
Vector KernelRow(const KernelSpec& spec, const Vector& x, const Matrix& points);

// Entry (i, j) = k(xbar_i, xbar_j) + ridge [i == j]. When the dictionary has
// duplicate points and ridge is zero, `singular` (if given) is set to true.
Matrix GramMatrix(const KernelSpec& spec, const Dictionary& dict, double ridge,
                  bool* singular = nullptr);

// Samples are stored column-wise (n x N); the result is N x M.
Matrix CrossGram(const KernelSpec& spec, const Matrix& samples,
                 const Dictionary& dict);

Vector EvalPolicy(const KernelPolicy& policy, int t, const Vector& x);

// Median of pairwise Euclidean distances between the columns of `samples`.
// Returns `fallback` when fewer than two distinct columns exist.
double MedianPairwiseDistance(const Matrix& samples, double fallback = 1.0);

// Ridge actually used in Gram solves: relative * mean(diag(K)).
double ScaledRidge(const Matrix& gram_without_ridge, double relative);

}  // namespace kpi

#endif  // KPI_KERNEL_HPP_
