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

#include "kpi/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace kpi {

std::string_view KernelFamilyName(KernelFamily family) {
  switch (family) {
    case KernelFamily::kGaussianRbf:
      return "gaussian-rbf";
    case KernelFamily::kLinear:
      return "linear";
    case KernelFamily::kPolynomial:
      return "polynomial";
  }
  return "unknown";
}

KernelFamily ParseKernelFamily(std::string_view name) {
  if (name == "gaussian-rbf") return KernelFamily::kGaussianRbf;
  if (name == "linear") return KernelFamily::kLinear;
  if (name == "polynomial") return KernelFamily::kPolynomial;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) +
                              "'");
}

void KernelSpec::Validate() const {
  if (family == KernelFamily::kGaussianRbf &&
      !(length_scale > 0.0 && std::isfinite(length_scale))) {
    throw std::invalid_argument("gaussian-rbf length_scale must be positive");
  }
  if (family == KernelFamily::kPolynomial) {
    if (degree < 1) {
      throw std::invalid_argument("polynomial degree must be >= 1");
    }
    if (!std::isfinite(offset)) {
      throw std::invalid_argument("polynomial offset must be finite");
    }
  }
}

bool Dictionary::HasDuplicates(double tol) const {
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) {
      if ((points.col(i) - points.col(j)).norm() <= tol) return true;
    }
  }
  return false;
}

KernelPolicy::KernelPolicy(KernelSpec kernel, int first_stage, int state_dim,
                           int input_dim, int num_stages)
    : kernel_(kernel),
      first_stage_(first_stage),
      state_dim_(state_dim),
      input_dim_(input_dim) {
  if (num_stages < 0 || first_stage < 0 || state_dim < 1 || input_dim < 1) {
    throw std::invalid_argument("KernelPolicy: invalid dimensions");
  }
  stages_.resize(static_cast<std::size_t>(num_stages));
  for (int k = 0; k < num_stages; ++k) {
    auto& s = stages_[static_cast<std::size_t>(k)];
    s.dictionary.points = Matrix(state_dim, 0);
    s.dictionary.stage = first_stage + k;
    s.coefficients = Matrix::Zero(0, input_dim);
  }
}

const StagePolicy& KernelPolicy::stage(int t) const {
  if (!Covers(t)) {
    throw std::out_of_range("policy stage " + std::to_string(t) +
                            " outside [" + std::to_string(first_stage_) +
                            ", " + std::to_string(end_stage()) + ")");
  }
  return stages_[static_cast<std::size_t>(t - first_stage_)];
}

StagePolicy& KernelPolicy::mutable_stage(int t) {
  return const_cast<StagePolicy&>(std::as_const(*this).stage(t));
}

void KernelPolicy::SetDictionary(int t, Dictionary dictionary) {
  if (dictionary.dim() != state_dim_) {
    throw std::invalid_argument("dictionary dimension mismatch");
  }
  auto& s = mutable_stage(t);
  dictionary.stage = t;
  s.coefficients = Matrix::Zero(dictionary.size(), input_dim_);
  s.dictionary = std::move(dictionary);
}

void KernelPolicy::SetCoefficients(int t, const Matrix& coefficients) {
  auto& s = mutable_stage(t);
  if (coefficients.rows() != s.dictionary.size() ||
      coefficients.cols() != input_dim_) {
    throw std::invalid_argument("coefficient shape must be M x m");
  }
  s.coefficients = coefficients;
}

Vector KernelPolicy::Evaluate(int t, const Vector& x) const {
  const auto& s = stage(t);
  if (x.size() != state_dim_) {
    throw std::invalid_argument("policy evaluated at wrong state dimension");
  }
  if (s.dictionary.empty()) return Vector::Zero(input_dim_);
  return s.coefficients.transpose() * KernelRow(kernel_, x, s.dictionary.points);
}

double EvalKernel(const KernelSpec& spec, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel arguments differ in dimension");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("kernel arguments must be finite");
  }
  switch (spec.family) {
    case KernelFamily::kGaussianRbf: {
      const double l2 = spec.length_scale * spec.length_scale;
      return std::exp(-(x - y).squaredNorm() / (2.0 * l2));
    }
    case KernelFamily::kLinear:
      return x.dot(y);
    case KernelFamily::kPolynomial:
      return std::pow(x.dot(y) + spec.offset, spec.degree);
  }
  return 0.0;
}

Vector KernelRow(const KernelSpec& spec, const Vector& x,
                 const Matrix& points) {
  if (x.size() != points.rows()) {
    throw std::invalid_argument("kernel arguments differ in dimension");
  }
  switch (spec.family) {
    case KernelFamily::kGaussianRbf: {
      const double scale = -0.5 / (spec.length_scale * spec.length_scale);
      return ((points.colwise() - x).colwise().squaredNorm().transpose() *
              scale)
          .array()
          .exp();
    }
    case KernelFamily::kLinear:
      return points.transpose() * x;
    case KernelFamily::kPolynomial: {
      Vector dots = points.transpose() * x;
      return (dots.array() + spec.offset).pow(spec.degree);
    }
  }
  return Vector::Zero(points.cols());
}

Matrix GramMatrix(const KernelSpec& spec, const Dictionary& dict, double ridge,
                  bool* singular) {
  if (dict.empty()) throw std::invalid_argument("empty dictionary");
  if (ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");
  const int m = dict.size();
  Matrix gram(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const double k = EvalKernel(spec, dict.points.col(i), dict.points.col(j));
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  gram.diagonal().array() += ridge;
  if (singular != nullptr) *singular = ridge == 0.0 && dict.HasDuplicates();
  return gram;
}

Matrix CrossGram(const KernelSpec& spec, const Matrix& samples,
                 const Dictionary& dict) {
  if (samples.cols() == 0) throw std::invalid_argument("no samples");
  if (samples.rows() != dict.dim()) {
    throw std::invalid_argument("sample and dictionary dimensions differ");
  }
  Matrix cross(samples.cols(), dict.size());
  for (Eigen::Index i = 0; i < samples.cols(); ++i) {
    cross.row(i) = KernelRow(spec, samples.col(i), dict.points).transpose();
  }
  return cross;
}

Vector EvalPolicy(const KernelPolicy& policy, int t, const Vector& x) {
  return policy.Evaluate(t, x);
}

double MedianPairwiseDistance(const Matrix& samples, double fallback) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < samples.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < samples.cols(); ++j) {
      const double v = (samples.col(i) - samples.col(j)).norm();
      if (v > 0.0) d.push_back(v);
    }
  }
  if (d.empty()) return fallback;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double ScaledRidge(const Matrix& gram_without_ridge, double relative) {
  if (gram_without_ridge.size() == 0) return 0.0;
  return relative * gram_without_ridge.diagonal().mean();
}

}  // namespace kpi
