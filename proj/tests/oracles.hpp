// Copyright 2026 The tse Authors
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

// Reference implementations written directly from the defining formulas,
// sharing no code with the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tse/model.hpp"

namespace tse::oracle {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double neg_snr(const std::vector<double>& est, const std::vector<double>& ref,
                      double eps = 1e-8) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += ref[i] * ref[i];
    den += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  if (den < eps * num) den = eps * num;
  return -10.0 * std::log10(num / den);
}

inline double si_sdr(const std::vector<double>& est, const std::vector<double>& ref,
                     double cap = 60.0) {
  const double alpha = dot(est, ref) / dot(ref, ref);
  double s = 0.0, e = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = alpha * ref[i];
    s += t * t;
    e += (est[i] - t) * (est[i] - t);
  }
  if (s == 0.0) return -cap;
  if (e == 0.0) return cap;
  const double v = 10.0 * std::log10(s / e);
  return std::fmax(-cap, std::fmin(cap, v));
}

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  return 1.0 - dot(u, v) / std::sqrt(dot(u, u) * dot(v, v));
}

inline double mean_square(const std::vector<double>& x) { return dot(x, x) / x.size(); }

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Parameter counts from per-layer arithmetic.
struct Counts {
  std::int64_t front = 0, block = 0, head = 0, enrollment = 0;
};

inline Counts count_params(int n, int l, int b, int h, int p, int x, int r, int d,
                           int enroll_r = 1) {
  Counts c;
  c.front = std::int64_t(n) * l + 2 * n + std::int64_t(b) * n + b;
  const std::int64_t per_block = 2 * std::int64_t(h) * b + std::int64_t(h) * p + 6 * h + b + 2;
  c.block = per_block * x * r;
  c.head = 1 + std::int64_t(n) * b + n + std::int64_t(l) * n;
  c.enrollment = c.front + per_block * x * enroll_r + std::int64_t(d) * b + d;
  return c;
}

}  // namespace tse::oracle
