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

#include "tse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tse/error.hpp"

namespace tse {

namespace {

constexpr double kDbPerNeper = 10.0 / 2.302585092994045684;  // 10 / ln(10)

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_pair(std::span<const double> a, std::span<const double> b,
                const char* what) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch,
          std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
              " vs " + std::to_string(b.size()) + ")");
  require(!a.empty(), ErrorCode::kInvalidArgument,
          std::string(what) + ": empty input");
}

}  // namespace

void MetricConfig::validate() const {
  require(eps > 0.0, ErrorCode::kConfig, "must be > 0", "metric.eps");
  require(std::isfinite(sdr_cap_db), ErrorCode::kConfig, "must be finite",
          "metric.sdr_cap_db");
}

Waveform mix(std::span<const Waveform> components) {
  require(!components.empty(), ErrorCode::kInvalidArgument,
          "mix: no components");
  const Waveform& first = components.front();
  std::vector<double> out(first.samples().begin(), first.samples().end());
  for (std::size_t k = 1; k < components.size(); ++k) {
    const Waveform& c = components[k];
    const std::string who = "component " + std::to_string(k);
    require(c.sample_rate() == first.sample_rate(), ErrorCode::kShapeMismatch,
            "sample rate " + std::to_string(c.sample_rate()) + " differs from " +
                std::to_string(first.sample_rate()),
            who);
    require(c.size() == first.size(), ErrorCode::kShapeMismatch,
            "length " + std::to_string(c.size()) + " differs from " +
                std::to_string(first.size()),
            who);
    const auto s = c.samples();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s[i];
  }
  return Waveform(std::move(out), first.sample_rate());
}

double neg_snr_loss(std::span<const double> estimate,
                    std::span<const double> reference, const MetricConfig& cfg) {
  check_pair(estimate, reference, "neg_snr_loss");
  const double ref_energy = dot(reference, reference);
  require(ref_energy > 0.0, ErrorCode::kNumeric,
          "neg_snr_loss: reference is all zero");
  double err_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    err_energy += d * d;
  }
  const double denom = std::max(err_energy, cfg.eps * ref_energy);
  return -10.0 * std::log10(ref_energy / denom);
}

double neg_snr_loss(const Waveform& estimate, const Waveform& reference,
                    const MetricConfig& cfg) {
  return neg_snr_loss(estimate.samples(), reference.samples(), cfg);
}

double neg_snr_loss_with_grad(std::span<const double> estimate,
                              std::span<const double> reference,
                              std::span<double> grad, const MetricConfig& cfg) {
  const double loss = neg_snr_loss(estimate, reference, cfg);
  require(grad.size() == estimate.size(), ErrorCode::kShapeMismatch,
          "neg_snr_loss_with_grad: gradient buffer length");
  const double ref_energy = dot(reference, reference);
  double err_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    err_energy += d * d;
  }
  if (err_energy <= cfg.eps * ref_energy) {
    // Clamped branch is constant in the estimate.
    std::fill(grad.begin(), grad.end(), 0.0);
    return loss;
  }
  // loss = 10 log10(|x - est|^2) - 10 log10(|x|^2)
  const double scale = -2.0 * kDbPerNeper / err_energy;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    grad[i] = scale * (reference[i] - estimate[i]);
  }
  return loss;
}

double si_sdr(std::span<const double> estimate,
              std::span<const double> reference, const MetricConfig& cfg) {
  check_pair(estimate, reference, "si_sdr");
  const double ref_energy = dot(reference, reference);
  require(ref_energy > 0.0, ErrorCode::kNumeric, "si_sdr: reference is all zero");
  const double cap = cfg.sdr_cap_db;
  const double alpha = dot(estimate, reference) / ref_energy;
  double target_energy = 0.0;
  double err_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = alpha * reference[i];
    const double e = estimate[i] - s;
    target_energy += s * s;
    err_energy += e * e;
  }
  if (target_energy <= 0.0) return -cap;
  if (err_energy <= 0.0) return cap;
  const double sdr = 10.0 * std::log10(target_energy / err_energy);
  return std::clamp(sdr, -cap, cap);
}

double si_sdr(const Waveform& estimate, const Waveform& reference,
              const MetricConfig& cfg) {
  return si_sdr(estimate.samples(), reference.samples(), cfg);
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  check_pair(u, v, "cosine_distance");
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  require(nu > 0.0 && nv > 0.0, ErrorCode::kNumeric,
          "cosine_distance: zero-norm input");
  return 1.0 - dot(u, v) / (nu * nv);
}

double cosine_distance_with_grad(std::span<const double> u,
                                 std::span<const double> v,
                                 std::span<double> grad_u,
                                 std::span<double> grad_v) {
  const double dist = cosine_distance(u, v);
  require(grad_u.size() == u.size() && grad_v.size() == v.size(),
          ErrorCode::kShapeMismatch, "cosine_distance_with_grad: buffers");
  const double uu = dot(u, u);
  const double vv = dot(v, v);
  const double uv = dot(u, v);
  const double inv = 1.0 / std::sqrt(uu * vv);
  // d/du [ -uv / (|u||v|) ] = -(v - (uv/uu) u) / (|u||v|)
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_u[i] = -(v[i] - (uv / uu) * u[i]) * inv;
    grad_v[i] = -(u[i] - (uv / vv) * v[i]) * inv;
  }
  return dist;
}

double gain_for_snr(double signal_power, double noise_power,
                    double target_snr_db) {
  require(signal_power > 0.0, ErrorCode::kInvalidArgument,
          "gain_for_snr: signal power must be positive");
  require(noise_power > 0.0, ErrorCode::kInvalidArgument,
          "gain_for_snr: noise power must be positive");
  return std::sqrt(signal_power /
                   (noise_power * std::pow(10.0, target_snr_db / 10.0)));
}

double snr_db(double signal_power, double noise_power) {
  require(signal_power > 0.0 && noise_power > 0.0, ErrorCode::kInvalidArgument,
          "snr_db: powers must be positive");
  return 10.0 * std::log10(signal_power / noise_power);
}

}  // namespace tse
