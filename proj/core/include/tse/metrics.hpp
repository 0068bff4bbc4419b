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

#include <span>
#include <vector>

#include "tse/waveform.hpp"

namespace tse {

struct MetricConfig {
  double eps = 1e-8;
  double sdr_cap_db = 60.0;

  void validate() const;
};

// Sample-wise sum. All components must share length and sample rate.
Waveform mix(std::span<const Waveform> components);

// -10 log10(|x|^2 / max(|x - est|^2, eps |x|^2)). Lower is better.
double neg_snr_loss(std::span<const double> estimate,
                    std::span<const double> reference,
                    const MetricConfig& cfg = {});
double neg_snr_loss(const Waveform& estimate, const Waveform& reference,
                    const MetricConfig& cfg = {});

// Same value as neg_snr_loss; writes d(loss)/d(estimate) into grad.
double neg_snr_loss_with_grad(std::span<const double> estimate,
                              std::span<const double> reference,
                              std::span<double> grad,
                              const MetricConfig& cfg = {});

// Scale-invariant SDR by projection onto the reference, no mean removal.
// Clamped to [-sdr_cap_db, sdr_cap_db].
double si_sdr(std::span<const double> estimate,
              std::span<const double> reference, const MetricConfig& cfg = {});
double si_sdr(const Waveform& estimate, const Waveform& reference,
              const MetricConfig& cfg = {});

double cosine_distance(std::span<const double> u, std::span<const double> v);
// Gradients of the distance with respect to both arguments.
double cosine_distance_with_grad(std::span<const double> u,
                                 std::span<const double> v,
                                 std::span<double> grad_u,
                                 std::span<double> grad_v);

// Gain to apply to noise samples so the resulting SNR equals target_snr_db.
double gain_for_snr(double signal_power, double noise_power,
                    double target_snr_db);

double snr_db(double signal_power, double noise_power);

}  // namespace tse
