// Copyright 2026 The bellsim Authors
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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bellsim/core.hpp"

namespace bellsim {

enum class Wing { first = 1, second = 2 };

enum class ModelKind { stochastic, deterministic };

/// A point lambda in the hidden-variable space. Fixed small capacity so that
/// sampling it costs no allocation.
class HiddenVar {
  public:
    static constexpr std::size_t kMaxDimension = 4;

    HiddenVar() = default;
    explicit HiddenVar(std::span<const double> values);
    HiddenVar(std::initializer_list<double> values);

    std::size_t size() const { return size_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return {values_.data(), size_}; }

  private:
    std::array<double, kMaxDimension> values_{};
    std::size_t size_ = 0;
};

/*!
 * A local hidden-variable model: a density rho over lambda plus, for each wing,
 * the outcome probabilities given (direction, lambda).
 *
 * Locality is structural: a wing's probabilities never see the other wing's
 * setting.
 */
class LhvModel {
  public:
    virtual ~LhvModel() = default;

    virtual std::string name() const = 0;
    virtual ModelKind kind() const = 0;
    /// Number of components of lambda; at most HiddenVar::kMaxDimension.
    virtual std::size_t dimension() const = 0;
    /// Transforms dimension() independent uniforms on (0, 1) into a draw from rho.
    virtual HiddenVar sample(std::span<const double> uniforms) const = 0;
    virtual ProbTriple probabilities(Wing wing, AnalyzerAngle direction, const HiddenVar& lambda) const = 0;
    /// True when the detection mass does not depend on the analyzer direction.
    virtual bool respects_assumption_a() const = 0;
};

using LhvModelPtr = std::shared_ptr<const LhvModel>;

/// p+ - p- for one wing.
double epsilon(const LhvModel& model, Wing wing, AnalyzerAngle u, const HiddenVar& lambda);

/// epsilon1(a) * epsilon2(b); the Bell-local product.
double joint_epsilon(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, const HiddenVar& lambda);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

/// Monte Carlo estimate of C(a,b) = E_rho[joint_epsilon]. Requires n_samples >= 1000.
/// The result does not depend on `workers` (0 = hardware concurrency).
Estimate correlation(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, std::uint64_t n_samples,
                     std::uint64_t seed, std::size_t workers = 0);

/// Trapezoid-rule C(a,b) over the single uniform driving a 1-dimensional model.
double correlation_quadrature(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, std::size_t nodes = 2048);

enum class BtccVerdict { perfect_correlation_achieved, perfect_correlation_failed_stochastic, inconclusive };

std::string to_string(BtccVerdict verdict);

inline constexpr double kDefaultBtccTolerance = 1e-4;
inline constexpr double kBtccStderrMultiplier = 3.0;

struct BtccReport {
    AnalyzerAngle direction;
    double c_same = 0.0;
    double c_same_stderr = 0.0;
    /// rho-mass where either wing has |epsilon| < 1 - tol.
    double nondeterministic_mass = 0.0;
    BtccVerdict verdict = BtccVerdict::inconclusive;
    double tol = kDefaultBtccTolerance;
    double stderr_multiplier = kBtccStderrMultiplier;
    std::uint64_t samples = 0;
};

/// Perfect-correlation check at equal settings (a, a). Requires tol in (0, 0.1]
/// and n_samples >= 10^4.
BtccReport btcc_check(const LhvModel& model, AnalyzerAngle a, std::uint64_t n_samples, double tol, std::uint64_t seed,
                      std::size_t workers = 0);

/// Detection mass of the form base + amplitude * cos 2u.
struct DirectionalEfficiency {
    double base = 1.0;
    double cos2_amplitude = 0.0;

    double at(AnalyzerAngle u) const;
    bool is_constant() const { return cos2_amplitude == 0.0; }
    /// Throws unless the efficiency stays within [0, 1] for every direction.
    void validate() const;
};

/// p+ = 1 when cos 2(u - lambda) >= 0, scaled by a constant detection mass.
LhvModelPtr make_det_sign(double efficiency = 1.0);
/// p+ = cos^2(u - lambda), scaled by a constant detection mass.
LhvModelPtr make_malus(double efficiency = 1.0);
/// det_sign outcomes with a direction-dependent detection mass.
LhvModelPtr make_direction_biased_loss(DirectionalEfficiency efficiency);

/// Parses "det_sign", "malus_stochastic", "det_sign_lossy(0.5)",
/// "malus_lossy(0.8)" or "direction_biased_loss(0.8,0.1)". Parameters may also
/// follow a colon: "malus_lossy:0.8". Unknown names throw std::invalid_argument
/// listing the built-ins.
LhvModelPtr builtin_model(std::string_view spec);

std::vector<std::string> builtin_model_names();

}  // namespace bellsim
