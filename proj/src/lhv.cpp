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

#include "bellsim/lhv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bellsim/rng.hpp"
#include "parallel.hpp"

namespace bellsim {

namespace {

constexpr std::uint32_t kHiddenStream = 0x4C48u;
constexpr std::uint64_t kChunkSize = 1u << 14;

void check_efficiency(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("detection efficiency must lie in [0, 1]");
    }
}

// Hidden polarization angle uniform on [0, pi).
class AngleModel : public LhvModel {
  public:
    std::size_t dimension() const override { return 1; }

    HiddenVar sample(std::span<const double> uniforms) const override { return HiddenVar{kPi * uniforms[0]}; }
};

class DetSignModel final : public AngleModel {
  public:
    explicit DetSignModel(double efficiency) : efficiency_(efficiency) { check_efficiency(efficiency); }

    std::string name() const override {
        if (efficiency_ == 1.0) {
            return "det_sign";
        }
        std::ostringstream out;
        out << "det_sign_lossy(" << efficiency_ << ")";
        return out.str();
    }

    ModelKind kind() const override {
        return efficiency_ == 1.0 ? ModelKind::deterministic : ModelKind::stochastic;
    }

    ProbTriple probabilities(Wing, AnalyzerAngle u, const HiddenVar& lambda) const override {
        const bool pass = std::cos(2.0 * (u.radians() - lambda[0])) >= 0.0;
        return pass ? ProbTriple(efficiency_, 0.0, 1.0 - efficiency_) : ProbTriple(0.0, efficiency_, 1.0 - efficiency_);
    }

    bool respects_assumption_a() const override { return true; }

  private:
    double efficiency_;
};

class MalusModel final : public AngleModel {
  public:
    explicit MalusModel(double efficiency) : efficiency_(efficiency) { check_efficiency(efficiency); }

    std::string name() const override {
        if (efficiency_ == 1.0) {
            return "malus_stochastic";
        }
        std::ostringstream out;
        out << "malus_lossy(" << efficiency_ << ")";
        return out.str();
    }

    ModelKind kind() const override { return ModelKind::stochastic; }

    ProbTriple probabilities(Wing, AnalyzerAngle u, const HiddenVar& lambda) const override {
        const double c = std::cos(u.radians() - lambda[0]);
        const double pass = c * c;
        return ProbTriple::from_detected(efficiency_ * pass, efficiency_ * (1.0 - pass));
    }

    bool respects_assumption_a() const override { return true; }

  private:
    double efficiency_;
};

class DirectionBiasedLossModel final : public AngleModel {
  public:
    explicit DirectionBiasedLossModel(DirectionalEfficiency efficiency) : efficiency_(efficiency) {
        efficiency_.validate();
    }

    std::string name() const override {
        std::ostringstream out;
        out << "direction_biased_loss(" << efficiency_.base << "," << efficiency_.cos2_amplitude << ")";
        return out.str();
    }

    ModelKind kind() const override { return ModelKind::stochastic; }

    ProbTriple probabilities(Wing, AnalyzerAngle u, const HiddenVar& lambda) const override {
        const double eta = efficiency_.at(u);
        const bool pass = std::cos(2.0 * (u.radians() - lambda[0])) >= 0.0;
        return pass ? ProbTriple(eta, 0.0, 1.0 - eta) : ProbTriple(0.0, eta, 1.0 - eta);
    }

    bool respects_assumption_a() const override { return efficiency_.is_constant(); }

  private:
    DirectionalEfficiency efficiency_;
};

std::vector<double> parse_parameters(std::string_view text, std::string_view model) {
    std::vector<double> values;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view token = text.substr(0, comma);
        while (!token.empty() && token.front() == ' ') {
            token.remove_prefix(1);
        }
        while (!token.empty() && token.back() == ' ') {
            token.remove_suffix(1);
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
            throw std::invalid_argument("bad parameter '" + std::string(token) + "' for model " + std::string(model));
        }
        values.push_back(value);
        if (comma == std::string_view::npos) {
            break;
        }
        text.remove_prefix(comma + 1);
    }
    return values;
}

void expect_arity(const std::vector<double>& params, std::size_t n, std::string_view model) {
    if (params.size() != n) {
        throw std::invalid_argument("model " + std::string(model) + " takes " + std::to_string(n) + " parameter(s)");
    }
}

struct ChunkSums {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::uint64_t flagged = 0;
};

template <typename PerSample>
std::vector<ChunkSums> sample_chunks(const LhvModel& model, std::uint64_t n_samples, std::uint64_t seed,
                                     std::size_t workers, PerSample per_sample) {
    if (model.dimension() == 0 || model.dimension() > HiddenVar::kMaxDimension) {
        throw std::invalid_argument("model hidden-variable dimension must be in [1, 4]");
    }
    const auto gen = Philox4x32::from_seed(seed);
    const std::size_t n_chunks = static_cast<std::size_t>((n_samples + kChunkSize - 1) / kChunkSize);
    std::vector<ChunkSums> chunks(n_chunks);
    detail::for_each_chunk(n_chunks, workers, [&](std::size_t c) {
        const std::uint64_t begin = c * kChunkSize;
        const std::uint64_t end = std::min<std::uint64_t>(n_samples, begin + kChunkSize);
        ChunkSums acc;
        for (std::uint64_t i = begin; i < end; ++i) {
            const auto u = uniforms4(gen, make_counter(i, kHiddenStream, 0));
            const HiddenVar lambda = model.sample(std::span<const double>(u.data(), model.dimension()));
            per_sample(lambda, acc);
        }
        chunks[c] = acc;
    });
    return chunks;
}

Estimate summarize(const std::vector<ChunkSums>& chunks, std::uint64_t n) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& c : chunks) {
        sum += c.sum;
        sum_sq += c.sum_sq;
    }
    const double dn = static_cast<double>(n);
    const double mean = sum / dn;
    const double var = std::max(0.0, (sum_sq - dn * mean * mean) / (dn - 1.0));
    return Estimate{.value = std::clamp(mean, -1.0, 1.0), .std_error = std::sqrt(var / dn), .samples = n};
}

}  // namespace

HiddenVar::HiddenVar(std::span<const double> values) {
    if (values.size() > kMaxDimension) {
        throw std::invalid_argument("hidden variable dimension exceeds capacity");
    }
    std::copy(values.begin(), values.end(), values_.begin());
    size_ = values.size();
}

HiddenVar::HiddenVar(std::initializer_list<double> values)
    : HiddenVar(std::span<const double>(values.begin(), values.size())) {}

double epsilon(const LhvModel& model, Wing wing, AnalyzerAngle u, const HiddenVar& lambda) {
    const ProbTriple p = model.probabilities(wing, u, lambda);
    return p.plus() - p.minus();
}

double joint_epsilon(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, const HiddenVar& lambda) {
    return epsilon(model, Wing::first, a, lambda) * epsilon(model, Wing::second, b, lambda);
}

Estimate correlation(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, std::uint64_t n_samples,
                     std::uint64_t seed, std::size_t workers) {
    if (n_samples < 1000) {
        throw std::invalid_argument("correlation needs at least 1000 samples");
    }
    const auto chunks = sample_chunks(model, n_samples, seed, workers, [&](const HiddenVar& lambda, ChunkSums& acc) {
        const double e = joint_epsilon(model, a, b, lambda);
        acc.sum += e;
        acc.sum_sq += e * e;
    });
    return summarize(chunks, n_samples);
}

double correlation_quadrature(const LhvModel& model, AnalyzerAngle a, AnalyzerAngle b, std::size_t nodes) {
    if (model.dimension() != 1) {
        throw std::invalid_argument("quadrature requires a 1-dimensional hidden variable");
    }
    if (nodes < 2) {
        throw std::invalid_argument("quadrature needs at least 2 nodes");
    }
    // Uniforms must stay in the open interval; the end nodes are nudged inwards.
    const double h = 1.0 / static_cast<double>(nodes - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double u = std::clamp(static_cast<double>(i) * h, 1e-15, 1.0 - 1e-15);
        const double weight = (i == 0 || i + 1 == nodes) ? 0.5 : 1.0;
        const double uu[1] = {u};
        sum += weight * joint_epsilon(model, a, b, model.sample(uu));
    }
    return sum * h;
}

std::string to_string(BtccVerdict verdict) {
    switch (verdict) {
        case BtccVerdict::perfect_correlation_achieved:
            return "PerfectCorrelationAchieved";
        case BtccVerdict::perfect_correlation_failed_stochastic:
            return "PerfectCorrelationFailed_Stochastic";
        case BtccVerdict::inconclusive:
            return "Inconclusive";
    }
    return "Inconclusive";
}

BtccReport btcc_check(const LhvModel& model, AnalyzerAngle a, std::uint64_t n_samples, double tol,
                      std::uint64_t seed, std::size_t workers) {
    if (!(tol > 0.0 && tol <= 0.1)) {
        throw std::invalid_argument("btcc tolerance must lie in (0, 0.1]");
    }
    if (n_samples < 10000) {
        throw std::invalid_argument("btcc_check needs at least 10^4 samples");
    }
    const auto chunks = sample_chunks(model, n_samples, seed, workers, [&](const HiddenVar& lambda, ChunkSums& acc) {
        const double e1 = epsilon(model, Wing::first, a, lambda);
        const double e2 = epsilon(model, Wing::second, a, lambda);
        const double e = e1 * e2;
        acc.sum += e;
        acc.sum_sq += e * e;
        if (std::abs(e1) < 1.0 - tol || std::abs(e2) < 1.0 - tol) {
            ++acc.flagged;
        }
    });
    const Estimate c = summarize(chunks, n_samples);
    std::uint64_t flagged = 0;
    for (const auto& chunk : chunks) {
        flagged += chunk.flagged;
    }

    BtccReport report;
    report.direction = a;
    report.c_same = c.value;
    report.c_same_stderr = c.std_error;
    report.nondeterministic_mass = static_cast<double>(flagged) / static_cast<double>(n_samples);
    report.tol = tol;
    report.samples = n_samples;

    const double gap = 1.0 - std::abs(c.value);
    const double threshold = std::max(kBtccStderrMultiplier * c.std_error, tol);
    const bool correlated = gap <= threshold;
    const bool stochastic = report.nondeterministic_mass > tol;
    if (correlated && !stochastic) {
        report.verdict = BtccVerdict::perfect_correlation_achieved;
    } else if (!correlated && stochastic) {
        report.verdict = BtccVerdict::perfect_correlation_failed_stochastic;
    } else {
        report.verdict = BtccVerdict::inconclusive;
    }
    return report;
}

double DirectionalEfficiency::at(AnalyzerAngle u) const {
    return base + cos2_amplitude * std::cos(2.0 * u.radians());
}

void DirectionalEfficiency::validate() const {
    const double lo = base - std::abs(cos2_amplitude);
    const double hi = base + std::abs(cos2_amplitude);
    if (!(lo >= 0.0 && hi <= 1.0)) {
        throw std::invalid_argument("efficiency base +/- amplitude must stay within [0, 1]");
    }
}

LhvModelPtr make_det_sign(double efficiency) { return std::make_shared<DetSignModel>(efficiency); }

LhvModelPtr make_malus(double efficiency) { return std::make_shared<MalusModel>(efficiency); }

LhvModelPtr make_direction_biased_loss(DirectionalEfficiency efficiency) {
    return std::make_shared<DirectionBiasedLossModel>(efficiency);
}

std::vector<std::string> builtin_model_names() {
    return {"det_sign", "malus_stochastic", "det_sign_lossy(eta)", "malus_lossy(eta)",
            "direction_biased_loss(base,cos2_amplitude)"};
}

LhvModelPtr builtin_model(std::string_view spec) {
    std::string_view name = spec;
    std::string_view args;
    if (const auto open = spec.find('('); open != std::string_view::npos) {
        if (spec.back() != ')') {
            throw std::invalid_argument("unbalanced parentheses in model '" + std::string(spec) + "'");
        }
        name = spec.substr(0, open);
        args = spec.substr(open + 1, spec.size() - open - 2);
    } else if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
        name = spec.substr(0, colon);
        args = spec.substr(colon + 1);
    }
    const auto params = parse_parameters(args, name);

    if (name == "det_sign") {
        expect_arity(params, 0, name);
        return make_det_sign(1.0);
    }
    if (name == "malus_stochastic") {
        expect_arity(params, 0, name);
        return make_malus(1.0);
    }
    if (name == "det_sign_lossy") {
        expect_arity(params, 1, name);
        return make_det_sign(params[0]);
    }
    if (name == "malus_lossy") {
        expect_arity(params, 1, name);
        return make_malus(params[0]);
    }
    if (name == "direction_biased_loss") {
        expect_arity(params, 2, name);
        return make_direction_biased_loss({.base = params[0], .cos2_amplitude = params[1]});
    }
    std::string message = "unknown model '" + std::string(name) + "'; built-ins:";
    for (const auto& builtin : builtin_model_names()) {
        message += " " + builtin;
    }
    throw std::invalid_argument(message);
}

}  // namespace bellsim
