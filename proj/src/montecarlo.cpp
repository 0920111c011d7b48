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

#include "bellsim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "bellsim/rng.hpp"
#include "parallel.hpp"

namespace bellsim {

namespace {

constexpr std::uint64_t kPairsPerChunk = 1u << 16;

Outcome draw_outcome(const ProbTriple& p, double u) {
    if (u < p.plus()) {
        return Outcome::plus;
    }
    if (u < p.plus() + p.minus()) {
        return Outcome::minus;
    }
    return Outcome::none;
}

// Samples one setting pair. Draws for pair i of setting j come from counter
// (i, j, block), so any worker can produce any pair.
class PairSampler {
  public:
    PairSampler(const ExperimentConfig& cfg, std::size_t setting_index)
        : gen_(Philox4x32::from_seed(cfg.seed)),
          stream_(static_cast<std::uint32_t>(setting_index)),
          pair_(cfg.settings[setting_index]),
          eff1_(cfg.detector1.at(pair_.first)),
          eff2_(cfg.detector2.at(pair_.second)) {
        if (const auto* qm = std::get_if<QmSource>(&cfg.source)) {
            const JointTable table = qm_full_distribution(*qm, pair_.first, pair_.second);
            double running = 0.0;
            for (std::size_t k = 0; k < 9; ++k) {
                const double p = table.cells[k / 3][k % 3];
                running += p;
                cdf_[k] = running;
                if (p > 0.0) {
                    last_positive_ = k;
                }
            }
        } else {
            model_ = std::get<LhvModelPtr>(cfg.source).get();
        }
    }

    PairEvent sample(std::uint64_t i) const {
        PairEvent ev;
        std::array<double, 4> u{};
        if (model_ == nullptr) {
            u = uniforms4(gen_, make_counter(i, stream_, 0));
            std::size_t k = 0;
            while (k < last_positive_ && !(u[0] < cdf_[k])) {
                ++k;
            }
            ev.wing1 = kAllOutcomes[k / 3];
            ev.wing2 = kAllOutcomes[k % 3];
            u = {u[1], u[2], u[1], u[2]};
        } else {
            const auto hidden = uniforms4(gen_, make_counter(i, stream_, 0));
            ev.lambda = model_->sample(std::span<const double>(hidden.data(), model_->dimension()));
            u = uniforms4(gen_, make_counter(i, stream_, 1));
            // Each wing sees only its own setting and lambda.
            ev.wing1 = draw_outcome(model_->probabilities(Wing::first, pair_.first, ev.lambda), u[0]);
            ev.wing2 = draw_outcome(model_->probabilities(Wing::second, pair_.second, ev.lambda), u[1]);
            u = {u[2], u[3], u[2], u[3]};
        }
        if (ev.wing1 != Outcome::none && !(u[0] < eff1_)) {
            ev.wing1 = Outcome::none;
        }
        if (ev.wing2 != Outcome::none && !(u[1] < eff2_)) {
            ev.wing2 = Outcome::none;
        }
        return ev;
    }

  private:
    Philox4x32 gen_;
    std::uint32_t stream_;
    SettingPair pair_;
    double eff1_;
    double eff2_;
    const LhvModel* model_ = nullptr;
    std::array<double, 9> cdf_{};
    std::size_t last_positive_ = 0;
};

std::uint64_t detected_on_wing1(const CountsTable::Entry& e) {
    std::uint64_t n = 0;
    for (Outcome r : kDetectedOutcomes) {
        for (Outcome q : kAllOutcomes) {
            n += e(r, q);
        }
    }
    return n;
}

std::uint64_t detected_on_wing2(const CountsTable::Entry& e) {
    std::uint64_t n = 0;
    for (Outcome r : kAllOutcomes) {
        for (Outcome q : kDetectedOutcomes) {
            n += e(r, q);
        }
    }
    return n;
}

template <typename DetectedFn, typename DirectionFn>
WingHomogeneity test_wing(const CountsTable& counts, double significance, DetectedFn detected, DirectionFn direction) {
    WingHomogeneity wing;
    for (const auto& e : counts.entries()) {
        const AnalyzerAngle u = direction(e.pair);
        auto it = std::find_if(wing.directions.begin(), wing.directions.end(),
                               [&](const DirectionCount& d) { return d.direction == u; });
        if (it == wing.directions.end()) {
            wing.directions.push_back({u, 0, 0});
            it = std::prev(wing.directions.end());
        }
        it->detected += detected(e);
        it->emitted += e.n_emitted;
    }
    if (wing.directions.size() < 2) {
        throw std::invalid_argument("insufficient directions: each wing needs at least two analyzer directions");
    }
    std::sort(wing.directions.begin(), wing.directions.end(),
              [](const DirectionCount& x, const DirectionCount& y) { return x.direction < y.direction; });
    std::vector<std::uint64_t> successes;
    std::vector<std::uint64_t> trials;
    for (const auto& d : wing.directions) {
        successes.push_back(d.detected);
        trials.push_back(d.emitted);
    }
    wing.test = chi_square_homogeneity(successes, trials);
    wing.pass = wing.test.p_value >= significance;
    return wing;
}

double binomial_variance(std::uint64_t n, std::uint64_t total) {
    if (total == 0) {
        return 0.0;
    }
    const double p = static_cast<double>(n) / static_cast<double>(total);
    return static_cast<double>(total) * p * (1.0 - p);
}

}  // namespace

std::string describe(const Source& source) {
    if (const auto* qm = std::get_if<QmSource>(&source)) {
        std::ostringstream out;
        out << "qm(sign=" << qm->correlation_sign << ",F=" << qm->visibility << ",eta=" << qm->efficiency << ")";
        return out.str();
    }
    const auto& model = std::get<LhvModelPtr>(source);
    return model ? model->name() : "null";
}

void ExperimentConfig::validate() const {
    if (const auto* qm = std::get_if<QmSource>(&source)) {
        qm->validate();
    } else if (!std::get<LhvModelPtr>(source)) {
        throw std::invalid_argument("experiment source model is null");
    } else if (std::get<LhvModelPtr>(source)->dimension() > HiddenVar::kMaxDimension) {
        throw std::invalid_argument("model hidden-variable dimension exceeds 4");
    }
    if (settings.empty()) {
        throw std::invalid_argument("experiment needs at least one setting pair");
    }
    if (pairs_per_setting < 1) {
        throw std::invalid_argument("pairs_per_setting must be at least 1");
    }
    for (std::size_t i = 0; i < settings.size(); ++i) {
        for (std::size_t j = i + 1; j < settings.size(); ++j) {
            if (settings[i] == settings[j]) {
                throw std::invalid_argument("duplicate setting pair in experiment");
            }
        }
    }
    detector1.validate();
    detector2.validate();
}

CountsTable run_experiment(const ExperimentConfig& cfg, std::size_t workers) {
    cfg.validate();
    const std::uint64_t chunks_per_setting = (cfg.pairs_per_setting + kPairsPerChunk - 1) / kPairsPerChunk;
    const std::size_t n_chunks = static_cast<std::size_t>(chunks_per_setting * cfg.settings.size());

    std::vector<PairSampler> samplers;
    samplers.reserve(cfg.settings.size());
    for (std::size_t j = 0; j < cfg.settings.size(); ++j) {
        samplers.emplace_back(cfg, j);
    }

    std::vector<CountCells> partial(n_chunks);
    detail::for_each_chunk(n_chunks, workers, [&](std::size_t c) {
        const std::size_t j = c / chunks_per_setting;
        const std::uint64_t begin = (c % chunks_per_setting) * kPairsPerChunk;
        const std::uint64_t end = std::min(cfg.pairs_per_setting, begin + kPairsPerChunk);
        CountCells local{};
        for (std::uint64_t i = begin; i < end; ++i) {
            const PairEvent ev = samplers[j].sample(i);
            ++local[outcome_index(ev.wing1)][outcome_index(ev.wing2)];
        }
        partial[c] = local;
    });

    CountsTable table;
    for (std::size_t j = 0; j < cfg.settings.size(); ++j) {
        CountCells merged{};
        for (std::uint64_t k = 0; k < chunks_per_setting; ++k) {
            const auto& local = partial[j * chunks_per_setting + k];
            for (std::size_t r = 0; r < 3; ++r) {
                for (std::size_t q = 0; q < 3; ++q) {
                    merged[r][q] += local[r][q];
                }
            }
        }
        table.add(cfg.settings[j], merged, cfg.pairs_per_setting);
    }
    return table;
}

std::vector<PairEvent> trace_pairs(const ExperimentConfig& cfg, std::size_t setting_index, std::uint64_t first,
                                   std::uint64_t count) {
    cfg.validate();
    if (setting_index >= cfg.settings.size()) {
        throw std::out_of_range("setting index out of range");
    }
    const PairSampler sampler(cfg, setting_index);
    std::vector<PairEvent> events;
    events.reserve(count);
    for (std::uint64_t i = first; i < first + count; ++i) {
        events.push_back(sampler.sample(i));
    }
    return events;
}

JointDistribution probabilities_from_counts(const CountsTable& counts) {
    JointDistribution dist;
    for (const auto& e : counts.entries()) {
        if (e.n_emitted == 0) {
            throw std::invalid_argument("zero emissions: probabilities are undefined");
        }
        const double n = static_cast<double>(e.n_emitted);
        JointTable table;
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t q = 0; q < 3; ++q) {
                table.cells[r][q] = static_cast<double>(e.counts[r][q]) / n;
            }
        }
        dist.set(e.pair, table);
    }
    return dist;
}

RatioReport ratio_statistic(const CountsTable& counts, const SettingsQuad& quad, Outcome r, Outcome q) {
    if (r == Outcome::none || q == Outcome::none) {
        throw std::invalid_argument("r and q must be +1 or -1");
    }
    const auto pairs = g_setting_pairs(quad);
    std::array<const CountsTable::Entry*, 6> e{};
    for (std::size_t k = 0; k < 6; ++k) {
        e[k] = &counts.at(pairs[k]);
        if (e[k]->n_emitted != e[0]->n_emitted) {
            throw std::invalid_argument("unequal emission counts across the six setting pairs");
        }
    }
    const std::uint64_t total = e[0]->n_emitted;
    const std::array<std::uint64_t, 6> n = {(*e[0])(r, q), (*e[1])(r, q), (*e[2])(r, q),
                                            (*e[3])(r, q), (*e[4])(r, r), (*e[5])(q, q)};

    RatioReport report;
    report.numerator = static_cast<std::int64_t>(n[0]) - static_cast<std::int64_t>(n[1]) +
                       static_cast<std::int64_t>(n[2]) + static_cast<std::int64_t>(n[3]);
    report.denominator = static_cast<std::int64_t>(n[4] + n[5]);
    if (report.denominator == 0) {
        throw NoCoincidencesError("zero denominator: no same-direction coincidences recorded");
    }
    const double num = static_cast<double>(report.numerator);
    const double den = static_cast<double>(report.denominator);
    report.ratio = num / den;

    // The six counts come from distinct settings, hence are independent.
    double var_num = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        var_num += binomial_variance(n[k], total);
    }
    const double var_den = binomial_variance(n[4], total) + binomial_variance(n[5], total);
    report.std_error = std::sqrt(var_num / (den * den) + num * num * var_den / (den * den * den * den));
    report.violated = report.ratio > 1.0 + kRatioSigmas * report.std_error;
    return report;
}

ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> successes,
                                       std::span<const std::uint64_t> trials) {
    if (successes.size() != trials.size()) {
        throw std::invalid_argument("chi-square groups: size mismatch");
    }
    double s_total = 0.0;
    double t_total = 0.0;
    std::size_t groups = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (successes[i] > trials[i]) {
            throw std::invalid_argument("chi-square groups: more successes than trials");
        }
        if (trials[i] > 0) {
            s_total += static_cast<double>(successes[i]);
            t_total += static_cast<double>(trials[i]);
            ++groups;
        }
    }
    ChiSquareResult result;
    if (groups < 2) {
        throw std::invalid_argument("chi-square homogeneity needs at least two non-empty groups");
    }
    result.dof = groups - 1;
    const double p = s_total / t_total;
    if (p <= 0.0 || p >= 1.0) {
        return result;
    }
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (trials[i] == 0) {
            continue;
        }
        const double t = static_cast<double>(trials[i]);
        const double diff = static_cast<double>(successes[i]) - t * p;
        result.statistic += diff * diff / (t * p * (1.0 - p));
    }
    const boost::math::chi_squared dist(static_cast<double>(result.dof));
    result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
    return result;
}

AssumptionAReport assumption_a_test(const CountsTable& counts, double significance) {
    if (!(significance > 0.0 && significance < 1.0)) {
        throw std::invalid_argument("significance must lie in (0, 1)");
    }
    AssumptionAReport report;
    report.significance = significance;
    report.wing1 = test_wing(counts, significance, detected_on_wing1, [](const SettingPair& p) { return p.first; });
    report.wing2 = test_wing(counts, significance, detected_on_wing2, [](const SettingPair& p) { return p.second; });
    report.statistic = std::max(report.wing1.test.statistic, report.wing2.test.statistic);
    report.p_value = std::min(report.wing1.test.p_value, report.wing2.test.p_value);
    report.pass = report.wing1.pass && report.wing2.pass;
    return report;
}

ChshReport chsh_from_counts(const CountsTable& counts, const SettingsQuad& quad) {
    const std::array<SettingPair, 4> pairs = {SettingPair{quad.a, quad.b}, SettingPair{quad.a_prime, quad.b},
                                              SettingPair{quad.a_prime, quad.b_prime},
                                              SettingPair{quad.a, quad.b_prime}};
    ChshReport report;
    double var = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& e = counts.at(pairs[k]);
        const double c = correlation_from_counts(e);
        const double n = static_cast<double>(e(Outcome::plus, Outcome::plus) + e(Outcome::plus, Outcome::minus) +
                                             e(Outcome::minus, Outcome::plus) + e(Outcome::minus, Outcome::minus));
        report.correlations[k] = c;
        report.std_errors[k] = std::sqrt(std::max(0.0, 1.0 - c * c) / n);
        var += report.std_errors[k] * report.std_errors[k];
    }
    report.value = chsh_statistic(report.correlations[0], report.correlations[1], report.correlations[2],
                                  report.correlations[3]);
    report.std_error = std::sqrt(var);
    return report;
}

}  // namespace bellsim
