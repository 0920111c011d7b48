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

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "bellsim/lhv.hpp"
#include "test_support.hpp"

namespace {

using namespace bellsim;
using testing_support::Gen;

std::vector<LhvModelPtr> all_builtins() {
    return {builtin_model("det_sign"),         builtin_model("malus_stochastic"),
            builtin_model("det_sign_lossy(0.5)"), builtin_model("malus_lossy(0.8)"),
            builtin_model("direction_biased_loss(0.8,0.1)")};
}

// epsilon = +-1 on lambda < 1/2 (deterministic sign), 0 elsewhere.
class HalfDeterministicModel final : public LhvModel {
  public:
    std::string name() const override { return "half_deterministic"; }
    ModelKind kind() const override { return ModelKind::stochastic; }
    std::size_t dimension() const override { return 2; }
    HiddenVar sample(std::span<const double> u) const override { return HiddenVar{u[0], kPi * u[1]}; }
    ProbTriple probabilities(Wing, AnalyzerAngle a, const HiddenVar& lambda) const override {
        if (lambda[0] < 0.5) {
            return std::cos(2 * (a.radians() - lambda[1])) >= 0 ? ProbTriple(1, 0, 0) : ProbTriple(0, 1, 0);
        }
        return ProbTriple(0.5, 0.5, 0);
    }
    bool respects_assumption_a() const override { return true; }
};

TEST(Epsilon, Examples) {
    const auto det = builtin_model("det_sign");
    const auto malus = builtin_model("malus_stochastic");
    const AnalyzerAngle u(0.3);
    EXPECT_EQ(epsilon(*det, Wing::first, u, HiddenVar{0.3}), 1.0);
    EXPECT_NEAR(epsilon(*malus, Wing::first, u, HiddenVar{0.3 + kPi / 4}), 0.0, 1e-15);
    EXPECT_NEAR(epsilon(*malus, Wing::second, u, HiddenVar{0.3}), 1.0, 1e-15);
}

TEST(JointEpsilon, Examples) {
    const auto det = builtin_model("det_sign");
    const auto malus = builtin_model("malus_stochastic");
    Gen gen(10);
    for (int i = 0; i < 500; ++i) {
        const AnalyzerAngle a(gen.uniform(0, kPi));
        const HiddenVar lambda{gen.uniform(0, kPi)};
        EXPECT_EQ(joint_epsilon(*det, a, a, lambda), 1.0);
        // Either factor zero: malus at 45 degrees from lambda.
        const AnalyzerAngle off(lambda[0] + kPi / 4);
        EXPECT_NEAR(joint_epsilon(*malus, off, a, lambda), 0.0, 1e-12);
    }
    EXPECT_NEAR(joint_epsilon(*malus, AnalyzerAngle(0.2), AnalyzerAngle(0.2), HiddenVar{0.2}), 1.0, 1e-15);
}

TEST(LhvModel, TriplesValidAndEpsilonBounded) {
    Gen gen(11);
    for (const auto& m : all_builtins()) {
        for (int i = 0; i < 2000; ++i) {
            const AnalyzerAngle u(gen.uniform(-5, 5));
            const double uni[4] = {gen.uniform(), gen.uniform(), gen.uniform(), gen.uniform()};
            const HiddenVar lambda = m->sample(std::span<const double>(uni, m->dimension()));
            ASSERT_EQ(lambda.size(), m->dimension());
            for (Wing w : {Wing::first, Wing::second}) {
                const ProbTriple t = m->probabilities(w, u, lambda);
                EXPECT_NEAR(t.plus() + t.minus() + t.none(), 1.0, 1e-12);
                EXPECT_LE(std::abs(epsilon(*m, w, u, lambda)), 1.0 + 1e-15);
                if (m->kind() == ModelKind::deterministic) {
                    for (double p : {t.plus(), t.minus(), t.none()}) {
                        EXPECT_TRUE(p == 0.0 || p == 1.0) << m->name();
                    }
                }
            }
        }
    }
}

TEST(BuiltinModel, Examples) {
    const auto det = builtin_model("det_sign");
    const ProbTriple t = det->probabilities(Wing::first, AnalyzerAngle(1.0), HiddenVar{1.0});
    EXPECT_EQ(t.plus(), 1.0);
    EXPECT_EQ(t.minus(), 0.0);
    EXPECT_EQ(t.none(), 0.0);

    const auto lossy = builtin_model("malus_lossy(0.8)");
    const ProbTriple m = lossy->probabilities(Wing::first, AnalyzerAngle(0.0), HiddenVar{kPi / 4});
    EXPECT_NEAR(m.plus(), 0.4, 1e-15);
    EXPECT_NEAR(m.minus(), 0.4, 1e-15);
    EXPECT_NEAR(m.none(), 0.2, 1e-15);

    const auto biased = builtin_model("direction_biased_loss(0.8,0.1)");
    EXPECT_NEAR(biased->probabilities(Wing::second, AnalyzerAngle(0.0), HiddenVar{0.4}).detection_mass(), 0.9, 1e-15);
    EXPECT_FALSE(biased->respects_assumption_a());
    EXPECT_TRUE(builtin_model("direction_biased_loss(0.8,0)")->respects_assumption_a());
}

TEST(BuiltinModel, NamesAndErrors) {
    EXPECT_EQ(builtin_model("det_sign")->kind(), ModelKind::deterministic);
    EXPECT_EQ(builtin_model("det_sign_lossy(0.5)")->kind(), ModelKind::stochastic);
    EXPECT_EQ(builtin_model("det_sign_lossy:0.5")->name(), "det_sign_lossy(0.5)");
    try {
        builtin_model("bohm");
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        for (const auto& name : {"det_sign", "malus_stochastic", "malus_lossy", "direction_biased_loss"}) {
            EXPECT_NE(msg.find(name), std::string::npos) << msg;
        }
    }
    EXPECT_THROW(builtin_model("det_sign_lossy(1.5)"), std::invalid_argument);
    EXPECT_THROW(builtin_model("direction_biased_loss(0.95,0.1)"), std::invalid_argument);
    EXPECT_THROW(builtin_model("malus_lossy(x)"), std::invalid_argument);
}

TEST(Correlation, Examples) {
    const auto det = builtin_model("det_sign");
    const auto malus = builtin_model("malus_stochastic");
    const AnalyzerAngle a(0.4);
    const Estimate same = correlation(*det, a, a, 100000, 1);
    EXPECT_EQ(same.value, 1.0);
    EXPECT_EQ(same.std_error, 0.0);

    const Estimate half = correlation(*malus, a, a, 1000000, 2);
    EXPECT_NEAR(half.value, 0.5, 3 * half.std_error);
    const Estimate zero = correlation(*malus, a, AnalyzerAngle(0.4 + kPi / 4), 1000000, 3);
    EXPECT_NEAR(zero.value, 0.0, 3 * zero.std_error);
    EXPECT_THROW(correlation(*det, a, a, 999, 1), std::invalid_argument);
}

TEST(Correlation, DetSignClosedForm) {
    const auto det = builtin_model("det_sign");
    Gen gen(12);
    for (int i = 0; i < 12; ++i) {
        const AnalyzerAngle a(gen.uniform(0, kPi));
        const AnalyzerAngle b(gen.uniform(0, kPi));
        const double expected = 1.0 - 4.0 / kPi * separation(a, b);
        const Estimate mc = correlation(*det, a, b, 200000, 100 + i);
        EXPECT_NEAR(mc.value, expected, 3 * mc.std_error + 1e-12);
        EXPECT_NEAR(correlation_quadrature(*det, a, b), expected, 2e-3);
    }
}

TEST(Correlation, MalusQuadratureIsHalfCosine) {
    const auto malus = builtin_model("malus_stochastic");
    Gen gen(13);
    for (int i = 0; i < 50; ++i) {
        const AnalyzerAngle a(gen.uniform(0, kPi));
        const AnalyzerAngle b(gen.uniform(0, kPi));
        EXPECT_NEAR(correlation_quadrature(*malus, a, b), 0.5 * cos2_difference(a, b), 1e-12);
    }
}

TEST(Correlation, BoundedAndWorkerIndependent) {
    Gen gen(14);
    for (const auto& m : all_builtins()) {
        const AnalyzerAngle a(gen.uniform(0, kPi));
        const AnalyzerAngle b(gen.uniform(0, kPi));
        const Estimate one = correlation(*m, a, b, 50000, 9, 1);
        const Estimate three = correlation(*m, a, b, 50000, 9, 3);
        EXPECT_LE(std::abs(one.value), 1.0);
        EXPECT_EQ(one.value, three.value) << m->name();
        EXPECT_EQ(one.std_error, three.std_error);
    }
}

TEST(Btcc, DeterministicSignAchieves) {
    const auto r = btcc_check(*builtin_model("det_sign"), AnalyzerAngle(0.0), 100000, kDefaultBtccTolerance, 1);
    EXPECT_EQ(r.verdict, BtccVerdict::perfect_correlation_achieved);
    EXPECT_EQ(r.c_same, 1.0);
    EXPECT_EQ(r.nondeterministic_mass, 0.0);
}

TEST(Btcc, MalusFails) {
    const auto r = btcc_check(*builtin_model("malus_stochastic"), AnalyzerAngle(0.7), 1000000, kDefaultBtccTolerance, 2);
    EXPECT_EQ(r.verdict, BtccVerdict::perfect_correlation_failed_stochastic);
    EXPECT_NEAR(r.c_same, 0.5, 0.01);
    // Exact mass is 1 - (2/pi) acos(1 - tol).
    const double expected = 1.0 - 2.0 / kPi * std::acos(1.0 - kDefaultBtccTolerance);
    EXPECT_NEAR(r.nondeterministic_mass, expected, 5 * std::sqrt(expected * (1 - expected) / 1e6));
}

TEST(Btcc, HalfDeterministicMixture) {
    const HalfDeterministicModel m;
    const auto r = btcc_check(m, AnalyzerAngle(0.2), 400000, kDefaultBtccTolerance, 3);
    EXPECT_NEAR(r.nondeterministic_mass, 0.5, 0.005);
    EXPECT_NEAR(r.c_same, 0.5, 0.005);
    EXPECT_NE(r.verdict, BtccVerdict::perfect_correlation_achieved);
}

TEST(Btcc, AchievedImpliesSmallStochasticMass) {
    Gen gen(15);
    std::vector<LhvModelPtr> models = all_builtins();
    models.push_back(std::make_shared<HalfDeterministicModel>());
    for (const auto& m : models) {
        for (int i = 0; i < 4; ++i) {
            const double tol = gen.uniform(1e-5, 0.1);
            const auto r = btcc_check(*m, AnalyzerAngle(gen.uniform(0, kPi)), 20000, tol, gen.next());
            EXPECT_GE(r.c_same, -1.0);
            EXPECT_LE(r.c_same, 1.0);
            EXPECT_GE(r.nondeterministic_mass, 0.0);
            EXPECT_LE(r.nondeterministic_mass, 1.0);
            if (r.verdict == BtccVerdict::perfect_correlation_achieved) {
                EXPECT_LE(r.nondeterministic_mass, tol) << m->name();
            }
        }
    }
}

TEST(Btcc, Preconditions) {
    const auto det = builtin_model("det_sign");
    EXPECT_THROW(btcc_check(*det, AnalyzerAngle(0), 100000, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(btcc_check(*det, AnalyzerAngle(0), 100000, 0.2, 1), std::invalid_argument);
    EXPECT_THROW(btcc_check(*det, AnalyzerAngle(0), 9999, 1e-3, 1), std::invalid_argument);
    EXPECT_EQ(to_string(BtccVerdict::inconclusive), "Inconclusive");
}

TEST(DirectionalEfficiency, Validation) {
    EXPECT_NEAR((DirectionalEfficiency{0.8, 0.1}).at(AnalyzerAngle(kPi / 2)), 0.7, 1e-15);
    EXPECT_THROW((DirectionalEfficiency{0.95, 0.1}).validate(), std::invalid_argument);
    EXPECT_THROW((DirectionalEfficiency{0.05, -0.1}).validate(), std::invalid_argument);
}

}  // namespace
