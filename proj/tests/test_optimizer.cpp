#include "scorefollow/optimizer.hpp"

#include <gtest/gtest.h>

using namespace scorefollow;

TEST(AdamW, NoopWithZeroGradAndZeroDecay) {
    std::vector<double> params{1.0, -2.0, 0.5};
    std::vector<double> grads{0.0, 0.0, 0.0};
    AdamWState st(3);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    adamw_step(params, grads, st, cfg, cfg.lr);
    EXPECT_DOUBLE_EQ(params[0], 1.0);
    EXPECT_DOUBLE_EQ(params[1], -2.0);
    EXPECT_DOUBLE_EQ(params[2], 0.5);
}

TEST(AdamW, DecayAppliesWithoutGradient) {
    std::vector<double> params{1.0};
    std::vector<double> grads{0.0};
    AdamWState st(1);
    AdamWConfig cfg;
    cfg.weight_decay = 0.01;
    adamw_step(params, grads, st, cfg, 0.1);
    EXPECT_DOUBLE_EQ(params[0], 1.0 - 0.1 * 0.01);
}

// Frozen three-step scalar trace computed independently:
// p0 = 1, grads (0.5, -0.25, 1.0), lr = 0.1, wd = 0.01, betas (0.9, 0.999).
TEST(AdamW, MatchesHandSteppedTrace) {
    std::vector<double> params{1.0};
    AdamWState st(1);
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.01;
    const double expected[3] = {0.899000002, 0.8714672987058463, 0.804784672376384};
    const double grads[3] = {0.5, -0.25, 1.0};
    for (int i = 0; i < 3; ++i) {
        std::vector<double> g{grads[i]};
        adamw_step(params, g, st, cfg, cfg.lr);
        ASSERT_NEAR(params[0], expected[i], 1e-15);
    }
}

TEST(AdamW, SizeMismatchThrows) {
    std::vector<double> params{1.0};
    std::vector<double> grads{0.0, 0.0};
    AdamWState st(1);
    EXPECT_THROW(adamw_step(params, grads, st, AdamWConfig{}, 0.1), ConfigError);
}

TEST(CosineSchedule, EndpointsAndMidpoint) {
    CosineSchedule s{5e-4, 1e-6, 10};  // full period 40 epochs
    EXPECT_DOUBLE_EQ(s.at(0), 5e-4);
    EXPECT_NEAR(s.at(20), 1e-6 + (5e-4 - 1e-6) / 2.0, 1e-18);  // half period -> midpoint
    EXPECT_NEAR(s.at(40), 1e-6, 1e-18);
}

TEST(CosineSchedule, MonotoneOverFirstHalfCycle) {
    CosineSchedule s{5e-4, 1e-6, 10};
    for (std::size_t t = 1; t <= 40; ++t) EXPECT_LT(s.at(t), s.at(t - 1));
}
