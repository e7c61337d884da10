#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vpt/optimizer.hpp"

using namespace vpt;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.frames = 4;
    cfg.res = 16;
    cfg.tubelet = 2;
    cfg.patch = 8;
    cfg.dim = 16;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.channels = 1;
    return cfg;
}

}  // namespace

TEST_CASE("zero gradients leave parameters unchanged when decay is off") {
    ModelConfig cfg = tiny_config();
    ModelParams<float> params = init_params<float>(cfg, 1);
    ModelParams<float> before = params;
    ModelParams<float> grads = zero_params<float>(cfg);
    AdamState<float> state = AdamState<float>::make(cfg);
    adamw_step(params, grads, state, 0.1, 0.0);
    auto pv = tensor_views(params), bv = tensor_views(before);
    for (std::size_t t = 0; t < pv.size(); ++t)
        for (long i = 0; i < pv[t].size(); ++i) REQUIRE(pv[t].data[i] == bv[t].data[i]);
    REQUIRE(state.step == 1);
}

TEST_CASE("decay alone multiplies every parameter by 1 - lr*wd") {
    ModelConfig cfg = tiny_config();
    ModelParams<float> params = init_params<float>(cfg, 2);
    ModelParams<float> before = params;
    ModelParams<float> grads = zero_params<float>(cfg);
    AdamState<float> state = AdamState<float>::make(cfg);
    adamw_step(params, grads, state, 0.1, 0.05);  // decay factor 0.995
    auto pv = tensor_views(params), bv = tensor_views(before);
    for (std::size_t t = 0; t < pv.size(); ++t)
        for (long i = 0; i < pv[t].size(); ++i)
            REQUIRE(pv[t].data[i] ==
                    Catch::Approx(bv[t].data[i] * 0.995).margin(1e-7));
}

TEST_CASE("first step with unit gradient moves a parameter by about -lr") {
    // After bias correction, mhat = g and vhat = g^2, so the update is
    // -lr * g / (|g| + eps) = -lr for g = 1.
    ModelConfig cfg = tiny_config();
    ModelParams<float> params = zero_params<float>(cfg);
    ModelParams<float> grads = zero_params<float>(cfg);
    grads.head_b(0) = 1.f;
    AdamState<float> state = AdamState<float>::make(cfg);
    adamw_step(params, grads, state, 0.01, 0.0);
    REQUIRE(params.head_b(0) == Catch::Approx(-0.01).epsilon(1e-5));
    // everything else stays put (zero grad, zero decay)
    REQUIRE(params.head_b(1) == 0.f);
    REQUIRE(params.tubelet_w(0, 0) == 0.f);
}

TEST_CASE("steps are deterministic and accumulate momentum") {
    ModelConfig cfg = tiny_config();
    ModelParams<float> a = init_params<float>(cfg, 3);
    ModelParams<float> b = a;
    ModelParams<float> grads = zero_params<float>(cfg);
    grads.head_w.setConstant(0.5f);
    AdamState<float> sa = AdamState<float>::make(cfg);
    AdamState<float> sb = AdamState<float>::make(cfg);
    for (int i = 0; i < 5; ++i) adamw_step(a, grads, sa, 1e-3);
    for (int i = 0; i < 5; ++i) adamw_step(b, grads, sb, 1e-3);
    REQUIRE(sa.step == 5);
    auto va = tensor_views(a), vb = tensor_views(b);
    for (std::size_t t = 0; t < va.size(); ++t)
        for (long i = 0; i < va[t].size(); ++i) REQUIRE(va[t].data[i] == vb[t].data[i]);
}

TEST_CASE("non-finite gradients are rejected by tensor name") {
    ModelConfig cfg = tiny_config();
    ModelParams<float> params = init_params<float>(cfg, 4);
    ModelParams<float> grads = zero_params<float>(cfg);
    grads.blocks[0].qkv_w(1, 1) = std::numeric_limits<float>::infinity();
    AdamState<float> state = AdamState<float>::make(cfg);
    REQUIRE_THROWS_WITH(adamw_step(params, grads, state, 1e-3),
                        Catch::Matchers::ContainsSubstring("qkv.w"));
    REQUIRE(state.step == 0);  // the failed step does not advance the clock
}

TEST_CASE("learning-rate schedule hits its anchor points exactly") {
    const double base = 6.25e-5;
    // warmup = floor(0.05 * 1000) = 50
    REQUIRE(lr_schedule(0, 1000, 0.05, base) == 0.0);
    REQUIRE(lr_schedule(50, 1000, 0.05, base) == base);
    REQUIRE(lr_schedule(525, 1000, 0.05, base) == Catch::Approx(base / 2).margin(base * 1e-12));
    REQUIRE(lr_schedule(1000, 1000, 0.05, base) == Catch::Approx(0.0).margin(base * 1e-9));
    SECTION("ramp is linear") {
        REQUIRE(lr_schedule(25, 1000, 0.05, base) == Catch::Approx(base / 2));
        REQUIRE(lr_schedule(10, 1000, 0.05, base) == Catch::Approx(base * 0.2));
    }
    SECTION("monotone decreasing after warmup") {
        double prev = lr_schedule(50, 1000, 0.05, base);
        for (long s = 51; s <= 1000; ++s) {
            double cur = lr_schedule(s, 1000, 0.05, base);
            REQUIRE(cur < prev);
            prev = cur;
        }
    }
    SECTION("continuity bound") {
        long warmup = 50, total = 1000;
        double bound = base * std::max(1.0 / static_cast<double>(warmup),
                                       3.14159265358979323846 / static_cast<double>(total - warmup));
        for (long s = 0; s < total; ++s) {
            double delta = std::abs(lr_schedule(s + 1, total, 0.05, base) -
                                    lr_schedule(s, total, 0.05, base));
            REQUIRE(delta <= bound * (1 + 1e-12));
        }
    }
}

TEST_CASE("zero warmup starts at the base rate") {
    REQUIRE(lr_schedule(0, 100, 0.0, 1.0) == 1.0);
    REQUIRE(lr_schedule(50, 100, 0.0, 1.0) == Catch::Approx(0.5));
}

TEST_CASE("schedule input validation") {
    REQUIRE_THROWS_AS(lr_schedule(0, 0, 0.05, 1e-3), Error);
    REQUIRE_THROWS_AS(lr_schedule(-1, 100, 0.05, 1e-3), Error);
    REQUIRE_THROWS_AS(lr_schedule(101, 100, 0.05, 1e-3), Error);
    REQUIRE_THROWS_AS(lr_schedule(5, 100, 1.5, 1e-3), Error);
}
