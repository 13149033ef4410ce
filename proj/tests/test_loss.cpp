#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "sssdet/loss.hpp"

using namespace sssdet;

namespace {

GroundTruthBox truth_box(int class_id, float cx, float cy, float w, float h)
{
    GroundTruthBox g;
    g.class_id = class_id;
    g.cx = cx;
    g.cy = cy;
    g.w = w;
    g.h = h;
    return g;
}

// co-centered shape IoU of a truth against anchor boxes in cell units
int argmax_anchor_reference(const GroundTruthBox& t, const std::vector<Anchor>& anchors, int S)
{
    int best = 0;
    double best_iou = -1.0;
    for (size_t a = 0; a < anchors.size(); ++a) {
        double pw = anchors[a].w / S;
        double ph = anchors[a].h / S;
        double inter = std::min(static_cast<double>(t.w), pw) *
                       std::min(static_cast<double>(t.h), ph);
        double uni = static_cast<double>(t.w) * t.h + pw * ph - inter;
        double overlap = inter / uni;
        if (overlap > best_iou) {
            best_iou = overlap;
            best = static_cast<int>(a);
        }
    }
    return best;
}

} // namespace

TEST_SUITE("loss") {

TEST_CASE("hand-worked single-truth case: loss 2.625 and every gradient entry")
{
    // S=2, one (1,1) anchor, 2 classes, all logits zero. The truth sits in
    // cell (1,1) with offset targets (0.25, 0.25) and exact anchor size, so
    //   coord    = (0.5-0.25)^2 * 2          = 0.125
    //   object   = 5 * (0.5-1)^2             = 1.25
    //   class    = (0.5)^2 + (0.5-1)^2       = 0.5
    //   noobject = 3 cells * (0.5)^2         = 0.75
    std::vector<Anchor> anchors{{1.0f, 1.0f}};
    std::vector<GroundTruthBox> truths{truth_box(1, 0.625f, 0.625f, 0.5f, 0.5f)};
    Tensor raw(1, 7, 2, 2);
    Tensor grad(1, 7, 2, 2);

    RegionLossConfig cfg;
    float loss = region_loss(raw, truths, anchors, 2, cfg, grad);
    CHECK(loss == doctest::Approx(2.625).epsilon(1e-6));

    // responsible cell (1,1): sigmoid'(0) = 0.25 everywhere
    CHECK(grad.at(0, 0, 1, 1) == doctest::Approx(0.125));  // tx
    CHECK(grad.at(0, 1, 1, 1) == doctest::Approx(0.125));  // ty
    CHECK(grad.at(0, 2, 1, 1) == doctest::Approx(0.0));    // tw on target
    CHECK(grad.at(0, 3, 1, 1) == doctest::Approx(0.0));    // th on target
    CHECK(grad.at(0, 4, 1, 1) == doctest::Approx(-1.25));  // to pulled up
    CHECK(grad.at(0, 5, 1, 1) == doctest::Approx(0.5));    // wrong class pushed down
    CHECK(grad.at(0, 6, 1, 1) == doctest::Approx(-0.5));   // right class pulled up

    // the three empty cells pay only the noobject term
    for (int cy = 0; cy < 2; ++cy) {
        for (int cx = 0; cx < 2; ++cx) {
            if (cx == 1 && cy == 1) {
                continue;
            }
            CHECK(grad.at(0, 4, cy, cx) == doctest::Approx(0.25));
            CHECK(grad.at(0, 0, cy, cx) == doctest::Approx(0.0));
            CHECK(grad.at(0, 5, cy, cx) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("near-perfect prediction drives the loss to zero")
{
    std::vector<Anchor> anchors{{1.0f, 1.0f}};
    std::vector<GroundTruthBox> truths{truth_box(1, 0.625f, 0.625f, 0.5f, 0.5f)};
    Tensor raw(1, 7, 2, 2);
    // every anchor claims emptiness first
    for (int cy = 0; cy < 2; ++cy) {
        for (int cx = 0; cx < 2; ++cx) {
            raw.at(0, 4, cy, cx) = -25.0f;
        }
    }
    // the responsible one predicts the truth exactly
    const float logit_quarter = -std::log(3.0f); // sigmoid = 0.25
    raw.at(0, 0, 1, 1) = logit_quarter;
    raw.at(0, 1, 1, 1) = logit_quarter;
    raw.at(0, 2, 1, 1) = 0.0f;
    raw.at(0, 3, 1, 1) = 0.0f;
    raw.at(0, 4, 1, 1) = 25.0f;
    raw.at(0, 5, 1, 1) = -40.0f;
    raw.at(0, 6, 1, 1) = 40.0f;

    Tensor grad(1, 7, 2, 2);
    RegionLossConfig cfg;
    CHECK(region_loss(raw, truths, anchors, 2, cfg, grad) < 1e-6f);
}

TEST_CASE("no truths and strongly negative objectness leave almost no loss")
{
    std::vector<Anchor> anchors{{1.0f, 1.5f}, {3.0f, 2.0f}};
    Tensor raw(1, 2 * 7, 3, 3);
    Rng rng(61);
    for (int64_t i = 0; i < raw.count(); ++i) {
        raw.data()[i] = rng.uniform(-1.0f, 1.0f);
    }
    RegionLayout layout{2, 2};
    for (int a = 0; a < 2; ++a) {
        for (int cy = 0; cy < 3; ++cy) {
            for (int cx = 0; cx < 3; ++cx) {
                raw.at(0, layout.chan(a, 4), cy, cx) = -20.0f;
            }
        }
    }
    Tensor grad(raw.shape());
    RegionLossConfig cfg;
    CHECK(region_loss(raw, {}, anchors, 2, cfg, grad) < 1e-6f);
}

TEST_CASE("loss is non-negative and the gradient matches finite differences")
{
    // the ignore gate is disabled here so the loss stays smooth; gated
    // configurations get their own seeds below
    std::vector<Anchor> anchors{{1.0f, 1.5f}, {2.5f, 2.0f}};
    RegionLossConfig cfg;
    cfg.ignore_iou_threshold = 2.0f;

    int cases = 0;
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 10u}) {
        Rng rng(seed);
        const int S = 2 + static_cast<int>(rng.uniform_int(3));
        const int classes = 2 + static_cast<int>(rng.uniform_int(2));
        Tensor raw = random_tensor(1, 2 * (5 + classes), S, S, rng, -2.0f, 2.0f);

        std::vector<GroundTruthBox> truths;
        const int n = 1 + static_cast<int>(rng.uniform_int(3));
        for (int t = 0; t < n; ++t) {
            truths.push_back(truth_box(static_cast<int>(rng.uniform_int(classes)),
                                       rng.uniform(0.1f, 0.9f), rng.uniform(0.1f, 0.9f),
                                       rng.uniform(0.15f, 0.8f), rng.uniform(0.15f, 0.8f)));
        }

        Tensor grad(raw.shape());
        float loss = region_loss(raw, truths, anchors, classes, cfg, grad);
        CHECK(loss >= 0.0f);

        auto loss_fn = [&]() {
            Tensor g(raw.shape());
            return static_cast<double>(region_loss(raw, truths, anchors, classes, cfg, g));
        };
        int failures = 0;
        oracle::finite_difference_check(
            loss_fn, {raw.data(), static_cast<size_t>(raw.count())},
            {grad.data(), static_cast<size_t>(grad.count())}, 2e-2, &failures);
        CHECK(failures == 0);
        ++cases;
    }
    CHECK(cases == 10);
}

TEST_CASE("gradient also matches finite differences with the default ignore gate")
{
    std::vector<Anchor> anchors{{1.0f, 1.0f}, {3.0f, 3.5f}};
    RegionLossConfig cfg; // ignore_iou_threshold 0.6

    for (uint64_t seed : {21u, 22u, 23u, 24u, 25u}) {
        Rng rng(seed);
        Tensor raw = random_tensor(1, 2 * 7, 3, 3, rng, -2.0f, 2.0f);
        std::vector<GroundTruthBox> truths{
            truth_box(static_cast<int>(rng.uniform_int(2)), rng.uniform(0.2f, 0.8f),
                      rng.uniform(0.2f, 0.8f), rng.uniform(0.2f, 0.5f),
                      rng.uniform(0.2f, 0.5f))};

        Tensor grad(raw.shape());
        region_loss(raw, truths, anchors, 2, cfg, grad);
        auto loss_fn = [&]() {
            Tensor g(raw.shape());
            return static_cast<double>(region_loss(raw, truths, anchors, 2, cfg, g));
        };
        int failures = 0;
        oracle::finite_difference_check(
            loss_fn, {raw.data(), static_cast<size_t>(raw.count())},
            {grad.data(), static_cast<size_t>(grad.count())}, 2e-2, &failures);
        CHECK(failures == 0);
    }
}

TEST_CASE("assign_anchors floors centers into cells and clamps the border")
{
    std::vector<Anchor> anchors{{2.0f, 2.0f}};
    auto mid = assign_anchors({truth_box(0, 0.5f, 0.5f, 0.1f, 0.1f)}, anchors, 76);
    REQUIRE(mid.size() == 1);
    CHECK(mid[0].cell_x == 38);
    CHECK(mid[0].cell_y == 38);

    auto edge = assign_anchors({truth_box(0, 1.0f, 1.0f, 0.1f, 0.1f)}, anchors, 76);
    CHECK(edge[0].cell_x == 75);
    CHECK(edge[0].cell_y == 75);
}

TEST_CASE("a truth matching an anchor exactly selects that anchor")
{
    std::vector<Anchor> anchors{{1.0f, 1.0f}, {2.0f, 3.0f}, {4.0f, 4.0f}};
    // w*S = 2, h*S = 3 at S=10
    auto got = assign_anchors({truth_box(0, 0.5f, 0.5f, 0.2f, 0.3f)}, anchors, 10);
    CHECK(got[0].anchor == 1);
}

TEST_CASE("anchor ties keep the lowest index")
{
    std::vector<Anchor> anchors{{2.0f, 2.0f}, {2.0f, 2.0f}};
    auto got = assign_anchors({truth_box(0, 0.5f, 0.5f, 0.4f, 0.4f)}, anchors, 8);
    CHECK(got[0].anchor == 0);
}

TEST_CASE("assignment equals the exhaustive argmax oracle and is scale invariant")
{
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Anchor> anchors;
        const int A = 2 + static_cast<int>(rng.uniform_int(4));
        for (int a = 0; a < A; ++a) {
            anchors.push_back({rng.uniform(0.5f, 9.0f), rng.uniform(0.5f, 9.0f)});
        }
        const int S = 4 + static_cast<int>(rng.uniform_int(10));
        GroundTruthBox t = truth_box(0, rng.uniform01(), rng.uniform01(),
                                     rng.uniform(0.05f, 1.0f), rng.uniform(0.05f, 1.0f));

        auto got = assign_anchors({t}, anchors, S);
        CHECK(got[0].anchor == argmax_anchor_reference(t, anchors, S));

        // shrinking anchors and the truth together keeps the winner
        std::vector<Anchor> scaled = anchors;
        for (Anchor& a : scaled) {
            a.w *= 0.5f;
            a.h *= 0.5f;
        }
        GroundTruthBox ts = t;
        ts.w *= 0.5f;
        ts.h *= 0.5f;
        auto got_scaled = assign_anchors({ts}, scaled, S);
        CHECK(got_scaled[0].anchor == got[0].anchor);
    }
}

TEST_CASE("two truths on one responsible anchor: the later one defines the loss")
{
    std::vector<Anchor> anchors{{1.0f, 1.0f}};
    RegionLossConfig cfg;
    cfg.ignore_iou_threshold = 2.0f; // same noobject set on both sides
    GroundTruthBox first = truth_box(0, 0.55f, 0.55f, 0.3f, 0.3f);
    GroundTruthBox second = truth_box(1, 0.62f, 0.62f, 0.5f, 0.5f);

    Rng rng(83);
    Tensor raw = random_tensor(1, 7, 2, 2, rng, -1.0f, 1.0f);
    Tensor ga(raw.shape());
    Tensor gb(raw.shape());
    float both = region_loss(raw, {first, second}, anchors, 2, cfg, ga);
    float only_second = region_loss(raw, {second}, anchors, 2, cfg, gb);

    CHECK(both == only_second);
    CHECK(ga == gb);
}

TEST_CASE("rejected inputs: out-of-range truths, bad class ids, wrong tensor depth")
{
    std::vector<Anchor> anchors{{1.0f, 1.0f}};
    Tensor raw(1, 7, 2, 2);
    Tensor grad(raw.shape());
    RegionLossConfig cfg;

    CHECK_THROWS_WITH_AS(
        region_loss(raw, {truth_box(0, 1.2f, 0.5f, 0.2f, 0.2f)}, anchors, 2, cfg, grad),
        doctest::Contains("truth 0"), DataError);
    CHECK_THROWS_AS(
        region_loss(raw, {truth_box(0, 0.5f, 0.5f, 0.0f, 0.2f)}, anchors, 2, cfg, grad),
        DataError);
    CHECK_THROWS_AS(
        region_loss(raw, {truth_box(5, 0.5f, 0.5f, 0.2f, 0.2f)}, anchors, 2, cfg, grad),
        DataError);

    Tensor bad_depth(1, 9, 2, 2);
    Tensor bad_grad(1, 9, 2, 2);
    CHECK_THROWS_AS(
        region_loss(bad_depth, {truth_box(0, 0.5f, 0.5f, 0.2f, 0.2f)}, anchors, 2, cfg,
                    bad_grad),
        ConfigError);

    CHECK_THROWS_AS(assign_anchors({truth_box(0, -0.1f, 0.5f, 0.2f, 0.2f)}, anchors, 4),
                    DataError);
}

} // TEST_SUITE
