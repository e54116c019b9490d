#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "carcensus/adapt.hpp"
#include "carcensus/errors.hpp"

using namespace carcensus;

TEST_CASE("resolution histogram of two distinct boxes splits mass evenly") {
    const std::vector<BBox> boxes{{50, 50, 10, 10}, {50, 50, 40, 40}};  // r = 10 and 40
    const ResolutionHistogram h = fit_resolution_hist(boxes, 35);
    CHECK(h.bins() == 35);
    CHECK(h.edges.front() == doctest::Approx(10.0));
    CHECK(h.edges.back() == doctest::Approx(40.0));
    CHECK(h.probs.front() == doctest::Approx(0.5));
    CHECK(h.probs.back() == doctest::Approx(0.5));
    double total = 0.0;
    for (double p : h.probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical boxes widen the range instead of collapsing") {
    const std::vector<BBox> boxes{{50, 50, 20, 20}, {50, 50, 20, 20}};
    const ResolutionHistogram h = fit_resolution_hist(boxes);
    CHECK(h.edges.front() < 20.0);
    CHECK(h.edges.back() > 20.0);
    CHECK(h.probs[h.bin_of(20.0)] == doctest::Approx(1.0));
}

TEST_CASE("empty box list is degenerate") {
    CHECK_THROWS_AS(fit_resolution_hist({}), DegenerateError);
}

TEST_CASE("bin_of clamps outside the range") {
    const std::vector<BBox> boxes{{50, 50, 10, 10}, {50, 50, 40, 40}};
    const ResolutionHistogram h = fit_resolution_hist(boxes, 10);
    CHECK(h.bin_of(-100.0) == 0);
    CHECK(h.bin_of(1e9) == 9);
    CHECK(h.bin_of(h.edges.back()) == 9);  // top bin is closed
}

TEST_CASE("resolution histogram is scale-covariant") {
    // Doubling every box doubles r; bin occupancy must be identical.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(5.0, 80.0);
    std::vector<BBox> boxes, doubled;
    for (int i = 0; i < 200; ++i) {
        const double w = u(rng), h = u(rng);
        boxes.push_back({100, 100, w, h});
        doubled.push_back({200, 200, 2 * w, 2 * h});
    }
    const ResolutionHistogram a = fit_resolution_hist(boxes, 35);
    const ResolutionHistogram b = fit_resolution_hist(doubled, 35);
    for (int i = 0; i < a.bins(); ++i) CHECK(a.probs[i] == doctest::Approx(b.probs[i]));
    CHECK(b.edges.front() == doctest::Approx(2 * a.edges.front()).epsilon(1e-12));
}

TEST_CASE("sample_resolution draws within the support and follows the bins") {
    std::vector<BBox> boxes;
    for (int i = 0; i < 50; ++i) boxes.push_back({50, 50, 10.0 + i, 10.0 + i});
    const ResolutionHistogram h = fit_resolution_hist(boxes, 7);
    std::mt19937_64 rng(5);
    std::map<int, int> seen;
    for (int i = 0; i < 20000; ++i) {
        const double r = sample_resolution(h, rng);
        CHECK(r >= h.edges.front());
        CHECK(r <= h.edges.back());
        seen[h.bin_of(r)]++;
    }
    for (int b = 0; b < h.bins(); ++b)
        CHECK(seen[b] / 20000.0 == doctest::Approx(h.probs[b]).epsilon(0.15));
}

TEST_CASE("sampling is deterministic given the generator seed") {
    std::vector<BBox> boxes;
    for (int i = 0; i < 20; ++i) boxes.push_back({50, 50, 10.0 + i, 12.0 + i});
    const ResolutionHistogram h = fit_resolution_hist(boxes);
    std::mt19937_64 a(9), b(9);
    for (int i = 0; i < 100; ++i) CHECK(sample_resolution(h, a) == sample_resolution(h, b));
}

TEST_CASE("iou histogram covers only matched pairs above the threshold") {
    ImageDetections img;
    img.image_id = "a";
    img.image_width = img.image_height = 100;
    img.truths = {{20, 20, 10, 10}, {70, 70, 10, 10}};
    img.detections = {{2.0, {21, 20, 10, 10}},   // high overlap with truth 0
                      {1.0, {70, 74, 10, 10}},   // moderate overlap with truth 1
                      {0.5, {50, 20, 10, 10}}};  // unmatched
    const std::vector<ImageDetections> v{img};
    const IouHistogram h = fit_iou_hist(v, 0.5, 10);
    CHECK(h.edges.front() == doctest::Approx(0.0));
    CHECK(h.edges.back() == doctest::Approx(1.0));
    double mass_below_half = 0.0;
    for (int b = 0; b < h.bins(); ++b)
        if (h.edges[b + 1] <= 0.5 + 1e-12) mass_below_half += h.probs[b];
    CHECK(mass_below_half == doctest::Approx(0.0));
    double total = 0.0;
    for (double p : h.probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("iou histogram with no matches is degenerate") {
    ImageDetections img;
    img.image_id = "a";
    img.image_width = img.image_height = 100;
    img.truths = {{20, 20, 10, 10}};
    img.detections = {{1.0, {80, 80, 10, 10}}};
    const std::vector<ImageDetections> v{img};
    CHECK_THROWS_AS(fit_iou_hist(v, 0.5), DegenerateError);
}

TEST_CASE("sample_crop lands in a bin drawn from the histogram") {
    const BBox truth{320, 240, 80, 60};
    IouHistogram h;
    h.edges = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    h.probs = {0, 0, 0, 0, 0, 0.25, 0.25, 0.25, 0.25, 0};
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const BBox crop = sample_crop(truth, 640, 480, h, rng);
        const double v = iou(truth, crop);
        CHECK(v >= 0.5);
        CHECK(v < 0.9);
        CHECK(crop.valid());
    }
}

TEST_CASE("sample_crop reaches the top iou bin") {
    // All mass on [0.9, 1]: proposals must anneal tightly enough to hit it.
    const BBox truth{320, 240, 80, 60};
    IouHistogram h;
    h.edges = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    h.probs = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0};
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const BBox crop = sample_crop(truth, 640, 480, h, rng);
        CHECK(iou(truth, crop) >= 0.9);
    }
}

TEST_CASE("sample_crop matches the histogram across bins") {
    const BBox truth{320, 240, 80, 60};
    IouHistogram h;
    h.edges = {0.0, 0.25, 0.5, 0.75, 1.0};
    h.probs = {0.1, 0.2, 0.3, 0.4};
    std::mt19937_64 rng(13);
    std::map<int, int> seen;
    const int draws = 4000;
    for (int i = 0; i < draws; ++i) seen[h.bin_of(iou(truth, sample_crop(truth, 640, 480, h, rng)))]++;
    for (int b = 0; b < h.bins(); ++b)
        CHECK(seen[b] / double(draws) == doctest::Approx(h.probs[b]).epsilon(0.2));
}

TEST_CASE("rebalance duplicates street-view ids by the factor") {
    const std::vector<std::string> sv{"s1", "s2", "s3"};
    const std::vector<std::string> prod{"p1", "p2"};
    const auto out = rebalance(sv, prod, 10, 1);
    CHECK(out.size() == 32);
    std::map<std::string, int> counts;
    for (const auto& id : out) counts[id]++;
    CHECK(counts["s1"] == 10);
    CHECK(counts["s3"] == 10);
    CHECK(counts["p1"] == 1);
    CHECK(counts["p2"] == 1);
}

TEST_CASE("rebalance with factor 1 keeps one of each") {
    const std::vector<std::string> sv{"s1"};
    const std::vector<std::string> prod{"p1"};
    const auto out = rebalance(sv, prod, 1, 0);
    CHECK(out.size() == 2);
}

TEST_CASE("rebalance shuffle is seeded and mixes the sources") {
    std::vector<std::string> sv, prod;
    for (int i = 0; i < 100; ++i) sv.push_back("s" + std::to_string(i));
    for (int i = 0; i < 900; ++i) prod.push_back("p" + std::to_string(i));
    const auto a = rebalance(sv, prod, 10, 42);
    const auto b = rebalance(sv, prod, 10, 42);
    CHECK(a == b);
    const auto c = rebalance(sv, prod, 10, 43);
    CHECK(a != c);
    // A seeded shuffle should leave neither source clumped at the front.
    int sv_in_first_quarter = 0;
    for (size_t i = 0; i < a.size() / 4; ++i)
        if (a[i][0] == 's') sv_in_first_quarter++;
    const double frac = sv_in_first_quarter / (a.size() / 4.0);
    CHECK(frac > 0.3);
    CHECK(frac < 0.7);
}

TEST_CASE("non-positive factor is an argument error") {
    const std::vector<std::string> sv{"s"};
    const std::vector<std::string> prod{"p"};
    CHECK_THROWS_AS(rebalance(sv, prod, 0, 0), std::invalid_argument);
}

TEST_CASE("histogram serialization round-trips") {
    std::vector<BBox> boxes;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(5.0, 100.0);
    for (int i = 0; i < 80; ++i) boxes.push_back({100, 100, u(rng), u(rng)});
    const ResolutionHistogram h = fit_resolution_hist(boxes, 35);
    std::stringstream ss;
    save_histogram(h, ss);
    const Histogram back = load_histogram(ss);
    REQUIRE(back.bins() == h.bins());
    for (size_t i = 0; i < h.edges.size(); ++i)
        CHECK(back.edges[i] == doctest::Approx(h.edges[i]).epsilon(1e-15));
    for (int i = 0; i < h.bins(); ++i)
        CHECK(back.probs[i] == doctest::Approx(h.probs[i]).epsilon(1e-15));
}
