#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "carcensus/demographics.hpp"
#include "carcensus/errors.hpp"

using namespace carcensus;

namespace {

ClassTable tiny_table() {
    std::istringstream in(
        "class_id\tmake\tmodel\tsubmodel\tyear_start\tyear_end\ttrim\tbody_type\tprice_usd\t"
        "mpg\tcountry\tis_foreign\n"
        "0\tFordish\tA\ta\t2000\t2002\tbase\tsedan\t10000\t30\tUSA\t0\n"
        "1\tBayern\tC\tc\t2002\t2004\tbase\tSUV\t40000\t20\tGermany\t1\n"
        "2\tNippo\tE\te\t2002\t2004\tbase\thatchback\t15000\t35\tJapan\t1\n");
    return load_taxonomy(in);
}

// Random regression instances used by several properties.
struct Instance {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
};

Instance random_instance(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Instance inst;
    std::vector<double> w(d);
    for (auto& wi : w) wi = g(rng);
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(d);
        double yi = 0.5 * g(rng);
        for (int j = 0; j < d; ++j) {
            x[j] = g(rng);
            yi += w[j] * x[j];
        }
        inst.X.push_back(std::move(x));
        inst.y.push_back(yi);
    }
    return inst;
}

}  // namespace

TEST_CASE("feature schema from a table lists makes in declaration order") {
    const FeatureSchema schema = FeatureSchema::from_table(tiny_table());
    // 4 base + 12 body types + 3 makes + pooled other.
    CHECK(schema.dimension() == 20);
    REQUIRE(schema.makes.size() == 3);
    CHECK(schema.makes[0] == "Fordish");
    CHECK(schema.makes[1] == "Bayern");
    CHECK(schema.names[0] == "avg_mpg");
    CHECK(schema.names[1] == "avg_price");
    CHECK(schema.names[2] == "cars_per_image");
    CHECK(schema.names[3] == "pct_foreign");
    CHECK(schema.names.back() == "pct_make:(other)");
}

TEST_CASE("make cap pools the overflow into the other slot") {
    const FeatureSchema schema = FeatureSchema::from_table(tiny_table(), 2);
    CHECK(schema.makes.size() == 2);
    CHECK(schema.dimension() == 19);
}

TEST_CASE("build_features maps region stats onto the schema") {
    const FeatureSchema schema = FeatureSchema::from_table(tiny_table());
    RegionStats stats;
    stats.region_id = "z1";
    stats.image_count = 10;
    stats.total_expected_cars = 20.0;
    stats.cars_per_image = 2.0;
    stats.avg_price = 18000.0;
    stats.avg_mpg = 28.0;
    stats.pct_foreign = 0.4;
    stats.pct_by_make = {{"Fordish", 0.6}, {"Bayern", 0.25}, {"Mystery", 0.15}};
    stats.pct_by_body_type = {{"sedan", 0.6}, {"SUV", 0.4}};
    const std::vector<double> x = build_features(stats, schema);
    REQUIRE(static_cast<int>(x.size()) == schema.dimension());
    CHECK(x[0] == 28.0);
    CHECK(x[1] == 18000.0);
    CHECK(x[2] == 2.0);
    CHECK(x[3] == 0.4);
    // Unconfigured make lands in the pooled slot.
    CHECK(x.back() == doctest::Approx(0.15));
}

TEST_CASE("build_features rejects regions with zero expected cars") {
    const FeatureSchema schema = FeatureSchema::from_table(tiny_table());
    RegionStats stats;
    stats.region_id = "empty";
    stats.image_count = 3;
    stats.total_expected_cars = 0.0;
    CHECK_THROWS_AS(build_features(stats, schema), DegenerateError);
}

TEST_CASE("hand-checked ridge fit: x 1..3, y 1..3, lambda 1") {
    // Standardized x has z = (-1, 0, 1); centered y is the same, so
    // w = z'y / (z'z + 1) = 2/3 and the intercept is mean(y) = 2.
    const std::vector<std::vector<double>> X{{1.0}, {2.0}, {3.0}};
    const std::vector<double> y{1.0, 2.0, 3.0};
    const RidgeModel m = fit_ridge(X, y, 1.0);
    CHECK(m.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.intercept == doctest::Approx(2.0));
    CHECK(predict(m, std::vector<double>{2.0}) == doctest::Approx(2.0));
}

TEST_CASE("lambda 0 on well-posed data reproduces ordinary least squares") {
    std::mt19937_64 rng(1);
    const Instance inst = random_instance(rng, 60, 4);
    const RidgeModel m = fit_ridge(inst.X, inst.y, 0.0);
    // OLS residuals are orthogonal to every feature column.
    std::vector<double> resid;
    for (size_t i = 0; i < inst.X.size(); ++i)
        resid.push_back(inst.y[i] - predict(m, inst.X[i]));
    for (int j = 0; j < 4; ++j) {
        double dot = 0.0;
        for (size_t i = 0; i < inst.X.size(); ++i) dot += resid[i] * inst.X[i][j];
        CHECK(dot == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
    }
}

TEST_CASE("huge lambda shrinks weights to zero, prediction to the mean") {
    std::mt19937_64 rng(2);
    const Instance inst = random_instance(rng, 40, 3);
    const RidgeModel m = fit_ridge(inst.X, inst.y, 1e12);
    double ybar = 0.0;
    for (double v : inst.y) ybar += v;
    ybar /= static_cast<double>(inst.y.size());
    for (double w : m.weights) CHECK(std::abs(w) < 1e-6);
    CHECK(predict(m, inst.X[0]) == doctest::Approx(ybar).epsilon(1e-6));
}

TEST_CASE("zero-variance columns are dropped and get zero weight") {
    std::mt19937_64 rng(3);
    Instance inst = random_instance(rng, 30, 2);
    for (auto& row : inst.X) row.push_back(7.0);  // constant third column
    const RidgeModel m = fit_ridge(inst.X, inst.y, 0.1);
    REQUIRE(m.dropped_columns == std::vector<int>{2});
    CHECK(m.weights[2] == 0.0);
    CHECK(m.feature_sd[2] == 1.0);
}

TEST_CASE("prediction at the feature mean equals the target mean") {
    std::mt19937_64 rng(4);
    const Instance inst = random_instance(rng, 50, 5);
    const RidgeModel m = fit_ridge(inst.X, inst.y, 3.0);
    std::vector<double> mean(5, 0.0);
    for (const auto& row : inst.X)
        for (int j = 0; j < 5; ++j) mean[j] += row[j];
    for (double& v : mean) v /= static_cast<double>(inst.X.size());
    double ybar = 0.0;
    for (double v : inst.y) ybar += v;
    ybar /= static_cast<double>(inst.y.size());
    CHECK(predict(m, mean) == doctest::Approx(ybar).epsilon(1e-9));
}

TEST_CASE("normal equations hold at the fitted weights") {
    // Gradient of the standardized objective, (Z'Z + lambda I) w - Z'y_c,
    // must vanish; checked with explicit loops independent of the solver.
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance inst = random_instance(rng, 35, 4);
        const double lambda = 0.5 + trial;
        const RidgeModel m = fit_ridge(inst.X, inst.y, lambda);
        const size_t n = inst.X.size();
        double ybar = 0.0;
        for (double v : inst.y) ybar += v;
        ybar /= static_cast<double>(n);
        std::vector<std::vector<double>> Z(n, std::vector<double>(4));
        for (size_t i = 0; i < n; ++i)
            for (int j = 0; j < 4; ++j)
                Z[i][j] = (inst.X[i][j] - m.feature_mean[j]) / m.feature_sd[j];
        for (int j = 0; j < 4; ++j) {
            double g = lambda * m.weights[j];
            for (size_t i = 0; i < n; ++i) {
                double zw = 0.0;
                for (int k = 0; k < 4; ++k) zw += Z[i][k] * m.weights[k];
                g += Z[i][j] * (zw - (inst.y[i] - ybar));
            }
            CHECK(std::abs(g) < 1e-6);
        }
    }
}

TEST_CASE("select_lambda returns the only grid element") {
    std::mt19937_64 rng(6);
    const Instance inst = random_instance(rng, 30, 3);
    const std::vector<double> grid{4.2};
    CHECK(select_lambda(inst.X, inst.y, grid) == 4.2);
}

TEST_CASE("select_lambda prefers small lambda on noiseless data") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 80; ++i) {
        const double a = g(rng), b = g(rng);
        X.push_back({a, b});
        y.push_back(3.0 * a - 2.0 * b + 1.0);  // exact linear target
    }
    const std::vector<double> grid{1e-6, 1.0, 100.0};
    CHECK(select_lambda(X, y, grid, 5, 1) == 1e-6);
}

TEST_CASE("select_lambda prefers heavy shrinkage on pure noise") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> x(8);
        for (auto& v : x) v = g(rng);
        X.push_back(std::move(x));
        y.push_back(g(rng));  // independent of the features
    }
    const std::vector<double> grid{1e-4, 1e4};
    CHECK(select_lambda(X, y, grid, 5, 2) == 1e4);
}

TEST_CASE("select_lambda is deterministic in the seed") {
    std::mt19937_64 rng(9);
    const Instance inst = random_instance(rng, 40, 4);
    const std::vector<double> grid{0.01, 0.1, 1.0, 10.0};
    const double a = select_lambda(inst.X, inst.y, grid, 5, 123);
    const double b = select_lambda(inst.X, inst.y, grid, 5, 123);
    CHECK(a == b);
}

TEST_CASE("pearson r: hand values and bounds") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(pearson_r(a, a) == doctest::Approx(1.0));
    const std::vector<double> neg{3.0, 2.0, 1.0};
    CHECK(pearson_r(a, neg) == doctest::Approx(-1.0));
    const std::vector<double> b{1.0, 2.0, 4.0};
    // cov = 3, var_a = 2, var_b = 14/3  ->  r = 3 / sqrt(28/3).
    CHECK(pearson_r(a, b) == doctest::Approx(3.0 / std::sqrt(28.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("pearson r is invariant to positive affine transforms") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
        a.push_back(g(rng));
        b.push_back(g(rng) + 0.3 * a.back());
    }
    const double base = pearson_r(a, b);
    std::vector<double> a2;
    for (double v : a) a2.push_back(5.0 * v + 100.0);
    CHECK(pearson_r(a2, b) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("correlate_attributes flags constant columns and orders by input") {
    std::vector<std::vector<double>> X;
    std::vector<double> target;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        const double t = g(rng);
        X.push_back({t + 0.01 * g(rng), 1.0, g(rng)});
        target.push_back(t);
    }
    const std::vector<std::string> names{"strong", "flat", "noise"};
    const auto corr = correlate_attributes(X, names, target);
    REQUIRE(corr.size() == 3);
    CHECK(corr[0].name == "strong");
    REQUIRE(corr[0].r.has_value());
    CHECK(*corr[0].r > 0.99);
    CHECK(*corr[0].p < 1e-6);
    CHECK(!corr[1].r.has_value());
    CHECK(!corr[1].p.has_value());
    REQUIRE(corr[2].r.has_value());
    CHECK(*corr[2].p > 0.001);
}

TEST_CASE("correlation p-value is symmetric in the sign of r") {
    std::vector<std::vector<double>> X;
    std::vector<double> target;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const double t = g(rng);
        X.push_back({t + 0.5 * g(rng)});
        target.push_back(t);
    }
    std::vector<std::vector<double>> Xneg;
    for (const auto& row : X) Xneg.push_back({-row[0]});
    const std::vector<std::string> names{"f"};
    const auto pos = correlate_attributes(X, names, target);
    const auto neg = correlate_attributes(Xneg, names, target);
    CHECK(*pos[0].r == doctest::Approx(-*neg[0].r).epsilon(1e-12));
    CHECK(*pos[0].p == doctest::Approx(*neg[0].p).epsilon(1e-9));
}

TEST_CASE("ridge model serialization round-trips predictions") {
    std::mt19937_64 rng(13);
    Instance inst = random_instance(rng, 30, 3);
    for (auto& row : inst.X) row.push_back(2.5);  // keep a dropped column in play
    RidgeModel m = fit_ridge(inst.X, inst.y, 0.7);
    m.feature_names = {"a", "b", "c", "const"};
    std::stringstream ss;
    save_ridge_model(m, ss);
    const RidgeModel back = load_ridge_model(ss);
    CHECK(back.lambda == m.lambda);
    CHECK(back.dropped_columns == m.dropped_columns);
    CHECK(back.feature_names == m.feature_names);
    for (const auto& row : inst.X)
        CHECK(predict(back, row) == doctest::Approx(predict(m, row)).epsilon(1e-12));
}

TEST_CASE("mismatched dimensions are argument errors") {
    const std::vector<std::vector<double>> X{{1.0}, {2.0}};
    const std::vector<double> y{1.0};
    CHECK_THROWS_AS(fit_ridge(X, y, 1.0), std::invalid_argument);
    const RidgeModel m = fit_ridge(std::vector<std::vector<double>>{{1.0}, {2.0}},
                                   std::vector<double>{1.0, 2.0}, 1.0);
    CHECK_THROWS_AS(predict(m, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson_r(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
}
