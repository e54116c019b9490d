#include "carcensus/demographics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "carcensus/errors.hpp"

namespace carcensus {

namespace {

// Regularized incomplete beta via Lentz continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 200;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p of a t statistic with df degrees of freedom.
double student_t_two_sided(double t, double df) {
    return incbeta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace

FeatureSchema FeatureSchema::with_makes(std::vector<std::string> makes) {
    FeatureSchema s;
    s.makes = std::move(makes);
    s.names = {"avg_mpg", "avg_price", "cars_per_image", "pct_foreign"};
    for (int b = 0; b < kBodyTypeCount; ++b)
        s.names.push_back("pct_body:" + body_type_name(static_cast<BodyType>(b)));
    for (const std::string& m : s.makes) s.names.push_back("pct_make:" + m);
    s.names.push_back("pct_make:(other)");
    return s;
}

FeatureSchema FeatureSchema::from_table(const ClassTable& table, int max_makes) {
    std::vector<std::string> makes = table.makes();
    if (static_cast<int>(makes.size()) > max_makes) makes.resize(max_makes);
    return with_makes(std::move(makes));
}

std::vector<double> build_features(const RegionStats& stats, const FeatureSchema& schema) {
    if (stats.total_expected_cars <= 0.0)
        throw DegenerateError("build_features: region '" + stats.region_id +
                              "' has zero expected cars");
    std::vector<double> x;
    x.reserve(schema.dimension());
    x.push_back(stats.avg_mpg.value_or(0.0));
    x.push_back(stats.avg_price.value_or(0.0));
    x.push_back(stats.cars_per_image);
    x.push_back(stats.pct_foreign);
    for (int b = 0; b < kBodyTypeCount; ++b) {
        auto it = stats.pct_by_body_type.find(body_type_name(static_cast<BodyType>(b)));
        x.push_back(it == stats.pct_by_body_type.end() ? 0.0 : it->second);
    }
    double configured = 0.0;
    double total = 0.0;
    for (const auto& [make, pct] : stats.pct_by_make) total += pct;
    for (const std::string& make : schema.makes) {
        auto it = stats.pct_by_make.find(make);
        const double v = it == stats.pct_by_make.end() ? 0.0 : it->second;
        configured += v;
        x.push_back(v);
    }
    x.push_back(std::max(0.0, total - configured));  // pooled "other make"
    return x;
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     double lambda) {
    const size_t n = X.size();
    if (n < 2 || y.size() != n)
        throw std::invalid_argument("fit_ridge: need N >= 2 rows matching |y|");
    if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be non-negative");
    const size_t d = X[0].size();
    for (const auto& row : X)
        if (row.size() != d) throw std::invalid_argument("fit_ridge: ragged feature matrix");

    RidgeModel model;
    model.lambda = lambda;
    model.feature_mean.assign(d, 0.0);
    model.feature_sd.assign(d, 1.0);
    model.weights.assign(d, 0.0);

    for (size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (size_t i = 0; i < n; ++i) m += X[i][j];
        model.feature_mean[j] = m / static_cast<double>(n);
    }
    std::vector<size_t> kept;
    for (size_t j = 0; j < d; ++j) {
        double ss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double dv = X[i][j] - model.feature_mean[j];
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        if (sd < 1e-12) {
            model.dropped_columns.push_back(static_cast<int>(j));
        } else {
            model.feature_sd[j] = sd;
            kept.push_back(j);
        }
    }

    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    model.intercept = y_mean;
    if (kept.empty()) return model;

    Eigen::MatrixXd Z(n, kept.size());
    Eigen::VectorXd yc(n);
    for (size_t i = 0; i < n; ++i) {
        yc(static_cast<Eigen::Index>(i)) = y[i] - y_mean;
        for (size_t k = 0; k < kept.size(); ++k)
            Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                (X[i][kept[k]] - model.feature_mean[kept[k]]) / model.feature_sd[kept[k]];
    }
    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += lambda;
    const Eigen::VectorXd w = A.ldlt().solve(Z.transpose() * yc);
    for (size_t k = 0; k < kept.size(); ++k) model.weights[kept[k]] = w(static_cast<Eigen::Index>(k));
    return model;
}

double predict(const RidgeModel& model, std::span<const double> x) {
    if (x.size() != model.weights.size())
        throw std::invalid_argument("predict: feature dimension mismatch");
    double out = model.intercept;
    for (size_t j = 0; j < x.size(); ++j)
        out += model.weights[j] * (x[j] - model.feature_mean[j]) / model.feature_sd[j];
    return out;
}

double select_lambda(const std::vector<std::vector<double>>& X, std::span<const double> y,
                     std::span<const double> grid, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("select_lambda: need folds >= 2");
    if (grid.empty()) throw std::invalid_argument("select_lambda: empty grid");
    const size_t n = X.size();
    if (n < static_cast<size_t>(folds))
        throw std::invalid_argument("select_lambda: fewer rows than folds");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold_of(n);
    for (size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % folds);

    std::vector<double> sorted_grid(grid.begin(), grid.end());
    std::sort(sorted_grid.begin(), sorted_grid.end());

    double best_lambda = sorted_grid.front();
    double best_rmse = std::numeric_limits<double>::infinity();
    for (double lambda : sorted_grid) {
        double total_rmse = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<std::vector<double>> Xtr;
            std::vector<double> ytr;
            std::vector<size_t> val;
            for (size_t i = 0; i < n; ++i) {
                if (fold_of[i] == f)
                    val.push_back(i);
                else {
                    Xtr.push_back(X[i]);
                    ytr.push_back(y[i]);
                }
            }
            const RidgeModel m = fit_ridge(Xtr, ytr, lambda);
            double se = 0.0;
            for (size_t i : val) {
                const double e = predict(m, X[i]) - y[i];
                se += e * e;
            }
            total_rmse += std::sqrt(se / static_cast<double>(val.size()));
        }
        const double mean_rmse = total_rmse / folds;
        if (mean_rmse <= best_rmse) {  // ties toward the larger lambda
            best_rmse = mean_rmse;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_r: need equal-length vectors with N >= 2");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) throw DegenerateError("pearson_r: constant input");
    return sab / std::sqrt(saa * sbb);
}

std::vector<AttributeCorrelation> correlate_attributes(
    const std::vector<std::vector<double>>& features, std::span<const std::string> names,
    std::span<const double> target) {
    const size_t n = features.size();
    if (n < 3 || target.size() != n)
        throw std::invalid_argument("correlate_attributes: need >= 3 regions matching the target");
    const size_t d = names.size();
    std::vector<AttributeCorrelation> out;
    std::vector<double> col(n);
    for (size_t j = 0; j < d; ++j) {
        for (size_t i = 0; i < n; ++i) col[i] = features[i][j];
        AttributeCorrelation c;
        c.name = names[j];
        try {
            const double r = pearson_r(col, target);
            c.r = r;
            const double df = static_cast<double>(n) - 2.0;
            if (std::abs(r) >= 1.0 - 1e-15) {
                c.p = 0.0;
            } else {
                const double t = r * std::sqrt(df / (1.0 - r * r));
                c.p = student_t_two_sided(t, df);
            }
        } catch (const DegenerateError&) {
            // constant column: reported as undefined
        }
        out.push_back(std::move(c));
    }
    return out;
}

void save_ridge_model(const RidgeModel& model, std::ostream& out) {
    out << "ridge_model v1\n";
    out.precision(17);
    out << "lambda " << model.lambda << "\nintercept " << model.intercept << "\ndropped";
    for (int j : model.dropped_columns) out << ' ' << j;
    out << "\nfeatures " << model.weights.size() << '\n';
    for (size_t j = 0; j < model.weights.size(); ++j) {
        out << (j < model.feature_names.size() ? model.feature_names[j] : "f" + std::to_string(j))
            << '\t' << model.feature_mean[j] << '\t' << model.feature_sd[j] << '\t'
            << model.weights[j] << '\n';
    }
}

RidgeModel load_ridge_model(std::istream& in) {
    std::string magic, version, key;
    in >> magic >> version;
    if (magic != "ridge_model" || version != "v1") throw ParseError("not a ridge_model v1 file");
    RidgeModel m;
    size_t d = 0;
    in >> key >> m.lambda >> key >> m.intercept >> key;
    if (!in || key != "dropped") throw ParseError("malformed ridge_model header");
    std::string rest;
    std::getline(in, rest);
    std::istringstream dropped(rest);
    for (int j = 0; dropped >> j;) m.dropped_columns.push_back(j);
    in >> key >> d;
    if (!in) throw ParseError("malformed ridge_model header");
    std::getline(in, rest);  // consume the end of the "features" line
    m.weights.resize(d);
    m.feature_mean.resize(d);
    m.feature_sd.resize(d);
    m.feature_names.resize(d);
    // Feature names may contain spaces, so read whole lines and split on tabs.
    for (size_t j = 0; j < d; ++j) {
        std::string line;
        if (!std::getline(in, line)) throw ParseError("truncated ridge_model");
        const size_t t1 = line.find('\t');
        const size_t t2 = line.find('\t', t1 + 1);
        const size_t t3 = line.find('\t', t2 + 1);
        if (t3 == std::string::npos) throw ParseError("malformed ridge_model feature line");
        m.feature_names[j] = line.substr(0, t1);
        m.feature_mean[j] = std::stod(line.substr(t1 + 1, t2 - t1 - 1));
        m.feature_sd[j] = std::stod(line.substr(t2 + 1, t3 - t2 - 1));
        m.weights[j] = std::stod(line.substr(t3 + 1));
    }
    return m;
}

}  // namespace carcensus
