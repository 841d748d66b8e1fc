#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "krsml/data_io.hpp"
#include "krsml/errors.hpp"
#include "test_support.hpp"

using namespace krsml;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("krsml_io_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::filesystem::path file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p) << content;
        return p;
    }
};

} // namespace

TEST_CASE("load_csv examples") {
    TempDir dir;
    const auto p = dir.file("abc.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
    const Dataset by_name = load_csv(p, std::string("y"));
    CHECK(by_name.n() == 3);
    CHECK(by_name.d() == 2);
    CHECK(by_name.targets == (VectorXd(3) << 3, 6, 9).finished());
    CHECK(by_name.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(by_name.features.row(1) == Eigen::RowVector2d(4, 5));

    const Dataset by_index = load_csv(p, 0L);
    CHECK(by_index.feature_names == std::vector<std::string>{"b", "y"});
    CHECK(by_index.targets == (VectorXd(3) << 1, 4, 7).finished());
    CHECK(load_csv(p, -1L).targets == by_name.targets);

    const auto sci = dir.file("sci.csv", "x,y\r\n1e-3, 2.5E2\r\n\r\n-4,0\r\n");
    const Dataset s = load_csv(sci, std::string("y"));
    CHECK(s.n() == 2);
    CHECK(s.features(0, 0) == 1e-3);
    CHECK(s.targets(0) == 250.0);
}

TEST_CASE("load_csv errors") {
    TempDir dir;
    CHECK_THROWS_AS(load_csv(dir.path / "missing.csv", std::string("y")), DataError);
    CHECK_THROWS_AS(load_csv(dir.file("empty.csv", ""), std::string("y")), DataError);
    CHECK_THROWS_AS(load_csv(dir.file("h.csv", "a,y\n"), std::string("y")), DataError);
    const auto p = dir.file("ok.csv", "a,y\n1,2\n");
    CHECK_THROWS_AS(load_csv(p, std::string("z")), DataError);
    CHECK_THROWS_AS(load_csv(p, 5L), DataError);
    try {
        load_csv(dir.file("bad.csv", "a,b,y\n1,2,3\n4,oops,6\n"), std::string("y"));
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(":3:") != std::string::npos);
        CHECK(msg.find("'b'") != std::string::npos);
        CHECK(msg.find("oops") != std::string::npos);
    }
    CHECK_THROWS_AS(load_csv(dir.file("ragged.csv", "a,y\n1,2,3\n"), std::string("y")), DataError);
}

TEST_CASE("write_csv and load_csv round trip") {
    TempDir dir;
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        Dataset data = testing::random_dataset(20 + trial, 1 + trial, rng);
        data.features *= std::pow(10.0, 3 * trial - 6);
        const auto p = dir.path / ("rt" + std::to_string(trial) + ".csv");
        write_csv(p, data);
        const Dataset back = load_csv(p, std::string("y"));
        CHECK(back.features == data.features);
        CHECK(back.targets == data.targets);
    }
}

TEST_CASE("load_series accepts headers and bare numbers") {
    TempDir dir;
    CHECK(load_series(dir.file("s1.csv", "flow\n1\n2.5\n\n3\n")) == std::vector<double>{1, 2.5, 3});
    CHECK(load_series(dir.file("s2.txt", "4\n5\n")) == std::vector<double>{4, 5});
    CHECK_THROWS_AS(load_series(dir.file("s3.txt", "4\nx\n")), DataError);
    CHECK_THROWS_AS(load_series(dir.file("s4.txt", "a,b\n1,2\n")), DataError);
    CHECK_THROWS_AS(load_series(dir.file("s5.txt", "header\n")), DataError);
}

TEST_CASE("standardizer examples") {
    std::mt19937_64 rng(2);
    const Dataset raw = testing::random_dataset(50, 3, rng);
    const Dataset once = apply_standardizer(fit_standardizer(raw), raw);
    const Standardizer again = fit_standardizer(once);
    CHECK(again.means.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((again.scales.array() - 1.0).abs().maxCoeff() <= 1e-10);
    CHECK((again.apply(once.features) - once.features).cwiseAbs().maxCoeff() <= 1e-10);

    Dataset constant(MatrixXd::Constant(3, 2, 0.1), VectorXd::Zero(3));
    constant.features.col(1) << 0, 10, 5;
    const Standardizer s = fit_standardizer(constant);
    CHECK((s.apply(constant.features).col(0).array() == 0.0).all());

    const Dataset two((MatrixXd(2, 1) << 0, 10).finished(), VectorXd::Zero(2));
    const Standardizer t = fit_standardizer(two);
    CHECK(t.means(0) == 5.0);
    CHECK(t.scales(0) == 5.0);
    CHECK(t.apply(two.features) == (MatrixXd(2, 1) << -1, 1).finished());

    // Targets are never touched.
    CHECK(apply_standardizer(fit_standardizer(raw), raw).targets == raw.targets);
}

TEST_CASE("standardization inverts and has unit statistics on its fit source") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Dataset data = testing::random_dataset(30, 4, rng);
        data.features = (data.features * 17.0).array() + 3.0 * trial;
        const Standardizer s = fit_standardizer(data);
        const MatrixXd z = s.apply(data.features);
        CHECK(z.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::RowVectorXd sd = (z.rowwise() - z.colwise().mean()).colwise().squaredNorm() / 30.0;
        CHECK((sd.array().sqrt() - 1.0).abs().maxCoeff() <= 1e-10);
        CHECK((s.inverse(z) - data.features).cwiseAbs().maxCoeff() <= 1e-10 * data.features.cwiseAbs().maxCoeff());
    }
    CHECK_THROWS_AS(fit_standardizer(Dataset(MatrixXd::Ones(1, 2), VectorXd::Ones(1))), InsufficientData);
}

TEST_CASE("prefix split keeps temporal order") {
    Dataset data(VectorXd::LinSpaced(2400, 0, 2399), VectorXd::LinSpaced(2400, 0, 2399));
    const TrainTestSplit s = split_prefix(data, 2112);
    CHECK(s.train.n() == 2112);
    CHECK(s.test.n() == 288);
    CHECK(s.train.targets(2111) == 2111.0);
    CHECK(s.test.targets(0) == 2112.0);
    CHECK(s.test.targets(287) == 2399.0);
    CHECK_THROWS_AS(split_prefix(data, 2400), InvalidArgument);
}

TEST_CASE("folds partition the indices deterministically") {
    const auto folds = split_folds(100, 10, 42);
    CHECK(folds.size() == 10);
    for (const auto& f : folds) CHECK(f.size() == 10);
    CHECK(split_folds(100, 10, 42) == folds);
    CHECK(split_folds(100, 10, 43) != folds);

    for (const Index n : {2, 7, 31, 100}) {
        for (const int k : {2, 3, 7}) {
            if (k > n) continue;
            for (const std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
                const auto parts = split_folds(n, k, seed);
                std::set<Index> seen;
                std::size_t total = 0, lo = SIZE_MAX, hi = 0;
                for (const auto& f : parts) {
                    seen.insert(f.begin(), f.end());
                    total += f.size();
                    lo = std::min(lo, f.size());
                    hi = std::max(hi, f.size());
                }
                CHECK(total == static_cast<std::size_t>(n));
                CHECK(seen.size() == static_cast<std::size_t>(n));
                CHECK(hi - lo <= 1);
            }
        }
    }
    CHECK_THROWS_AS(split_folds(5, 1, 0), InvalidArgument);
    CHECK_THROWS_AS(split_folds(5, 6, 0), InvalidArgument);
}

TEST_CASE("window_series examples") {
    const Dataset w = window_series({1, 2, 3, 4, 5}, SeriesSpec{2, 1, 0});
    CHECK(w.n() == 3);
    CHECK(w.features == (MatrixXd(3, 2) << 1, 2, 2, 3, 3, 4).finished());
    CHECK(w.targets == (VectorXd(3) << 3, 4, 5).finished());

    std::vector<double> series(2400);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = std::sin(0.1 * static_cast<double>(i)) + static_cast<double>(i);
    const Dataset big = window_series(series, SeriesSpec{45, 1, 0});
    CHECK(big.n() == 2355);
    CHECK(big.d() == 45);

    // Reassemble: column j of the examples is the series shifted by j.
    for (Index j = 0; j < big.d(); ++j)
        for (Index t = 0; t < big.n(); ++t) REQUIRE(big.features(t, j) == series[static_cast<std::size_t>(t + j)]);
    for (Index t = 0; t < big.n(); ++t) REQUIRE(big.targets(t) == series[static_cast<std::size_t>(t + 45)]);

    const Dataset h3 = window_series({1, 2, 3, 4, 5, 6}, SeriesSpec{2, 3, 0});
    CHECK(h3.targets == (VectorXd(2) << 5, 6).finished());

    CHECK_THROWS_AS(window_series({1, 2, 3}, SeriesSpec{3, 1, 0}), InsufficientData);
    CHECK_THROWS_AS(window_series({1, 2, 3}, SeriesSpec{0, 1, 0}), InvalidArgument);
}

TEST_CASE("windowed examples never look ahead") {
    for (const Index lag : {1, 5, 45})
        for (const Index horizon : {1, 3}) {
            const SeriesSpec spec{lag, horizon, 0};
            const auto targets = window_target_positions(200, spec);
            for (std::size_t t = 0; t < targets.size(); ++t) {
                const Index last_feature = static_cast<Index>(t) + lag - 1;
                CHECK(last_feature < targets[t]);
            }
        }
}

TEST_CASE("window_split assigns examples by target position") {
    std::vector<double> series(100);
    for (std::size_t i = 0; i < series.size(); ++i) series[i] = static_cast<double>(i);
    const TrainTestSplit s = window_split(series, SeriesSpec{10, 1, 80});
    CHECK(s.train.n() == 70);
    CHECK(s.test.n() == 20);
    CHECK(s.train.targets.maxCoeff() == 79.0);
    CHECK(s.test.targets.minCoeff() == 80.0);
    CHECK_THROWS_AS(window_split(series, SeriesSpec{10, 1, 100}), InvalidArgument);
}

TEST_CASE("load_features reads every column") {
    TempDir dir;
    std::vector<std::string> names;
    const MatrixXd x = load_features(dir.file("f.csv", "a,b\n1,2\n3,4\n"), &names);
    CHECK(x == (MatrixXd(2, 2) << 1, 2, 3, 4).finished());
    CHECK(names == std::vector<std::string>{"a", "b"});
    CHECK(load_features(dir.file("g.csv", "a\n7\n")).size() == 1);
    CHECK_THROWS_AS(load_features(dir.file("h.csv", "a\nz\n")), DataError);
}
