#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "krsml/dataset.hpp"

namespace krsml {

/// Column selector: a header name or a zero-based position. Negative positions
/// count from the right, so -1 is the last column.
using ColumnRef = std::variant<std::string, long>;

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target);

/// Headered CSV where every column is a feature (prediction inputs).
Eigen::MatrixXd load_features(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

/// Writes the features followed by a target column named `target_name`,
/// with 17 significant digits so that load_csv reads the values back exactly.
void write_csv(const std::filesystem::path& path, const Dataset& data,
               const std::string& target_name = "y");

/// Single-column CSV (optional header) or newline-delimited numbers.
std::vector<double> load_series(const std::filesystem::path& path);

/// Per-feature affine map x -> (x - mean) / scale fitted on training data.
struct Standardizer {
    Eigen::VectorXd means;
    Eigen::VectorXd scales;

    static constexpr double kScaleFloor = 1e-12;

    static Standardizer identity(Index d);

    Dataset apply(const Dataset& data) const;
    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& standardized) const;
};

/// Population statistics of the features; targets are left alone.
Standardizer fit_standardizer(const Dataset& train);
inline Dataset apply_standardizer(const Standardizer& s, const Dataset& data) { return s.apply(data); }

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Leading `train_count` rows for training, the rest for testing; order kept.
TrainTestSplit split_prefix(const Dataset& data, Index train_count);

/// Seeded shuffle of 0..n-1 partitioned into k contiguous folds whose sizes
/// differ by at most one.
std::vector<std::vector<Index>> split_folds(Index n, int k, std::uint64_t seed);

/// Training rows are every fold but `held_out`.
TrainTestSplit fold_split(const Dataset& data, const std::vector<std::vector<Index>>& folds,
                          std::size_t held_out);

struct SeriesSpec {
    Index lag_window = 45;
    Index horizon = 1;
    /// Leading series entries reserved for training; 0 means no split.
    Index train_count = 0;
};

/// Sliding-window examples: example t has features series[t .. t+lag-1] and
/// target series[t+lag-1+horizon].
Dataset window_series(const std::vector<double>& series, const SeriesSpec& spec);

/// Series position of each windowed example's target.
std::vector<Index> window_target_positions(Index series_length, const SeriesSpec& spec);

/// Windows the series and assigns every example whose target falls inside the
/// first spec.train_count entries to training, the rest to testing.
TrainTestSplit window_split(const std::vector<double>& series, const SeriesSpec& spec);

} // namespace krsml
