#include "krsml/data_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "krsml/errors.hpp"

namespace krsml {

Dataset::Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> names)
    : features(std::move(x)), targets(std::move(y)), feature_names(std::move(names)) {}

void Dataset::validate() const {
    if (n() < 1 || d() < 1) throw InvalidArgument("dataset must have at least one row and one feature");
    if (targets.size() != n()) {
        throw InvalidArgument("dataset has " + std::to_string(n()) + " feature rows but " +
                              std::to_string(targets.size()) + " targets");
    }
    if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != d())
        throw InvalidArgument("dataset feature_names length does not match feature count");
    if (!features.allFinite() || !targets.allFinite())
        throw InvalidArgument("dataset contains non-finite values");
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.features.resize(static_cast<Index>(rows.size()), d());
    out.targets.resize(static_cast<Index>(rows.size()));
    out.feature_names = feature_names;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= n()) throw InvalidArgument("subset: row index out of range");
        out.features.row(static_cast<Index>(r)) = features.row(rows[r]);
        out.targets(static_cast<Index>(r)) = targets(rows[r]);
    }
    return out;
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && errno != ERANGE && std::isfinite(out);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

} // namespace

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<double> values; ///< row-major
    std::size_t rows = 0;
};

Table read_table(const std::filesystem::path& path) {
    std::ifstream in = open_or_throw(path);
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (t.header.empty() && std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) t.header = split_row(line);
    }
    if (t.header.empty()) throw DataError("'" + path.string() + "' is empty");
    const std::size_t cols = t.header.size();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != cols) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                            " columns, found " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v)) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": column '" + t.header[c] +
                                "' has non-numeric value '" + cells[c] + "'");
            }
            t.values.push_back(v);
        }
        ++t.rows;
    }
    if (t.rows == 0) throw DataError("'" + path.string() + "' has a header but no data rows");
    return t;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& target) {
    const Table t = read_table(path);
    const auto cols = static_cast<long>(t.header.size());
    if (cols < 2) throw DataError("'" + path.string() + "' needs a target and at least one feature column");

    long target_col = -1;
    if (const auto* name = std::get_if<std::string>(&target)) {
        const auto it = std::find(t.header.begin(), t.header.end(), *name);
        if (it == t.header.end()) throw DataError("column '" + *name + "' not found in '" + path.string() + "'");
        target_col = static_cast<long>(it - t.header.begin());
    } else {
        const long idx = std::get<long>(target);
        target_col = idx < 0 ? cols + idx : idx;
        if (target_col < 0 || target_col >= cols)
            throw DataError("target column index " + std::to_string(idx) + " out of range");
    }

    Dataset out;
    out.features.resize(static_cast<Index>(t.rows), cols - 1);
    out.targets.resize(static_cast<Index>(t.rows));
    for (long c = 0; c < cols; ++c)
        if (c != target_col) out.feature_names.push_back(t.header[static_cast<std::size_t>(c)]);
    for (std::size_t r = 0; r < t.rows; ++r) {
        Index f = 0;
        for (long c = 0; c < cols; ++c) {
            const double v = t.values[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
            if (c == target_col) out.targets(static_cast<Index>(r)) = v;
            else out.features(static_cast<Index>(r), f++) = v;
        }
    }
    return out;
}

Eigen::MatrixXd load_features(const std::filesystem::path& path, std::vector<std::string>* names) {
    Table t = read_table(path);
    const auto cols = static_cast<Index>(t.header.size());
    Eigen::MatrixXd out(static_cast<Index>(t.rows), cols);
    for (std::size_t r = 0; r < t.rows; ++r)
        for (Index c = 0; c < cols; ++c)
            out(static_cast<Index>(r), c) = t.values[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)];
    if (names) *names = std::move(t.header);
    return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& target_name) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (Index j = 0; j < data.d(); ++j) {
        out << (data.feature_names.empty() ? "x" + std::to_string(j + 1)
                                           : data.feature_names[static_cast<std::size_t>(j)])
            << ',';
    }
    out << target_name << '\n';
    char buf[32];
    for (Index i = 0; i < data.n(); ++i) {
        for (Index j = 0; j < data.d(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,", data.features(i, j));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", data.targets(i));
        out << buf;
    }
}

std::vector<double> load_series(const std::filesystem::path& path) {
    std::ifstream in = open_or_throw(path);
    std::vector<double> series;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string cell = trim(line);
        if (cell.empty()) continue;
        if (cell.find(',') != std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": series input must have one column");
        double v = 0.0;
        if (!parse_double(cell, v)) {
            if (!seen_content) { // header
                seen_content = true;
                continue;
            }
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value '" + cell + "'");
        }
        seen_content = true;
        series.push_back(v);
    }
    if (series.empty()) throw DataError("'" + path.string() + "' contains no values");
    return series;
}

Standardizer Standardizer::identity(Index d) {
    return Standardizer{Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
    if (features.cols() != means.size())
        throw InvalidArgument("standardizer fitted on " + std::to_string(means.size()) +
                              " features applied to " + std::to_string(features.cols()));
    return (features.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

Dataset Standardizer::apply(const Dataset& data) const {
    return Dataset(apply(data.features), data.targets, data.feature_names);
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& standardized) const {
    if (standardized.cols() != means.size()) throw InvalidArgument("standardizer inverse: dimension mismatch");
    return (standardized.array().rowwise() * scales.transpose().array()).rowwise() + means.transpose().array();
}

Standardizer fit_standardizer(const Dataset& train) {
    train.validate();
    if (train.n() < 2) throw InsufficientData("fit_standardizer needs at least 2 rows");
    const Index d = train.d();
    const auto n = static_cast<double>(train.n());
    Standardizer s{Eigen::VectorXd(d), Eigen::VectorXd(d)};
    for (Index j = 0; j < d; ++j) {
        // Shifting by the first value makes constant columns come out exactly.
        const auto col = train.features.col(j);
        const double shift = col(0);
        const double mean = shift + (col.array() - shift).sum() / n;
        const double var = (col.array() - mean).square().sum() / n;
        s.means(j) = mean;
        s.scales(j) = std::max(std::sqrt(var), Standardizer::kScaleFloor);
    }
    return s;
}

TrainTestSplit split_prefix(const Dataset& data, Index train_count) {
    if (train_count < 1 || train_count >= data.n()) {
        throw InvalidArgument("prefix split needs 1 <= train_count < n (train_count=" +
                              std::to_string(train_count) + ", n=" + std::to_string(data.n()) + ")");
    }
    std::vector<Index> train(static_cast<std::size_t>(train_count));
    std::vector<Index> test(static_cast<std::size_t>(data.n() - train_count));
    std::iota(train.begin(), train.end(), Index{0});
    std::iota(test.begin(), test.end(), train_count);
    return {data.subset(train), data.subset(test)};
}

std::vector<std::vector<Index>> split_folds(Index n, int k, std::uint64_t seed) {
    if (k < 2 || k > n) {
        throw InvalidArgument("fold count must lie in [2, n] (k=" + std::to_string(k) +
                              ", n=" + std::to_string(n) + ")");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
    const Index base = n / k;
    const Index extra = n % k;
    Index pos = 0;
    for (Index f = 0; f < k; ++f) {
        const Index size = base + (f < extra ? 1 : 0);
        folds[static_cast<std::size_t>(f)].assign(order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    return folds;
}

TrainTestSplit fold_split(const Dataset& data, const std::vector<std::vector<Index>>& folds,
                          std::size_t held_out) {
    if (held_out >= folds.size()) throw InvalidArgument("fold_split: held-out fold out of range");
    std::vector<Index> train;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != held_out) train.insert(train.end(), folds[f].begin(), folds[f].end());
    return {data.subset(train), data.subset(folds[held_out])};
}

namespace {

void check_series_spec(Index length, const SeriesSpec& spec) {
    if (spec.lag_window < 1 || spec.horizon < 1)
        throw InvalidArgument("lag window and horizon must be positive");
    if (spec.lag_window + spec.horizon > length) {
        throw InsufficientData("series of length " + std::to_string(length) + " is too short for lag " +
                               std::to_string(spec.lag_window) + " and horizon " + std::to_string(spec.horizon));
    }
    if (spec.train_count < 0 || spec.train_count >= length)
        throw InvalidArgument("train_count must be smaller than the series length");
}

} // namespace

std::vector<Index> window_target_positions(Index series_length, const SeriesSpec& spec) {
    check_series_spec(series_length, spec);
    const Index count = series_length - spec.lag_window - spec.horizon + 1;
    std::vector<Index> pos(static_cast<std::size_t>(count));
    for (Index t = 0; t < count; ++t) pos[static_cast<std::size_t>(t)] = t + spec.lag_window - 1 + spec.horizon;
    return pos;
}

Dataset window_series(const std::vector<double>& series, const SeriesSpec& spec) {
    const auto length = static_cast<Index>(series.size());
    const auto targets = window_target_positions(length, spec);
    const auto count = static_cast<Index>(targets.size());
    Dataset out;
    out.features.resize(count, spec.lag_window);
    out.targets.resize(count);
    for (Index t = 0; t < count; ++t) {
        for (Index j = 0; j < spec.lag_window; ++j) out.features(t, j) = series[static_cast<std::size_t>(t + j)];
        out.targets(t) = series[static_cast<std::size_t>(targets[static_cast<std::size_t>(t)])];
    }
    for (Index j = 0; j < spec.lag_window; ++j)
        out.feature_names.push_back("lag" + std::to_string(spec.lag_window - j));
    return out;
}

TrainTestSplit window_split(const std::vector<double>& series, const SeriesSpec& spec) {
    const Dataset all = window_series(series, spec);
    const auto targets = window_target_positions(static_cast<Index>(series.size()), spec);
    std::vector<Index> train, test;
    for (std::size_t t = 0; t < targets.size(); ++t)
        (targets[t] < spec.train_count ? train : test).push_back(static_cast<Index>(t));
    if (train.empty() || test.empty())
        throw InsufficientData("train_count leaves one side of the windowed split empty");
    return {all.subset(train), all.subset(test)};
}

} // namespace krsml
