#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "krsml/data_io.hpp"
#include "krsml/evaluation.hpp"

namespace krsml {

inline constexpr const char* kReportSchema = "krsml.report/1";

struct BenchConfig {
    FitOptions sml;  ///< KR_SML settings; also supplies kernel, standardization and PCA threshold
    FitOptions mlkr; ///< MLKR settings (mu ignored)
};

/// One learner evaluated on one train/test split.
struct BenchEntry {
    Learner learner = Learner::KR;
    std::optional<EvalReport> report; ///< empty when training failed
    std::string error;
};

struct BenchSplit {
    std::vector<BenchEntry> entries; ///< KR, MLKR, KR_PCA, KR_SML
};

/// Row of the comparison table. Each value is the mean over splits of the
/// per-split value, taken over the splits where the learner succeeded.
struct BenchRow {
    Learner learner = Learner::KR;
    bool ok = false;
    std::string error;
    double rmse = 0.0;
    double mare = 0.0;
    double accumulated_error = 0.0;
    double metric_rank = 0.0;
    double metric_dim = 0.0;
    Index original_dim = 0;
};

struct BenchReport {
    std::vector<BenchSplit> splits;
    std::vector<BenchRow> rows;
    BenchConfig config;
};

/// Trains KR, MLKR, KR_PCA and KR_SML on each split with identical
/// standardization and evaluates them on the matching test set. A learner
/// that throws is reported in its row; the other rows are unaffected.
BenchReport bench_command(const std::vector<TrainTestSplit>& splits, const BenchConfig& config);

/// Machine-readable report (JSON, versioned by kReportSchema).
std::string bench_report_json(const BenchReport& report);
std::string eval_report_json(const EvalReport& report);

/// Aligned plain-text comparison table.
std::string bench_report_table(const BenchReport& report);
std::string eval_report_table(const EvalReport& report);

/// CSV "index,y,yhat" for external plotting.
std::string predictions_csv(const EvalReport& report);

/// Writes one prediction dump per learner and split, named
/// <prefix>_<LEARNER>.csv (or <prefix>_<LEARNER>_split<i>.csv for several splits).
std::vector<std::filesystem::path> write_prediction_dumps(const BenchReport& report, const std::string& prefix);

} // namespace krsml
