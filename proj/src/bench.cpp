#include "krsml/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "krsml/errors.hpp"

namespace krsml {

namespace {

constexpr Learner kLearners[] = {Learner::KR, Learner::MLKR, Learner::KR_PCA, Learner::KR_SML};

BenchEntry run_learner(Learner learner, const TrainTestSplit& split, const BenchConfig& config) {
    BenchEntry entry{learner, std::nullopt, {}};
    try {
        const FitOptions& opt = learner == Learner::MLKR ? config.mlkr : config.sml;
        FitResult fitted = fit(learner, split.train, opt);
        EvalReport report = evaluate(fitted.model, split.test);
        if (fitted.trace) {
            report.train_summary = TraceSummary{fitted.trace->best().objective, fitted.trace->iterations(),
                                                fitted.trace->accepted_steps()};
        }
        entry.report = std::move(report);
    } catch (const Error& e) {
        entry.error = e.what();
    }
    return entry;
}

nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json j;
    j["learner"] = learner_name(r.learner);
    j["rmse"] = r.rmse;
    j["mare"] = r.mare;
    j["accumulated_error"] = r.accumulated_error;
    j["metric_rank"] = r.metric_rank;
    j["original_dim"] = r.original_dim;
    j["metric_dim"] = r.metric_dim;
    j["n_test"] = r.n_test;
    j["skipped_mare_points"] = r.skipped_mare_points;
    if (r.train_summary) {
        j["train"] = {{"final_objective", r.train_summary->final_objective},
                      {"iterations", r.train_summary->iterations},
                      {"accepted_steps", r.train_summary->accepted_steps}};
    }
    return j;
}

nlohmann::json options_json(const FitOptions& o) {
    return {{"alpha", o.train.alpha},
            {"mu", o.train.mu},
            {"theta", o.train.theta},
            {"max_iters", o.train.max_iters},
            {"k_neighbors", o.train.kernel.k_neighbors},
            {"sigma", o.train.kernel.sigma},
            {"variance_threshold", o.variance_threshold},
            {"standardize", o.standardize}};
}

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

} // namespace

BenchReport bench_command(const std::vector<TrainTestSplit>& splits, const BenchConfig& config) {
    if (splits.empty()) throw InvalidArgument("bench: no splits given");
    BenchReport out;
    out.config = config;
    for (const auto& split : splits) {
        if (split.train.d() != split.test.d()) throw InvalidArgument("bench: train and test dimensions differ");
        std::vector<std::future<BenchEntry>> jobs;
        for (const Learner l : kLearners)
            jobs.push_back(std::async(std::launch::async, run_learner, l, std::cref(split), std::cref(config)));
        BenchSplit result;
        for (auto& j : jobs) result.entries.push_back(j.get());
        out.splits.push_back(std::move(result));
    }

    for (std::size_t l = 0; l < std::size(kLearners); ++l) {
        BenchRow row;
        row.learner = kLearners[l];
        int ok = 0;
        for (const auto& split : out.splits) {
            const BenchEntry& e = split.entries[l];
            if (!e.report) {
                if (row.error.empty()) row.error = e.error;
                continue;
            }
            ++ok;
            row.rmse += e.report->rmse;
            row.mare += e.report->mare;
            row.accumulated_error += e.report->accumulated_error;
            row.metric_rank += e.report->metric_rank;
            row.metric_dim += static_cast<double>(e.report->metric_dim);
            row.original_dim = e.report->original_dim;
        }
        row.ok = ok > 0;
        if (ok > 0) {
            for (double* v : {&row.rmse, &row.mare, &row.accumulated_error, &row.metric_rank, &row.metric_dim})
                *v /= ok;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["kind"] = "eval";
    j["rank_rel_tol"] = 1e-8;
    j["report"] = report_json(report);
    return j.dump(2) + "\n";
}

std::string bench_report_json(const BenchReport& report) {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["kind"] = "bench";
    j["aggregation"] = "mean of per-split values";
    j["rank_rel_tol"] = 1e-8;
    j["config"] = {{"KR_SML", options_json(report.config.sml)}, {"MLKR", options_json(report.config.mlkr)}};
    j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["learner"] = learner_name(row.learner);
        r["status"] = row.ok ? "ok" : "failed";
        if (row.ok) {
            r["rmse"] = row.rmse;
            r["mare"] = row.mare;
            r["accumulated_error"] = row.accumulated_error;
            r["metric_rank"] = row.metric_rank;
            r["metric_dim"] = row.metric_dim;
            r["original_dim"] = row.original_dim;
        }
        if (!row.error.empty()) r["error"] = row.error;
        j["rows"].push_back(r);
    }
    j["splits"] = nlohmann::json::array();
    for (const auto& split : report.splits) {
        nlohmann::json s = nlohmann::json::array();
        for (const auto& e : split.entries) {
            if (e.report) s.push_back(report_json(*e.report));
            else s.push_back({{"learner", learner_name(e.learner)}, {"status", "failed"}, {"error", e.error}});
        }
        j["splits"].push_back(s);
    }
    return j.dump(2) + "\n";
}

std::string bench_report_table(const BenchReport& report) {
    std::ostringstream out;
    out << pad("learner", 8) << pad("RMSE", 14) << pad("MARE", 14) << pad("L", 14) << pad("rank(M)", 9)
        << pad("d", 5) << pad("PCA_d", 7) << '\n';
    for (const auto& row : report.rows) {
        out << pad(std::string(learner_name(row.learner)), 8);
        if (!row.ok) {
            out << "  failed: " << row.error << '\n';
            continue;
        }
        const std::string pca_d = row.learner == Learner::KR_PCA ? fmt(row.metric_dim, "%.4g") : "-";
        out << pad(fmt(row.rmse), 14) << pad(fmt(row.mare), 14) << pad(fmt(row.accumulated_error), 14)
            << pad(fmt(row.metric_rank, "%.4g"), 9) << pad(std::to_string(row.original_dim), 5) << pad(pca_d, 7)
            << '\n';
    }
    if (report.splits.size() > 1) out << "(means over " << report.splits.size() << " splits)\n";
    return out.str();
}

std::string eval_report_table(const EvalReport& r) {
    std::ostringstream out;
    out << "learner             " << learner_name(r.learner) << '\n'
        << "n_test              " << r.n_test << '\n'
        << "RMSE                " << fmt(r.rmse, "%.10g") << '\n'
        << "MARE                " << fmt(r.mare, "%.10g") << " (" << r.skipped_mare_points
        << " zero targets skipped)\n"
        << "accumulated error L " << fmt(r.accumulated_error, "%.10g") << '\n'
        << "rank(M)             " << r.metric_rank << " of " << r.metric_dim << " (input dim " << r.original_dim
        << ")\n";
    return out.str();
}

std::string predictions_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "index,y,yhat\n";
    for (Index i = 0; i < r.targets.size(); ++i)
        out << i << ',' << fmt(r.targets(i), "%.17g") << ',' << fmt(r.predictions(i), "%.17g") << '\n';
    return out.str();
}

std::vector<std::filesystem::path> write_prediction_dumps(const BenchReport& report, const std::string& prefix) {
    std::vector<std::filesystem::path> written;
    for (std::size_t s = 0; s < report.splits.size(); ++s) {
        for (const auto& e : report.splits[s].entries) {
            if (!e.report) continue;
            std::string name = prefix + "_" + std::string(learner_name(e.learner));
            if (report.splits.size() > 1) name += "_split" + std::to_string(s + 1);
            const std::filesystem::path path = name + ".csv";
            std::ofstream out(path);
            if (!out) throw DataError("cannot write '" + path.string() + "'");
            out << predictions_csv(*e.report);
            written.push_back(path);
        }
    }
    return written;
}

} // namespace krsml
