#pragma once

// Report emission: a CSV comparing Monte Carlo tails with the solved rate
// function, and a JSON summary carrying the trend regression. Rows sort by
// (c, n) and numbers serialize with 17 significant digits, so reports are
// byte-stable for a fixed set of records regardless of worker count or
// completion order.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwi/config.hpp"
#include "rwi/mc_engine.hpp"
#include "rwi/persist.hpp"

namespace rwi {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ReportOutput {
    std::filesystem::path csv_path;
    std::filesystem::path summary_path;
    std::vector<std::string> warnings;
};

namespace report_detail {

struct TailRow {
    std::uint64_t n = 0;
    double tau = 0.0;
    double c = 0.0;
    double p_hat = 0.0, ci_low = 0.0, ci_high = 0.0;
    bool resolution_floor = false;
    std::uint64_t replicas = 0;
    std::string method;
};

inline TailEstimate to_estimate(const TailRow& row) {
    TailEstimate e;
    e.c = row.c;
    e.n = row.n;
    e.p_hat = row.p_hat;
    e.ci_low = row.ci_low;
    e.ci_high = row.ci_high;
    e.replicas = row.replicas;
    e.method = row.method == "splitting" ? TailMethod::splitting : TailMethod::naive;
    e.flags.resolution_floor = row.resolution_floor;
    return e;
}

}  // namespace report_detail

inline ReportOutput write_report(const std::filesystem::path& dir, ExperimentKind kind) {
    RecordStore store(dir);
    const std::vector<ResultRecord> records = store.load_all();

    ReportOutput out;
    std::vector<report_detail::TailRow> tails;
    std::map<std::string, double> solver_rate;        // key: %.17g of c
    std::map<std::string, nlohmann::json> solver_raw;
    bool any_for_kind = false;

    for (const ResultRecord& r : records) {
        if (r.kind == experiment_kind_name(kind)) any_for_kind = true;
        const auto& p = r.payload;
        const std::string type = p.value("type", "");
        if (type == "tail") {
            report_detail::TailRow row;
            row.n = p.at("n").get<std::uint64_t>();
            row.tau = scales_for(row.n).tau;
            row.c = p.at("c").get<double>();
            row.p_hat = p.at("p_hat").get<double>();
            row.ci_low = p.at("ci_low").get<double>();
            row.ci_high = p.at("ci_high").get<double>();
            row.resolution_floor = p.value("resolution_floor", false);
            row.replicas = p.value("replicas", std::uint64_t{0});
            row.method = p.value("method", "naive");
            tails.push_back(row);
        } else if (type == "rate") {
            const double c = p.at("c").get<double>();
            solver_rate[format_g17(c)] = p.at("value").get<double>();
            solver_raw[format_g17(c)] = p;
        }
    }

    if (!any_for_kind)
        throw std::runtime_error("write_report: no records of kind " +
                                 std::string(experiment_kind_name(kind)) + " in " + dir.string());

    std::sort(tails.begin(), tails.end(),
              [](const report_detail::TailRow& a, const report_detail::TailRow& b) {
                  if (a.c != b.c) return a.c < b.c;
                  return a.n < b.n;
              });

    const std::string kind_name = experiment_kind_name(kind);
    out.csv_path = dir / ("report_" + kind_name + ".csv");
    std::ofstream csv(out.csv_path);
    csv << "n,tau,c,p_hat,ci_low,ci_high,minus_log_p_over_tau,solver_rate,gap\n";
    for (const auto& row : tails) {
        const std::string c_key = format_g17(row.c);
        const bool have_rate = solver_rate.count(c_key) > 0;
        if (!have_rate)
            out.warnings.push_back("no solver result for c=" + c_key + "; gap left empty");
        std::string minus_log, gap;
        if (row.p_hat > 0.0) {
            const double mlp = -std::log(row.p_hat) / row.tau;
            minus_log = format_g17(mlp);
            if (have_rate) gap = format_g17(mlp - solver_rate[c_key]);
        }
        csv << row.n << ',' << format_g17(row.tau) << ',' << c_key << ','
            << format_g17(row.p_hat) << ',' << format_g17(row.ci_low) << ','
            << format_g17(row.ci_high) << ',' << minus_log << ','
            << (have_rate ? format_g17(solver_rate[c_key]) : std::string{}) << ',' << gap
            << '\n';
    }
    csv.close();

    // JSON summary: trend regression per c group (needs >= 3 positive points).
    nlohmann::json summary;
    summary["kind"] = kind_name;
    summary["trend"] = nlohmann::json::array();
    std::map<std::string, std::vector<report_detail::TailRow>> by_c;
    for (const auto& row : tails) by_c[format_g17(row.c)].push_back(row);
    for (const auto& [c_key, rows] : by_c) {
        nlohmann::json entry;
        entry["c"] = rows.front().c;
        std::vector<TailEstimate> ests;
        for (const auto& row : rows) ests.push_back(report_detail::to_estimate(row));
        int positive = 0;
        for (const auto& e : ests)
            if (e.p_hat > 0) ++positive;
        if (positive >= 3) {
            const TrendReport trend = rate_trend(ests);
            entry["slope"] = trend.slope;
            entry["slope_ci"] = {trend.slope_ci_low, trend.slope_ci_high};
            entry["intercept"] = trend.intercept;
            auto points = nlohmann::json::array();
            for (const auto& pt : trend.points)
                points.push_back({{"n", pt.n},
                                  {"tau", pt.tau},
                                  {"p_hat", pt.p_hat},
                                  {"minus_log_p_over_tau", pt.minus_log_p_over_tau},
                                  {"used", pt.used}});
            entry["points"] = points;
            entry["notes"] = trend.notes;
        } else {
            entry["notes"] = {"fewer than 3 positive estimates; no trend fit"};
        }
        if (solver_rate.count(c_key)) entry["solver_rate"] = solver_rate[c_key];
        summary["trend"].push_back(entry);
    }
    summary["solver"] = nlohmann::json::array();
    for (const auto& [c_key, raw] : solver_raw) summary["solver"].push_back(raw);
    summary["warnings"] = out.warnings;

    out.summary_path = dir / ("report_" + kind_name + "_summary.json");
    std::ofstream js(out.summary_path);
    js << summary.dump(2) << '\n';
    return out;
}

}  // namespace rwi
