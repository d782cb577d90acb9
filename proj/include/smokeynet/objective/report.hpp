#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "smokeynet/common/error.hpp"
#include "smokeynet/objective/metrics.hpp"
#include "smokeynet/objective/ttd.hpp"

namespace smokeynet {

/// Everything reported for one evaluated variant.
struct MetricsReport {
    std::string model;
    ClassificationMetrics classification;
    TtdSummary ttd;
    double params_millions = 0.0;
    double latency_ms_per_image = 0.0;
    /// Non-empty when the variant failed; the row then carries no numbers.
    std::string failure;
};

/// Header of the comparison table (comma separated).
inline constexpr const char* kMetricsTableHeader =
    "Model,Params(M),Time(ms/it),A,F1,P,R,TTD(mins),TTD_detected(mins),Undetected";

/// One row per variant. A/F1/P/R are percentages with two decimals.
inline void write_metrics_table(std::ostream& out, const std::vector<MetricsReport>& rows) {
    out << kMetricsTableHeader << '\n';
    for (const auto& row : rows) {
        out << '"' << row.model << '"';
        if (!row.failure.empty()) {
            out << ",FAILED,,,,,,,,\"" << row.failure << "\"\n";
            continue;
        }
        const auto& c = row.classification;
        const std::size_t undetected = row.ttd.fires.size() - row.ttd.detected_count;
        out << std::fixed << ',' << std::setprecision(1) << row.params_millions << ',' << std::setprecision(1)
            << row.latency_ms_per_image << ',' << std::setprecision(2) << 100.0 * c.accuracy << ','
            << 100.0 * c.f1 << ',' << 100.0 * c.precision << ',' << 100.0 * c.recall << ',' << row.ttd.mean_all
            << ',' << row.ttd.mean_detected << ',' << undetected << '\n';
        out.unsetf(std::ios::floatfield);
    }
}

inline void write_ttd_detail(std::ostream& out, const std::string& model, const TtdSummary& ttd) {
    out << "model,fire_id,ttd_minutes,undetected\n";
    for (const auto& fire : ttd.fires) {
        out << '"' << model << "\"," << fire.fire_id << ',' << std::fixed << std::setprecision(2) << fire.minutes
            << ',' << (fire.undetected ? 1 : 0) << '\n';
        out.unsetf(std::ios::floatfield);
    }
    for (const auto& fire : ttd.excluded) out << '"' << model << "\"," << fire << ",,excluded\n";
}

inline void write_metrics_table(const std::filesystem::path& path, const std::vector<MetricsReport>& rows) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write metrics table " + path.string());
    write_metrics_table(out, rows);
}

}  // namespace smokeynet
