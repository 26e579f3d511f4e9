#include "stkd/report.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace stkd {

using nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

void ReportWriter::run_start(const std::string& method, std::uint64_t seed) {
    out_ << json{{"event", "run_start"}, {"method", method}, {"seed", seed}}.dump() << '\n';
}

void ReportWriter::epoch(const std::string& method, std::uint64_t seed, const EpochMetric& m) {
    out_ << json{{"event", "epoch"},
                 {"method", method},
                 {"seed", seed},
                 {"epoch", m.epoch},
                 {"train_loss", m.train_loss},
                 {"test_accuracy", m.test_accuracy}}
                .dump()
         << '\n';
}

void ReportWriter::run_end(const RunReport& r) {
    out_ << json{{"event", "run_end"},
                 {"method", r.method},
                 {"seed", r.seed},
                 {"final_test_accuracy", r.final_test_accuracy},
                 {"wall_clock_seconds", r.wall_clock_seconds}}
                .dump()
         << '\n';
}

void ReportWriter::run_failed(const std::string& method, std::uint64_t seed,
                              const std::string& error) {
    out_ << json{{"event", "run_failed"}, {"method", method}, {"seed", seed}, {"error", error}}.dump()
         << '\n';
}

void ReportWriter::aggregate(const AggregateReport& a) {
    out_ << json{{"event", "aggregate"},
                 {"method", a.method},
                 {"seeds", a.seeds},
                 {"median_accuracy", a.median_accuracy},
                 {"mean_accuracy", a.mean_accuracy},
                 {"per_seed_accuracies", a.per_seed_accuracies},
                 {"config_checksum", a.config_checksum}}
                .dump()
         << '\n';
}

bool validate_report_stream(std::istream& in, std::string& error) {
    auto has = [](const json& j, const char* key, json::value_t type) {
        if (!j.contains(key)) return false;
        const json& v = j.at(key);
        if (type == json::value_t::number_float)
            return v.is_number();  // integral-valued doubles serialize as integers
        return v.type() == type;
    };

    std::string line;
    std::size_t line_no = 0;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            error = "line " + std::to_string(line_no) + ": empty record";
            return false;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            error = "line " + std::to_string(line_no) + ": not a JSON object";
            return false;
        }
        const std::string event = j.value("event", "");
        bool ok;
        if (event == "run_start" || event == "run_failed") {
            ok = has(j, "method", json::value_t::string) && j.contains("seed");
            if (event == "run_failed") ok = ok && has(j, "error", json::value_t::string);
        } else if (event == "epoch") {
            ok = has(j, "method", json::value_t::string) && j.contains("seed") &&
                 j.contains("epoch") && has(j, "train_loss", json::value_t::number_float) &&
                 has(j, "test_accuracy", json::value_t::number_float);
        } else if (event == "run_end") {
            ok = has(j, "method", json::value_t::string) && j.contains("seed") &&
                 has(j, "final_test_accuracy", json::value_t::number_float) &&
                 has(j, "wall_clock_seconds", json::value_t::number_float);
        } else if (event == "aggregate") {
            ok = has(j, "method", json::value_t::string) &&
                 has(j, "seeds", json::value_t::array) &&
                 has(j, "median_accuracy", json::value_t::number_float) &&
                 has(j, "mean_accuracy", json::value_t::number_float) &&
                 has(j, "per_seed_accuracies", json::value_t::array) &&
                 j.contains("config_checksum");
        } else {
            error = "line " + std::to_string(line_no) + ": unknown event '" + event + "'";
            return false;
        }
        if (!ok) {
            error = "line " + std::to_string(line_no) + ": missing fields for '" + event + "'";
            return false;
        }
        any = true;
    }
    if (!any) {
        error = "empty report stream";
        return false;
    }
    error.clear();
    return true;
}

}  // namespace stkd
