#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stkd {

struct EpochMetric {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double test_accuracy = 0.0;  // percent
};

struct RunReport {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<EpochMetric> per_epoch;
    double final_test_accuracy = 0.0;
    double wall_clock_seconds = 0.0;
};

struct AggregateReport {
    std::string method;
    std::vector<std::uint64_t> seeds;
    double median_accuracy = 0.0;
    double mean_accuracy = 0.0;
    std::vector<double> per_seed_accuracies;
    std::uint64_t config_checksum = 0;
};

/// Median with the usual even-count average; reported statistic of a run set.
double median(std::vector<double> values);
double mean(const std::vector<double>& values);

/// Emits line-delimited JSON records: run_start, epoch, run_end, run_failed,
/// aggregate. All numeric payloads are deterministic; the only
/// nondeterministic field is wall_clock_seconds on run_end.
class ReportWriter {
public:
    explicit ReportWriter(std::ostream& out) : out_(out) {}

    void run_start(const std::string& method, std::uint64_t seed);
    void epoch(const std::string& method, std::uint64_t seed, const EpochMetric& m);
    void run_end(const RunReport& r);
    void run_failed(const std::string& method, std::uint64_t seed, const std::string& error);
    void aggregate(const AggregateReport& a);

private:
    std::ostream& out_;
};

/// Checks that every line of a report stream is a well-formed record of a
/// known event type with the required fields. Returns false and fills
/// `error` (with the offending line number) otherwise.
bool validate_report_stream(std::istream& in, std::string& error);

}  // namespace stkd
