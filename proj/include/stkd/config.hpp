#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stkd/data.hpp"
#include "stkd/losses.hpp"
#include "stkd/mixup.hpp"
#include "stkd/optim.hpp"

namespace stkd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SourceDelimited {
    std::string path;
    DelimitedSchema schema;
};

struct SourceIdx {
    std::string images;
    std::string labels;
};

struct DatasetConfig {
    // Exactly one of synthetic / delimited / idx.
    std::optional<SyntheticSpec> synthetic;
    std::optional<SourceDelimited> delimited;
    std::optional<SourceIdx> idx;
    double test_fraction = 0.25;
    std::uint64_t split_seed = 1;
    double flip_probability = 0.0;
};

/// Shared training regime; method sections may override any field.
struct TrainingSection {
    int epochs = 200;
    std::size_t batch_size = 128;
    SgdConfig optimizer;            // lr 0.1, momentum 0.9, weight decay 1e-4
    std::vector<int> milestones{80, 100, 150};
    double lr_factor = 0.1;

    StepSchedule schedule() const {
        return StepSchedule{optimizer.learning_rate, milestones, lr_factor};
    }
};

struct BaselineSection {
    TrainingSection training;
};

struct VanillaKdSection {
    TrainingSection training;
    KDHyper kd;
};

struct StkdSection {
    TrainingSection training;
    MixPolicy mix;
    /// Fixed-mode coefficients; more than one value expands into one method
    /// variant per coefficient (the sweep protocol).
    std::vector<double> lambda_values{0.5};
    DistillTerm distill = DistillTerm::kl;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> teacher_hidden{64, 64};
    std::vector<std::size_t> student_hidden{8};
    TrainingSection training;
    std::optional<BaselineSection> baseline;
    std::optional<VanillaKdSection> vanilla_kd;
    std::optional<StkdSection> stkd;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::string output_dir = "stkd-out";
    unsigned workers = 0;  // 0: use STKD_WORKERS env var, else 1
};

/// Strict parse: unknown keys are rejected with their full path, syntax
/// errors carry the line number, semantic violations name the key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Serializes the config with every default materialized explicitly.
/// parse(echo(c)) reproduces c.
std::string echo_config(const ExperimentConfig& cfg);

std::uint64_t config_checksum(const ExperimentConfig& cfg);

}  // namespace stkd
