#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stkd/config.hpp"
#include "stkd/data.hpp"
#include "stkd/losses.hpp"
#include "stkd/network.hpp"
#include "stkd/optim.hpp"
#include "stkd/report.hpp"

namespace stkd {

enum class Method { baseline, vanilla_kd, stkd };

/// Everything one training run needs. label is the method name used in
/// reports ("stkd:lambda=0.43" for sweep variants).
struct TrainPlan {
    Method method = Method::baseline;
    std::string label = "baseline";
    int epochs = 200;
    std::size_t batch_size = 128;
    SgdConfig optimizer;
    StepSchedule schedule;
    MixPolicy mix;      // stkd only
    KDHyper kd;         // vanilla_kd only
    DistillTerm distill = DistillTerm::kl;
    double flip_probability = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Raised when a run produces a non-finite loss or logits; carries the
/// 1-based epoch and batch where training fell over.
struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(int epoch, std::size_t batch, const std::string& what);
    int epoch;
    std::size_t batch;
};

using EpochCallback = std::function<void(const EpochMetric&)>;

/// Test accuracy in percent: plain argmax over logits (equivalently over
/// softmax), ties broken toward the lower class index. Inputs are used
/// as-is; no mixing or augmentation.
double evaluate_accuracy(const Network& net, const Dataset& ds);

/// Plain cross-entropy training on original data; used for the teacher
/// (Stage 0) and for the student-alone baseline. plan.method must be baseline.
RunReport train_teacher(Network& net, const Dataset& train, const Dataset& test,
                        const TrainPlan& plan, const EpochCallback& on_epoch = {});

/// Temperature-softened distillation on original (unmixed) inputs.
RunReport distill_vanilla_kd(const Network& teacher, Network& student, const Dataset& train,
                             const Dataset& test, const TrainPlan& plan,
                             const EpochCallback& on_epoch = {});

/// Similarity-transfer distillation: per batch, build a virtual batch by
/// mixup, evaluate the frozen teacher on the mixed inputs, and update the
/// student with the total loss. Teacher parameters are never touched.
RunReport distill_stkd(const Network& teacher, Network& student, const Dataset& train,
                       const Dataset& test, const TrainPlan& plan,
                       const EpochCallback& on_epoch = {});

/// Writes one row per sample: class index, then the activations entering the
/// final affine layer. Requires at least two layers.
void export_penultimate(const Network& net, const Dataset& ds, const std::string& path);

/// Materializes the configured dataset (synthetic, delimited or idx), unsplit.
Dataset build_full_dataset(const DatasetConfig& dc);
/// The (train, test) pair after the seeded split.
std::pair<Dataset, Dataset> build_split_dataset(const DatasetConfig& dc);

struct ExperimentOutcome {
    std::vector<RunReport> runs;
    std::vector<AggregateReport> aggregates;
    std::size_t failed_runs = 0;
    bool ok = true;
    std::string failure_reason;
};

/// Runs every configured method over every seed, writes checkpoints, the
/// echoed config and the line-delimited report stream into the output
/// directory, and aggregates final accuracies per method (median + mean).
///
/// Seeds may run in parallel (config.workers / STKD_WORKERS); records are
/// serialized through one writer in seed order, so the report bytes do not
/// depend on the worker count. If any run fails, aggregation proceeds only
/// for methods retaining at least three completed runs; otherwise the
/// outcome is marked failed.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::string& output_dir_override = "");

}  // namespace stkd
