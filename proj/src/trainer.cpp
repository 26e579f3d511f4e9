#include "stkd/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stkd/checkpoint.hpp"
#include "stkd/mixup.hpp"

namespace stkd {

namespace fs = std::filesystem;

void TrainPlan::validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainPlan: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainPlan: batch size must be >= 1");
    optimizer.validate();
    schedule.validate();
    if (method == Method::stkd) mix.validate();
    if (method == Method::vanilla_kd) kd.validate();
}

TrainingDiverged::TrainingDiverged(int epoch_, std::size_t batch_, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) + ", batch " +
                         std::to_string(batch_) + ": " + what),
      epoch(epoch_),
      batch(batch_) {}

double evaluate_accuracy(const Network& net, const Dataset& ds) {
    const std::size_t n = ds.size();
    if (n == 0) throw std::invalid_argument("evaluate_accuracy: empty dataset");
    const std::size_t d = ds.feature_dim();
    constexpr std::size_t chunk = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t len = std::min(chunk, n - start);
        Tensor block = Tensor::zeros({len, d});
        std::copy_n(ds.inputs.data.begin() + static_cast<long>(start * d), len * d,
                    block.data.begin());
        const Tensor logits = net.logits(block);
        const std::size_t c = logits.cols();
        for (std::size_t i = 0; i < len; ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < c; ++j)
                if (logits.data[i * c + j] > logits.data[i * c + best]) best = j;
            if (best == ds.label_index(start + i)) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

/// A one-row batch cannot be paired; mix it with itself, which degenerates
/// to the unmixed sample whatever lambda gets drawn.
VirtualBatch self_pair(const LabeledBatch& batch, const MixPolicy& policy, Rng& rng) {
    VirtualBatch vb;
    vb.pair_index = {0};
    vb.lambdas = {policy.mode == MixMode::fixed ? policy.fixed_lambda
                                                : rng.beta(policy.alpha, policy.alpha)};
    vb.inputs = batch.inputs;
    vb.labels_a = batch.labels;
    vb.labels_b = batch.labels;
    return vb;
}

RunReport run_training(const Network* teacher, Network& student, const Dataset& train,
                       const Dataset& test, const TrainPlan& plan, const EpochCallback& on_epoch) {
    plan.validate();
    if (train.feature_dim() != student.input_dim())
        throw std::invalid_argument("training: dataset width " + std::to_string(train.feature_dim()) +
                                    " does not match network input " +
                                    std::to_string(student.input_dim()));
    if (train.class_count != student.output_dim())
        throw std::invalid_argument("training: class count mismatch (dataset " +
                                    std::to_string(train.class_count) + ", network " +
                                    std::to_string(student.output_dim()) + ")");
    if (teacher) {
        if (teacher->input_dim() != student.input_dim())
            throw std::invalid_argument("distillation: teacher and student input widths differ");
        if (teacher->output_dim() != student.output_dim())
            throw std::invalid_argument("distillation: teacher and student class counts differ");
    }

    const auto t0 = std::chrono::steady_clock::now();
    SgdState sgd(student, plan.optimizer);
    Rng mix_rng(Rng::derive(plan.seed, stream::mixup));
    Rng flip_rng(Rng::derive(plan.seed, stream::flip));
    const std::uint64_t batch_seed = Rng::derive(plan.seed, stream::batches);

    RunReport report;
    report.method = plan.label;
    report.seed = plan.seed;
    report.per_epoch.reserve(static_cast<std::size_t>(plan.epochs));

    for (int epoch = 0; epoch < plan.epochs; ++epoch) {
        sgd.set_learning_rate(plan.schedule.lr_at_epoch(epoch));
        double loss_sum = 0.0;
        const auto epoch_batches =
            batches(train, plan.batch_size, batch_seed, static_cast<std::uint64_t>(epoch));
        for (std::size_t bi = 0; bi < epoch_batches.size(); ++bi) {
            LabeledBatch batch = epoch_batches[bi];
            if (plan.flip_probability > 0.0 && batch.image_shape)
                batch = horizontal_flip(batch, plan.flip_probability, flip_rng);

            ForwardTrace trace;
            LossBundle lb;
            switch (plan.method) {
                case Method::baseline: {
                    trace = student.forward(batch.inputs);
                    if (!trace.logits.all_finite())
                        throw TrainingDiverged(epoch + 1, bi + 1, "non-finite student logits");
                    lb = cross_entropy(trace.logits, batch.labels);
                    break;
                }
                case Method::vanilla_kd: {
                    const Tensor teacher_logits = teacher->logits(batch.inputs);
                    trace = student.forward(batch.inputs);
                    if (!teacher_logits.all_finite() || !trace.logits.all_finite())
                        throw TrainingDiverged(epoch + 1, bi + 1, "non-finite logits");
                    lb = vanilla_kd_loss(trace.logits, teacher_logits, batch.labels, plan.kd);
                    break;
                }
                case Method::stkd: {
                    const VirtualBatch vb = batch.size() >= 2
                                                ? make_virtual_batch(batch, plan.mix, mix_rng)
                                                : self_pair(batch, plan.mix, mix_rng);
                    // Teacher logits on the mixed inputs, recomputed every
                    // batch in inference mode; no gradient reaches them.
                    const Tensor teacher_logits = teacher->logits(vb.inputs);
                    trace = student.forward(vb.inputs);
                    if (!teacher_logits.all_finite() || !trace.logits.all_finite())
                        throw TrainingDiverged(epoch + 1, bi + 1, "non-finite logits");
                    lb = stkd_total_loss(trace.logits, teacher_logits, vb, plan.distill);
                    break;
                }
            }
            if (!std::isfinite(lb.value))
                throw TrainingDiverged(epoch + 1, bi + 1, "non-finite loss value");
            const Gradients grads = student.backward(trace, lb.grad_logits);
            sgd.step(student, grads);
            loss_sum += lb.value;
        }
        EpochMetric m;
        m.epoch = epoch + 1;
        m.train_loss = loss_sum / static_cast<double>(epoch_batches.size());
        m.test_accuracy = evaluate_accuracy(student, test);
        report.per_epoch.push_back(m);
        if (on_epoch) on_epoch(m);
    }
    report.final_test_accuracy = report.per_epoch.back().test_accuracy;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace

RunReport train_teacher(Network& net, const Dataset& train, const Dataset& test,
                        const TrainPlan& plan, const EpochCallback& on_epoch) {
    if (plan.method != Method::baseline)
        throw std::invalid_argument("train_teacher: plan method must be baseline");
    return run_training(nullptr, net, train, test, plan, on_epoch);
}

RunReport distill_vanilla_kd(const Network& teacher, Network& student, const Dataset& train,
                             const Dataset& test, const TrainPlan& plan,
                             const EpochCallback& on_epoch) {
    if (plan.method != Method::vanilla_kd)
        throw std::invalid_argument("distill_vanilla_kd: plan method must be vanilla_kd");
    return run_training(&teacher, student, train, test, plan, on_epoch);
}

RunReport distill_stkd(const Network& teacher, Network& student, const Dataset& train,
                       const Dataset& test, const TrainPlan& plan, const EpochCallback& on_epoch) {
    if (plan.method != Method::stkd)
        throw std::invalid_argument("distill_stkd: plan method must be stkd");
    return run_training(&teacher, student, train, test, plan, on_epoch);
}

void export_penultimate(const Network& net, const Dataset& ds, const std::string& path) {
    if (net.layer_count() < 2)
        throw std::invalid_argument("export_penultimate: network needs at least two layers");
    std::size_t last_affine = net.layer_count();
    for (std::size_t i = net.layer_count(); i-- > 0;)
        if (net.layers()[i].has_params()) {
            last_affine = i;
            break;
        }

    const ForwardTrace trace = net.forward(ds.inputs);
    const Tensor& acts = trace.layer_inputs[last_affine];

    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    char buf[32];
    const std::size_t n = ds.size(), w = acts.cols();
    for (std::size_t i = 0; i < n; ++i) {
        out << ds.label_index(i);
        for (std::size_t j = 0; j < w; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", acts.data[i * w + j]);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

Dataset build_full_dataset(const DatasetConfig& dc) {
    if (dc.synthetic) return generate_synthetic(*dc.synthetic);
    if (dc.delimited) return load_delimited(dc.delimited->path, dc.delimited->schema);
    if (dc.idx) return load_idx(dc.idx->images, dc.idx->labels);
    throw std::invalid_argument("dataset config has no source");
}

std::pair<Dataset, Dataset> build_split_dataset(const DatasetConfig& dc) {
    return split_dataset(build_full_dataset(dc), dc.test_fraction, dc.split_seed);
}

namespace {

struct MethodVariant {
    TrainPlan plan;  // seed filled per run
};

TrainPlan base_plan(const TrainingSection& t, Method method, std::string label,
                    double flip_probability) {
    TrainPlan p;
    p.method = method;
    p.label = std::move(label);
    p.epochs = t.epochs;
    p.batch_size = t.batch_size;
    p.optimizer = t.optimizer;
    p.schedule = t.schedule();
    p.flip_probability = flip_probability;
    return p;
}

std::string format_lambda(double v) { return nlohmann::json(v).dump(); }

std::vector<MethodVariant> method_variants(const ExperimentConfig& cfg) {
    std::vector<MethodVariant> out;
    const double flip = cfg.dataset.flip_probability;
    if (cfg.baseline)
        out.push_back({base_plan(cfg.baseline->training, Method::baseline, "baseline", flip)});
    if (cfg.vanilla_kd) {
        MethodVariant v{
            base_plan(cfg.vanilla_kd->training, Method::vanilla_kd, "vanilla_kd", flip)};
        v.plan.kd = cfg.vanilla_kd->kd;
        out.push_back(std::move(v));
    }
    if (cfg.stkd) {
        const StkdSection& sec = *cfg.stkd;
        const bool sweep = sec.mix.mode == MixMode::fixed && sec.lambda_values.size() > 1;
        const std::vector<double> lambdas =
            sec.mix.mode == MixMode::fixed ? sec.lambda_values : std::vector<double>{0.0};
        for (double lam : lambdas) {
            std::string label = sweep ? "stkd:lambda=" + format_lambda(lam) : "stkd";
            MethodVariant v{base_plan(sec.training, Method::stkd, std::move(label), flip)};
            v.plan.mix = sec.mix;
            if (sec.mix.mode == MixMode::fixed) v.plan.mix.fixed_lambda = lam;
            v.plan.distill = sec.distill;
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::string checkpoint_role(const std::string& label) {
    std::string role = label;
    for (char& c : role)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
            c = '-';
    return role;
}

unsigned resolve_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("STKD_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

struct SeedOutcome {
    std::string records;  // report lines for this seed, in run order
    std::vector<RunReport> runs;
    std::vector<std::pair<std::string, double>> successes;  // label -> final accuracy
    std::vector<std::string> failures;                      // labels
};

SeedOutcome run_seed(const ExperimentConfig& cfg, const std::vector<MethodVariant>& variants,
                     std::uint64_t seed, const Dataset& train, const Dataset& test,
                     const fs::path& out_dir) {
    SeedOutcome outcome;
    std::ostringstream os;
    ReportWriter writer(os);

    const std::size_t d = train.feature_dim();
    const std::size_t classes = train.class_count;

    auto attempt = [&](const std::string& label, auto&& body) {
        writer.run_start(label, seed);
        try {
            RunReport r = body();
            writer.run_end(r);
            outcome.successes.emplace_back(label, r.final_test_accuracy);
            outcome.runs.push_back(std::move(r));
            return true;
        } catch (const std::exception& e) {
            writer.run_failed(label, seed, e.what());
            outcome.failures.push_back(label);
            return false;
        }
    };

    std::optional<Network> teacher;
    TrainPlan teacher_plan = base_plan(cfg.training, Method::baseline, "teacher",
                                       cfg.dataset.flip_probability);
    teacher_plan.seed = seed;
    const bool teacher_ok = attempt("teacher", [&] {
        Rng teacher_rng(Rng::derive(seed, stream::teacher_init));
        teacher = Network::mlp(d, cfg.teacher_hidden, classes, teacher_rng);
        RunReport r = train_teacher(*teacher, train, test, teacher_plan,
                                    [&](const EpochMetric& m) { writer.epoch("teacher", seed, m); });
        save_checkpoint(*teacher, (out_dir / ("teacher-" + std::to_string(seed) + ".ckpt")).string());
        return r;
    });

    for (const MethodVariant& variant : variants) {
        const std::string& label = variant.plan.label;
        if (!teacher_ok && variant.plan.method != Method::baseline) {
            writer.run_start(label, seed);
            writer.run_failed(label, seed, "teacher run failed");
            outcome.failures.push_back(label);
            continue;
        }
        attempt(label, [&] {
            Rng student_rng(Rng::derive(seed, stream::student_init));
            Network student = Network::mlp(d, cfg.student_hidden, classes, student_rng);
            TrainPlan plan = variant.plan;
            plan.seed = seed;
            const EpochCallback cb = [&](const EpochMetric& m) { writer.epoch(label, seed, m); };
            RunReport r;
            switch (plan.method) {
                case Method::baseline: r = train_teacher(student, train, test, plan, cb); break;
                case Method::vanilla_kd:
                    r = distill_vanilla_kd(*teacher, student, train, test, plan, cb);
                    break;
                case Method::stkd:
                    r = distill_stkd(*teacher, student, train, test, plan, cb);
                    break;
            }
            save_checkpoint(student, (out_dir / (checkpoint_role(label) + "-" +
                                                 std::to_string(seed) + ".ckpt"))
                                         .string());
            return r;
        });
    }
    outcome.records = os.str();
    return outcome;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::string& output_dir_override) {
    const fs::path out_dir =
        output_dir_override.empty() ? fs::path(cfg.output_dir) : fs::path(output_dir_override);
    fs::create_directories(out_dir);

    {
        std::ofstream echo(out_dir / "config_echo.json", std::ios::trunc);
        if (!echo) throw std::runtime_error("cannot write config echo");
        echo << echo_config(cfg) << '\n';
    }

    auto [train, test] = build_split_dataset(cfg.dataset);
    if (test.size() == 0)
        throw std::invalid_argument("run_experiment: test split is empty; raise test_fraction");

    const std::vector<MethodVariant> variants = method_variants(cfg);
    const std::size_t n_seeds = cfg.seeds.size();
    const unsigned workers = std::min<unsigned>(resolve_workers(cfg),
                                                static_cast<unsigned>(n_seeds));

    std::ofstream report_file(out_dir / "reports.jsonl", std::ios::trunc);
    if (!report_file) throw std::runtime_error("cannot write report stream");

    std::vector<SeedOutcome> outcomes(n_seeds);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_seeds; ++i) {
            outcomes[i] = run_seed(cfg, variants, cfg.seeds[i], train, test, out_dir);
            report_file << outcomes[i].records;
            report_file.flush();
        }
    } else {
        // Parallel seeds, but records flush through this single writer in
        // seed order, so the stream bytes match the sequential run.
        std::mutex mu;
        std::condition_variable cv;
        std::vector<char> done(n_seeds, 0);
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_seeds) return;
                SeedOutcome r = run_seed(cfg, variants, cfg.seeds[i], train, test, out_dir);
                {
                    std::lock_guard<std::mutex> lk(mu);
                    outcomes[i] = std::move(r);
                    done[i] = 1;
                }
                cv.notify_all();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        {
            std::unique_lock<std::mutex> lk(mu);
            for (std::size_t flushed = 0; flushed < n_seeds; ++flushed) {
                cv.wait(lk, [&] { return done[flushed] != 0; });
                report_file << outcomes[flushed].records;
                report_file.flush();
            }
        }
        for (auto& t : pool) t.join();
    }

    ExperimentOutcome result;
    const std::uint64_t checksum = config_checksum(cfg);

    std::vector<std::string> labels{"teacher"};
    for (const MethodVariant& v : variants) labels.push_back(v.plan.label);

    ReportWriter writer(report_file);
    std::vector<std::string> starved;
    for (const std::string& label : labels) {
        AggregateReport agg;
        agg.method = label;
        agg.config_checksum = checksum;
        std::size_t failed = 0;
        for (std::size_t i = 0; i < n_seeds; ++i) {
            for (const auto& [l, acc] : outcomes[i].successes)
                if (l == label) {
                    agg.seeds.push_back(cfg.seeds[i]);
                    agg.per_seed_accuracies.push_back(acc);
                }
            for (const auto& l : outcomes[i].failures)
                if (l == label) ++failed;
        }
        result.failed_runs += failed;
        if (failed > 0 && agg.per_seed_accuracies.size() < 3) {
            starved.push_back(label);
            continue;
        }
        agg.median_accuracy = median(agg.per_seed_accuracies);
        agg.mean_accuracy = mean(agg.per_seed_accuracies);
        writer.aggregate(agg);
        result.aggregates.push_back(std::move(agg));
    }
    for (auto& o : outcomes)
        for (auto& r : o.runs) result.runs.push_back(std::move(r));

    if (!starved.empty()) {
        result.ok = false;
        result.failure_reason = "fewer than 3 completed runs for:";
        for (const auto& l : starved) result.failure_reason += " " + l;
    }
    return result;
}

}  // namespace stkd
