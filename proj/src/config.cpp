#include "stkd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stkd/hash.hpp"

namespace stkd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items())
        if (!ok.count(item.key())) fail(join(path, item.key()), "unknown key");
}

template <typename T>
T get_field(const json& j, const std::string& path, const char* key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(join(path, key), "wrong type");
    }
}

template <typename T>
T require_field(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(join(path, key), "missing required key");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(join(path, key), "wrong type");
    }
}

SgdConfig parse_optimizer(const json& j, const std::string& path, const SgdConfig& base) {
    check_keys(j, path, {"lr", "momentum", "weight_decay", "nesterov"});
    SgdConfig out = base;
    out.learning_rate = get_field(j, path, "lr", base.learning_rate);
    out.momentum = get_field(j, path, "momentum", base.momentum);
    out.weight_decay = get_field(j, path, "weight_decay", base.weight_decay);
    out.nesterov = get_field(j, path, "nesterov", base.nesterov);
    try {
        out.validate();
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return out;
}

TrainingSection parse_training(const json& j, const std::string& path, const TrainingSection& base) {
    check_keys(j, path, {"epochs", "batch_size", "optimizer", "schedule"});
    TrainingSection out = base;
    out.epochs = get_field(j, path, "epochs", base.epochs);
    if (out.epochs < 1) fail(join(path, "epochs"), "must be >= 1");
    out.batch_size = get_field(j, path, "batch_size", base.batch_size);
    if (out.batch_size < 1) fail(join(path, "batch_size"), "must be >= 1");
    if (j.contains("optimizer"))
        out.optimizer = parse_optimizer(j.at("optimizer"), join(path, "optimizer"), base.optimizer);
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        const std::string spath = join(path, "schedule");
        check_keys(s, spath, {"milestones", "factor"});
        out.milestones = get_field(s, spath, "milestones", base.milestones);
        out.lr_factor = get_field(s, spath, "factor", base.lr_factor);
    }
    try {
        out.schedule().validate();
    } catch (const std::exception& e) {
        fail(join(path, "schedule"), e.what());
    }
    return out;
}

// Method sections share the training keys; extras list the method's own keys.
json method_training_view(const json& j) {
    json t = json::object();
    for (const char* key : {"epochs", "batch_size", "optimizer", "schedule"})
        if (j.contains(key)) t[key] = j.at(key);
    return t;
}

MixPolicy parse_mix(const json& j, const std::string& path, std::vector<double>& lambda_values) {
    check_keys(j, path, {"mode", "lambda", "alpha", "per_batch"});
    MixPolicy mix;
    const std::string mode = get_field<std::string>(j, path, "mode", "fixed");
    if (mode == "fixed")
        mix.mode = MixMode::fixed;
    else if (mode == "sampled_beta")
        mix.mode = MixMode::sampled_beta;
    else
        fail(join(path, "mode"), "must be 'fixed' or 'sampled_beta'");
    mix.alpha = get_field(j, path, "alpha", 1.0);
    mix.per_batch = get_field(j, path, "per_batch", true);

    lambda_values = {0.5};
    if (j.contains("lambda")) {
        const json& lam = j.at("lambda");
        if (lam.is_array()) {
            lambda_values = get_field(j, path, "lambda", lambda_values);
            if (lambda_values.empty()) fail(join(path, "lambda"), "empty sweep");
        } else if (lam.is_number()) {
            lambda_values = {lam.get<double>()};
        } else {
            fail(join(path, "lambda"), "must be a number or an array of numbers");
        }
    }
    for (double v : lambda_values) {
        mix.fixed_lambda = v;
        try {
            mix.validate();
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
    }
    mix.fixed_lambda = lambda_values.front();
    return mix;
}

DistillTerm parse_distill(const json& j, const std::string& path) {
    const std::string term = get_field<std::string>(j, path, "distill", "kl");
    if (term == "kl") return DistillTerm::kl;
    if (term == "cross_entropy") return DistillTerm::cross_entropy;
    if (term == "mse") return DistillTerm::mse;
    fail(join(path, "distill"), "must be 'kl', 'cross_entropy' or 'mse'");
}

DatasetConfig parse_dataset(const json& j, const std::string& path) {
    check_keys(j, path,
               {"synthetic", "delimited", "idx", "test_fraction", "split_seed", "flip_probability"});
    DatasetConfig out;
    int sources = 0;
    if (j.contains("synthetic")) {
        ++sources;
        const json& s = j.at("synthetic");
        const std::string spath = join(path, "synthetic");
        check_keys(s, spath, {"kind", "classes", "samples_per_class", "input_dim", "noise_sigma", "seed"});
        SyntheticSpec spec;
        const std::string kind = get_field<std::string>(s, spath, "kind", "gaussian_blobs");
        if (kind == "gaussian_blobs")
            spec.kind = SyntheticKind::gaussian_blobs;
        else if (kind == "concentric_rings")
            spec.kind = SyntheticKind::concentric_rings;
        else
            fail(join(spath, "kind"), "must be 'gaussian_blobs' or 'concentric_rings'");
        spec.class_count = get_field<std::size_t>(s, spath, "classes", 3);
        spec.samples_per_class = get_field<std::size_t>(s, spath, "samples_per_class", 100);
        spec.input_dim = get_field<std::size_t>(s, spath, "input_dim", 2);
        spec.noise_sigma = get_field(s, spath, "noise_sigma", 0.1);
        spec.seed = get_field<std::uint64_t>(s, spath, "seed", 0);
        try {
            spec.validate();
        } catch (const std::exception& e) {
            fail(spath, e.what());
        }
        out.synthetic = spec;
    }
    if (j.contains("delimited")) {
        ++sources;
        const json& s = j.at("delimited");
        const std::string spath = join(path, "delimited");
        check_keys(s, spath, {"path", "label_column", "delimiter", "has_header"});
        SourceDelimited src;
        src.path = require_field<std::string>(s, spath, "path");
        src.schema.label_column = get_field<std::size_t>(s, spath, "label_column", 0);
        const std::string delim = get_field<std::string>(s, spath, "delimiter", ",");
        if (delim.size() != 1) fail(join(spath, "delimiter"), "must be a single character");
        src.schema.delimiter = delim[0];
        src.schema.has_header = get_field(s, spath, "has_header", false);
        out.delimited = src;
    }
    if (j.contains("idx")) {
        ++sources;
        const json& s = j.at("idx");
        const std::string spath = join(path, "idx");
        check_keys(s, spath, {"images", "labels"});
        out.idx = SourceIdx{require_field<std::string>(s, spath, "images"),
                            require_field<std::string>(s, spath, "labels")};
    }
    if (sources != 1) fail(path, "exactly one of synthetic/delimited/idx must be given");
    out.test_fraction = get_field(j, path, "test_fraction", 0.25);
    if (!(out.test_fraction >= 0.0 && out.test_fraction < 1.0))
        fail(join(path, "test_fraction"), "must lie in [0,1)");
    out.split_seed = get_field<std::uint64_t>(j, path, "split_seed", 1);
    out.flip_probability = get_field(j, path, "flip_probability", 0.0);
    if (!(out.flip_probability >= 0.0 && out.flip_probability <= 1.0))
        fail(join(path, "flip_probability"), "must lie in [0,1]");
    return out;
}

std::vector<std::size_t> parse_hidden(const json& j, const std::string& path,
                                      std::vector<std::size_t> fallback) {
    check_keys(j, path, {"hidden"});
    auto hidden = get_field(j, path, "hidden", fallback);
    for (std::size_t h : hidden)
        if (h == 0) fail(join(path, "hidden"), "layer widths must be positive");
    return hidden;
}

json optimizer_json(const SgdConfig& o) {
    return json{{"lr", o.learning_rate},
                {"momentum", o.momentum},
                {"weight_decay", o.weight_decay},
                {"nesterov", o.nesterov}};
}

json training_json(const TrainingSection& t) {
    return json{{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"optimizer", optimizer_json(t.optimizer)},
                {"schedule", json{{"milestones", t.milestones}, {"factor", t.lr_factor}}}};
}

const char* distill_name(DistillTerm term) {
    switch (term) {
        case DistillTerm::kl: return "kl";
        case DistillTerm::cross_entropy: return "cross_entropy";
        case DistillTerm::mse: return "mse";
    }
    return "kl";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }

    check_keys(j, "",
               {"dataset", "teacher", "student", "training", "methods", "seeds", "output_dir",
                "workers"});
    ExperimentConfig cfg;
    if (!j.contains("dataset")) fail("dataset", "missing required section");
    cfg.dataset = parse_dataset(j.at("dataset"), "dataset");
    if (j.contains("teacher")) cfg.teacher_hidden = parse_hidden(j.at("teacher"), "teacher", cfg.teacher_hidden);
    if (j.contains("student")) cfg.student_hidden = parse_hidden(j.at("student"), "student", cfg.student_hidden);
    if (j.contains("training")) cfg.training = parse_training(j.at("training"), "training", TrainingSection{});

    if (!j.contains("methods")) fail("methods", "missing required section");
    const json& methods = j.at("methods");
    check_keys(methods, "methods", {"baseline", "vanilla_kd", "stkd"});
    if (methods.contains("baseline")) {
        const json& m = methods.at("baseline");
        check_keys(m, "methods.baseline", {"epochs", "batch_size", "optimizer", "schedule"});
        cfg.baseline = BaselineSection{
            parse_training(method_training_view(m), "methods.baseline", cfg.training)};
    }
    if (methods.contains("vanilla_kd")) {
        const json& m = methods.at("vanilla_kd");
        const std::string path = "methods.vanilla_kd";
        check_keys(m, path,
                   {"epochs", "batch_size", "optimizer", "schedule", "temperature", "balance",
                    "t_squared_scaling"});
        VanillaKdSection sec;
        sec.training = parse_training(method_training_view(m), path, cfg.training);
        sec.kd.temperature = get_field(m, path, "temperature", 4.0);
        sec.kd.balance = get_field(m, path, "balance", 1.0);
        sec.kd.t_squared_scaling = get_field(m, path, "t_squared_scaling", false);
        try {
            sec.kd.validate();
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
        cfg.vanilla_kd = sec;
    }
    if (methods.contains("stkd")) {
        const json& m = methods.at("stkd");
        const std::string path = "methods.stkd";
        check_keys(m, path, {"epochs", "batch_size", "optimizer", "schedule", "mix", "distill"});
        StkdSection sec;
        sec.training = parse_training(method_training_view(m), path, cfg.training);
        if (m.contains("mix"))
            sec.mix = parse_mix(m.at("mix"), join(path, "mix"), sec.lambda_values);
        sec.distill = parse_distill(m, path);
        cfg.stkd = sec;
    }
    if (!cfg.baseline && !cfg.vanilla_kd && !cfg.stkd)
        fail("methods", "at least one method section is required");

    cfg.seeds = get_field(j, "", "seeds", cfg.seeds);
    if (cfg.seeds.empty()) fail("seeds", "must be non-empty");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        fail("seeds", "must be distinct");
    cfg.output_dir = get_field<std::string>(j, "", "output_dir", cfg.output_dir);
    cfg.workers = get_field(j, "", "workers", cfg.workers);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& cfg) {
    json j;
    json ds;
    if (cfg.dataset.synthetic) {
        const SyntheticSpec& s = *cfg.dataset.synthetic;
        ds["synthetic"] = json{
            {"kind", s.kind == SyntheticKind::gaussian_blobs ? "gaussian_blobs" : "concentric_rings"},
            {"classes", s.class_count},
            {"samples_per_class", s.samples_per_class},
            {"input_dim", s.input_dim},
            {"noise_sigma", s.noise_sigma},
            {"seed", s.seed}};
    }
    if (cfg.dataset.delimited) {
        const SourceDelimited& s = *cfg.dataset.delimited;
        ds["delimited"] = json{{"path", s.path},
                               {"label_column", s.schema.label_column},
                               {"delimiter", std::string(1, s.schema.delimiter)},
                               {"has_header", s.schema.has_header}};
    }
    if (cfg.dataset.idx)
        ds["idx"] = json{{"images", cfg.dataset.idx->images}, {"labels", cfg.dataset.idx->labels}};
    ds["test_fraction"] = cfg.dataset.test_fraction;
    ds["split_seed"] = cfg.dataset.split_seed;
    ds["flip_probability"] = cfg.dataset.flip_probability;
    j["dataset"] = ds;

    j["teacher"] = json{{"hidden", cfg.teacher_hidden}};
    j["student"] = json{{"hidden", cfg.student_hidden}};
    j["training"] = training_json(cfg.training);

    json methods = json::object();
    if (cfg.baseline) methods["baseline"] = training_json(cfg.baseline->training);
    if (cfg.vanilla_kd) {
        json m = training_json(cfg.vanilla_kd->training);
        m["temperature"] = cfg.vanilla_kd->kd.temperature;
        m["balance"] = cfg.vanilla_kd->kd.balance;
        m["t_squared_scaling"] = cfg.vanilla_kd->kd.t_squared_scaling;
        methods["vanilla_kd"] = m;
    }
    if (cfg.stkd) {
        json m = training_json(cfg.stkd->training);
        json mix{{"mode", cfg.stkd->mix.mode == MixMode::fixed ? "fixed" : "sampled_beta"},
                 {"alpha", cfg.stkd->mix.alpha},
                 {"per_batch", cfg.stkd->mix.per_batch}};
        if (cfg.stkd->lambda_values.size() == 1)
            mix["lambda"] = cfg.stkd->lambda_values.front();
        else
            mix["lambda"] = cfg.stkd->lambda_values;
        m["mix"] = mix;
        m["distill"] = distill_name(cfg.stkd->distill);
        methods["stkd"] = m;
    }
    j["methods"] = methods;
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["workers"] = cfg.workers;
    return j.dump(2);
}

std::uint64_t config_checksum(const ExperimentConfig& cfg) {
    // Worker count and output location do not influence any result; keep the
    // checksum over the result-determining fields only.
    ExperimentConfig normalized = cfg;
    normalized.workers = 0;
    normalized.output_dir.clear();
    return fnv1a64(echo_config(normalized));
}

}  // namespace stkd
