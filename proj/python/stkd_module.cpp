#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stkd/checkpoint.hpp"
#include "stkd/config.hpp"
#include "stkd/data.hpp"
#include "stkd/losses.hpp"
#include "stkd/mixup.hpp"
#include "stkd/network.hpp"
#include "stkd/rng.hpp"
#include "stkd/trainer.hpp"

namespace py = pybind11;
using namespace stkd;

namespace {

Tensor tensor_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<std::size_t>(i)] =
        static_cast<std::size_t>(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> numpy_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

using NumpyArg = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::tuple bundle_to_tuple(const LossBundle& lb) {
    return py::make_tuple(lb.value, numpy_from_tensor(lb.grad_logits));
}

MixPolicy make_policy(const std::string& mode, double alpha, double fixed_lambda, bool per_batch) {
    MixPolicy p;
    if (mode == "fixed")
        p.mode = MixMode::fixed;
    else if (mode == "sampled_beta")
        p.mode = MixMode::sampled_beta;
    else
        throw std::invalid_argument("mode must be 'fixed' or 'sampled_beta'");
    p.alpha = alpha;
    p.fixed_lambda = fixed_lambda;
    p.per_batch = per_batch;
    p.validate();
    return p;
}

DistillTerm parse_term(const std::string& term) {
    if (term == "kl") return DistillTerm::kl;
    if (term == "cross_entropy") return DistillTerm::cross_entropy;
    if (term == "mse") return DistillTerm::mse;
    throw std::invalid_argument("distill term must be 'kl', 'cross_entropy' or 'mse'");
}

}  // namespace

PYBIND11_MODULE(_stkd, m) {
    m.doc() = "Knowledge-distillation toolkit core: tensors, mixup virtual samples, "
              "distillation losses, and the seeded training pipeline";

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("uniform", [](Rng& r) { return r.uniform(); })
        .def("normal", &Rng::normal)
        .def("beta", &Rng::beta, py::arg("a"), py::arg("b"))
        .def("permutation", &Rng::permutation, py::arg("n"));

    m.def("softmax", [](const NumpyArg& logits) { return numpy_from_tensor(softmax(tensor_from_numpy(logits))); },
          py::arg("logits"), "Row-wise softmax with max-shift stabilization");

    m.def("cross_entropy",
          [](const NumpyArg& logits, const NumpyArg& target) {
              return bundle_to_tuple(cross_entropy(tensor_from_numpy(logits), tensor_from_numpy(target)));
          },
          py::arg("logits"), py::arg("target"),
          "Returns (value, grad_logits) of the batch-mean cross entropy");

    m.def("kd_softened_kl",
          [](const NumpyArg& student, const NumpyArg& teacher, double temperature, bool t_squared) {
              return bundle_to_tuple(kd_softened_kl(tensor_from_numpy(student),
                                                    tensor_from_numpy(teacher), temperature,
                                                    t_squared));
          },
          py::arg("student_logits"), py::arg("teacher_logits"), py::arg("temperature"),
          py::arg("t_squared_scaling") = false);

    m.def("vanilla_kd_loss",
          [](const NumpyArg& student, const NumpyArg& teacher, const NumpyArg& one_hot,
             double temperature, double balance, bool t_squared) {
              KDHyper h;
              h.temperature = temperature;
              h.balance = balance;
              h.t_squared_scaling = t_squared;
              return bundle_to_tuple(vanilla_kd_loss(tensor_from_numpy(student),
                                                     tensor_from_numpy(teacher),
                                                     tensor_from_numpy(one_hot), h));
          },
          py::arg("student_logits"), py::arg("teacher_logits"), py::arg("one_hot"),
          py::arg("temperature") = 4.0, py::arg("balance") = 1.0,
          py::arg("t_squared_scaling") = false);

    py::class_<VirtualBatch>(m, "VirtualBatch")
        .def_property_readonly("inputs", [](const VirtualBatch& vb) { return numpy_from_tensor(vb.inputs); })
        .def_property_readonly("labels_a", [](const VirtualBatch& vb) { return numpy_from_tensor(vb.labels_a); })
        .def_property_readonly("labels_b", [](const VirtualBatch& vb) { return numpy_from_tensor(vb.labels_b); })
        .def_property_readonly("lambdas", [](const VirtualBatch& vb) { return vb.lambdas; })
        .def_property_readonly("pair_index", [](const VirtualBatch& vb) { return vb.pair_index; });

    m.def("make_virtual_batch",
          [](const NumpyArg& inputs, const NumpyArg& labels, const std::string& mode, double alpha,
             double fixed_lambda, bool per_batch, Rng& rng) {
              LabeledBatch batch;
              batch.inputs = tensor_from_numpy(inputs);
              batch.labels = tensor_from_numpy(labels);
              return make_virtual_batch(batch, make_policy(mode, alpha, fixed_lambda, per_batch), rng);
          },
          py::arg("inputs"), py::arg("labels"), py::arg("mode") = "sampled_beta",
          py::arg("alpha") = 1.0, py::arg("fixed_lambda") = 0.5, py::arg("per_batch") = true,
          py::arg("rng"));

    m.def("mixed_label", [](const VirtualBatch& vb) { return numpy_from_tensor(mixed_label(vb)); },
          py::arg("virtual_batch"));

    m.def("mix_loss",
          [](const NumpyArg& logits, const VirtualBatch& vb) {
              return bundle_to_tuple(mix_loss(tensor_from_numpy(logits), vb));
          },
          py::arg("student_logits"), py::arg("virtual_batch"));

    m.def("stkd_total_loss",
          [](const NumpyArg& student, const NumpyArg& teacher, const VirtualBatch& vb,
             const std::string& term) {
              return bundle_to_tuple(stkd_total_loss(tensor_from_numpy(student),
                                                     tensor_from_numpy(teacher), vb,
                                                     parse_term(term)));
          },
          py::arg("student_logits"), py::arg("teacher_logits"), py::arg("virtual_batch"),
          py::arg("distill") = "kl");

    py::class_<Network>(m, "Network")
        .def_static("mlp",
                    [](std::size_t input_dim, const std::vector<std::size_t>& hidden,
                       std::size_t classes, std::uint64_t seed) {
                        Rng rng(seed);
                        return Network::mlp(input_dim, hidden, classes, rng);
                    },
                    py::arg("input_dim"), py::arg("hidden"), py::arg("classes"), py::arg("seed"))
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save", [](const Network& n, const std::string& path) { save_checkpoint(n, path); },
             py::arg("path"))
        .def("logits", [](const Network& n, const NumpyArg& batch) {
                 return numpy_from_tensor(n.logits(tensor_from_numpy(batch)));
             },
             py::arg("batch"))
        .def_property_readonly("input_dim", &Network::input_dim)
        .def_property_readonly("output_dim", &Network::output_dim)
        .def_property_readonly("layer_count", &Network::layer_count)
        .def("param_checksum", &Network::param_checksum);

    m.def("generate_synthetic",
          [](const std::string& kind, std::size_t classes, std::size_t samples_per_class,
             std::size_t input_dim, double noise_sigma, std::uint64_t seed) {
              SyntheticSpec spec;
              if (kind == "gaussian_blobs")
                  spec.kind = SyntheticKind::gaussian_blobs;
              else if (kind == "concentric_rings")
                  spec.kind = SyntheticKind::concentric_rings;
              else
                  throw std::invalid_argument("kind must be gaussian_blobs or concentric_rings");
              spec.class_count = classes;
              spec.samples_per_class = samples_per_class;
              spec.input_dim = input_dim;
              spec.noise_sigma = noise_sigma;
              spec.seed = seed;
              const Dataset ds = generate_synthetic(spec);
              return py::make_tuple(numpy_from_tensor(ds.inputs), numpy_from_tensor(ds.labels));
          },
          py::arg("kind") = "gaussian_blobs", py::arg("classes") = 3,
          py::arg("samples_per_class") = 100, py::arg("input_dim") = 2,
          py::arg("noise_sigma") = 0.1, py::arg("seed") = 0);

    m.def("evaluate_accuracy",
          [](const Network& net, const NumpyArg& inputs, const NumpyArg& labels) {
              Dataset ds;
              ds.inputs = tensor_from_numpy(inputs);
              ds.labels = tensor_from_numpy(labels);
              ds.class_count = ds.labels.cols();
              return evaluate_accuracy(net, ds);
          },
          py::arg("network"), py::arg("inputs"), py::arg("labels"));

    m.def("run_experiment",
          [](const std::string& config_text, const std::string& output_dir) {
              const ExperimentConfig cfg = parse_config(config_text);
              const ExperimentOutcome outcome = run_experiment(cfg, output_dir);
              py::dict aggregates;
              for (const AggregateReport& a : outcome.aggregates) {
                  py::dict entry;
                  entry["median_accuracy"] = a.median_accuracy;
                  entry["mean_accuracy"] = a.mean_accuracy;
                  entry["per_seed_accuracies"] = a.per_seed_accuracies;
                  entry["seeds"] = a.seeds;
                  aggregates[py::str(a.method)] = entry;
              }
              py::dict out;
              out["ok"] = outcome.ok;
              out["failed_runs"] = outcome.failed_runs;
              out["aggregates"] = aggregates;
              return out;
          },
          py::arg("config_text"), py::arg("output_dir") = "",
          "Parses a JSON experiment config and runs the full pipeline");

    m.def("echo_config", [](const std::string& text) { return echo_config(parse_config(text)); },
          py::arg("config_text"), "Strict parse followed by a defaults-materialized echo");

    py::register_exception<ConfigError>(m, "ConfigError");
}
