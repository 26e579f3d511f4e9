#include "stkd/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace stkd {

namespace {

Tensor one_hot_rows(const std::vector<std::size_t>& idx, std::size_t class_count) {
    Tensor labels = Tensor::zeros({idx.size(), class_count});
    for (std::size_t i = 0; i < idx.size(); ++i) labels.at(i, idx[i]) = 1.0;
    return labels;
}

[[noreturn]] void row_error(const std::string& path, std::size_t row, const std::string& what) {
    throw std::runtime_error(path + ": row " + std::to_string(row) + ": " + what);
}

std::uint32_t read_u32_be(std::istream& in, const std::string& path, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(path + ": truncated while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace

std::size_t Dataset::label_index(std::size_t row) const {
    const std::size_t c = labels.cols();
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
        if (labels.data[row * c + j] > labels.data[row * c + best]) best = j;
    return best;
}

void SyntheticSpec::validate() const {
    if (class_count == 0 || samples_per_class == 0 || input_dim == 0)
        throw std::invalid_argument("SyntheticSpec: counts and dimensions must be positive");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("SyntheticSpec: noise sigma must be >= 0");
    if (kind == SyntheticKind::concentric_rings && input_dim < 2)
        throw std::invalid_argument("SyntheticSpec: concentric rings need input_dim >= 2");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n = spec.class_count * spec.samples_per_class;
    const std::size_t d = spec.input_dim;

    Dataset ds;
    ds.class_count = spec.class_count;
    ds.inputs = Tensor::zeros({n, d});
    std::vector<std::size_t> label_idx(n);

    std::size_t row = 0;
    for (std::size_t k = 0; k < spec.class_count; ++k) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            label_idx[row] = k;
            double* x = &ds.inputs.data[row * d];
            if (spec.kind == SyntheticKind::gaussian_blobs) {
                if (d == 1) {
                    x[0] = static_cast<double>(k);
                } else {
                    const double theta =
                        2.0 * std::numbers::pi * static_cast<double>(k) / spec.class_count;
                    x[0] = std::cos(theta);
                    x[1] = std::sin(theta);
                }
                for (std::size_t j = 0; j < d; ++j) x[j] += spec.noise_sigma * rng.normal();
            } else {
                const double radius = static_cast<double>(k + 1) / spec.class_count +
                                      spec.noise_sigma * rng.normal();
                const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                x[0] = radius * std::cos(phi);
                x[1] = radius * std::sin(phi);
                for (std::size_t j = 2; j < d; ++j) x[j] = spec.noise_sigma * rng.normal();
            }
        }
    }
    ds.labels = one_hot_rows(label_idx, spec.class_count);
    return ds;
}

Dataset load_delimited(const std::string& path, const DelimitedSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");

    std::vector<std::vector<double>> features;
    std::vector<long long> raw_labels;
    std::string line;
    std::size_t row = 0;
    std::size_t arity = 0;
    long long max_label = -1;

    while (std::getline(in, line)) {
        ++row;
        if (row == 1 && schema.has_header) continue;
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;

        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, schema.delimiter)) fields.push_back(field);
        if (!line.empty() && line.back() == schema.delimiter) fields.push_back("");

        if (arity == 0) {
            arity = fields.size();
            if (arity < 2) row_error(path, row, "need at least a label and one feature");
            if (schema.label_column >= arity)
                row_error(path, row, "label column " + std::to_string(schema.label_column) +
                                         " out of range for " + std::to_string(arity) + " fields");
        } else if (fields.size() != arity) {
            row_error(path, row, "expected " + std::to_string(arity) + " fields, got " +
                                     std::to_string(fields.size()));
        }

        std::vector<double> feat;
        feat.reserve(arity - 1);
        for (std::size_t i = 0; i < arity; ++i) {
            const std::string& f = fields[i];
            char* end = nullptr;
            const double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0')
                row_error(path, row, "unparsable numeric '" + f + "'");
            if (i == schema.label_column) {
                if (v < 0.0 || v != std::floor(v))
                    row_error(path, row, "label '" + f + "' is not a nonnegative integer");
                const long long lab = static_cast<long long>(v);
                max_label = std::max(max_label, lab);
                raw_labels.push_back(lab);
            } else {
                feat.push_back(v);
            }
        }
        features.push_back(std::move(feat));
    }
    if (features.empty()) throw std::runtime_error(path + ": no data rows");

    const std::size_t n = features.size(), d = arity - 1;
    const std::size_t class_count = static_cast<std::size_t>(max_label) + 1;
    Dataset ds;
    ds.class_count = class_count;
    ds.inputs = Tensor::zeros({n, d});
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        idx[i] = static_cast<std::size_t>(raw_labels[i]);
        for (std::size_t j = 0; j < d; ++j) ds.inputs.data[i * d + j] = features[i][j];
    }
    ds.labels = one_hot_rows(idx, class_count);
    return ds;
}

void save_delimited(const Dataset& ds, const std::string& path, const DelimitedSchema& schema) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    const std::size_t n = ds.size(), d = ds.feature_dim();
    const std::size_t arity = d + 1;
    if (schema.label_column >= arity)
        throw std::invalid_argument("save_delimited: label column out of range");

    char buf[32];
    if (schema.has_header) {
        std::size_t fi = 0;
        for (std::size_t col = 0; col < arity; ++col) {
            if (col) out << schema.delimiter;
            if (col == schema.label_column)
                out << "label";
            else
                out << "f" << fi++;
        }
        out << '\n';
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t fi = 0;
        for (std::size_t col = 0; col < arity; ++col) {
            if (col) out << schema.delimiter;
            if (col == schema.label_column) {
                out << ds.label_index(i);
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs.data[i * d + fi++]);
                out << buf;
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error(images_path + ": cannot open");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error(labels_path + ": cannot open");

    const std::uint32_t img_magic = read_u32_be(img, images_path, "magic");
    if (img_magic != 0x00000803u)
        throw std::runtime_error(images_path + ": bad image magic (expected 0x00000803)");
    const std::uint32_t n_img = read_u32_be(img, images_path, "image count");
    const std::uint32_t rows = read_u32_be(img, images_path, "row count");
    const std::uint32_t cols = read_u32_be(img, images_path, "column count");

    const std::uint32_t lab_magic = read_u32_be(lab, labels_path, "magic");
    if (lab_magic != 0x00000801u)
        throw std::runtime_error(labels_path + ": bad label magic (expected 0x00000801)");
    const std::uint32_t n_lab = read_u32_be(lab, labels_path, "label count");

    if (n_img != n_lab)
        throw std::runtime_error("idx count mismatch: " + std::to_string(n_img) + " images vs " +
                                 std::to_string(n_lab) + " labels");
    if (n_img == 0) throw std::runtime_error(images_path + ": empty image set");

    const std::size_t d = static_cast<std::size_t>(rows) * cols;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(n_img) * d);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
        throw std::runtime_error(images_path + ": truncated pixel payload");
    std::vector<unsigned char> bytes(n_lab);
    if (!lab.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw std::runtime_error(labels_path + ": truncated label payload");

    std::size_t max_label = 0;
    std::vector<std::size_t> idx(n_lab);
    for (std::size_t i = 0; i < n_lab; ++i) {
        idx[i] = bytes[i];
        max_label = std::max(max_label, idx[i]);
    }

    Dataset ds;
    ds.class_count = max_label + 1;
    ds.inputs = Tensor::zeros({static_cast<std::size_t>(n_img), d});
    for (std::size_t i = 0; i < pixels.size(); ++i) ds.inputs.data[i] = pixels[i] / 255.0;
    ds.labels = one_hot_rows(idx, ds.class_count);
    ds.image_shape = ImageShape{rows, cols, 1};
    return ds;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    const std::size_t d = ds.feature_dim(), c = ds.class_count;
    Dataset out;
    out.class_count = c;
    out.image_shape = ds.image_shape;
    out.inputs = Tensor::zeros({rows.size(), d});
    out.labels = Tensor::zeros({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        for (std::size_t j = 0; j < d; ++j) out.inputs.data[i * d + j] = ds.inputs.data[r * d + j];
        for (std::size_t j = 0; j < c; ++j) out.labels.data[i * c + j] = ds.labels.data[r * c + j];
    }
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split_dataset: test fraction must lie in [0,1)");
    const std::size_t n = ds.size();
    const auto test_count =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    Rng rng(seed);
    const std::vector<std::size_t> perm = rng.permutation(n);
    std::vector<std::size_t> train_rows(perm.begin(), perm.end() - static_cast<long>(test_count));
    std::vector<std::size_t> test_rows(perm.end() - static_cast<long>(test_count), perm.end());
    return {take_rows(ds, train_rows), take_rows(ds, test_rows)};
}

std::vector<LabeledBatch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                                  std::uint64_t epoch) {
    if (batch_size == 0) throw std::invalid_argument("batches: batch size must be >= 1");
    const std::size_t n = ds.size();
    Rng rng(Rng::derive(seed, epoch));
    const std::vector<std::size_t> perm = rng.permutation(n);

    std::vector<LabeledBatch> out;
    out.reserve((n + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t len = std::min(batch_size, n - start);
        std::vector<std::size_t> rows(perm.begin() + static_cast<long>(start),
                                      perm.begin() + static_cast<long>(start + len));
        Dataset slice = take_rows(ds, rows);
        LabeledBatch b;
        b.inputs = std::move(slice.inputs);
        b.labels = std::move(slice.labels);
        b.image_shape = ds.image_shape;
        out.push_back(std::move(b));
    }
    return out;
}

LabeledBatch horizontal_flip(const LabeledBatch& batch, double probability, Rng& rng) {
    if (!batch.image_shape)
        throw std::invalid_argument("horizontal_flip: batch has no image shape");
    if (!(probability >= 0.0 && probability <= 1.0))
        throw std::invalid_argument("horizontal_flip: probability must lie in [0,1]");
    const ImageShape& sh = *batch.image_shape;
    const std::size_t d = batch.inputs.cols();
    if (sh.height * sh.width * sh.channels != d)
        throw std::invalid_argument("horizontal_flip: image shape does not match feature width");

    LabeledBatch out = batch;
    const std::size_t b = batch.size();
    for (std::size_t i = 0; i < b; ++i) {
        if (rng.uniform() >= probability) continue;
        double* x = &out.inputs.data[i * d];
        for (std::size_t r = 0; r < sh.height; ++r)
            for (std::size_t c = 0; c < sh.width / 2; ++c)
                for (std::size_t ch = 0; ch < sh.channels; ++ch)
                    std::swap(x[(r * sh.width + c) * sh.channels + ch],
                              x[(r * sh.width + (sh.width - 1 - c)) * sh.channels + ch]);
    }
    return out;
}

}  // namespace stkd
