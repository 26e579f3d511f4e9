#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stkd/mixup.hpp"
#include "stkd/rng.hpp"
#include "stkd/tensor.hpp"

namespace stkd {

/// Immutable labeled dataset: inputs [N x d], one-hot labels [N x C].
struct Dataset {
    Tensor inputs;
    Tensor labels;
    std::size_t class_count = 0;
    std::optional<ImageShape> image_shape;

    std::size_t size() const { return inputs.shape.empty() ? 0 : inputs.shape[0]; }
    std::size_t feature_dim() const { return inputs.shape.size() < 2 ? 0 : inputs.shape[1]; }
    /// Class index of a row (argmax of the one-hot row).
    std::size_t label_index(std::size_t row) const;
};

enum class SyntheticKind { gaussian_blobs, concentric_rings };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::gaussian_blobs;
    std::size_t class_count = 3;
    std::size_t samples_per_class = 100;
    std::size_t input_dim = 2;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic synthetic dataset. gaussian_blobs places class means on the
/// unit circle (integers on the line for d=1); concentric_rings gives class k
/// radius (k+1)/C and needs d >= 2. Rows are ordered class-major.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct DelimitedSchema {
    std::size_t label_column = 0;
    char delimiter = ',';
    bool has_header = false;
};

/// Parses a delimited text file of uniform arity; the label column must hold
/// integers in [0, C) with C inferred as max label + 1. Malformed rows are
/// rejected with their 1-based row number.
Dataset load_delimited(const std::string& path, const DelimitedSchema& schema);

/// Writes a dataset in the same layout load_delimited reads. Features are
/// printed with 17 significant digits so a write-read cycle is bit-exact.
void save_delimited(const Dataset& ds, const std::string& path, const DelimitedSchema& schema);

/// Classic IDX image/label pair (big-endian, magics 0x00000803/0x00000801).
/// Pixels are scaled to [0,1] by division by 255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Splits into (train, test) by a seeded permutation;
/// test gets round(N * test_fraction) rows.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed);

/// Minibatches under the permutation seeded by (seed, epoch); the final
/// partial batch is retained, so the batches partition the dataset.
std::vector<LabeledBatch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed,
                                  std::uint64_t epoch);

/// Mirrors each image across the vertical axis independently with the given
/// probability. Requires the batch to carry an image shape.
LabeledBatch horizontal_flip(const LabeledBatch& batch, double probability, Rng& rng);

}  // namespace stkd
