#include "stkd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stkd {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char magic[4] = {'S', 'T', 'K', 'D'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path, const char* what) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw std::runtime_error(path + ": truncated checkpoint while reading " + what);
    return v;
}

}  // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");

    out.write(magic, 4);
    write_raw<std::uint32_t>(out, checkpoint_version);
    write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
    for (const Layer& l : net.layers()) {
        write_raw<std::uint8_t>(out, l.kind == LayerKind::affine ? 0 : 1);
        if (l.kind != LayerKind::affine) continue;
        write_raw<std::uint64_t>(out, l.weight.shape[0]);
        write_raw<std::uint64_t>(out, l.weight.shape[1]);
        out.write(reinterpret_cast<const char*>(l.weight.data.data()),
                  static_cast<std::streamsize>(l.weight.data.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(l.bias.data.data()),
                  static_cast<std::streamsize>(l.bias.data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");

    char m[4];
    if (!in.read(m, 4) || std::memcmp(m, magic, 4) != 0)
        throw std::runtime_error(path + ": not a checkpoint (bad magic)");
    const auto version = read_raw<std::uint32_t>(in, path, "version");
    if (version != checkpoint_version)
        throw std::runtime_error(path + ": unsupported checkpoint version " +
                                 std::to_string(version));
    const auto count = read_raw<std::uint32_t>(in, path, "layer count");
    if (count == 0) throw std::runtime_error(path + ": checkpoint has no layers");

    std::vector<Layer> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto kind = read_raw<std::uint8_t>(in, path, "layer kind");
        if (kind == 1) {
            layers.push_back(Layer::relu());
            continue;
        }
        if (kind != 0)
            throw std::runtime_error(path + ": layer " + std::to_string(i) +
                                     ": unknown kind tag " + std::to_string(kind));
        const auto out_dim = read_raw<std::uint64_t>(in, path, "output dim");
        const auto in_dim = read_raw<std::uint64_t>(in, path, "input dim");
        if (out_dim == 0 || in_dim == 0)
            throw std::runtime_error(path + ": layer " + std::to_string(i) + ": zero dimension");

        Tensor w = Tensor::zeros({static_cast<std::size_t>(out_dim), static_cast<std::size_t>(in_dim)});
        if (!in.read(reinterpret_cast<char*>(w.data.data()),
                     static_cast<std::streamsize>(w.data.size() * sizeof(double))))
            throw std::runtime_error(path + ": truncated weight payload at layer " +
                                     std::to_string(i));
        Tensor b = Tensor::zeros({static_cast<std::size_t>(out_dim)});
        if (!in.read(reinterpret_cast<char*>(b.data.data()),
                     static_cast<std::streamsize>(b.data.size() * sizeof(double))))
            throw std::runtime_error(path + ": truncated bias payload at layer " +
                                     std::to_string(i));
        layers.push_back(Layer::affine(std::move(w), std::move(b)));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error(path + ": trailing bytes after last layer");
    // Network's constructor re-validates that consecutive shapes compose.
    return Network(std::move(layers));
}

}  // namespace stkd
