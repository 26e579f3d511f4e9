#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>

#include "stkd/checkpoint.hpp"
#include "stkd/rng.hpp"

using namespace stkd;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "stkd-ckpt-tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("save then load round-trips parameters bit-exactly") {
    Rng rng(61);
    const Network net = Network::mlp(5, {7, 3}, 4, rng);
    const fs::path p = temp_file("net.ckpt");
    save_checkpoint(net, p.string());
    const Network back = load_checkpoint(p.string());

    REQUIRE(back.layer_count() == net.layer_count());
    CHECK(back.param_checksum() == net.param_checksum());
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        CHECK(back.layers()[i].kind == net.layers()[i].kind);
        if (net.layers()[i].has_params()) {
            CHECK(back.layers()[i].weight == net.layers()[i].weight);
            CHECK(back.layers()[i].bias == net.layers()[i].bias);
        }
    }
}

TEST_CASE("loader validates magic, version and truncation") {
    const fs::path p = temp_file("bad.ckpt");
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << "NOPE";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(p.string()), doctest::Contains("bad magic"),
                         std::runtime_error);

    Rng rng(62);
    const Network net = Network::mlp(3, {4}, 2, rng);
    const fs::path good = temp_file("good.ckpt");
    save_checkpoint(net, good.string());

    // bump the version field
    {
        std::fstream f(good, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(4);
        const std::uint32_t v = 99;
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(good.string()), doctest::Contains("version"),
                         std::runtime_error);

    // truncate mid-payload
    save_checkpoint(net, good.string());
    const auto size = fs::file_size(good);
    fs::resize_file(good, size - 7);
    CHECK_THROWS_WITH_AS(load_checkpoint(good.string()), doctest::Contains("truncated"),
                         std::runtime_error);

    // trailing garbage
    save_checkpoint(net, good.string());
    {
        std::ofstream out(good, std::ios::binary | std::ios::app);
        out << "x";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(good.string()), doctest::Contains("trailing"),
                         std::runtime_error);
}

TEST_CASE("loader rejects non-composing layer shapes") {
    // two affine layers 3->4 then 5->2: widths do not compose
    const fs::path p = temp_file("shapes.ckpt");
    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write("STKD", 4);
        const std::uint32_t version = 1, count = 2;
        out.write(reinterpret_cast<const char*>(&version), 4);
        out.write(reinterpret_cast<const char*>(&count), 4);
        auto write_affine = [&](std::uint64_t o, std::uint64_t i) {
            const std::uint8_t kind = 0;
            out.write(reinterpret_cast<const char*>(&kind), 1);
            out.write(reinterpret_cast<const char*>(&o), 8);
            out.write(reinterpret_cast<const char*>(&i), 8);
            const std::vector<double> w(o * i, 0.5), b(o, 0.0);
            out.write(reinterpret_cast<const char*>(w.data()),
                      static_cast<std::streamsize>(w.size() * 8));
            out.write(reinterpret_cast<const char*>(b.data()),
                      static_cast<std::streamsize>(b.size() * 8));
        };
        write_affine(4, 3);
        write_affine(2, 5);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(p.string()), doctest::Contains("layer 1"),
                         std::invalid_argument);
}
