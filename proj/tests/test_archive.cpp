#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "sketchpix/archive.hpp"

using namespace sketchpix;

TEST_CASE("archive layout is little-endian and bit-exact") {
    TensorArchive a;
    a.meta["k"] = "v";
    a.add("w", Tensor({2}, {1.0, -2.5}));
    const auto bytes = encode_archive(a);
    std::vector<std::uint8_t> expected;
    auto put = [&](std::initializer_list<int> b) {
        for (int x : b) expected.push_back(static_cast<std::uint8_t>(x));
    };
    for (char c : std::string("SKPXARCH")) expected.push_back(static_cast<std::uint8_t>(c));
    put({1, 0, 0, 0});                // version
    put({4, 0, 0, 0, 'k', '=', 'v', '\n'});
    put({1, 0, 0, 0});                // tensor count
    put({1, 0, 0, 0, 'w'});
    put({1});                         // float64
    put({1, 0, 0, 0});                // rank
    put({2, 0, 0, 0, 0, 0, 0, 0});    // dim
    put({0, 0, 0, 0, 0, 0, 0xf0, 0x3f});  // 1.0
    put({0, 0, 0, 0, 0, 0, 0x04, 0xc0});  // -2.5
    CHECK(bytes == expected);
}

TEST_CASE("archive round trip preserves names, order, shapes and bits") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> d;
    TensorArchive a;
    a.meta["step"] = "42";
    a.meta["variant"] = "CNN-KL";
    for (int i = 0; i < 4; ++i) {
        Shape s{static_cast<std::size_t>(i + 1), 3};
        std::vector<double> v(shape_numel(s));
        for (auto& x : v) x = d(rng);
        a.add("t" + std::to_string(3 - i), Tensor(s, v));
    }
    a.add("scalar", Tensor::scalar(std::nextafter(1.0, 2.0)));
    const auto path = std::filesystem::temp_directory_path() / "sketchpix_archive_test.bin";
    write_archive(path, a);
    const auto b = read_archive(path);
    std::filesystem::remove(path);
    CHECK(b.meta == a.meta);
    REQUIRE(b.tensors.size() == a.tensors.size());
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        CHECK(b.tensors[i].first == a.tensors[i].first);
        CHECK(b.tensors[i].second.shape() == a.tensors[i].second.shape());
        CHECK(std::memcmp(b.tensors[i].second.data().data(), a.tensors[i].second.data().data(),
                          a.tensors[i].second.numel() * sizeof(double)) == 0);
    }
    CHECK(b.get("scalar").item() == std::nextafter(1.0, 2.0));
    CHECK_THROWS_AS(b.get("missing"), ArchiveError);
}

TEST_CASE("corrupt archives are rejected") {
    TensorArchive a;
    a.add("x", Tensor({3}, 1.0));
    auto bytes = encode_archive(a);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_archive(truncated), ArchiveError);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_archive(bad_magic), ArchiveError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_archive(trailing), ArchiveError);
}
