#pragma once
// Named-tensor container used for checkpoints.
//
// Layout (all integers little-endian, doubles as IEEE-754 binary64 LE):
//   magic      8 bytes  "SKPXARCH"
//   version    u32      1
//   meta_len   u32      followed by meta_len bytes of "key=value\n" lines
//   count      u32      number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8)
//     dtype    u8       1 = float64
//     rank     u32, dims u64 x rank
//     payload  product(dims) x 8 bytes
// Entries keep insertion order. The encoding is bit-exact across platforms.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sketchpix/tensor.hpp"

namespace sketchpix {

class ArchiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TensorArchive {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void add(std::string name, const Tensor& t);
    const Tensor* find(const std::string& name) const;
    const Tensor& get(const std::string& name) const;
};

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive);
TensorArchive decode_archive(const std::vector<std::uint8_t>& bytes);

// Writes to a sibling temp file, then renames over `path`.
void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

// Shared by the binary writers in this project.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace sketchpix
