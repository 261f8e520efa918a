#include "sketchpix/archive.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

#include "sketchpix/bytes.hpp"

namespace sketchpix {
namespace {
constexpr char kMagic[] = "SKPXARCH";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kFloat64 = 1;
}  // namespace

void TensorArchive::add(std::string name, const Tensor& t) {
    tensors.emplace_back(std::move(name), t);
}

const Tensor* TensorArchive::find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

const Tensor& TensorArchive::get(const std::string& name) const {
    if (const Tensor* t = find(name)) return *t;
    throw ArchiveError("archive has no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode_archive(const TensorArchive& archive) {
    bytes::Writer w;
    w.raw(std::string(kMagic, 8));
    w.u32(kVersion);
    std::string meta;
    for (const auto& [k, v] : archive.meta) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw ArchiveError("meta entry '" + k + "' contains a reserved character");
        meta += k + "=" + v + "\n";
    }
    w.str(meta);
    w.u32(static_cast<std::uint32_t>(archive.tensors.size()));
    for (const auto& [name, t] : archive.tensors) {
        w.str(name);
        w.u8(kFloat64);
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.u64(d);
        for (double v : t.data()) w.f64(v);
    }
    return std::move(w.buffer());
}

TensorArchive decode_archive(const std::vector<std::uint8_t>& buf) {
    bytes::Reader r(buf);
    TensorArchive archive;
    try {
        if (r.raw(8) != std::string(kMagic, 8)) throw ArchiveError("not a tensor archive");
        if (const auto v = r.u32(); v != kVersion)
            throw ArchiveError("unsupported archive version " + std::to_string(v));
        std::istringstream meta(r.str());
        for (std::string line; std::getline(meta, line);) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ArchiveError("malformed meta line: " + line);
            archive.meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
        const std::uint32_t count = r.u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            std::string name = r.str();
            if (r.u8() != kFloat64) throw ArchiveError("tensor '" + name + "': unknown dtype");
            Shape shape(r.u32());
            std::size_t n = 1;
            for (auto& d : shape) {
                d = r.u64();
                n *= d;
            }
            if (n > r.remaining() / 8)
                throw ArchiveError("tensor '" + name + "': payload truncated");
            std::vector<double> values(n);
            for (auto& v : values) v = r.f64();
            archive.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
        }
        if (!r.at_end()) throw ArchiveError("trailing bytes after last tensor");
    } catch (const std::out_of_range&) {
        throw ArchiveError("archive truncated");
    }
    return archive;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
    auto tmp = path;
    tmp += ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw ArchiveError("cannot open " + tmp.string() + " for writing");
    std::size_t done = 0;
    while (done < data.size()) {
        const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            ::close(fd);
            throw ArchiveError("write failed for " + tmp.string());
        }
        done += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArchiveError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
    write_file_atomic(path, encode_archive(archive));
}

TensorArchive read_archive(const std::filesystem::path& path) {
    return decode_archive(read_file_bytes(path));
}

}  // namespace sketchpix
