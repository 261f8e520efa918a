#include "sketchpix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sketchpix/archive.hpp"
#include "sketchpix/bytes.hpp"

namespace sketchpix {
namespace {
constexpr char kMagic[] = "SKPXDSET";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::map<std::string, std::array<std::size_t, 3>> DatasetSplit::category_counts() const {
    std::map<std::string, std::array<std::size_t, 3>> out;
    for (const auto& c : categories) out[c] = {0, 0, 0};
    const std::vector<SketchSequence>* splits[] = {&train, &valid, &test};
    for (std::size_t s = 0; s < 3; ++s)
        for (const auto& seq : *splits[s]) ++out[seq.category][s];
    return out;
}

std::size_t DatasetSplit::category_index(const std::string& name) const {
    const auto it = std::find(categories.begin(), categories.end(), name);
    if (it == categories.end()) throw std::invalid_argument("unknown category '" + name + "'");
    return static_cast<std::size_t>(it - categories.begin());
}

bool DatasetSplit::has_category(const std::string& name) const {
    return std::find(categories.begin(), categories.end(), name) != categories.end();
}

double offset_std(const std::vector<SketchSequence>& seqs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : seqs)
        for (const auto& p : s.points)
            if (p.pen != Pen::End) {
                sum += p.dx + p.dy;
                n += 2;
            }
    if (n == 0) return 0.0;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : seqs)
        for (const auto& p : s.points)
            if (p.pen != Pen::End)
                ss += (p.dx - mean) * (p.dx - mean) + (p.dy - mean) * (p.dy - mean);
    return std::sqrt(ss / static_cast<double>(n));
}

SketchSequence scale_offsets(const SketchSequence& seq, double factor) {
    SketchSequence out = seq;
    for (auto& p : out.points) {
        p.dx *= factor;
        p.dy *= factor;
    }
    return out;
}

DatasetSplit normalize(DatasetSplit data) {
    if (data.train.empty()) throw std::invalid_argument("normalize: empty training split");
    const double sd = offset_std(data.train);
    if (!(sd > 0.0)) throw std::invalid_argument("normalize: training offsets have zero variance");
    for (auto* split : {&data.train, &data.valid, &data.test})
        for (auto& s : *split)
            for (auto& p : s.points) {
                p.dx /= sd;
                p.dy /= sd;
            }
    data.scale *= sd;
    return data;
}

SketchSequence denormalize(const SketchSequence& seq, double scale) {
    return scale_offsets(seq, scale);
}

DatasetSplit make_split(const std::map<std::string, std::vector<SketchSequence>>& by_category,
                        SplitSizes sizes, std::size_t max_seq_len, std::uint64_t seed) {
    DatasetSplit data;
    data.max_seq_len = max_seq_len;
    std::mt19937_64 rng(seed);
    for (const auto& [name, seqs] : by_category) {
        data.categories.push_back(name);
        std::vector<SketchSequence> pool;
        for (const auto& s : seqs)
            if (s.length() <= max_seq_len && !s.empty_drawing()) {
                pool.push_back(s);
                pool.back().category = name;
            }
        std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t at = 0;
        auto deal = [&](std::vector<SketchSequence>& dst, std::size_t n) {
            for (std::size_t i = 0; i < n && at < pool.size(); ++i) dst.push_back(pool[at++]);
        };
        deal(data.train, sizes.train);
        deal(data.valid, sizes.valid);
        deal(data.test, sizes.test);
    }
    return data;
}

DatasetSplit select_categories(const DatasetSplit& data, const std::vector<std::string>& cats) {
    DatasetSplit out;
    out.scale = data.scale;
    out.max_seq_len = data.max_seq_len;
    for (const auto& c : cats) {
        if (!data.has_category(c))
            throw std::invalid_argument("dataset has no category '" + c + "'");
        out.categories.push_back(c);
    }
    auto keep = [&](const std::vector<SketchSequence>& src, std::vector<SketchSequence>& dst) {
        for (const auto& s : src)
            if (std::find(cats.begin(), cats.end(), s.category) != cats.end()) dst.push_back(s);
    };
    keep(data.train, out.train);
    keep(data.valid, out.valid);
    keep(data.test, out.test);
    return out;
}

std::vector<std::uint8_t> encode_dataset(const DatasetSplit& data) {
    bytes::Writer w;
    w.raw(std::string(kMagic, 8));
    w.u32(kVersion);
    w.f64(data.scale);
    w.u32(static_cast<std::uint32_t>(data.max_seq_len));
    w.u32(static_cast<std::uint32_t>(data.categories.size()));
    for (const auto& c : data.categories) w.str(c);
    for (const auto* split : {&data.train, &data.valid, &data.test}) {
        w.u32(static_cast<std::uint32_t>(split->size()));
        for (const auto& s : *split) {
            w.u32(static_cast<std::uint32_t>(data.category_index(s.category)));
            w.u32(static_cast<std::uint32_t>(s.points.size()));
            for (const auto& p : s.points) {
                w.f64(p.dx);
                w.f64(p.dy);
                w.u8(static_cast<std::uint8_t>(p.pen));
            }
        }
    }
    return std::move(w.buffer());
}

DatasetSplit decode_dataset(const std::vector<std::uint8_t>& buf) {
    bytes::Reader r(buf);
    DatasetSplit data;
    try {
        if (r.raw(8) != std::string(kMagic, 8)) throw std::runtime_error("not a dataset file");
        if (r.u32() != kVersion) throw std::runtime_error("unsupported dataset version");
        data.scale = r.f64();
        data.max_seq_len = r.u32();
        const std::uint32_t nc = r.u32();
        for (std::uint32_t i = 0; i < nc; ++i) data.categories.push_back(r.str());
        for (auto* split : {&data.train, &data.valid, &data.test}) {
            const std::uint32_t count = r.u32();
            for (std::uint32_t i = 0; i < count; ++i) {
                SketchSequence s;
                const std::uint32_t ci = r.u32();
                if (ci >= nc) throw std::runtime_error("record has a bad category index");
                s.category = data.categories[ci];
                const std::uint32_t np = r.u32();
                for (std::uint32_t k = 0; k < np; ++k) {
                    Stroke5Point p;
                    p.dx = r.f64();
                    p.dy = r.f64();
                    const std::uint8_t pen = r.u8();
                    if (pen > 2) throw std::runtime_error("record has a bad pen state");
                    p.pen = static_cast<Pen>(pen);
                    s.points.push_back(p);
                }
                split->push_back(std::move(s));
            }
        }
        if (!r.at_end()) throw std::runtime_error("trailing bytes in dataset file");
    } catch (const std::out_of_range&) {
        throw std::runtime_error("dataset file truncated");
    }
    return data;
}

void write_dataset(const std::filesystem::path& path, const DatasetSplit& data) {
    write_file_atomic(path, encode_dataset(data));
}

DatasetSplit read_dataset(const std::filesystem::path& path) {
    return decode_dataset(read_file_bytes(path));
}

}  // namespace sketchpix
