#pragma once
// Train/validation/test splits of stroke-5 sketches and their on-disk form.
//
// Dataset container (little-endian):
//   magic "SKPXDSET", u32 version (1), f64 scale, u32 max_seq_len,
//   u32 category count, then per category: u32 len + UTF-8 name,
//   then three splits (train, valid, test), each:
//     u32 record count, per record: u32 category index, u32 point count,
//     per point: f64 dx, f64 dy, u8 pen (0 down, 1 up, 2 end).

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchpix/stroke.hpp"

namespace sketchpix {

struct DatasetSplit {
    std::vector<std::string> categories;
    std::vector<SketchSequence> train;
    std::vector<SketchSequence> valid;
    std::vector<SketchSequence> test;
    double scale = 1.0;  // raw offset = stored offset * scale
    std::size_t max_seq_len = 250;

    // category -> {train, valid, test} counts
    std::map<std::string, std::array<std::size_t, 3>> category_counts() const;
    std::size_t category_index(const std::string& name) const;
    bool has_category(const std::string& name) const;
};

// Population standard deviation of every dx and dy (pooled) over the non-End
// points of `seqs`.
double offset_std(const std::vector<SketchSequence>& seqs);

SketchSequence scale_offsets(const SketchSequence& seq, double factor);

// Divides all offsets by the training offset std and folds it into `scale`.
// Throws std::invalid_argument on an empty training split or zero variance.
DatasetSplit normalize(DatasetSplit data);
SketchSequence denormalize(const SketchSequence& seq, double scale);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t valid = 0;
    std::size_t test = 0;
};

// Shuffles each category with `seed`, drops sequences longer than
// max_seq_len, and deals out up to the requested counts per category.
DatasetSplit make_split(const std::map<std::string, std::vector<SketchSequence>>& by_category,
                        SplitSizes sizes, std::size_t max_seq_len, std::uint64_t seed);

// Keeps only the listed categories, in the listed order.
DatasetSplit select_categories(const DatasetSplit& data, const std::vector<std::string>& categories);

std::vector<std::uint8_t> encode_dataset(const DatasetSplit& data);
DatasetSplit decode_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const std::filesystem::path& path, const DatasetSplit& data);
DatasetSplit read_dataset(const std::filesystem::path& path);

}  // namespace sketchpix
