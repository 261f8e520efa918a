#pragma once
// Latent interpolation grids, latent export, and a 2-D PCA projection.

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sketchpix/generation.hpp"

namespace sketchpix {

struct InterpolationSpec {
    LatentVector z1;
    LatentVector z2;
    double step = 0.1;
};

// w1 = 0, step, 2 step, ... and always exactly 1 last. Throws unless
// 0 < step <= 1.
std::vector<double> interpolation_weights(double step);
// z(w1) = w1 z1 + (1 - w1) z2 for each weight, in weight order.
std::vector<LatentVector> interpolate(const InterpolationSpec& spec);

using CategoryPair = std::pair<std::string, std::string>;
// bus-cat, car-cat, truck-cat, bus-pig, car-pig, truck-pig, bus-rabbit,
// car-rabbit, truck-rabbit: (first, second) is (z1, z2).
std::vector<CategoryPair> default_interpolation_pairs();
CategoryPair parse_category_pair(const std::string& text);  // "bus-cat"

struct InterpolationGrid {
    std::vector<CategoryPair> pairs;
    std::vector<double> weights;                     // columns
    std::vector<std::vector<SketchSequence>> cells;  // rows = pairs
    std::size_t sketch_count() const;
};

// One exemplar sketch (raw units) per category. Every cell is sampled with
// the same seed, so the end columns equal generate(z2) and generate(z1).
InterpolationGrid interpolation_grid(const Generator& gen,
                                     const std::map<std::string, SketchSequence>& exemplars,
                                     const std::vector<CategoryPair>& pairs, double step,
                                     const SampleConfig& sample);

struct LatentRow {
    std::string category;
    std::size_t sample_id = 0;  // index into the exported split
    LatentVector z;
};

struct LatentExport {
    std::size_t dim = 0;
    std::vector<LatentRow> rows;
};

// n random sketches per category without replacement, z = mu. Sequences are
// in model units. Throws if a category has fewer than n sketches.
LatentExport export_latents(const SketchModel& model, const std::vector<SketchSequence>& split,
                            const std::vector<std::string>& categories, std::size_t n,
                            std::uint64_t seed, std::size_t batch_size = 100);

// Header: category,sample_id,z0,...,z{d-1}
std::string latents_to_csv(const LatentExport& e);
LatentExport latents_from_csv(const std::string& text);
void write_latents(const std::filesystem::path& path, const LatentExport& e);
LatentExport read_latents(const std::filesystem::path& path);

struct Projection {
    std::vector<std::string> categories;
    std::vector<std::array<double, 2>> points;
    std::array<LatentVector, 2> components;  // unit norm, orthogonal
    std::array<double, 2> variances{};       // projected variance per component
    double total_variance = 0;
};

// Mean-centred PCA onto the top two components by power iteration with
// deflation. Throws with fewer than two rows or when all rows coincide.
Projection project_2d(const LatentExport& e);
std::string projection_to_csv(const Projection& p);  // category,x,y

// Mean distance between category centroids divided by the mean distance of
// each point to its own centroid. Needs two or more categories.
double separation_metric(const LatentExport& e);

}  // namespace sketchpix
