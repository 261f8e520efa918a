#pragma once
// Stroke-5 sketch representation and its conversions: QuickDraw records in,
// SVG and 48x48 bitmaps out.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sketchpix/tensor.hpp"

namespace sketchpix {

// Pen state after a point: Down draws to the next point, Up lifts the pen
// (last point of a stroke), End terminates the sketch.
enum class Pen : std::uint8_t { Down = 0, Up = 1, End = 2 };

struct Stroke5Point {
    double dx = 0.0;
    double dy = 0.0;
    Pen pen = Pen::Down;

    static constexpr Stroke5Point terminal() { return {0.0, 0.0, Pen::End}; }
    static constexpr Stroke5Point start_token() { return {0.0, 0.0, Pen::Down}; }

    std::array<double, 5> to_array() const;
    // Throws std::invalid_argument unless exactly one pen bit is 1.
    static Stroke5Point from_array(const std::array<double, 5>& v);

    bool operator==(const Stroke5Point&) const = default;
};

// Points include the terminal End point; padding is not stored.
struct SketchSequence {
    std::vector<Stroke5Point> points;
    std::string category;

    std::size_t length() const { return points.size(); }
    bool empty_drawing() const;
    std::size_t stroke_count() const;
};

// Empty string when valid, otherwise the first violated invariant.
std::string validate_sequence(const SketchSequence& seq);
bool is_valid_sequence(const SketchSequence& seq);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};
using Polyline = std::vector<Point2>;

// Absolute strokes -> stroke-5. The first point of the first stroke is the
// origin; every later point is an offset from its predecessor. The last point
// of each stroke carries Pen::Up and one End point closes the sketch.
SketchSequence sequence_from_strokes(const std::vector<Polyline>& strokes,
                                     std::string category = {});

// Pen-down runs in absolute coordinates, starting from the origin (0, 0).
std::vector<Polyline> sequence_to_polylines(const SketchSequence& seq);

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// One QuickDraw ndjson record: {"word": ..., "drawing": [[[x...],[y...](,[t...])], ...]}.
SketchSequence parse_quickdraw_line(std::string_view line, std::size_t line_number = 1);
std::vector<SketchSequence> parse_quickdraw_file(const std::filesystem::path& path);

// Stroke-5 JSON used by the CLI: {"category": ..., "points": [[dx,dy,p1,p2,p3], ...]}.
std::string sequence_to_json(const SketchSequence& seq);
SketchSequence sequence_from_json(std::string_view text);

struct SvgOptions {
    double stroke_width = 2.0;
    double margin = 0.10;
};
std::string to_svg(const SketchSequence& seq, const SvgOptions& options = {});
// One SVG with a rows x cols grid of cells; empty sequences leave blank cells.
std::string to_svg_grid(const std::vector<std::vector<SketchSequence>>& rows,
                        double cell_size = 100.0);

struct RasterBitmap {
    static constexpr std::size_t kSize = 48;
    std::size_t width = kSize;
    std::size_t height = kSize;
    std::vector<double> pixels = std::vector<double>(kSize * kSize, 0.0);  // 1 = ink

    double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
    bool operator==(const RasterBitmap&) const = default;
};

// Fit the sketch into 48x48 preserving aspect ratio, centered, and draw every
// segment with a symmetric integer midpoint line. Output is binary.
RasterBitmap rasterize(const SketchSequence& seq);

using FilterKernel = std::array<std::array<double, 3>, 3>;
// 8-neighbour Laplacian scaled by 1/8.
FilterKernel default_highpass_kernel();

// 3x3 correlation with zero padding, clamped to [0, 1]. Throws
// std::invalid_argument unless the input is 48x48.
RasterBitmap highpass_filter(const RasterBitmap& img,
                             const FilterKernel& kernel = default_highpass_kernel());

// Plain PGM (P2), maxval 255, white background: value = 255 - round(255 * ink).
std::string to_pgm(const RasterBitmap& img);
// Reads P2 or P5 of any size. Images that are not 48x48 are area-resampled
// into a centered 48x48 frame preserving aspect ratio.
RasterBitmap read_pgm(const std::filesystem::path& path);
RasterBitmap parse_pgm(std::string_view text);

struct SequenceBatch {
    Tensor points;                     // (batch, max_seq_len, 5)
    std::vector<std::size_t> lengths;  // real points per row, End included
    std::size_t max_seq_len = 0;
    std::size_t size() const { return lengths.size(); }
};

// Padding rows are (0, 0, 0, 0, 1).
SequenceBatch pad_and_batch(const std::vector<SketchSequence>& seqs, std::size_t max_seq_len);

}  // namespace sketchpix
