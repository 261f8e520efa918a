#include "sketchpix/stroke.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace sketchpix {

using nlohmann::json;

std::array<double, 5> Stroke5Point::to_array() const {
    return {dx, dy, pen == Pen::Down ? 1.0 : 0.0, pen == Pen::Up ? 1.0 : 0.0,
            pen == Pen::End ? 1.0 : 0.0};
}

Stroke5Point Stroke5Point::from_array(const std::array<double, 5>& v) {
    int set = 0;
    Pen pen = Pen::Down;
    for (int i = 0; i < 3; ++i) {
        const double bit = v[2 + i];
        if (bit != 0.0 && bit != 1.0)
            throw std::invalid_argument("pen bits must be 0 or 1");
        if (bit == 1.0) {
            ++set;
            pen = static_cast<Pen>(i);
        }
    }
    if (set != 1) throw std::invalid_argument("exactly one pen bit must be set");
    return {v[0], v[1], pen};
}

bool SketchSequence::empty_drawing() const {
    return points.empty() || (points.size() == 1 && points[0].pen == Pen::End);
}

std::size_t SketchSequence::stroke_count() const {
    return static_cast<std::size_t>(
        std::count_if(points.begin(), points.end(), [](const auto& p) { return p.pen == Pen::Up; }));
}

std::string validate_sequence(const SketchSequence& seq) {
    if (seq.points.empty()) return {};
    for (std::size_t i = 0; i < seq.points.size(); ++i) {
        const auto& p = seq.points[i];
        if (!std::isfinite(p.dx) || !std::isfinite(p.dy))
            return "point " + std::to_string(i) + " has a non-finite offset";
        if (p.pen == Pen::End && i + 1 != seq.points.size())
            return "end-of-sketch at point " + std::to_string(i) + " is not last";
    }
    if (!(seq.points.back() == Stroke5Point::terminal()))
        return "sequence does not finish with the terminal point (0,0,0,0,1)";
    return {};
}

bool is_valid_sequence(const SketchSequence& seq) { return validate_sequence(seq).empty(); }

SketchSequence sequence_from_strokes(const std::vector<Polyline>& strokes, std::string category) {
    SketchSequence seq;
    seq.category = std::move(category);
    bool have_origin = false;
    Point2 prev;
    for (const auto& stroke : strokes) {
        if (stroke.empty()) continue;
        std::size_t begin = 0;
        if (!have_origin) {
            prev = stroke.front();
            have_origin = true;
            begin = 1;
            if (stroke.size() == 1) {
                seq.points.push_back({0.0, 0.0, Pen::Up});
                continue;
            }
        }
        for (std::size_t i = begin; i < stroke.size(); ++i) {
            seq.points.push_back({stroke[i].x - prev.x, stroke[i].y - prev.y, Pen::Down});
            prev = stroke[i];
        }
        seq.points.back().pen = Pen::Up;
    }
    seq.points.push_back(Stroke5Point::terminal());
    return seq;
}

std::vector<Polyline> sequence_to_polylines(const SketchSequence& seq) {
    std::vector<Polyline> out;
    Point2 pos;
    Polyline current{pos};
    bool started = false;
    Pen previous = Pen::Down;  // the start token puts the pen down at the origin
    for (const auto& p : seq.points) {
        if (p.pen == Pen::End) break;
        pos.x += p.dx;
        pos.y += p.dy;
        if (previous == Pen::Down) {
            current.push_back(pos);
        } else {
            current = Polyline{pos};
        }
        started = true;
        if (p.pen == Pen::Up) {
            out.push_back(std::move(current));
            current.clear();
            started = false;
        }
        previous = p.pen;
    }
    if (started && !current.empty()) out.push_back(std::move(current));
    return out;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

SketchSequence parse_quickdraw_line(std::string_view line, std::size_t line_number) {
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object() || !record.contains("drawing") || !record["drawing"].is_array())
        throw ParseError(line_number, "record has no 'drawing' array");
    const auto& drawing = record["drawing"];
    if (drawing.empty()) throw ParseError(line_number, "empty drawing");

    std::vector<Polyline> strokes;
    for (std::size_t s = 0; s < drawing.size(); ++s) {
        const auto& stroke = drawing[s];
        if (!stroke.is_array() || stroke.size() < 2 || !stroke[0].is_array() ||
            !stroke[1].is_array())
            throw ParseError(line_number, "stroke " + std::to_string(s) +
                                              " is not a pair of coordinate arrays");
        const auto& xs = stroke[0];
        const auto& ys = stroke[1];
        for (std::size_t a = 1; a < stroke.size(); ++a)
            if (!stroke[a].is_array() || stroke[a].size() != xs.size())
                throw ParseError(line_number, "stroke " + std::to_string(s) +
                                                  " has mismatched coordinate array lengths");
        if (xs.empty()) throw ParseError(line_number, "stroke " + std::to_string(s) + " is empty");
        Polyline poly;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!xs[i].is_number() || !ys[i].is_number())
                throw ParseError(line_number, "stroke " + std::to_string(s) +
                                                  " has a non-numeric coordinate");
            poly.push_back({xs[i].get<double>(), ys[i].get<double>()});
        }
        strokes.push_back(std::move(poly));
    }
    std::string category;
    if (record.contains("word") && record["word"].is_string()) category = record["word"];
    return sequence_from_strokes(strokes, std::move(category));
}

std::vector<SketchSequence> parse_quickdraw_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<SketchSequence> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_quickdraw_line(line, n));
    }
    return out;
}

std::string sequence_to_json(const SketchSequence& seq) {
    json j;
    j["category"] = seq.category;
    j["points"] = json::array();
    for (const auto& p : seq.points) {
        const auto a = p.to_array();
        j["points"].push_back({a[0], a[1], int(a[2]), int(a[3]), int(a[4])});
    }
    return j.dump();
}

SketchSequence sequence_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(1, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
        throw ParseError(1, "stroke-5 document has no 'points' array");
    SketchSequence seq;
    if (j.contains("category") && j["category"].is_string()) seq.category = j["category"];
    for (const auto& row : j["points"]) {
        if (!row.is_array() || row.size() != 5) throw ParseError(1, "point is not a 5-vector");
        std::array<double, 5> v{};
        for (std::size_t i = 0; i < 5; ++i) v[i] = row[i].get<double>();
        try {
            seq.points.push_back(Stroke5Point::from_array(v));
        } catch (const std::invalid_argument& e) {
            throw ParseError(1, e.what());
        }
    }
    if (auto err = validate_sequence(seq); !err.empty()) throw ParseError(1, err);
    return seq;
}

namespace {

struct Bounds {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    bool empty() const { return min_x > max_x; }
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
};

Bounds bounds_of(const std::vector<Polyline>& lines) {
    Bounds b;
    for (const auto& line : lines)
        for (const auto& p : line) {
            b.min_x = std::min(b.min_x, p.x);
            b.min_y = std::min(b.min_y, p.y);
            b.max_x = std::max(b.max_x, p.x);
            b.max_y = std::max(b.max_y, p.y);
        }
    return b;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string path_elements(const std::vector<Polyline>& lines) {
    std::string out;
    for (const auto& line : lines) {
        out += "<path d=\"";
        for (std::size_t i = 0; i < line.size(); ++i) {
            out += i == 0 ? "M" : " L";
            out += num(line[i].x) + " " + num(line[i].y);
        }
        out += "\"/>";
    }
    return out;
}

}  // namespace

std::string to_svg(const SketchSequence& seq, const SvgOptions& options) {
    const auto lines = sequence_to_polylines(seq);
    const Bounds b = bounds_of(lines);
    double x = 0, y = 0, w = 1, h = 1;
    if (!b.empty()) {
        const double extent = std::max(b.width(), b.height());
        const double m = extent > 0 ? options.margin * extent : 1.0;
        x = b.min_x - m;
        y = b.min_y - m;
        w = b.width() + 2 * m;
        h = b.height() + 2 * m;
    }
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" + num(x) +
           " " + num(y) + " " + num(w) + " " + num(h) + "\">";
    svg += "<g fill=\"none\" stroke=\"black\" stroke-width=\"" + num(options.stroke_width) +
           "\" stroke-linecap=\"round\" stroke-linejoin=\"round\" "
           "vector-effect=\"non-scaling-stroke\">";
    svg += path_elements(lines);
    svg += "</g></svg>\n";
    return svg;
}

std::string to_svg_grid(const std::vector<std::vector<SketchSequence>>& rows, double cell) {
    std::size_t cols = 0;
    for (const auto& r : rows) cols = std::max(cols, r.size());
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 " +
           num(cell * static_cast<double>(cols)) + " " +
           num(cell * static_cast<double>(rows.size())) + "\">";
    svg += "<g fill=\"none\" stroke=\"black\" stroke-linecap=\"round\">";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const auto lines = sequence_to_polylines(rows[r][c]);
            const Bounds b = bounds_of(lines);
            if (b.empty()) continue;
            const double extent = std::max({b.width(), b.height(), 1e-9});
            const double s = 0.8 * cell / extent;
            const double cx = (b.min_x + b.max_x) / 2, cy = (b.min_y + b.max_y) / 2;
            svg += "<g transform=\"translate(" + num((static_cast<double>(c) + 0.5) * cell) +
                   " " + num((static_cast<double>(r) + 0.5) * cell) + ") scale(" + num(s) +
                   ") translate(" + num(-cx) + " " + num(-cy) +
                   ")\" stroke-width=\"1.5\" vector-effect=\"non-scaling-stroke\">";
            svg += path_elements(lines);
            svg += "</g>";
        }
    }
    svg += "</g></svg>\n";
    return svg;
}

namespace {

// Bresenham over a canonical endpoint order so that A->B and B->A light the
// same pixels.
void draw_line(RasterBitmap& img, long x0, long y0, long x1, long y1) {
    if (std::make_pair(x1, y1) < std::make_pair(x0, y0)) {
        std::swap(x0, x1);
        std::swap(y0, y1);
    }
    const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    const long n = static_cast<long>(RasterBitmap::kSize);
    for (;;) {
        if (x0 >= 0 && x0 < n && y0 >= 0 && y0 < n)
            img.at(static_cast<std::size_t>(y0), static_cast<std::size_t>(x0)) = 1.0;
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

long to_pixel(double v) {
    // Snap away last-ulp noise from cumulative sums before rounding.
    const double snapped = std::round(v * 1e6) / 1e6;
    const long p = static_cast<long>(std::floor(snapped + 0.5));
    return std::clamp<long>(p, 0, static_cast<long>(RasterBitmap::kSize) - 1);
}

}  // namespace

RasterBitmap rasterize(const SketchSequence& seq) {
    RasterBitmap img;
    const auto lines = sequence_to_polylines(seq);
    const Bounds b = bounds_of(lines);
    if (b.empty()) return img;
    const double extent = std::max(b.width(), b.height());
    const double span = static_cast<double>(RasterBitmap::kSize - 1);
    const double s = extent > 0 ? span / extent : 0.0;
    const double cx = (b.min_x + b.max_x) / 2, cy = (b.min_y + b.max_y) / 2;
    const double center = span / 2;
    for (const auto& line : lines) {
        std::vector<std::pair<long, long>> px;
        for (const auto& p : line)
            px.emplace_back(to_pixel((p.x - cx) * s + center), to_pixel((p.y - cy) * s + center));
        if (px.size() == 1) draw_line(img, px[0].first, px[0].second, px[0].first, px[0].second);
        for (std::size_t i = 1; i < px.size(); ++i)
            draw_line(img, px[i - 1].first, px[i - 1].second, px[i].first, px[i].second);
    }
    return img;
}

FilterKernel default_highpass_kernel() {
    constexpr double a = -1.0 / 8.0;
    return {{{a, a, a}, {a, 1.0, a}, {a, a, a}}};
}

RasterBitmap highpass_filter(const RasterBitmap& img, const FilterKernel& kernel) {
    constexpr std::size_t n = RasterBitmap::kSize;
    if (img.width != n || img.height != n || img.pixels.size() != n * n)
        throw std::invalid_argument("highpass_filter expects a 48x48 bitmap, got " +
                                    std::to_string(img.width) + "x" + std::to_string(img.height));
    RasterBitmap out;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double s = 0.0;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const long rr = static_cast<long>(r) + di, cc = static_cast<long>(c) + dj;
                    if (rr < 0 || cc < 0 || rr >= long(n) || cc >= long(n)) continue;
                    s += kernel[di + 1][dj + 1] *
                         img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
                }
            out.at(r, c) = std::clamp(s, 0.0, 1.0);
        }
    return out;
}

std::string to_pgm(const RasterBitmap& img) {
    std::string out = "P2\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    for (std::size_t r = 0; r < img.height; ++r) {
        for (std::size_t c = 0; c < img.width; ++c) {
            const long v = 255 - std::lround(255.0 * std::clamp(img.at(r, c), 0.0, 1.0));
            if (c) out += ' ';
            out += std::to_string(v);
        }
        out += '\n';
    }
    return out;
}

namespace {

RasterBitmap fit_to_frame(std::size_t w, std::size_t h, const std::vector<double>& ink) {
    constexpr std::size_t n = RasterBitmap::kSize;
    RasterBitmap out;
    if (w == n && h == n) {
        out.pixels = ink;
        return out;
    }
    const double s = static_cast<double>(n) / static_cast<double>(std::max(w, h));
    const double off_x = (static_cast<double>(n) - static_cast<double>(w) * s) / 2;
    const double off_y = (static_cast<double>(n) - static_cast<double>(h) * s) / 2;
    constexpr int sub = 4;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int a = 0; a < sub; ++a)
                for (int b = 0; b < sub; ++b) {
                    const double y = (static_cast<double>(r) + (a + 0.5) / sub - off_y) / s;
                    const double x = (static_cast<double>(c) + (b + 0.5) / sub - off_x) / s;
                    if (x < 0 || y < 0 || x >= double(w) || y >= double(h)) continue;
                    acc += ink[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
                }
            out.at(r, c) = acc / (sub * sub);
        }
    return out;
}

}  // namespace

RasterBitmap parse_pgm(std::string_view text) {
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < text.size()) {
            if (text[pos] == '#') {
                while (pos < text.size() && text[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(text[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        return std::string(text.substr(start, pos - start));
    };
    const std::string magic = next_token();
    if (magic != "P2" && magic != "P5") throw std::invalid_argument("not a PGM file");
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(next_token());
        h = std::stoul(next_token());
        maxval = std::stoul(next_token());
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed PGM header");
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 65535)
        throw std::invalid_argument("malformed PGM header");
    std::vector<double> ink(w * h);
    if (magic == "P2") {
        for (auto& v : ink) {
            const std::string tok = next_token();
            if (tok.empty()) throw std::invalid_argument("PGM pixel data truncated");
            v = 1.0 - static_cast<double>(std::stoul(tok)) / static_cast<double>(maxval);
        }
    } else {
        ++pos;  // single whitespace after maxval
        const std::size_t bpp = maxval > 255 ? 2 : 1;
        if (text.size() < pos + w * h * bpp) throw std::invalid_argument("PGM pixel data truncated");
        for (std::size_t i = 0; i < w * h; ++i) {
            std::size_t v = static_cast<unsigned char>(text[pos + i * bpp]);
            if (bpp == 2) v = (v << 8) | static_cast<unsigned char>(text[pos + i * bpp + 1]);
            ink[i] = 1.0 - static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    for (auto& v : ink) v = std::clamp(v, 0.0, 1.0);
    return fit_to_frame(w, h, ink);
}

RasterBitmap read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pgm(ss.str());
}

SequenceBatch pad_and_batch(const std::vector<SketchSequence>& seqs, std::size_t max_seq_len) {
    if (seqs.empty()) throw std::invalid_argument("pad_and_batch: empty batch");
    SequenceBatch batch;
    batch.max_seq_len = max_seq_len;
    std::vector<double> values(seqs.size() * max_seq_len * 5, 0.0);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
        const auto& s = seqs[b];
        if (s.length() > max_seq_len)
            throw std::invalid_argument(
                "pad_and_batch: sequence " + std::to_string(b) +
                (s.category.empty() ? std::string() : " (" + s.category + ")") + " has " +
                std::to_string(s.length()) + " points, max_seq_len is " +
                std::to_string(max_seq_len));
        for (std::size_t t = 0; t < max_seq_len; ++t) {
            const auto a = t < s.length() ? s.points[t].to_array()
                                          : Stroke5Point::terminal().to_array();
            std::copy(a.begin(), a.end(), values.begin() + static_cast<long>((b * max_seq_len + t) * 5));
        }
        batch.lengths.push_back(s.length());
    }
    batch.points = Tensor({seqs.size(), max_seq_len, 5}, std::move(values));
    return batch;
}

}  // namespace sketchpix
