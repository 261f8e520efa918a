#include "sketchpix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace sketchpix::synth {
namespace {

using Strokes = std::vector<Polyline>;

struct Gen {
    std::mt19937_64& rng;
    double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
};

Polyline ellipse(double cx, double cy, double rx, double ry, int n, double start) {
    Polyline p;
    for (int i = 0; i <= n; ++i) {
        const double a = start + 2 * std::numbers::pi * i / n;
        p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return p;
}

Polyline rect(double x0, double y0, double x1, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

Strokes cat(Gen& g) {
    const double r = g.u(0.30, 0.36);
    Strokes s{ellipse(0, 0.05, r, r * g.u(0.85, 1.0), 10, g.u(0, 6.28))};
    const double ear = g.u(0.18, 0.26);
    s.push_back({{-r * 0.8, -r * 0.45}, {-r * 0.7, -r - ear}, {-r * 0.2, -r * 0.9}});
    s.push_back({{r * 0.2, -r * 0.9}, {r * 0.7, -r - ear}, {r * 0.8, -r * 0.45}});
    for (int side : {-1, 1})
        for (double dy : {0.02, 0.12})
            s.push_back({{side * r * 0.3, 0.1}, {side * (r + g.u(0.12, 0.2)), 0.1 + dy - 0.07}});
    return s;
}

Strokes pig(Gen& g) {
    const double r = g.u(0.32, 0.38);
    Strokes s{ellipse(0, 0, r * g.u(1.0, 1.15), r, 10, g.u(0, 6.28))};
    const double sr = g.u(0.1, 0.13);
    s.push_back(ellipse(0, 0.08, sr * 1.3, sr, 7, 0));
    s.push_back({{-0.04, 0.06}, {-0.04, 0.1}});
    s.push_back({{0.04, 0.06}, {0.04, 0.1}});
    s.push_back({{-r * 0.7, -r * 0.6}, {-r * 0.55, -r * 1.1}, {-r * 0.25, -r * 0.9}});
    s.push_back({{r * 0.25, -r * 0.9}, {r * 0.55, -r * 1.1}, {r * 0.7, -r * 0.6}});
    return s;
}

Strokes rabbit(Gen& g) {
    const double r = g.u(0.24, 0.3);
    Strokes s{ellipse(0, 0.2, r, r * 0.9, 10, g.u(0, 6.28))};
    const double len = g.u(0.28, 0.38);
    const double tilt = g.u(0.0, 0.08);
    s.push_back(ellipse(-0.11 - tilt, 0.2 - r - len * 0.9, 0.06, len, 7, 1.57));
    s.push_back(ellipse(0.11 + tilt, 0.2 - r - len * 0.9, 0.06, len, 7, 1.57));
    return s;
}

Polyline wheel(double cx, double cy, double r) { return ellipse(cx, cy, r, r, 6, 0); }

Strokes bus(Gen& g) {
    const double h = g.u(0.32, 0.4);
    Strokes s{rect(-0.48, -h / 2, 0.48, h / 2)};
    const int windows = 3;
    for (int i = 0; i < windows; ++i) {
        const double x0 = -0.4 + i * 0.27;
        s.push_back(rect(x0, -h / 2 + 0.05, x0 + 0.18, -h / 2 + 0.05 + h * 0.35));
    }
    const double wr = g.u(0.07, 0.09);
    s.push_back(wheel(-0.28, h / 2, wr));
    s.push_back(wheel(0.28, h / 2, wr));
    return s;
}

Strokes truck(Gen& g) {
    const double h = g.u(0.3, 0.38);
    const double split = g.u(0.1, 0.2);
    Strokes s{rect(-0.48, -h / 2, split, h / 2)};
    s.push_back({{split, -h / 4}, {0.36, -h / 4}, {0.46, 0.0}, {0.46, h / 2}, {split, h / 2}});
    const double wr = g.u(0.07, 0.09);
    s.push_back(wheel(-0.3, h / 2, wr));
    s.push_back(wheel(-0.08, h / 2, wr));
    s.push_back(wheel(0.32, h / 2, wr));
    return s;
}

Strokes car(Gen& g) {
    const double h = g.u(0.14, 0.2);
    const double roof = g.u(0.12, 0.18);
    Strokes s{{{-0.45, h / 2},
               {-0.45, -h / 2},
               {-0.22, -h / 2},
               {-0.12, -h / 2 - roof},
               {0.18, -h / 2 - roof},
               {0.28, -h / 2},
               {0.45, -h / 2},
               {0.45, h / 2},
               {-0.45, h / 2}}};
    const double wr = g.u(0.08, 0.1);
    s.push_back(wheel(-0.25, h / 2, wr));
    s.push_back(wheel(0.25, h / 2, wr));
    return s;
}

Strokes shape_for(const std::string& category, Gen& g) {
    if (category == "cat") return cat(g);
    if (category == "pig") return pig(g);
    if (category == "rabbit") return rabbit(g);
    if (category == "bus") return bus(g);
    if (category == "truck") return truck(g);
    if (category == "car") return car(g);
    throw std::invalid_argument("no synthetic generator for category '" + category + "'");
}

}  // namespace

const std::vector<std::string>& categories() {
    static const std::vector<std::string> names{"cat", "pig", "rabbit", "bus", "truck", "car"};
    return names;
}

bool is_category(const std::string& name) {
    const auto& c = categories();
    return std::find(c.begin(), c.end(), name) != c.end();
}

std::vector<Polyline> strokes(const std::string& category, std::mt19937_64& rng) {
    Gen g{rng};
    Strokes s = shape_for(category, g);
    const double scale = g.u(150.0, 230.0);
    const double sx = scale * g.u(0.9, 1.1);
    const double sy = scale * g.u(0.9, 1.1);
    const double angle = g.u(-0.12, 0.12);
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double ox = 127.5 + g.u(-10, 10), oy = 127.5 + g.u(-10, 10);
    for (auto& line : s) {
        for (auto& p : line) {
            const double jx = p.x + g.u(-0.012, 0.012);
            const double jy = p.y + g.u(-0.012, 0.012);
            const double x = (ca * jx - sa * jy) * sx + ox;
            const double y = (sa * jx + ca * jy) * sy + oy;
            p = {std::clamp(std::round(x), 0.0, 255.0), std::clamp(std::round(y), 0.0, 255.0)};
        }
        if (g.coin(0.3)) std::reverse(line.begin(), line.end());
    }
    // Keep the outline first most of the time, the way people tend to draw.
    if (g.coin(0.3)) std::shuffle(s.begin(), s.end(), rng);
    return s;
}

SketchSequence sketch(const std::string& category, std::mt19937_64& rng) {
    return sequence_from_strokes(strokes(category, rng), category);
}

std::string quickdraw_line(const std::string& category, std::mt19937_64& rng) {
    nlohmann::json rec;
    rec["word"] = category;
    rec["countrycode"] = "ZZ";
    rec["recognized"] = true;
    rec["drawing"] = nlohmann::json::array();
    for (const auto& line : strokes(category, rng)) {
        nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
        for (const auto& p : line) {
            xs.push_back(static_cast<int>(p.x));
            ys.push_back(static_cast<int>(p.y));
        }
        rec["drawing"].push_back({xs, ys});
    }
    return rec.dump();
}

}  // namespace sketchpix::synth
