#pragma once
// Procedural stand-ins for the six QuickDraw categories (cat, pig, rabbit,
// bus, truck, car). Each draw varies size, aspect, position, jitter, stroke
// order and stroke direction, and lands on the QuickDraw 0..255 integer grid.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sketchpix/stroke.hpp"

namespace sketchpix::synth {

const std::vector<std::string>& categories();
bool is_category(const std::string& name);

std::vector<Polyline> strokes(const std::string& category, std::mt19937_64& rng);
SketchSequence sketch(const std::string& category, std::mt19937_64& rng);
// One QuickDraw-style ndjson record.
std::string quickdraw_line(const std::string& category, std::mt19937_64& rng);

}  // namespace sketchpix::synth
