#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "anova/imaging.hpp"

namespace anova {

// Deterministic piecewise-smooth test scene: a shaded background with a few
// discs and rectangles of constant intensity.
inline GrayImage make_scene(std::size_t height, std::size_t width, std::uint64_t seed) {
    NormalStream rng(seed);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_uniform(); };

    GrayImage img(height, width);
    const double gx = uniform(-60.0, 60.0), gy = uniform(-60.0, 60.0), base = uniform(90.0, 150.0);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            img.at(r, c) =
                base + gx * (static_cast<double>(c) / width - 0.5) + gy * (static_cast<double>(r) / height - 0.5);

    const double h = static_cast<double>(height), w = static_cast<double>(width);
    for (int k = 0; k < 4; ++k) {
        const double cy = uniform(0.0, h), cx = uniform(0.0, w);
        const double radius = uniform(0.12, 0.3) * std::min(h, w);
        const double level = uniform(10.0, 245.0);
        for (std::size_t r = 0; r < height; ++r)
            for (std::size_t c = 0; c < width; ++c)
                if (std::hypot(r - cy, c - cx) <= radius) img.at(r, c) = level;
    }
    for (int k = 0; k < 2; ++k) {
        const double r0 = uniform(0.0, 0.7 * h), c0 = uniform(0.0, 0.7 * w);
        const double r1 = r0 + uniform(0.15, 0.3) * h, c1 = c0 + uniform(0.15, 0.3) * w;
        const double level = uniform(10.0, 245.0);
        for (std::size_t r = 0; r < height; ++r)
            for (std::size_t c = 0; c < width; ++c)
                if (r >= r0 && r <= r1 && c >= c0 && c <= c1) img.at(r, c) = level;
    }
    for (double& p : img.pixels) p = std::clamp(p, 0.0, 255.0);
    return img;
}

}  // namespace anova
