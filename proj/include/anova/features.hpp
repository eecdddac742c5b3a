#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "anova/imaging.hpp"

namespace anova {

// n x d row-major patch features. Column j holds the pixel at offset
// (dr, dc) = (j / (2r+1) - r, j % (2r+1) - r); the centre pixel is column d / 2.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t radius = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::size_t centre_column() const { return cols / 2; }
};

// Zero padding outside the image.
inline FeatureMatrix extract_patches(const GrayImage& img, std::size_t radius) {
    if (img.size() == 0) throw std::invalid_argument("empty image");
    const std::size_t side = 2 * radius + 1;
    FeatureMatrix fm;
    fm.rows = img.size();
    fm.cols = side * side;
    fm.radius = radius;
    fm.values.assign(fm.rows * fm.cols, 0.0);
    const auto h = static_cast<std::ptrdiff_t>(img.height), w = static_cast<std::ptrdiff_t>(img.width);
    const auto rad = static_cast<std::ptrdiff_t>(radius);
    for (std::ptrdiff_t r = 0; r < h; ++r) {
        for (std::ptrdiff_t c = 0; c < w; ++c) {
            double* row = &fm.values[static_cast<std::size_t>(r * w + c) * fm.cols];
            std::size_t j = 0;
            for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr) {
                for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc, ++j) {
                    const std::ptrdiff_t rr = r + dr, cc = c + dc;
                    if (rr >= 0 && rr < h && cc >= 0 && cc < w)
                        row[j] = img.pixels[static_cast<std::size_t>(rr * w + cc)];
                }
            }
        }
    }
    return fm;
}

namespace detail {

inline std::vector<int> bin_column(const FeatureMatrix& fm, std::size_t j, int bins) {
    double lo = fm(0, j), hi = fm(0, j);
    for (std::size_t i = 1; i < fm.rows; ++i) {
        lo = std::min(lo, fm(i, j));
        hi = std::max(hi, fm(i, j));
    }
    std::vector<int> out(fm.rows, 0);
    if (!(hi > lo)) return out;
    const double scale = bins / (hi - lo);
    for (std::size_t i = 0; i < fm.rows; ++i) out[i] = std::min(bins - 1, static_cast<int>((fm(i, j) - lo) * scale));
    return out;
}

}  // namespace detail

// Plug-in mutual information (nats) between each column and the centre column,
// from an equal-width joint histogram over each column's observed range.
// Constant columns score 0.
inline std::vector<double> mutual_information_scores(const FeatureMatrix& fm, int bins = 16) {
    if (fm.rows == 0 || fm.cols == 0) throw std::invalid_argument("empty feature matrix");
    if (bins < 2) throw std::invalid_argument("need at least two histogram bins");
    const std::vector<int> centre = detail::bin_column(fm, fm.centre_column(), bins);
    const double n = static_cast<double>(fm.rows);
    std::vector<double> scores(fm.cols, 0.0);
    std::vector<double> joint(static_cast<std::size_t>(bins * bins));
    std::vector<double> pa(bins), pb(bins);
    for (std::size_t j = 0; j < fm.cols; ++j) {
        const std::vector<int> col = detail::bin_column(fm, j, bins);
        std::fill(joint.begin(), joint.end(), 0.0);
        std::fill(pa.begin(), pa.end(), 0.0);
        std::fill(pb.begin(), pb.end(), 0.0);
        for (std::size_t i = 0; i < fm.rows; ++i) {
            joint[static_cast<std::size_t>(col[i] * bins + centre[i])] += 1.0 / n;
            pa[col[i]] += 1.0 / n;
            pb[centre[i]] += 1.0 / n;
        }
        double mi = 0.0;
        for (int a = 0; a < bins; ++a)
            for (int b = 0; b < bins; ++b) {
                const double p = joint[static_cast<std::size_t>(a * bins + b)];
                if (p > 0) mi += p * std::log(p / (pa[a] * pb[b]));
            }
        scores[j] = std::max(0.0, mi);
    }
    return scores;
}

// Groups of at most `group` feature columns plus the shared kernel width.
struct WindowSet {
    std::vector<std::vector<std::size_t>> windows;
    double sigma = 1.0;
    std::shared_ptr<const FeatureMatrix> features;

    std::size_t count() const { return windows.size(); }
    std::size_t points() const { return features ? features->rows : 0; }

    // Row-major n x d_l coordinates of window l.
    std::vector<double> window_points(std::size_t l) const {
        const auto& cols = windows.at(l);
        std::vector<double> out(features->rows * cols.size());
        for (std::size_t i = 0; i < features->rows; ++i)
            for (std::size_t s = 0; s < cols.size(); ++s) out[i * cols.size() + s] = (*features)(i, cols[s]);
        return out;
    }
};

// Columns sorted by descending score (ties by ascending index), then cut into
// consecutive groups.
inline std::vector<std::vector<std::size_t>> group_by_score(const std::vector<double>& scores, std::size_t group = 3) {
    if (group == 0) throw std::invalid_argument("window size must be positive");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::vector<std::size_t>> windows;
    for (std::size_t k = 0; k < order.size(); k += group)
        windows.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(k),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), k + group)));
    return windows;
}

inline WindowSet split_windows(std::shared_ptr<const FeatureMatrix> features, double sigma, std::size_t group = 3,
                               int bins = 16) {
    if (!features) throw std::invalid_argument("missing feature matrix");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
    WindowSet ws;
    ws.windows = group_by_score(mutual_information_scores(*features, bins), group);
    ws.sigma = sigma;
    ws.features = std::move(features);
    return ws;
}

inline WindowSet windows_from_image(const GrayImage& img, std::size_t radius, double sigma, int bins = 16) {
    return split_windows(std::make_shared<const FeatureMatrix>(extract_patches(img, radius)), sigma, 3, bins);
}

}  // namespace anova
