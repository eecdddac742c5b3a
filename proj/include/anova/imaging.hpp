#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace anova {

// Row-major grayscale image on the [0, 255] intensity scale. Values may leave
// that range after adding noise.
struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

    std::size_t size() const { return pixels.size(); }
    double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

enum class ImageErrorKind { open_failed, bad_magic, malformed_header, truncated_payload, write_failed };

class ImageError : public std::runtime_error {
public:
    ImageError(ImageErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ImageErrorKind kind() const { return kind_; }

private:
    ImageErrorKind kind_;
};

namespace detail {

inline void skip_pgm_space(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            in.get();
        } else {
            return;
        }
    }
}

inline std::size_t read_pgm_field(std::istream& in, const char* name) {
    skip_pgm_space(in);
    std::string digits;
    while (std::isdigit(in.peek())) digits.push_back(static_cast<char>(in.get()));
    if (digits.empty() || digits.size() > 9)
        throw ImageError(ImageErrorKind::malformed_header, std::string("PGM header: invalid ") + name);
    return std::stoul(digits);
}

}  // namespace detail

// Binary PGM (P5), 8- or 16-bit. Samples are mapped to [0, 255] by 255 / maxval.
inline GrayImage read_pgm(std::istream& in) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (in.gcount() != 2 || magic[0] != 'P' || magic[1] != '5')
        throw ImageError(ImageErrorKind::bad_magic, "not a binary PGM (expected P5)");
    const std::size_t width = detail::read_pgm_field(in, "width");
    const std::size_t height = detail::read_pgm_field(in, "height");
    const std::size_t maxval = detail::read_pgm_field(in, "maxval");
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535)
        throw ImageError(ImageErrorKind::malformed_header, "PGM header: dimensions or maxval out of range");
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep))
        throw ImageError(ImageErrorKind::malformed_header, "PGM header: missing separator before payload");

    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(width * height * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw ImageError(ImageErrorKind::truncated_payload, "PGM payload is truncated");

    GrayImage img(height, width);
    const double scale = 255.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned sample =
            bytes_per_sample == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        img.pixels[i] = maxval == 255 ? sample : sample * scale;
    }
    return img;
}

inline GrayImage load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError(ImageErrorKind::open_failed, "cannot open " + path);
    try {
        return read_pgm(in);
    } catch (const ImageError& e) {
        throw ImageError(e.kind(), path + ": " + e.what());
    }
}

// Clamps to [0, 255] and rounds to 8 bits.
inline void write_pgm(std::ostream& out, const GrayImage& img) {
    out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(img.pixels[i], 0.0, 255.0);
        raw[i] = static_cast<unsigned char>(std::lround(v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline void save_image(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError(ImageErrorKind::write_failed, "cannot write " + path);
    write_pgm(out, img);
    if (!out) throw ImageError(ImageErrorKind::write_failed, "write failed for " + path);
}

// SplitMix64 stream with Box-Muller pairs. The sequence is fixed for a seed on
// every platform.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1].
    double next_uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct NoiseSpec {
    double stddev = 0.0;
    std::uint64_t seed = 0;
};

// Additive white Gaussian noise, not clipped.
inline GrayImage add_gaussian_noise(const GrayImage& img, const NoiseSpec& spec) {
    if (!(spec.stddev >= 0.0)) throw std::invalid_argument("noise stddev must be non-negative");
    GrayImage out = img;
    NormalStream rng(spec.seed);
    for (double& p : out.pixels) p += spec.stddev * rng.next_normal();
    return out;
}

inline double mean_squared_error(const GrayImage& a, const GrayImage& b) {
    if (a.height != b.height || a.width != b.width) throw std::invalid_argument("image shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a.pixels[i] - b.pixels[i]) * (a.pixels[i] - b.pixels[i]);
    return acc / static_cast<double>(a.size());
}

// Mean SSIM over all uniform window positions (stride 1). The window shrinks
// to the image size for images smaller than it.
inline double ssim(const GrayImage& a, const GrayImage& b, std::size_t window = 8) {
    if (a.height != b.height || a.width != b.width) throw std::invalid_argument("image shapes differ");
    if (a.size() == 0) throw std::invalid_argument("empty image");
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const std::size_t wh = std::min(window, a.height);
    const std::size_t ww = std::min(window, a.width);
    const double count = static_cast<double>(wh * ww);

    double total = 0.0;
    std::size_t positions = 0;
    for (std::size_t r0 = 0; r0 + wh <= a.height; ++r0) {
        for (std::size_t c0 = 0; c0 + ww <= a.width; ++c0) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t r = r0; r < r0 + wh; ++r) {
                for (std::size_t c = c0; c < c0 + ww; ++c) {
                    const double x = a.at(r, c);
                    const double y = b.at(r, c);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            const double ma = sa / count, mb = sb / count;
            const double va = std::max(0.0, saa / count - ma * ma);
            const double vb = std::max(0.0, sbb / count - mb * mb);
            const double cov = sab / count - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++positions;
        }
    }
    return total / static_cast<double>(positions);
}

// Bilinear resampling with pixel centres aligned.
inline GrayImage resize_bilinear(const GrayImage& img, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0 || img.size() == 0) throw std::invalid_argument("empty resize");
    GrayImage out(height, width);
    const double sy = static_cast<double>(img.height) / static_cast<double>(height);
    const double sx = static_cast<double>(img.width) / static_cast<double>(width);
    for (std::size_t r = 0; r < height; ++r) {
        const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        const std::size_t y0 = static_cast<std::size_t>(y);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t c = 0; c < width; ++c) {
            const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
            const std::size_t x0 = static_cast<std::size_t>(x);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1);
            const double fx = x - static_cast<double>(x0);
            out.at(r, c) = (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
                           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
        }
    }
    return out;
}

}  // namespace anova
