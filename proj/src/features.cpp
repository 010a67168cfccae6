#include "cdtrack/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "cdtrack/errors.hpp"

namespace cdtrack {

Image::Image(int h, int w, int c, float fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
    if (h <= 0 || w <= 0 || (c != 1 && c != 3)) throw DimensionError("image must be positive-sized with 1 or 3 channels");
}

Patch extract_patch(const Image& frame, const Box& box, double padding_factor, int out_h, int out_w) {
    if (!(box.w > 0.0 && box.h > 0.0) || !std::isfinite(box.x) || !std::isfinite(box.y)) {
        throw DegenerateBoxError("box must have positive width and height");
    }
    if (out_h <= 0 || out_w <= 0) throw DimensionError("patch output size must be positive");
    if (!(padding_factor >= 1.0)) throw ConfigError("padding factor must be at least 1");
    if (frame.height <= 0 || frame.width <= 0) throw DimensionError("empty frame");

    const double region_w = box.w * padding_factor;
    const double region_h = box.h * padding_factor;
    const double left = box.cx() - 0.5 * region_w;
    const double top = box.cy() - 0.5 * region_h;
    const double sx = region_w / out_w;
    const double sy = region_h / out_h;

    Patch p;
    p.source_box = box;
    p.padding_factor = padding_factor;
    p.pixels = Image(out_h, out_w, frame.channels);
    const auto clamp_row = [&](long v) { return static_cast<int>(std::clamp<long>(v, 0, frame.height - 1)); };
    const auto clamp_col = [&](long v) { return static_cast<int>(std::clamp<long>(v, 0, frame.width - 1)); };
    for (int r = 0; r < out_h; ++r) {
        const double y = top + (r + 0.5) * sy - 0.5;
        const double fy = std::floor(y);
        const double wy = y - fy;
        const int y0 = clamp_row(static_cast<long>(fy));
        const int y1 = clamp_row(static_cast<long>(fy) + 1);
        for (int c = 0; c < out_w; ++c) {
            const double x = left + (c + 0.5) * sx - 0.5;
            const double fx = std::floor(x);
            const double wx = x - fx;
            const int x0 = clamp_col(static_cast<long>(fx));
            const int x1 = clamp_col(static_cast<long>(fx) + 1);
            for (int ch = 0; ch < frame.channels; ++ch) {
                const double v = (1.0 - wy) * ((1.0 - wx) * frame.at(y0, x0, ch) + wx * frame.at(y0, x1, ch)) +
                                 wy * ((1.0 - wx) * frame.at(y1, x0, ch) + wx * frame.at(y1, x1, ch));
                p.pixels.at(r, c, ch) = static_cast<float>(v);
            }
        }
    }
    return p;
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    Image g(img.height, img.width, 1);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            g.at(r, c) = 0.299f * img.at(r, c, 0) + 0.587f * img.at(r, c, 1) + 0.114f * img.at(r, c, 2);
        }
    }
    return g;
}

FeatureSpec FeatureSpec::make(Provider p) {
    FeatureSpec s;
    s.provider = p;
    s.normalize = p != Provider::kFile;
    if (p == Provider::kFile) s.window = false;
    return s;
}

int FeatureSpec::base_channels() const {
    switch (provider) {
        case Provider::kGrayscale: return 1;
        case Provider::kColor3: return 3;
        case Provider::kGradHist: return bins;
        case Provider::kFile: return 0;
    }
    return 0;
}

int FeatureSpec::channel_count() const { return base_channels() + noise.channels; }

void FeatureSpec::validate() const {
    if (cell_size < 1) throw ConfigError("cell_size must be positive");
    if (provider == Provider::kGradHist && bins < 2) throw ConfigError("gradhist needs at least 2 bins");
    if (provider == Provider::kFile && file_stem.empty()) throw ConfigError("file provider needs a path stem");
    if (noise.channels < 0 || !(noise.sigma >= 0.0)) throw ConfigError("invalid noise channel spec");
}

int grid_extent(int pixels, const FeatureSpec& spec) { return pixels / spec.cell_size; }

Plane hann_window(int height, int width) {
    Plane w(height, width);
    const auto hann = [](int i, int n) {
        return n <= 1 ? 1.0 : 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
    };
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) w.at(r, c) = hann(r, height) * hann(c, width);
    }
    return w;
}

Plane noise_channel(const NoiseSpec& spec, int frame_index, int channel, int height, int width) {
    Plane p(height, width);
    if (spec.sigma == 0.0) return p;
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(channel), 0x6e6f6973u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> dist(0.0, spec.sigma);
    for (auto& v : p.values) v = dist(rng);
    return p;
}

namespace {

void check_grid(const Patch& p, const FeatureSpec& spec) {
    if (p.pixels.height % spec.cell_size != 0 || p.pixels.width % spec.cell_size != 0) {
        throw ConfigError("cell_size must divide the patch dimensions");
    }
}

// Averages each cell_size x cell_size block.
Plane pool(const std::vector<double>& src, int h, int w, int cell) {
    const int gh = h / cell;
    const int gw = w / cell;
    Plane out(gh, gw);
    const double inv = 1.0 / (cell * cell);
    for (int r = 0; r < gh * cell; ++r) {
        for (int c = 0; c < gw * cell; ++c) out.at(r / cell, c / cell) += src[static_cast<std::size_t>(r) * w + c];
    }
    for (auto& v : out.values) v *= inv;
    return out;
}

std::vector<Plane> gradient_histogram(const Image& gray, int bins, int cell) {
    const int h = gray.height;
    const int w = gray.width;
    std::vector<std::vector<double>> hist(static_cast<std::size_t>(bins),
                                          std::vector<double>(static_cast<std::size_t>(h) * w, 0.0));
    const double bin_width = std::numbers::pi / bins;
    for (int r = 0; r < h; ++r) {
        const int ru = std::max(r - 1, 0);
        const int rd = std::min(r + 1, h - 1);
        for (int c = 0; c < w; ++c) {
            const int cl = std::max(c - 1, 0);
            const int cr = std::min(c + 1, w - 1);
            const double gx = 0.5 * (gray.at(r, cr) - gray.at(r, cl));
            const double gy = 0.5 * (gray.at(rd, c) - gray.at(ru, c));
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += std::numbers::pi;
            if (theta >= std::numbers::pi) theta -= std::numbers::pi;
            const double pos = theta / bin_width;
            const double fl = std::floor(pos);
            const double frac = pos - fl;
            const int lo = static_cast<int>(fl) % bins;
            const int hi = (lo + 1) % bins;
            const std::size_t k = static_cast<std::size_t>(r) * w + c;
            hist[static_cast<std::size_t>(lo)][k] += (1.0 - frac) * mag;
            hist[static_cast<std::size_t>(hi)][k] += frac * mag;
        }
    }
    std::vector<Plane> out;
    out.reserve(static_cast<std::size_t>(bins));
    for (const auto& hb : hist) out.push_back(pool(hb, h, w, cell));
    return out;
}

void normalize_channel(Plane& p) {
    double mean = 0.0;
    for (double v : p.values) mean += v;
    mean /= static_cast<double>(p.size());
    for (auto& v : p.values) v -= mean;
    const double norm = std::sqrt(sum_squares(p));
    if (norm <= 1e-300 || !std::isfinite(norm)) {
        std::fill(p.values.begin(), p.values.end(), 0.0);
        return;
    }
    for (auto& v : p.values) v /= norm;
}

}  // namespace

FeatureMap featurize(const Patch& p, const FeatureSpec& spec, int frame_index, std::span<const std::uint8_t> wanted) {
    spec.validate();
    std::vector<Plane> base;
    int gh = 0;
    int gw = 0;

    if (spec.provider == Provider::kFile) {
        FeatureMap loaded = load_feature_file(feature_file_path(spec.file_stem, frame_index));
        base = std::move(loaded.channels);
        gh = base.front().height;
        gw = base.front().width;
    } else {
        check_grid(p, spec);
        const int h = p.pixels.height;
        const int w = p.pixels.width;
        gh = h / spec.cell_size;
        gw = w / spec.cell_size;
        const auto plane_of = [&](const Image& img, int ch) {
            std::vector<double> v(static_cast<std::size_t>(h) * w);
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) v[static_cast<std::size_t>(r) * w + c] = img.at(r, c, ch);
            }
            return pool(v, h, w, spec.cell_size);
        };
        switch (spec.provider) {
            case Provider::kGrayscale:
                base.push_back(plane_of(to_gray(p.pixels), 0));
                break;
            case Provider::kColor3:
                for (int ch = 0; ch < 3; ++ch) base.push_back(plane_of(p.pixels, p.pixels.channels == 3 ? ch : 0));
                break;
            case Provider::kGradHist:
                base = gradient_histogram(to_gray(p.pixels), spec.bins, spec.cell_size);
                break;
            case Provider::kFile:
                break;
        }
    }

    const int d = static_cast<int>(base.size()) + spec.noise.channels;
    if (!wanted.empty() && static_cast<int>(wanted.size()) != d) {
        throw DimensionError("channel mask length differs from provider channel count");
    }
    const auto is_wanted = [&](int l) { return wanted.empty() || wanted[static_cast<std::size_t>(l)] != 0; };

    const Plane window = spec.window ? hann_window(gh, gw) : Plane();
    FeatureMap out;
    out.channels.reserve(static_cast<std::size_t>(d));
    for (int l = 0; l < static_cast<int>(base.size()); ++l) {
        Plane ch = std::move(base[static_cast<std::size_t>(l)]);
        if (!is_wanted(l)) {
            out.channels.emplace_back(gh, gw);
            continue;
        }
        if (spec.window) {
            for (std::size_t k = 0; k < ch.size(); ++k) ch.values[k] *= window.values[k];
        }
        if (spec.normalize) normalize_channel(ch);
        out.channels.push_back(std::move(ch));
    }
    for (int j = 0; j < spec.noise.channels; ++j) {
        const int l = static_cast<int>(base.size()) + j;
        out.channels.push_back(is_wanted(l) ? noise_channel(spec.noise, frame_index, j, gh, gw) : Plane(gh, gw));
    }
    return out;
}

// ------------------------------------------------------------------ MCFD io

namespace {

constexpr std::array<char, 4> kMagic{'M', 'C', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    v = to_le(v);
    os.write(reinterpret_cast<const char*>(&v), 4);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
    if (!is.read(reinterpret_cast<char*>(&v), 4)) return false;
    v = to_le(v);
    return true;
}

}  // namespace

void save_feature_file(const std::filesystem::path& path, const FeatureMap& f) {
    f.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    os.write(kMagic.data(), 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(f.channel_count()));
    put_u32(os, static_cast<std::uint32_t>(f.height()));
    put_u32(os, static_cast<std::uint32_t>(f.width()));
    for (const auto& ch : f.channels) {
        for (double v : ch.values) {
            put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    if (!os) throw FormatError("write failed for " + path.string());
}

FeatureMap load_feature_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open feature file " + path.string());
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4)) throw TruncatedError("feature file shorter than its header: " + path.string());
    if (magic != kMagic) throw BadMagicError("not an MCFD feature file: " + path.string());
    std::uint32_t version = 0, d = 0, h = 0, w = 0;
    if (!get_u32(is, version)) throw TruncatedError("truncated MCFD header: " + path.string());
    if (version != kVersion) throw VersionError("unsupported MCFD version " + std::to_string(version));
    if (!get_u32(is, d) || !get_u32(is, h) || !get_u32(is, w)) {
        throw TruncatedError("truncated MCFD header: " + path.string());
    }
    if (d == 0 || h == 0 || w == 0) throw FormatError("MCFD file declares an empty map");
    const std::uint64_t count = static_cast<std::uint64_t>(d) * h * w;

    is.seekg(0, std::ios::end);
    const auto end = static_cast<std::uint64_t>(is.tellg());
    if (end < 20 + 4 * count) {
        throw TruncatedError("MCFD payload truncated: expected " + std::to_string(4 * count) + " bytes");
    }
    is.seekg(20);

    FeatureMap f(static_cast<int>(d), static_cast<int>(h), static_cast<int>(w));
    std::vector<std::uint32_t> raw(static_cast<std::size_t>(count));
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(4 * count));
    if (!is) throw TruncatedError("MCFD payload truncated");
    std::size_t k = 0;
    for (auto& ch : f.channels) {
        for (auto& v : ch.values) {
            const float x = std::bit_cast<float>(to_le(raw[k++]));
            if (!std::isfinite(x)) throw NonFiniteError("non-finite value in MCFD file " + path.string());
            v = x;
        }
    }
    return f;
}

std::filesystem::path feature_file_path(const std::string& stem, int frame_index) {
    std::ostringstream os;
    os << stem << '_' << std::setw(6) << std::setfill('0') << frame_index << ".mcfd";
    return os.str();
}

}  // namespace cdtrack
