#include "cdtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cdtrack/errors.hpp"

namespace cdtrack {

Motion SynthSpec::motion_at(int i) const {
    if (motion.empty()) return {};
    if (motion.size() == 1) return motion.front();
    return motion.at(static_cast<std::size_t>(i));
}

void SynthSpec::validate() const {
    if (frames < 1 || frame_h < 3 || frame_w < 3 || object_h < 1 || object_w < 1) {
        throw ConfigError("synthetic sequence sizes must be positive");
    }
    if (motion.size() > 1 && static_cast<int>(motion.size()) < frames - 1) {
        throw ConfigError("motion list shorter than frames - 1");
    }
    if (informative_channels < 0 || noise_channels < 0 || !(noise_sigma >= 0.0)) {
        throw ConfigError("channel counts and noise sigma must be nonnegative");
    }
}

namespace {

double quantize_position(double v) { return std::round(v * 256.0) / 256.0; }

float quantize_pixel(double v) {
    return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
}

// Random texels of size `texel`, bilinearly interpolated.
class Texture {
public:
    Texture(int h, int w, int texel, double lo, double hi, std::mt19937_64& rng)
        : texel_(texel), gh_(h / texel + 2), gw_(w / texel + 2), grid_(static_cast<std::size_t>(gh_) * gw_) {
        std::uniform_real_distribution<double> dist(lo, hi);
        for (auto& v : grid_) v = dist(rng);
    }

    double sample(double y, double x) const {
        const double gy = std::clamp(y / texel_, 0.0, gh_ - 1.000001);
        const double gx = std::clamp(x / texel_, 0.0, gw_ - 1.000001);
        const int y0 = static_cast<int>(gy);
        const int x0 = static_cast<int>(gx);
        const double wy = gy - y0;
        const double wx = gx - x0;
        const auto g = [this](int r, int c) { return grid_[static_cast<std::size_t>(r) * gw_ + c]; };
        return (1 - wy) * ((1 - wx) * g(y0, x0) + wx * g(y0, x0 + 1)) + wy * ((1 - wx) * g(y0 + 1, x0) + wx * g(y0 + 1, x0 + 1));
    }

private:
    double texel_;
    int gh_;
    int gw_;
    std::vector<double> grid_;
};

}  // namespace

SynthSequence generate_sequence(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.texture_seed);
    const Texture background(spec.frame_h, spec.frame_w, 8, 0.35, 0.65, rng);
    const Texture object_coarse(spec.object_h, spec.object_w, 4, 0.0, 1.0, rng);
    const Texture object_fine(spec.object_h, spec.object_w, 2, -0.25, 0.25, rng);

    SynthSequence seq;
    double x = spec.start_x >= 0.0 ? spec.start_x : 0.5 * (spec.frame_w - spec.object_w);
    double y = spec.start_y >= 0.0 ? spec.start_y : 0.5 * (spec.frame_h - spec.object_h);
    x = quantize_position(x);
    y = quantize_position(y);

    for (int f = 0; f < spec.frames; ++f) {
        if (f > 0) {
            const Motion m = spec.motion_at(f - 1);
            x = quantize_position(x + m.dx);
            y = quantize_position(y + m.dy);
        }
        if (x < 1.0 || y < 1.0 || x + spec.object_w > spec.frame_w - 1.0 || y + spec.object_h > spec.frame_h - 1.0) {
            throw ConfigError("object leaves the frame at frame " + std::to_string(f + 1));
        }
        seq.groundtruth.push_back(Box{x, y, static_cast<double>(spec.object_w), static_cast<double>(spec.object_h)});

        Image img(spec.frame_h, spec.frame_w, 1);
        for (int r = 0; r < spec.frame_h; ++r) {
            for (int c = 0; c < spec.frame_w; ++c) {
                double v = background.sample(r, c);
                const double oy = r - y;
                const double ox = c - x;
                if (oy >= 0.0 && ox >= 0.0 && oy < spec.object_h && ox < spec.object_w) {
                    v = object_coarse.sample(oy, ox) + object_fine.sample(oy, ox);
                }
                img.at(r, c) = quantize_pixel(v);
            }
        }
        seq.frames.push_back(std::move(img));
    }
    return seq;
}

FeatureSpec noisy_channel_provider(const FeatureSpec& base, const SynthSpec& spec) {
    FeatureSpec out = base;
    out.noise.channels = spec.noise_channels;
    out.noise.sigma = spec.noise_sigma;
    out.noise.seed = spec.texture_seed * 0x9e3779b97f4a7c15ULL + 0x51ed;
    return out;
}

}  // namespace cdtrack
