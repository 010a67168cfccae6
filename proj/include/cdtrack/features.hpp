#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cdtrack/tensor.hpp"

namespace cdtrack {

// Interleaved image with 1 or 3 channels, values in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f);

    float& at(int r, int c, int ch = 0) {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    float at(int r, int c, int ch = 0) const {
        return data[(static_cast<std::size_t>(r) * width + c) * channels + ch];
    }
    bool operator==(const Image&) const = default;
};

// Axis-aligned box, 0-based top-left corner.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double cx() const noexcept { return x + 0.5 * w; }
    double cy() const noexcept { return y + 0.5 * h; }
    bool operator==(const Box&) const = default;
};

struct Patch {
    Image pixels;
    Box source_box;
    double padding_factor = 1.0;
};

// Crops the box scaled by padding_factor about its center and bilinearly
// resamples it to out_h x out_w. Samples outside the frame replicate the
// nearest edge pixel.
Patch extract_patch(const Image& frame, const Box& box, double padding_factor, int out_h, int out_w);

// Rec. 601 luminance; a 1-channel image is returned unchanged.
Image to_gray(const Image& img);

enum class Provider { kGrayscale, kColor3, kGradHist, kFile };

// Temporally independent Gaussian channels appended after the provider's own.
struct NoiseSpec {
    int channels = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

struct FeatureSpec {
    Provider provider = Provider::kGradHist;
    int bins = 9;             // gradhist orientation bins
    int cell_size = 4;        // spatial pooling factor
    bool window = true;       // Hann taper
    bool normalize = true;    // zero mean, unit L2 norm per channel
    std::string file_stem;    // file provider: reads {file_stem}_{frame:06}.mcfd
    NoiseSpec noise;

    // Provider defaults: normalization on for hand-crafted channels, off for
    // externally extracted ones.
    static FeatureSpec make(Provider p);

    int base_channels() const;
    int channel_count() const;  // hand-crafted providers only
    void validate() const;
};

// Feature-grid extent of a patch of h x w pixels.
int grid_extent(int pixels, const FeatureSpec& spec);

// d-channel feature map of a patch. `frame_index` seeds noise channels and
// names the file for the file provider. When `wanted` is non-empty, channels
// it does not flag are returned as zero planes without being computed.
FeatureMap featurize(const Patch& p, const FeatureSpec& spec, int frame_index = 0,
                     std::span<const std::uint8_t> wanted = {});

// Separable 2-D Hann window (all ones for 1-wide axes).
Plane hann_window(int height, int width);

// Gaussian channels for one frame; independent across frames and channels.
Plane noise_channel(const NoiseSpec& spec, int frame_index, int channel, int height, int width);

// MCFD feature files: "MCFD" | u32 version=1 | u32 d | u32 H | u32 W |
// d*H*W float32, channel-major, row-major, all little-endian.
void save_feature_file(const std::filesystem::path& path, const FeatureMap& f);
FeatureMap load_feature_file(const std::filesystem::path& path);
std::filesystem::path feature_file_path(const std::string& stem, int frame_index);

}  // namespace cdtrack
