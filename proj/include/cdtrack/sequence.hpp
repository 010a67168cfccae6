#pragma once

#include <filesystem>
#include <vector>

#include "cdtrack/features.hpp"

namespace cdtrack {

// Binary PGM/PPM natively; PNG and JPEG when built with OpenCV.
Image read_image(const std::filesystem::path& path);
// Writes 8-bit PGM (1 channel) or PPM (3 channels).
void write_image(const std::filesystem::path& path, const Image& img);

// One "x,y,w,h" line per frame, 1-based top-left (commas, tabs or spaces).
// Boxes come back 0-based.
std::vector<Box> read_groundtruth(const std::filesystem::path& path);
void write_groundtruth(const std::filesystem::path& path, const std::vector<Box>& boxes);

// A sequence directory: img/0001.<ext> ... plus groundtruth.txt.
struct Sequence {
    std::filesystem::path root;
    std::vector<std::filesystem::path> frames;
    std::vector<Box> groundtruth;

    std::size_t size() const noexcept { return frames.size(); }
    Image frame(std::size_t i) const { return read_image(frames.at(i)); }
};

Sequence open_sequence(const std::filesystem::path& dir);
void write_sequence(const std::filesystem::path& dir, const std::vector<Image>& frames, const std::vector<Box>& gt);

}  // namespace cdtrack
