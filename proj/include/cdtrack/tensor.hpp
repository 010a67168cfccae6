#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cdtrack {

using Complex = std::complex<double>;

// One real channel, row-major.
struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Plane() = default;
    Plane(int h, int w, double fill = 0.0);

    std::size_t size() const noexcept { return values.size(); }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    bool same_shape(const Plane& o) const noexcept { return height == o.height && width == o.width; }
};

struct ComplexPlane {
    int height = 0;
    int width = 0;
    std::vector<Complex> values;

    ComplexPlane() = default;
    ComplexPlane(int h, int w, Complex fill = {});

    std::size_t size() const noexcept { return values.size(); }
    Complex& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    const Complex& at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

// d same-shaped channels of one image patch.
struct FeatureMap {
    std::vector<Plane> channels;

    FeatureMap() = default;
    FeatureMap(int d, int h, int w);
    explicit FeatureMap(std::vector<Plane> ch);

    int channel_count() const noexcept { return static_cast<int>(channels.size()); }
    int height() const noexcept { return channels.empty() ? 0 : channels.front().height; }
    int width() const noexcept { return channels.empty() ? 0 : channels.front().width; }
    Plane& operator[](std::size_t l) { return channels[l]; }
    const Plane& operator[](std::size_t l) const { return channels[l]; }

    // Throws DimensionError unless d >= 1 and every channel shares the shape.
    void validate() const;
};

// Unnormalized forward 2-D DFT.
ComplexPlane dft2(const Plane& p);
ComplexPlane dft2(const ComplexPlane& p);

// Inverse 2-D DFT with 1/m normalization. The real-input overload of the
// result throws NumericalError when the imaginary residue is not negligible.
Plane idft2(const ComplexPlane& q);
ComplexPlane idft2_complex(const ComplexPlane& q);

// c(p) = sum_q a(p + q) b(q), indices taken modulo the plane shape.
Plane circ_correlate(const Plane& a, const Plane& b);

// Per-channel spectra of a feature map. When `wanted` is non-empty only the
// flagged channels are transformed; the others are left empty.
std::vector<ComplexPlane> dft2(const FeatureMap& f, std::span<const std::uint8_t> wanted = {});

// Circular shift so that out(r, c) = in(r - dy, c - dx).
Plane circshift(const Plane& p, int dy, int dx);

double sum_squares(const Plane& p);
double sum_squares(const ComplexPlane& q);

}  // namespace cdtrack
