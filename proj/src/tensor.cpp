#include "cdtrack/tensor.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "cdtrack/errors.hpp"

namespace cdtrack {

Plane::Plane(int h, int w, double fill)
    : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) {
        throw DimensionError("plane dimensions must be positive");
    }
}

ComplexPlane::ComplexPlane(int h, int w, Complex fill)
    : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) {
        throw DimensionError("plane dimensions must be positive");
    }
}

FeatureMap::FeatureMap(int d, int h, int w) {
    channels.reserve(d);
    for (int l = 0; l < d; ++l) channels.emplace_back(h, w);
}

FeatureMap::FeatureMap(std::vector<Plane> ch) : channels(std::move(ch)) {}

void FeatureMap::validate() const {
    if (channels.empty()) throw DimensionError("feature map has no channels");
    for (const auto& c : channels) {
        if (!c.same_shape(channels.front()) || c.size() == 0) {
            throw DimensionError("feature channels differ in shape");
        }
    }
}

namespace {

// FFTW planning is not thread safe; executing an existing plan on new
// arrays is. Plans are created once per (height, width, direction).
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<Complex> in(static_cast<std::size_t>(h) * w), out(in.size());
        fftw_plan plan = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(in.data()),
                                          reinterpret_cast<fftw_complex*>(out.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void check_dims(int h, int w) {
    if (h <= 0 || w <= 0) throw DimensionError("zero-sized plane");
}

void check_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NumericalError("non-finite value in plane");
    }
}

void transform(int h, int w, int sign, std::vector<Complex>& in, std::vector<Complex>& out) {
    fftw_plan plan = PlanCache::instance().get(h, w, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

ComplexPlane dft2(const Plane& p) {
    check_dims(p.height, p.width);
    check_finite(p.values);
    std::vector<Complex> in(p.values.begin(), p.values.end());
    ComplexPlane out(p.height, p.width);
    transform(p.height, p.width, FFTW_FORWARD, in, out.values);
    return out;
}

ComplexPlane dft2(const ComplexPlane& p) {
    check_dims(p.height, p.width);
    std::vector<Complex> in = p.values;
    ComplexPlane out(p.height, p.width);
    transform(p.height, p.width, FFTW_FORWARD, in, out.values);
    return out;
}

ComplexPlane idft2_complex(const ComplexPlane& q) {
    check_dims(q.height, q.width);
    std::vector<Complex> in = q.values;
    ComplexPlane out(q.height, q.width);
    transform(q.height, q.width, FFTW_BACKWARD, in, out.values);
    const double scale = 1.0 / static_cast<double>(out.size());
    for (auto& v : out.values) v *= scale;
    return out;
}

Plane idft2(const ComplexPlane& q) {
    ComplexPlane z = idft2_complex(q);
    double max_re = 0.0;
    double max_im = 0.0;
    for (const auto& v : z.values) {
        max_re = std::max(max_re, std::abs(v.real()));
        max_im = std::max(max_im, std::abs(v.imag()));
    }
    // Residue bound is absolute for unit-scale data and relative above it.
    if (!(max_im < 1e-8 * std::max(1.0, max_re))) {
        throw NumericalError("inverse DFT has imaginary residue " + std::to_string(max_im));
    }
    Plane out(q.height, q.width);
    for (std::size_t k = 0; k < z.size(); ++k) out.values[k] = z.values[k].real();
    return out;
}

Plane circ_correlate(const Plane& a, const Plane& b) {
    if (!a.same_shape(b)) throw DimensionError("circ_correlate: mismatched dimensions");
    ComplexPlane fa = dft2(a);
    const ComplexPlane fb = dft2(b);
    for (std::size_t k = 0; k < fa.size(); ++k) fa.values[k] *= std::conj(fb.values[k]);
    return idft2(fa);
}

std::vector<ComplexPlane> dft2(const FeatureMap& f, std::span<const std::uint8_t> wanted) {
    f.validate();
    if (!wanted.empty() && wanted.size() != f.channels.size()) {
        throw DimensionError("channel mask length differs from channel count");
    }
    std::vector<ComplexPlane> out(f.channels.size());
    for (std::size_t l = 0; l < f.channels.size(); ++l) {
        if (wanted.empty() || wanted[l]) out[l] = dft2(f.channels[l]);
    }
    return out;
}

Plane circshift(const Plane& p, int dy, int dx) {
    Plane out(p.height, p.width);
    for (int r = 0; r < p.height; ++r) {
        const int sr = ((r - dy) % p.height + p.height) % p.height;
        for (int c = 0; c < p.width; ++c) {
            const int sc = ((c - dx) % p.width + p.width) % p.width;
            out.at(r, c) = p.at(sr, sc);
        }
    }
    return out;
}

double sum_squares(const Plane& p) {
    double s = 0.0;
    for (double v : p.values) s += v * v;
    return s;
}

double sum_squares(const ComplexPlane& q) {
    double s = 0.0;
    for (const auto& v : q.values) s += std::norm(v);
    return s;
}

}  // namespace cdtrack
