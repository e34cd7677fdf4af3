#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace accflow {

/// 2D motion vector, u horizontal (x, rightward), v vertical (y, downward).
struct Vec2f {
    float u = 0.0f;
    float v = 0.0f;

    friend Vec2f operator+(Vec2f a, Vec2f b) { return {a.u + b.u, a.v + b.v}; }
    friend Vec2f operator-(Vec2f a, Vec2f b) { return {a.u - b.u, a.v - b.v}; }
    friend Vec2f operator*(float s, Vec2f a) { return {s * a.u, s * a.v}; }
    friend Vec2f operator-(Vec2f a) { return {-a.u, -a.v}; }
    friend bool operator==(Vec2f a, Vec2f b) { return a.u == b.u && a.v == b.v; }

    double norm() const { return std::hypot(double(u), double(v)); }
    double squared_norm() const { return double(u) * u + double(v) * v; }
    bool finite() const { return std::isfinite(u) && std::isfinite(v); }
};

/// Grid position, origin top-left, x rightward, y downward. May be sub-pixel.
struct PixelCoord {
    float x = 0.0f;
    float y = 0.0f;

    friend PixelCoord operator+(PixelCoord p, Vec2f d) { return {p.x + d.u, p.y + d.v}; }
};

/// Dense 2-channel motion field. Vectors are in pixels over the field's
/// frame interval, stored row-major as interleaved (u, v) float32.
class FlowField {
public:
    FlowField() = default;

    FlowField(int width, int height) : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("FlowField: dimensions must be positive");
        data_.assign(std::size_t(width) * height * 2, 0.0f);
    }

    static FlowField constant(int width, int height, Vec2f value) {
        FlowField f(width, height);
        for (std::size_t i = 0; i < f.data_.size(); i += 2) {
            f.data_[i] = value.u;
            f.data_[i + 1] = value.v;
        }
        return f;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::int64_t pixel_count() const { return std::int64_t(width_) * height_; }

    Vec2f at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {data_[i], data_[i + 1]};
    }
    void set(int x, int y, Vec2f value) {
        const std::size_t i = index(x, y);
        data_[i] = value.u;
        data_[i + 1] = value.v;
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    bool same_size(const FlowField& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool all_finite() const {
        for (float c : data_)
            if (!std::isfinite(c)) return false;
        return true;
    }

    friend bool operator==(const FlowField& a, const FlowField& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    std::size_t index(int x, int y) const { return (std::size_t(y) * width_ + x) * 2; }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> data_;
};

/// Per-pixel binary mask; 1 means occluded, 0 means visible.
class OcclusionMask {
public:
    OcclusionMask() = default;

    OcclusionMask(int width, int height) : width_(width), height_(height) {
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("OcclusionMask: dimensions must be positive");
        data_.assign(std::size_t(width) * height, 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    std::int64_t pixel_count() const { return std::int64_t(width_) * height_; }

    std::uint8_t at(int x, int y) const { return data_[std::size_t(y) * width_ + x]; }
    void set(int x, int y, bool occluded) {
        data_[std::size_t(y) * width_ + x] = occluded ? 1 : 0;
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    std::int64_t occluded_count() const {
        std::int64_t n = 0;
        for (std::uint8_t m : data_) n += m;
        return n;
    }

    bool same_size(const OcclusionMask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool matches(const FlowField& field) const {
        return width_ == field.width() && height_ == field.height();
    }

    friend bool operator==(const OcclusionMask& a, const OcclusionMask& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Interleaved 8-bit image, 1 channel (gray) or 3 channels (RGB), row-major.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int w, int h, int c) : width(w), height(h), channels(c) {
        if (w <= 0 || h <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("ImageU8: bad dimensions or channel count");
        data.assign(std::size_t(w) * h * c, 0);
    }

    std::uint8_t& at(int x, int y, int c) {
        return data[(std::size_t(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(std::size_t(y) * width + x) * channels + c];
    }

    friend bool operator==(const ImageU8& a, const ImageU8& b) {
        return a.width == b.width && a.height == b.height && a.channels == b.channels &&
               a.data == b.data;
    }
};

/// Ordered local flows of an N-frame sequence. Frame indices are 1-based
/// throughout the API: local(t) is the flow from frame t to frame t+1.
/// Internally slot t-1 of the vector stores F_{t,t+1}.
class FlowSequence {
public:
    FlowSequence(std::vector<FlowField> forward_locals,
                 std::vector<FlowField> backward_locals = {})
        : fwd_(std::move(forward_locals)), bwd_(std::move(backward_locals)) {
        if (fwd_.empty())
            throw std::invalid_argument("FlowSequence: needs at least one local flow");
        if (!bwd_.empty() && bwd_.size() != fwd_.size())
            throw std::invalid_argument(
                "FlowSequence: backward local count must match forward local count");
        for (const FlowField& f : fwd_)
            if (!f.same_size(fwd_.front()))
                throw std::invalid_argument("FlowSequence: mismatched field dimensions");
        for (const FlowField& f : bwd_)
            if (!f.same_size(fwd_.front()))
                throw std::invalid_argument("FlowSequence: mismatched field dimensions");
    }

    /// Number of frames N (one more than the number of local flows).
    int length() const { return int(fwd_.size()) + 1; }
    int width() const { return fwd_.front().width(); }
    int height() const { return fwd_.front().height(); }

    /// F_{t,t+1}, t in [1, N-1].
    const FlowField& local(int t) const {
        check_step(t);
        return fwd_[std::size_t(t) - 1];
    }

    bool has_backward() const { return !bwd_.empty(); }

    /// F_{t+1,t}, t in [1, N-1].
    const FlowField& local_backward(int t) const {
        check_step(t);
        if (bwd_.empty())
            throw std::logic_error("FlowSequence: no backward local flows attached");
        return bwd_[std::size_t(t) - 1];
    }

private:
    void check_step(int t) const {
        if (t < 1 || t > int(fwd_.size()))
            throw std::out_of_range("FlowSequence: step index out of range");
    }

    std::vector<FlowField> fwd_;
    std::vector<FlowField> bwd_;
};

}  // namespace accflow
