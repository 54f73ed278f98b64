// Shared value types: small vectors, 2D grids, and the error hierarchy.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cephforge {

/// Raised when an input violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for filesystem and format failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    double determinant() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
    static Mat3 identity() { return {}; }
};

/// Dense 2D raster. `u` indexes columns (detector Y), `v` indexes rows (detector Z);
/// storage is u-fastest.
template <typename T>
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t nu, std::size_t nv, T fill = T{}) : nu_(nu), nv_(nv), data_(nu * nv, fill) {}
    Grid2(std::size_t nu, std::size_t nv, std::vector<T> data) : nu_(nu), nv_(nv), data_(std::move(data)) {
        if (data_.size() != nu_ * nv_) throw ValidationError("Grid2: payload size does not match dims");
    }

    std::size_t nu() const { return nu_; }
    std::size_t nv() const { return nv_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t u, std::size_t v) { return data_[v * nu_ + u]; }
    const T& operator()(std::size_t u, std::size_t v) const { return data_[v * nu_ + u]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool same_shape(const Grid2& o) const { return nu_ == o.nu_ && nv_ == o.nv_; }

    friend bool operator==(const Grid2&, const Grid2&) = default;

private:
    std::size_t nu_ = 0;
    std::size_t nv_ = 0;
    std::vector<T> data_;
};

using Gray8 = Grid2<std::uint8_t>;
using ImageF = Grid2<double>;

/// Round half away from zero and clamp into [0, 255].
inline std::uint8_t to_u8(double value) {
    const double r = std::round(value);
    if (!(r > 0.0)) return 0;
    if (r >= 255.0) return 255;
    return static_cast<std::uint8_t>(r);
}

template <typename T>
ImageF to_double(const Grid2<T>& g) {
    ImageF out(g.nu(), g.nv());
    for (std::size_t i = 0; i < g.size(); ++i) out.values()[i] = static_cast<double>(g.values()[i]);
    return out;
}

inline Gray8 to_gray8(const ImageF& g) {
    Gray8 out(g.nu(), g.nv());
    for (std::size_t i = 0; i < g.size(); ++i) out.values()[i] = to_u8(g.values()[i]);
    return out;
}

}  // namespace cephforge
