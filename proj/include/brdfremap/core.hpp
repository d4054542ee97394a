#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace brdfremap {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvPi = 1.0 / std::numbers::pi;

// Error hierarchy. The CLI maps each subclass onto an exit code and a
// machine-readable category string.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* category() const noexcept { return "error"; }
};

class DomainError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "domain"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "config"; }
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "dimension"; }
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    const char* category() const noexcept override { return "parse"; }
    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "io"; }
};

class NumericError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "numeric"; }
};

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }

struct Rgb {
    double r = 0, g = 0, b = 0;

    constexpr Rgb() = default;
    constexpr Rgb(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}
    constexpr explicit Rgb(double v) : r(v), g(v), b(v) {}

    constexpr double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }
    constexpr double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }

    constexpr Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    constexpr Rgb operator-(const Rgb& o) const { return {r - o.r, g - o.g, b - o.b}; }
    constexpr Rgb operator*(const Rgb& o) const { return {r * o.r, g * o.g, b * o.b}; }
    constexpr Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    constexpr Rgb operator/(double s) const { return {r / s, g / s, b / s}; }
    constexpr Rgb& operator+=(const Rgb& o) { r += o.r; g += o.g; b += o.b; return *this; }
    constexpr bool operator==(const Rgb&) const = default;

    constexpr double max_component() const { return std::max({r, g, b}); }
    constexpr double mean() const { return (r + g + b) / 3.0; }
    bool is_finite() const { return std::isfinite(r) && std::isfinite(g) && std::isfinite(b); }
};

constexpr Rgb operator*(double s, const Rgb& c) { return c * s; }

// Rec.709 luminance.
constexpr double luminance(const Rgb& c) { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

}  // namespace brdfremap
