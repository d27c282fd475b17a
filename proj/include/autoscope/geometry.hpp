#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace autoscope {

/// 2D point/vector in physical coordinates (nm unless stated otherwise).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    double dist(const Vec2& o) const { return (*this - o).norm(); }
};

/// Integer pixel coordinate; x is the column, y the row.
struct Pixel {
    int x = 0;
    int y = 0;

    bool operator==(const Pixel& o) const { return x == o.x && y == o.y; }
    // Lexicographic by (row, col); matches tie-break rules throughout.
    auto operator<=>(const Pixel& o) const {
        if (auto c = y <=> o.y; c != 0) return c;
        return x <=> o.x;
    }
    double dist(const Pixel& o) const {
        const double dx = x - o.x, dy = y - o.y;
        return std::sqrt(dx * dx + dy * dy);
    }
};

/// Axis-aligned rectangle, origin at (x0, y0), physical units.
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double width = 0.0;
    double height = 0.0;

    double x1() const { return x0 + width; }
    double y1() const { return y0 + height; }
    Vec2 center() const { return {x0 + 0.5 * width, y0 + 0.5 * height}; }
    bool contains(const Vec2& p) const {
        return p.x >= x0 && p.x <= x1() && p.y >= y0 && p.y <= y1();
    }
    bool degenerate() const { return !(width > 0.0) || !(height > 0.0); }
};

/// Maps a w×h pixel grid onto a physical rectangle, pixel-center convention:
/// pixel (i, j) sits at (x0 + (i+0.5)dx, y0 + (j+0.5)dy).
struct GridGeom {
    int width = 0;
    int height = 0;
    Rect rect;

    double dx() const { return rect.width / width; }
    double dy() const { return rect.height / height; }
    Vec2 center_of(Pixel p) const {
        return {rect.x0 + (p.x + 0.5) * dx(), rect.y0 + (p.y + 0.5) * dy()};
    }
    /// Nearest pixel to a physical position, clamped to the grid.
    Pixel nearest(const Vec2& pos) const {
        auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
        int i = static_cast<int>(std::floor((pos.x - rect.x0) / dx()));
        int j = static_cast<int>(std::floor((pos.y - rect.y0) / dy()));
        return {clampi(i, 0, width - 1), clampi(j, 0, height - 1)};
    }
    int index(Pixel p) const { return p.y * width + p.x; }
    Pixel pixel(int idx) const { return {idx % width, idx / width}; }
    int size() const { return width * height; }
};

}  // namespace autoscope
