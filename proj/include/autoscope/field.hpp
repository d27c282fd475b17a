#pragma once

#include <string>
#include <vector>

#include "autoscope/geometry.hpp"

namespace autoscope {

/// Regular-grid scalar map. Values are row-major, one per pixel; extent is
/// the physical size covered (nm per axis), pixel-center convention.
struct ScalarField2D {
    int width = 0;
    int height = 0;
    Vec2 extent{1.0, 1.0};
    std::vector<double> values;

    ScalarField2D() = default;
    ScalarField2D(int w, int h, Vec2 ext, double fill = 0.0);

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(Pixel p) { return at(p.x, p.y); }
    double at(Pixel p) const { return at(p.x, p.y); }

    GridGeom geom() const { return {width, height, Rect{0.0, 0.0, extent.x, extent.y}}; }
    std::size_t size() const { return values.size(); }

    /// Bilinear interpolation at a physical position; constant extrapolation
    /// outside the pixel-center hull.
    double sample(const Vec2& pos) const;

    double min_value() const;
    double max_value() const;

    void check_valid() const;  // throws std::invalid_argument on bad dims/extent
};

/// Extract b[x + s.x, y + s.y] = a[x, y] semantics: returns the integer-shift
/// cross-correlation offset is tested against this in scope::estimate_drift.
ScalarField2D shifted_crop(const ScalarField2D& src, int x0, int y0, int w, int h);

}  // namespace autoscope
