#include "autoscope/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace autoscope {

ScalarField2D::ScalarField2D(int w, int h, Vec2 ext, double fill)
    : width(w), height(h), extent(ext), values(static_cast<std::size_t>(w) * h, fill) {
    check_valid();
}

void ScalarField2D::check_valid() const {
    if (width < 1 || height < 1)
        throw std::invalid_argument("ScalarField2D: width and height must be >= 1");
    if (!(extent.x > 0.0) || !(extent.y > 0.0))
        throw std::invalid_argument("ScalarField2D: extent components must be > 0");
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("ScalarField2D: values.length != width*height");
}

double ScalarField2D::sample(const Vec2& pos) const {
    const double dx = extent.x / width;
    const double dy = extent.y / height;
    // continuous pixel coordinate of the query, clamped to the center hull
    double u = pos.x / dx - 0.5;
    double v = pos.y / dy - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(width - 1));
    v = std::clamp(v, 0.0, static_cast<double>(height - 1));
    const int i0 = std::min(static_cast<int>(std::floor(u)), width - 2 >= 0 ? width - 2 : 0);
    const int j0 = std::min(static_cast<int>(std::floor(v)), height - 2 >= 0 ? height - 2 : 0);
    const int i1 = std::min(i0 + 1, width - 1);
    const int j1 = std::min(j0 + 1, height - 1);
    const double fu = u - i0;
    const double fv = v - j0;
    const double a = at(i0, j0) * (1.0 - fu) + at(i1, j0) * fu;
    const double b = at(i0, j1) * (1.0 - fu) + at(i1, j1) * fu;
    return a * (1.0 - fv) + b * fv;
}

double ScalarField2D::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

double ScalarField2D::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

ScalarField2D shifted_crop(const ScalarField2D& src, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || x0 + w > src.width || y0 + h > src.height)
        throw std::invalid_argument("shifted_crop: window outside source field");
    ScalarField2D out(w, h, {src.extent.x * w / src.width, src.extent.y * h / src.height});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = src.at(x0 + x, y0 + y);
    return out;
}

}  // namespace autoscope
