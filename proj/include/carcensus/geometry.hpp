#pragma once

#include <algorithm>
#include <cmath>

namespace carcensus {

// Axis-aligned box in pixel coordinates, stored center + size.
struct BBox {
    double x_center = 0.0;
    double y_center = 0.0;
    double width = 0.0;
    double height = 0.0;

    double area() const { return width * height; }
    double left() const { return x_center - width / 2.0; }
    double right() const { return x_center + width / 2.0; }
    double top() const { return y_center - height / 2.0; }
    double bottom() const { return y_center + height / 2.0; }

    bool valid() const {
        return width > 0.0 && height > 0.0 && std::isfinite(x_center) &&
               std::isfinite(y_center) && std::isfinite(width) && std::isfinite(height);
    }
};

inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
    const double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
    const double inter = ix * iy;
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

// Clamps a box so it lies inside [0,width]x[0,height], shrinking if needed.
inline BBox clamp_to_image(const BBox& b, double width, double height) {
    double l = std::clamp(b.left(), 0.0, width);
    double r = std::clamp(b.right(), 0.0, width);
    double t = std::clamp(b.top(), 0.0, height);
    double bo = std::clamp(b.bottom(), 0.0, height);
    BBox out;
    out.width = std::max(r - l, 1e-6);
    out.height = std::max(bo - t, 1e-6);
    out.x_center = (l + r) / 2.0;
    out.y_center = (t + bo) / 2.0;
    return out;
}

}  // namespace carcensus
