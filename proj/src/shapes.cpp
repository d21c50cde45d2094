#include "simto/shapes.hpp"

#include <cmath>

namespace simto::shapes {

namespace {
constexpr double kTau = 2.0 * M_PI;
}

std::vector<Eigen::Vector2d> circle(double radius, int segments) {
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(segments);
    for (int i = 0; i < segments; ++i) {
        const double a = kTau * i / segments;
        poly.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return poly;
}

std::vector<Eigen::Vector2d> circle_with_bumps(double radius, double bump_amplitude,
                                               int bump_count, int segments) {
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(segments);
    for (int i = 0; i < segments; ++i) {
        const double a = kTau * i / segments;
        const double r = radius + bump_amplitude * std::sin(bump_count * a);
        poly.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return poly;
}

std::vector<Eigen::Vector2d> star(int points, double outer_radius, double inner_radius) {
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(2 * points);
    for (int i = 0; i < 2 * points; ++i) {
        const double a = kTau * i / (2 * points) + M_PI / 2.0;  // one point straight up
        const double r = (i % 2 == 0) ? outer_radius : inner_radius;
        poly.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return poly;
}

std::vector<Eigen::Vector2d> gear(int teeth, double root_radius, double tip_radius,
                                  int segments_per_tooth) {
    // trapezoidal teeth: root | flank | tip | flank
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(teeth * segments_per_tooth);
    const int per = segments_per_tooth;
    for (int t = 0; t < teeth; ++t) {
        for (int s = 0; s < per; ++s) {
            const double frac = static_cast<double>(s) / per;
            double r;
            if (frac < 0.25)
                r = root_radius;
            else if (frac < 0.40)
                r = root_radius + (tip_radius - root_radius) * (frac - 0.25) / 0.15;
            else if (frac < 0.70)
                r = tip_radius;
            else if (frac < 0.85)
                r = tip_radius - (tip_radius - root_radius) * (frac - 0.70) / 0.15;
            else
                r = root_radius;
            const double a = kTau * (t + frac) / teeth;
            poly.emplace_back(r * std::cos(a), r * std::sin(a));
        }
    }
    return poly;
}

std::vector<Eigen::Vector2d> hourglass(double width, double height, double waist) {
    // smooth cosine-pinched profile, widest at top and bottom
    std::vector<Eigen::Vector2d> poly;
    const int n = 48;
    const double hw = width / 2.0, hh = height / 2.0, ww = waist / 2.0;
    auto half_width = [&](double y) {
        const double s = std::cos(M_PI * y / height);  // 1 at mid, -1 at ends
        return ww + (hw - ww) * 0.5 * (1.0 - s);
    };
    for (int i = 0; i <= n; ++i) {  // right side, bottom to top
        const double y = -hh + height * i / n;
        poly.emplace_back(half_width(y), y);
    }
    for (int i = 0; i <= n; ++i) {  // left side, top to bottom
        const double y = hh - height * i / n;
        poly.emplace_back(-half_width(y), y);
    }
    return poly;
}

std::vector<Eigen::Vector2d> spiked_disc(double radius, double spike_length, int spike_count,
                                         double spike_base_fraction) {
    std::vector<Eigen::Vector2d> poly;
    const int per = 12;
    for (int t = 0; t < spike_count; ++t) {
        for (int s = 0; s < per; ++s) {
            const double frac = static_cast<double>(s) / per;
            double r = radius;
            const double half = spike_base_fraction / 2.0;
            if (frac > 0.5 - half && frac < 0.5 + half) {
                const double u = 1.0 - std::abs(frac - 0.5) / half;  // 0 at base, 1 at tip
                r = radius + spike_length * u;
            }
            const double a = kTau * (t + frac) / spike_count;
            poly.emplace_back(r * std::cos(a), r * std::sin(a));
        }
    }
    return poly;
}

}  // namespace simto::shapes
