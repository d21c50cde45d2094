#pragma once

#include <Eigen/Core>
#include <vector>

namespace simto {

// Parametric 2D outlines of the feature-rich test objects, counter-clockwise,
// dimensions in mm, centered at the origin.
namespace shapes {

std::vector<Eigen::Vector2d> circle(double radius, int segments = 96);
std::vector<Eigen::Vector2d> circle_with_bumps(double radius, double bump_amplitude,
                                               int bump_count, int segments = 192);
std::vector<Eigen::Vector2d> star(int points, double outer_radius, double inner_radius);
std::vector<Eigen::Vector2d> gear(int teeth, double root_radius, double tip_radius,
                                  int segments_per_tooth = 8);
std::vector<Eigen::Vector2d> hourglass(double width, double height, double waist);
std::vector<Eigen::Vector2d> spiked_disc(double radius, double spike_length, int spike_count,
                                         double spike_base_fraction = 0.35);

}  // namespace shapes
}  // namespace simto
