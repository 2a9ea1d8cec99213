#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>

namespace glrp {

/// 2-D point cloud with +/-1 class labels.
struct PointCloud {
    Eigen::MatrixX2d points;
    Eigen::VectorXd labels;  // +1 for the first half, -1 for the second
};

// Geometry of the in-repo two-moons generator. Arcs of radius kTwoMoonsRadius:
// the upper arc is (r cos t, r sin t), t in [0, pi]; the lower arc is the
// downward semicircle displaced by (kTwoMoonsOffsetX, kTwoMoonsOffsetY).
inline constexpr double kTwoMoonsRadius = 0.3;
inline constexpr double kTwoMoonsOffsetX = 0.5 * kTwoMoonsRadius;
inline constexpr double kTwoMoonsOffsetY = -0.25 * kTwoMoonsRadius;
inline constexpr double kTwoMoonsDefaultNoise = 0.015;

// First n/2 points evenly spaced along the upper arc (labeled +1), last n/2
// along the lower arc (labeled -1), plus isotropic Gaussian jitter of standard
// deviation `noise`. Deterministic for a fixed seed; noise 0 lies exactly on
// the arcs. n_points must be even.
PointCloud make_two_moons(int n_points, double noise, std::uint64_t seed);

// CSV with header x,y,label.
void write_two_moons_csv(const PointCloud& cloud, const std::filesystem::path& file);

}  // namespace glrp
