#include "glrp/two_moons.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "glrp/errors.hpp"

namespace glrp {

PointCloud make_two_moons(int n_points, double noise, std::uint64_t seed) {
    if (n_points <= 0 || n_points % 2 != 0)
        throw ArgumentError("n_points must be a positive even number, got " + std::to_string(n_points));
    if (noise < 0.0) throw ArgumentError("noise must be >= 0");

    const int half = n_points / 2;
    PointCloud cloud;
    cloud.points.resize(n_points, 2);
    cloud.labels.resize(n_points);

    auto arc_t = [half](int i) {
        return half == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
    };
    const double r = kTwoMoonsRadius;
    for (int i = 0; i < half; ++i) {
        double t = arc_t(i);
        cloud.points(i, 0) = r * std::cos(t);
        cloud.points(i, 1) = r * std::sin(t);
        cloud.labels(i) = 1.0;
    }
    for (int i = 0; i < half; ++i) {
        double t = arc_t(i);
        cloud.points(half + i, 0) = kTwoMoonsOffsetX + r * std::cos(t);
        cloud.points(half + i, 1) = kTwoMoonsOffsetY - r * std::sin(t);
        cloud.labels(half + i) = -1.0;
    }
    if (noise > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, noise);
        for (int i = 0; i < n_points; ++i) {
            cloud.points(i, 0) += gauss(rng);
            cloud.points(i, 1) += gauss(rng);
        }
    }
    return cloud;
}

void write_two_moons_csv(const PointCloud& cloud, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.precision(17);
    out << "x,y,label\n";
    for (Eigen::Index i = 0; i < cloud.points.rows(); ++i)
        out << cloud.points(i, 0) << ',' << cloud.points(i, 1) << ',' << static_cast<int>(cloud.labels(i)) << '\n';
    if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace glrp
