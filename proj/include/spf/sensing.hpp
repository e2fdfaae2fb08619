#pragma once

#include "spf/geometry.hpp"
#include "spf/types.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace spf {

/// Range/bearing inputs consumed by the filter.
struct SensorReading {
    double margin = std::numeric_limits<double>::infinity();
    Vec normal;
    bool valid = false;
};

enum class SensorMode { Oracle, Lidar2D, Lidar3D };

/// Ray layout for the spherical sensor.
enum class SphereSampling { Lattice, Fibonacci };

struct LidarConfig {
    double range = 3.0;
    double resolution_deg = 1.0;
    SphereSampling sampling = SphereSampling::Lattice;
};

struct SensorConfig {
    SensorMode mode = SensorMode::Oracle;
    LidarConfig lidar;
};

void validate(const LidarConfig& config, int dimension);

struct Scan {
    Vec origin;
    std::vector<Vec> directions;
    std::vector<double> ranges;  // +inf when the ray hits nothing within range
};

/// Nearest boundary hit along origin + t * direction, t in (0, max_range].
std::optional<double> raycast(const World& world, const Vec& origin, const Vec& direction, double max_range);

/// Planar scan at azimuths 0, step, ..., 360 - step degrees.
Scan scan_2d(const World& world, const Vec& origin, const LidarConfig& config);

/// Spherical scan. Lattice: azimuth x elevation grid with elevation in
/// [-90, 90] and each pole emitted once. Fibonacci: the same ray count spread
/// along a golden-angle spiral.
Scan scan_3d(const World& world, const Vec& origin, const LidarConfig& config);

/// Unit ray directions used by the scans.
std::vector<Vec> ray_directions_2d(double resolution_deg);
std::vector<Vec> ray_directions_3d(double resolution_deg, SphereSampling sampling);

/// Margin and normal from the shortest ray; invalid when nothing was hit.
SensorReading extract_reading(const Scan& scan, const RobotParams& robot);

/// Same result as extract_reading(scan_2d / scan_3d) without computing the
/// full scan: rays are cast with the range capped at the best hit so far.
SensorReading lidar_reading(const World& world, const Vec& x, const RobotParams& robot, const LidarConfig& config);

/// Exact-geometry reading; invalid for an empty world.
SensorReading oracle_reading(const World& world, const Vec& x, const RobotParams& robot);

/// One exact reading per obstacle, in obstacle order.
std::vector<SensorReading> oracle_readings(const World& world, const Vec& x, const RobotParams& robot);

/// Reading for the configured sensing mode.
SensorReading sense(const World& world, const Vec& x, const RobotParams& robot, const SensorConfig& config);

}  // namespace spf
