#include "spf/sensing.hpp"

#include "spf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace spf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDeg = M_PI / 180.0;

int whole_steps(double span_deg, double resolution_deg) {
    const double n = span_deg / resolution_deg;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0) return -1;
    return static_cast<int>(rounded);
}

const std::vector<Vec>& cached_directions(int dimension, double resolution_deg, SphereSampling sampling) {
    thread_local std::map<std::tuple<int, double, int>, std::vector<Vec>> cache;
    const auto key = std::make_tuple(dimension, resolution_deg, static_cast<int>(sampling));
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::vector<Vec> dirs = dimension == 2 ? ray_directions_2d(resolution_deg)
                                               : ray_directions_3d(resolution_deg, sampling);
        it = cache.emplace(key, std::move(dirs)).first;
    }
    return it->second;
}

bool ray_meets_sphere(const Vec& o, const Vec& dir, const Vec& c, double r, double max_range) {
    if (!std::isfinite(r)) return true;
    const Vec oc = c - o;
    const double along = oc.dot(dir);
    const double perp2 = oc.squaredNorm() - along * along;
    if (perp2 > r * r) return false;
    // Sphere entirely behind the origin or beyond range.
    if (along + r < 0.0) return false;
    if (along - r > max_range) return false;
    return true;
}

// planar: dirs are the uniform 2D lattice, so each obstacle only needs the
// rays inside the angular window of its bounding circle.
Scan run_scan(const World& world, const Vec& origin, const LidarConfig& config, const std::vector<Vec>& dirs,
              bool planar) {
    Scan scan;
    scan.origin = origin;
    scan.directions = dirs;
    scan.ranges.assign(dirs.size(), kInf);

    std::vector<double> best(dirs.size(), config.range);
    const int n = static_cast<int>(dirs.size());
    auto cast = [&](const Obstacle& o, const Vec& c, double r, int k) {
        if (!ray_meets_sphere(origin, dirs[k], c, r, best[k])) return;
        if (const auto t = o.raycast(origin, dirs[k], best[k])) {
            if (*t <= best[k]) {
                best[k] = *t;
                scan.ranges[k] = *t;
            }
        }
    };
    for (const Obstacle& o : world.obstacles()) {
        const auto [c, r] = o.bounding_sphere();
        const double dist = (c - origin).norm();
        if (std::isfinite(r) && dist - r > config.range) continue;
        if (planar && std::isfinite(r) && dist > r && n > 0) {
            const double step = 2.0 * M_PI / n;
            const double mid = std::atan2(c[1] - origin[1], c[0] - origin[0]);
            const double half = std::asin(r / dist);
            const int k0 = static_cast<int>(std::floor((mid - half) / step)) - 1;
            const int k1 = static_cast<int>(std::ceil((mid + half) / step)) + 1;
            for (int k = k0; k <= std::min(k1, k0 + n - 1); ++k) cast(o, c, r, ((k % n) + n) % n);
        } else {
            for (int k = 0; k < n; ++k) cast(o, c, r, k);
        }
    }
    return scan;
}

}  // namespace

void validate(const LidarConfig& config, int dimension) {
    if (!(config.range > 0.0)) throw Error(ErrorCode::InvalidArgument, "sensor range must be positive");
    if (!(config.resolution_deg > 0.0)) throw Error(ErrorCode::InvalidArgument, "sensor resolution must be positive");
    if (whole_steps(360.0, config.resolution_deg) < 0) {
        throw Error(ErrorCode::InvalidArgument, "sensor resolution must divide 360 degrees");
    }
    if (dimension == 3 && config.sampling == SphereSampling::Lattice && whole_steps(180.0, config.resolution_deg) < 0) {
        throw Error(ErrorCode::InvalidArgument, "sensor resolution must divide 180 degrees for the elevation lattice");
    }
}

std::vector<Vec> ray_directions_2d(double resolution_deg) {
    const int n = whole_steps(360.0, resolution_deg);
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "sensor resolution must divide 360 degrees");
    std::vector<Vec> dirs;
    dirs.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * k / n;
        dirs.push_back(vec2(std::cos(a), std::sin(a)));
    }
    return dirs;
}

std::vector<Vec> ray_directions_3d(double resolution_deg, SphereSampling sampling) {
    const int n_az = whole_steps(360.0, resolution_deg);
    const int n_el = whole_steps(180.0, resolution_deg);
    if (n_az < 0 || n_el < 0) throw Error(ErrorCode::InvalidArgument, "sensor resolution must divide 180 degrees");
    const std::size_t count = static_cast<std::size_t>(n_az) * (n_el - 1) + 2;
    std::vector<Vec> dirs;
    dirs.reserve(count);
    if (sampling == SphereSampling::Lattice) {
        dirs.push_back(vec3(0.0, 0.0, -1.0));
        for (int j = 1; j < n_el; ++j) {
            const double el = -M_PI / 2 + M_PI * j / n_el;
            for (int k = 0; k < n_az; ++k) {
                const double az = 2.0 * M_PI * k / n_az;
                dirs.push_back(vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)));
            }
        }
        dirs.push_back(vec3(0.0, 0.0, 1.0));
    } else {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * i;
            dirs.push_back(vec3(rho * std::cos(phi), rho * std::sin(phi), z));
        }
    }
    return dirs;
}

std::optional<double> raycast(const World& world, const Vec& origin, const Vec& direction, double max_range) {
    double best = max_range;
    bool hit = false;
    for (const Obstacle& o : world.obstacles()) {
        const auto [c, r] = o.bounding_sphere();
        if (!ray_meets_sphere(origin, direction, c, r, best)) continue;
        if (const auto t = o.raycast(origin, direction, best)) {
            if (*t <= best) {
                best = *t;
                hit = true;
            }
        }
    }
    if (!hit) return std::nullopt;
    return best;
}

Scan scan_2d(const World& world, const Vec& origin, const LidarConfig& config) {
    if (world.dimension() != 2) throw Error(ErrorCode::Unsupported, "planar scan requires a 2D world");
    return run_scan(world, origin, config, cached_directions(2, config.resolution_deg, SphereSampling::Lattice), true);
}

Scan scan_3d(const World& world, const Vec& origin, const LidarConfig& config) {
    if (world.dimension() != 3) throw Error(ErrorCode::Unsupported, "spherical scan requires a 3D world");
    return run_scan(world, origin, config, cached_directions(3, config.resolution_deg, config.sampling), false);
}

SensorReading extract_reading(const Scan& scan, const RobotParams& robot) {
    if (scan.ranges.empty()) throw Error(ErrorCode::InvalidArgument, "empty scan");
    std::size_t best = 0;
    for (std::size_t k = 1; k < scan.ranges.size(); ++k) {
        if (scan.ranges[k] < scan.ranges[best]) best = k;
    }
    SensorReading out;
    if (!std::isfinite(scan.ranges[best])) {
        out.normal = Vec::Zero(scan.origin.size());
        return out;
    }
    out.valid = true;
    out.margin = scan.ranges[best] - robot.clearance();
    out.normal = -scan.directions[best];
    return out;
}

SensorReading lidar_reading(const World& world, const Vec& x, const RobotParams& robot, const LidarConfig& config) {
    const int dim = world.dimension();
    const std::vector<Vec>& dirs = cached_directions(dim, config.resolution_deg, dim == 2 ? SphereSampling::Lattice
                                                                                         : config.sampling);
    const int n = static_cast<int>(dirs.size());

    struct Candidate {
        const Obstacle* obstacle;
        Vec center;
        double radius;
        double lower;
    };
    std::vector<Candidate> candidates;
    for (const Obstacle& o : world.obstacles()) {
        auto [c, r] = o.bounding_sphere();
        const double lower = std::isfinite(r) ? std::max(0.0, (c - x).norm() - r) : 0.0;
        if (lower > config.range) continue;
        candidates.push_back({&o, std::move(c), r, lower});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.lower < b.lower; });

    double best = config.range;
    int best_k = -1;
    auto cast = [&](const Candidate& c, int k) {
        if (!ray_meets_sphere(x, dirs[k], c.center, c.radius, best)) return;
        if (const auto t = c.obstacle->raycast(x, dirs[k], best)) {
            // Ties go to the lower ray index, as in extract_reading.
            if (*t < best || (*t == best && (best_k < 0 || k < best_k))) {
                best = *t;
                best_k = k;
            }
        }
    };
    for (const Candidate& c : candidates) {
        if (c.lower > best) break;
        const double dist = (c.center - x).norm();
        if (dim == 2 && std::isfinite(c.radius) && dist > c.radius) {
            const double step = 2.0 * M_PI / n;
            const double mid = std::atan2(c.center[1] - x[1], c.center[0] - x[0]);
            const double half = std::asin(c.radius / dist);
            // Sweep outward from the center ray so a short hit is found early.
            const int k_mid = static_cast<int>(std::lround(mid / step));
            const int span = static_cast<int>(std::ceil(half / step)) + 2;
            for (int j = 0; j <= std::min(span, n / 2); ++j) {
                cast(c, ((k_mid + j) % n + n) % n);
                if (j > 0 && 2 * j != n) cast(c, ((k_mid - j) % n + n) % n);
            }
        } else {
            for (int k = 0; k < n; ++k) cast(c, k);
        }
    }

    SensorReading out;
    if (best_k < 0) {
        out.normal = Vec::Zero(x.size());
        return out;
    }
    out.valid = true;
    out.margin = best - robot.clearance();
    out.normal = -dirs[best_k];
    return out;
}

SensorReading oracle_reading(const World& world, const Vec& x, const RobotParams& robot) {
    SensorReading out;
    if (world.empty()) {
        out.normal = Vec::Zero(x.size());
        return out;
    }
    const DistanceQuery q = distance_to_obstacles(world, x);
    out.margin = q.value - robot.clearance();
    out.normal = q.normal;
    out.valid = true;
    return out;
}

std::vector<SensorReading> oracle_readings(const World& world, const Vec& x, const RobotParams& robot) {
    std::vector<SensorReading> out;
    for (const DistanceQuery& q : distances_to_each(world, x)) {
        if (!(q.value > 0.0)) throw Error(ErrorCode::InsideObstacle, "point lies inside obstacle " + std::to_string(q.obstacle));
        out.push_back({q.value - robot.clearance(), q.normal, true});
    }
    return out;
}

SensorReading sense(const World& world, const Vec& x, const RobotParams& robot, const SensorConfig& config) {
    switch (config.mode) {
        case SensorMode::Oracle:
            return oracle_reading(world, x, robot);
        case SensorMode::Lidar2D:
            if (world.dimension() != 2) throw Error(ErrorCode::Unsupported, "planar scan requires a 2D world");
            return lidar_reading(world, x, robot, config.lidar);
        case SensorMode::Lidar3D:
            if (world.dimension() != 3) throw Error(ErrorCode::Unsupported, "spherical scan requires a 3D world");
            return lidar_reading(world, x, robot, config.lidar);
    }
    return {};
}

}  // namespace spf
