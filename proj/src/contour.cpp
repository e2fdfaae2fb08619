#include "spf/contour.hpp"

#include "spf/error.hpp"

#include <array>
#include <limits>

namespace spf {

std::vector<Polyline> marching_squares(const std::vector<double>& values, int nx, int ny, const Eigen::Vector2d& lo,
                                       const Eigen::Vector2d& hi, double level) {
    if (nx < 2 || ny < 2) throw Error(ErrorCode::InvalidArgument, "contour grid needs at least 2x2 samples");
    if (values.size() != static_cast<std::size_t>(nx) * ny) {
        throw Error(ErrorCode::InvalidArgument, "contour grid size does not match the sample count");
    }
    auto at = [&](int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; };
    auto node = [&](int i, int j) {
        return Eigen::Vector2d(lo.x() + (hi.x() - lo.x()) * i / (nx - 1), lo.y() + (hi.y() - lo.y()) * j / (ny - 1));
    };

    // Edge ids: horizontal edges first, then vertical ones.
    const int n_horizontal = (nx - 1) * ny;
    auto h_edge = [&](int i, int j) { return j * (nx - 1) + i; };
    auto v_edge = [&](int i, int j) { return n_horizontal + j * nx + i; };
    const int n_edges = n_horizontal + nx * (ny - 1);

    auto crossing = [&](int edge) {
        int i0, j0, i1, j1;
        if (edge < n_horizontal) {
            j0 = j1 = edge / (nx - 1);
            i0 = edge % (nx - 1);
            i1 = i0 + 1;
        } else {
            const int e = edge - n_horizontal;
            i0 = i1 = e % nx;
            j0 = e / nx;
            j1 = j0 + 1;
        }
        const double a = at(i0, j0);
        const double b = at(i1, j1);
        const double t = a == b ? 0.5 : (level - a) / (b - a);
        return Eigen::Vector2d(node(i0, j0) + t * (node(i1, j1) - node(i0, j0)));
    };

    // Each edge joins at most two segments.
    std::vector<std::array<int, 2>> links(n_edges, {-1, -1});
    std::vector<std::array<int, 2>> segments;
    auto add = [&](int e0, int e1) {
        const int s = static_cast<int>(segments.size());
        segments.push_back({e0, e1});
        for (int e : {e0, e1}) links[e][links[e][0] < 0 ? 0 : 1] = s;
    };

    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const double v0 = at(i, j), v1 = at(i + 1, j), v2 = at(i + 1, j + 1), v3 = at(i, j + 1);
            const int mask = (v0 >= level) | (v1 >= level) << 1 | (v2 >= level) << 2 | (v3 >= level) << 3;
            const int bottom = h_edge(i, j), right = v_edge(i + 1, j), top = h_edge(i, j + 1), left = v_edge(i, j);
            switch (mask) {
                case 0: case 15: break;
                case 1: case 14: add(left, bottom); break;
                case 2: case 13: add(bottom, right); break;
                case 3: case 12: add(left, right); break;
                case 4: case 11: add(right, top); break;
                case 6: case 9: add(bottom, top); break;
                case 7: case 8: add(left, top); break;
                case 5: case 10: {
                    const bool center_above = 0.25 * (v0 + v1 + v2 + v3) >= level;
                    // Corners 0 and 2 share a side for mask 5.
                    if ((mask == 5) == center_above) {
                        add(left, top);
                        add(bottom, right);
                    } else {
                        add(left, bottom);
                        add(right, top);
                    }
                    break;
                }
            }
        }
    }

    std::vector<Polyline> out;
    std::vector<bool> used(segments.size(), false);
    auto other_segment = [&](int edge, int seg) { return links[edge][0] == seg ? links[edge][1] : links[edge][0]; };
    auto other_edge = [&](int seg, int edge) { return segments[seg][0] == edge ? segments[seg][1] : segments[seg][0]; };

    // Open chains start at edges used once (grid border), then closed loops.
    for (int pass = 0; pass < 2; ++pass) {
        for (int s0 = 0; s0 < static_cast<int>(segments.size()); ++s0) {
            if (used[s0]) continue;
            int start_edge = -1;
            if (pass == 0) {
                for (int e : segments[s0]) {
                    if (links[e][1] < 0) start_edge = e;
                }
                if (start_edge < 0) continue;
            } else {
                start_edge = segments[s0][0];
            }
            Polyline line;
            line.points.push_back(crossing(start_edge));
            int seg = s0;
            int edge = start_edge;
            while (true) {
                used[seg] = true;
                edge = other_edge(seg, edge);
                if (pass == 1 && edge == start_edge) {
                    line.closed = true;
                    break;
                }
                line.points.push_back(crossing(edge));
                const int next = other_segment(edge, seg);
                if (next < 0 || used[next]) break;
                seg = next;
            }
            out.push_back(std::move(line));
        }
    }
    return out;
}

std::vector<double> sample_margin(const World& world, const RobotParams& robot, int nx, int ny,
                                  const Eigen::Vector2d& lo, const Eigen::Vector2d& hi) {
    if (world.dimension() != 2) throw Error(ErrorCode::Unsupported, "margin contours require a 2D world");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec x = vec2(lo.x() + (hi.x() - lo.x()) * i / (nx - 1), lo.y() + (hi.y() - lo.y()) * j / (ny - 1));
            double d = std::numeric_limits<double>::infinity();
            for (const Obstacle& o : world.obstacles()) d = std::min(d, o.distance(x).distance);
            values.push_back(d - robot.clearance());
        }
    }
    return values;
}

}  // namespace spf
