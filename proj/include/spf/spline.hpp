#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace spf {

/// Closed C2 cubic curve interpolating a cyclic list of points, parametrized
/// by cumulative chord length.
///
/// Nearest-point queries use a dense sampling of the curve (bucketed into
/// chunks with exact bounding boxes so that far chunks are skipped) followed
/// by safeguarded Newton refinement of the squared distance.
class ClosedSpline {
public:
    struct Piece {
        double t0 = 0.0;  // global parameter at the start of the piece
        double h = 0.0;   // parameter length
        // S(u) = a + b u + c u^2 + d u^3, u in [0, h]
        Eigen::Vector2d a, b, c, d;
        Eigen::AlignedBox2d box;
    };

    struct Foot {
        double t = 0.0;
        Eigen::Vector2d point;
        double distance = 0.0;
    };

    explicit ClosedSpline(std::vector<Eigen::Vector2d> points, int samples = 2048);

    double period() const { return period_; }
    const std::vector<Piece>& pieces() const { return pieces_; }
    const std::vector<Eigen::Vector2d>& control_points() const { return points_; }
    const Eigen::AlignedBox2d& bounds() const { return bounds_; }

    /// +1 for counter-clockwise traversal, -1 for clockwise.
    double orientation() const { return orientation_; }

    Eigen::Vector2d point(double t) const;
    Eigen::Vector2d derivative(double t) const;
    Eigen::Vector2d second_derivative(double t) const;

    /// Unit normal pointing out of the enclosed region.
    Eigen::Vector2d outward_normal(double t) const;

    /// Signed curvature; positive where the enclosed region is locally convex.
    double curvature(double t) const;

    Foot closest(const Eigen::Vector2d& x) const;

    /// Smallest positive ray parameter in (0, max_range] hitting the curve.
    std::optional<double> raycast(const Eigen::Vector2d& origin, const Eigen::Vector2d& direction,
                                  double max_range) const;

    /// Dense uniform samples of the parameter domain (the same set used by
    /// `closest`).
    std::vector<double> sample_parameters() const;

private:
    struct Sample {
        double t;
        int piece;
        Eigen::Vector2d p;
    };
    struct Chunk {
        int first;
        int count;
        Eigen::AlignedBox2d box;
    };

    struct Jet {
        Eigen::Vector2d p, d1, d2;
    };

    double wrap(double t) const;
    Jet jet(double t) const;
    int piece_index(double t) const;
    double refine(const Eigen::Vector2d& x, double t_lo, double t_mid, double t_hi) const;

    std::vector<Eigen::Vector2d> points_;
    std::vector<Piece> pieces_;
    std::vector<Sample> samples_;
    std::vector<Chunk> chunks_;
    Eigen::AlignedBox2d bounds_;
    double period_ = 0.0;
    double orientation_ = 1.0;
};

/// Real roots in [0, 1] of c0 + c1 u + c2 u^2 + c3 u^3, ascending.
std::vector<double> cubic_roots_unit(double c0, double c1, double c2, double c3);

}  // namespace spf
