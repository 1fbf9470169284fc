#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rws {

using Vec2 = Eigen::Vector2d;

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed curve discretized at J uniform parameter nodes t_j = 2*pi*j/J.
// Quadrature weights w_j = (2*pi/J)*|phi'(t_j)| absorb the parameterization
// speed; nodes are NOT arclength-equispaced.
struct Curve {
    int J = 0;
    std::vector<double> t;
    std::vector<Vec2> x;       // phi(t_j)
    std::vector<Vec2> dx;      // phi'(t_j)
    std::vector<Vec2> ddx;     // phi''(t_j)
    std::vector<Vec2> normal;  // outward unit normal (t_y, -t_x) for CCW curves
    std::vector<Vec2> tangent; // unit tangent, CCW orientation
    std::vector<double> kappa; // signed curvature det[phi',phi'']/|phi'|^3
    std::vector<double> w;     // quadrature weights
    std::uint64_t id = 0;

    double arclength() const;
};

struct LineSegment {
    Vec2 a, b;
    Vec2 tangent_L; // (b-a)/|b-a|
    Vec2 normal_L;  // (t_y, -t_x): points below a left-to-right segment
    int nq = 64;    // Gauss-Legendre nodes for direct line averages

    double length() const { return (b - a).norm(); }
    static LineSegment make(const Vec2& a, const Vec2& b, int nq = 64);
};

struct GpConfig {
    double variance = 1.0;
    double corr_len = 0.2;
    int n_points = 128;
    double curvature_bound = 200.0;
    std::uint64_t seed = 0;
};

struct MicroDomainSpec {
    double width = 1.0;       // box width
    double height = 1.0;      // box height above the line... see build_micro_domain
    double line_offset = 0.25; // wall mean to evaluation line
    double corner_radius = 0.1;
    GpConfig gp;
    // When true, straight and wall pieces receive parameter length
    // proportional to their arclength, so nodes distribute near-uniformly in
    // arclength (useful when the wall is much longer than the other sides).
    // Default keeps one parameter unit per piece.
    bool arclength_param = false;
};

// Deterministic standard normals: xoshiro-free, plain mt19937_64 + Box-Muller
// implemented here so that streams are identical across platforms/libraries.
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double uniform();  // (0,1)
    double normal();

private:
    std::uint64_t next();
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Zero-mean stationary GP with covariance variance*exp(-|dx|/corr_len) on a
// uniform grid over [0, 1]; dense Cholesky with 1e-12 jitter.
std::vector<double> sample_rough_wall(const GpConfig& cfg);

// Periodic cubic spline through values on a uniform grid over [x0, x1) is not
// what we need here: the wall is an open graph segment. Clamped cubic spline
// (zero end slopes by default) over [x0, x1].
class CubicSpline {
public:
    CubicSpline() = default;
    // Natural/clamped cubic spline through (xs, ys); clamped with specified
    // end slopes when clamp = true.
    CubicSpline(std::vector<double> xs, std::vector<double> ys, bool clamp = true,
                double slope_a = 0.0, double slope_b = 0.0);
    double eval(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;

private:
    int find(double x) const;
    std::vector<double> xs_, ys_, c2_; // c2_ = second derivatives at knots
};

// Degree-5 polynomial patch on s in [0,1] matching value/1st/2nd derivative at
// both ends (per coordinate).
struct QuinticPatch {
    std::array<double, 6> cx{}, cy{};
    Vec2 eval(double s) const;
    Vec2 deriv(double s) const;
    Vec2 deriv2(double s) const;
    static QuinticPatch fit(const Vec2& p0, const Vec2& d0, const Vec2& dd0,
                            const Vec2& p1, const Vec2& d1, const Vec2& dd1);
};

// Discretize a closed C^2 parametric map on [0, 2*pi). Derivatives supplied
// analytically by the callable (position, first, second).
using ParametricMap = std::function<void(double t, Vec2& p, Vec2& d, Vec2& dd)>;
Curve discretize_parametric(const ParametricMap& map, int J);

// Assemble the closed micro-domain boundary: rough bottom (from wall samples
// over the box width), straight sides and top, four quintic C^2 corner
// patches. Returns the curve (CCW, outward normals) and the evaluation
// segment spanning the box at line_offset above the wall mean.
struct MicroDomain {
    Curve curve;
    LineSegment segment;
    // Node classification for reconstruct_bc: 0 = rough wall (+ its corner
    // patches), 1 = sides/top (Dirichlet from the macro field).
    std::vector<int> node_class;
    double wall_mean = 0.0;
    ParametricMap map;            // the underlying C^2 boundary map
    std::vector<double> joints_t; // parameter values of the piece joints
};
MicroDomain build_micro_domain(const MicroDomainSpec& spec,
                               const std::vector<double>& wall, int J);

// Simple polygon self-intersection test on the discrete polyline.
bool polyline_simple(const std::vector<Vec2>& pts);

} // namespace rws
