#pragma once

#include "rws/geometry.hpp"
#include "rws/stokes_bie.hpp"

namespace rws {

struct RieszPair {
    BoundaryField r1, r2;   // representors of first/second kind
    BoundaryField rt1, rt2; // intermediate representors (closed form)
    std::uint64_t curve_id = 0;
    LineSegment segment;
};

// Closed-form intermediate representors at every boundary node.
// rt1 represents the line average of u . t_L, rt2 the line average of
// (n_L . grad u) . t_L, both as <rt, omega>_W pairings with the density.
// The averages are normalized by the segment length.
std::pair<BoundaryField, BoundaryField> intermediate_representors(const Curve& c,
                                                                  const LineSegment& seg);

// Quadrature oracle for the same quantities (used by tests and as fallback).
std::pair<BoundaryField, BoundaryField> intermediate_representors_quadrature(
    const Curve& c, const LineSegment& seg, int nq);

// Discrete adjoint solve: r = A^{-*} rt in the weighted inner product,
// i.e. solve A^T s = W rt, r = W^{-1} s.
BoundaryField solve_adjoint(const NystromSystem& sys, const Curve& c,
                            const BoundaryField& rt, double tol = 1e-10,
                            GmresStats* stats = nullptr);

RieszPair compute_riesz_pair(const NystromSystem& sys, const Curve& c,
                             const LineSegment& seg, double tol = 1e-10);

// alpha = -<h, r1>_W / <h, r2>_W.
double slip_amount(const Curve& c, const RieszPair& pair, const BoundaryField& h);

// Forward-path line averages (oracles): solve the BIE for h, evaluate on the
// segment with 64-point Gauss-Legendre, average.
struct LineAverages {
    double u_t = 0.0;   // <u . t_L>_seg / |seg|
    double dnu_t = 0.0; // <(n_L . grad u) . t_L>_seg / |seg|
};
LineAverages forward_line_averages(const NystromSystem& sys, const Curve& c,
                                   const LineSegment& seg, const BoundaryField& h,
                                   double tol = 1e-10);

// Slip through the forward path (direct oracle): -u_t / dnu_t.
double slip_amount_direct(const NystromSystem& sys, const Curve& c, const LineSegment& seg,
                          const BoundaryField& h, double tol = 1e-10);

// e_mic: max over micro domains of the sum of the two normalized L2
// representor errors.
double micro_error(const std::vector<RieszPair>& pred, const std::vector<RieszPair>& ref,
                   const std::vector<const Curve*>& curves);

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& xs, std::vector<double>& ws);

} // namespace rws
