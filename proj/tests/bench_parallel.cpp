// Benchmark: OpenMP kernels vs their serial reference implementations.
// Verifies bitwise-identical results (same arithmetic, same summation order)
// and reports wall-clock times and speedup for assembly and interior
// evaluation at a few problem sizes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rws/stokes_bie.hpp"

using namespace rws;
using clk = std::chrono::steady_clock;

namespace {

double seconds(clk::time_point a, clk::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

Curve ellipse(int J) {
    MicroDomainSpec spec;
    spec.width = 1.0;
    spec.height = 0.9;
    spec.line_offset = 0.3;
    spec.corner_radius = 0.1;
    std::vector<double> wall(17, 0.0);
    return build_micro_domain(spec, wall, J).curve;
}

} // namespace

int main() {
#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("threads available: %d\n", threads);
    std::printf("%8s %12s %12s %9s %12s %12s %9s %7s\n", "J", "asm_ser[s]", "asm_par[s]",
                "speedup", "eval_ser[s]", "eval_par[s]", "speedup", "match");

    for (int J : {256, 512, 1024}) {
        Curve c = ellipse(J);

        auto t0 = clk::now();
        NystromSystem ser = assemble_serial(c);
        auto t1 = clk::now();
        NystromSystem par = assemble(c);
        auto t2 = clk::now();
        bool match = (ser.matrix - par.matrix).cwiseAbs().maxCoeff() == 0.0;

        // smooth density and a line of interior points above the wall
        BoundaryField om = BoundaryField::zero(c);
        for (int j = 0; j < c.J; ++j)
            om.set(j, Vec2(std::cos(c.t[j]), std::sin(2.0 * c.t[j])));
        std::vector<Vec2> pts(512);
        for (std::size_t q = 0; q < pts.size(); ++q)
            pts[q] = Vec2(-0.35 + 0.7 * q / (pts.size() - 1.0), 0.45);

        auto t3 = clk::now();
        auto us = eval_interior_serial(c, om, pts);
        auto t4 = clk::now();
        auto up = eval_interior(c, om, pts);
        auto t5 = clk::now();
        for (std::size_t q = 0; q < pts.size(); ++q)
            match = match && (us[q] - up[q]).norm() == 0.0;

        std::printf("%8d %12.4f %12.4f %9.2f %12.4f %12.4f %9.2f %7s\n", J,
                    seconds(t0, t1), seconds(t1, t2), seconds(t0, t1) / seconds(t1, t2),
                    seconds(t3, t4), seconds(t4, t5), seconds(t3, t4) / seconds(t4, t5),
                    match ? "yes" : "NO");
        if (!match) return 1;
    }
    return 0;
}
