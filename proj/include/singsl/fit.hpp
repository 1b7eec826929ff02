#pragma once

// Least-squares helpers shared by the decay and growth fits.

#include <cmath>
#include <limits>
#include <vector>

namespace singsl::detail {

struct LineFit {
    double slope = 0, intercept = 0, r2 = 0, slope_stderr = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    LineFit f;
    const double vx = n * sxx - sx * sx, vy = n * syy - sy * sy, cxy = n * sxy - sx * sy;
    f.slope = cxy / vx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    double sse = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - f.intercept - f.slope * x[i];
        sse += e * e;
    }
    f.slope_stderr = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / (vx / n)) : 0.0;
    return f;
}

}  // namespace singsl::detail
