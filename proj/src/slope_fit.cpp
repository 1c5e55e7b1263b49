#include "mni/slope_fit.hpp"

#include "mni/error.hpp"

#include <algorithm>
#include <cmath>

namespace mni {

SlopeFit fit_loglog_slope(const std::vector<SlopeRow>& rows) {
    if (rows.size() < 3)
        throw EstimatorError("slope fit needs at least 3 rows, got " + std::to_string(rows.size()));
    const bool weighted = std::all_of(rows.begin(), rows.end(), [](const SlopeRow& r) { return r.weight.has_value(); });
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (const SlopeRow& r : rows) {
        if (!(r.x > 0.0) || !(r.y > 0.0) || !std::isfinite(r.x) || !std::isfinite(r.y))
            throw EstimatorError("slope fit needs positive finite x and y");
        const double w = weighted ? *r.weight : 1.0;
        if (!(w > 0.0) || !std::isfinite(w))
            throw EstimatorError("slope fit weights must be positive and finite");
        sw += w;
        sx += w * std::log(r.x);
        sy += w * std::log(r.y);
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const SlopeRow& r : rows) {
        const double w = weighted ? *r.weight : 1.0;
        const double dx = std::log(r.x) - mx, dy = std::log(r.y) - my;
        sxx += w * dx * dx;
        sxy += w * dx * dy;
        syy += w * dy * dy;
    }
    if (sxx <= 0.0)
        throw EstimatorError("slope fit needs at least two distinct x values");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

std::optional<double> log_weight(double y, double se) {
    if (!(se > 0.0) || !(y > 0.0))
        return std::nullopt;
    return (y / se) * (y / se);
}

} // namespace mni
