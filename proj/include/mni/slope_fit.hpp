#pragma once

#include <optional>
#include <vector>

namespace mni {

struct SlopeRow {
    double x = 0.0;
    double y = 0.0;
    /// Weight of the row in the log-space fit; empty means unit weight.
    std::optional<double> weight;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Weighted least squares of log y on log x. Needs at least 3 rows with x, y > 0.
SlopeFit fit_loglog_slope(const std::vector<SlopeRow>& rows);

/// Log-space weight for an estimate y with standard error se: (y / se)^2, or empty when se is 0.
std::optional<double> log_weight(double y, double se);

} // namespace mni
