#pragma once

#include "fgap/fit.hpp"

#include <string>
#include <vector>

namespace fgap {

/// Log-log plot of max H(grad u) against delta with the fitted line and a (1 -/+ tau)
/// band (the predicted band when the fit carries one, otherwise around the fitted line).
std::string rate_plot_svg(const FitReport& fit);

/// max H(grad u) / Phi_N(delta) against delta (log x axis).
std::string prefactor_plot_svg(const FitReport& fit);

struct Heatmap {
    std::string svg;
    long argmax_element = -1;
    Vec argmax_location;
};

/// Element-colored H(grad u) over a window of half-width `half_width` around the argmax,
/// with a marker at the argmax element centroid.
Heatmap heatmap_svg(const FieldSnapshot& snap, double half_width = 0.5);

/// Writes rate.svg, prefactor.svg and (when a snapshot is given) heatmap.svg into dir;
/// returns the written paths.
std::vector<std::string> emit_plots(const std::string& dir, const FitReport& fit,
                                    const std::optional<FieldSnapshot>& snapshot);

} // namespace fgap
