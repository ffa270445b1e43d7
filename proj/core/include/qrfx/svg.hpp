#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qrfx/explain.hpp"
#include "qrfx/l1_quantile.hpp"

namespace qrfx::svg {

// All writers emit self-contained, deterministic SVG: fixed float
// formatting, no timestamps, no external assets. Empty input is an
// error and no file is created.

// Dual-axis regularization path: CV loss vs s (left axis), nonzero
// count (right axis), with the chosen point marked.
void write_path_plot(const std::string& out, const SelectionResult& sel,
                     const std::string& loss_label);

// Per-sample ICE curves (gray), PDP (blue), sample overlay (red dots).
void write_ice_plot(const std::string& out, const IceGrid& grid,
                    const std::string& feature_name);

// 2-D PDP heatmap with iso-contours and red sample scatter.
void write_pdp2_plot(const std::string& out, const PdpSurface& surface,
                     const std::string& name_a, const std::string& name_b);

// Horizontal bar chart (used for mean |phi| rankings), longest bar first.
void write_bar_plot(const std::string& out,
                    const std::vector<std::string>& labels,
                    const std::vector<double>& values,
                    const std::string& title);

// Waterfall from base value to prediction, entries in the record's order.
void write_waterfall_plot(const std::string& out, const WaterfallRecord& rec,
                          const std::vector<std::string>& feature_names);

// Histogram with vertical quantile markers (tau, value) pairs.
void write_hist_plot(const std::string& out, const std::vector<double>& values,
                     int bins, const std::vector<std::pair<double, double>>& quantiles,
                     const std::string& title);

}  // namespace qrfx::svg
