#pragma once

#include <string>
#include <vector>

#include "gazekit/eval.hpp"
#include "gazekit/manifest.hpp"
#include "gazekit/train.hpp"

namespace gazekit {

// Writes the run report into out_dir and returns the created file list:
// always summary.json (versioned, machine-readable, deterministic for fixed
// inputs); loss_curves.png and aem_by_epoch.png when the history has epochs;
// headgaze_scatter.png (yaw and pitch panels) when the set has samples;
// confusion.png when the report carries a confusion matrix.
std::vector<std::string> render_reports(const MetricsReport& report,
                                        const TrainHistory& history,
                                        const SampleSet& set,
                                        const std::string& out_dir);

}  // namespace gazekit
