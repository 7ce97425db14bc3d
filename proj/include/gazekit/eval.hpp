#pragma once

#include <map>
#include <string>
#include <vector>

#include "gazekit/pipeline.hpp"
#include "gazekit/train.hpp"

namespace gazekit {

struct EyeStats {
    double aem = 0.0;
    double vem = 0.0;
    int64_t pairs = 0;
};

// Row-stochastic confusion matrix; rows without support are flagged instead
// of divided.
struct ConfusionMatrix {
    int k = 0;
    std::vector<int64_t> counts;        // k*k, row-major, counts[true][pred]
    std::vector<double> rows;           // row-stochastic; zero rows stay zero
    std::vector<bool> row_has_support;  // per true class

    int64_t count(int true_id, int pred_id) const {
        return counts[static_cast<size_t>(true_id - 1) * k + (pred_id - 1)];
    }
    double rate(int true_id, int pred_id) const {
        return rows[static_cast<size_t>(true_id - 1) * k + (pred_id - 1)];
    }
};

// Tally of 1-based zone ids; throws on ids outside [1, k].
ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int k = 9);

struct MetricsReport {
    double aem = 0.0;
    double vem = 0.0;
    int64_t sample_count = 0;
    int64_t pair_count = 0;
    std::map<std::string, EyeStats> per_subject;
    std::map<std::string, EyeStats> per_eye;  // "left" / "right"
    bool has_confusion = false;
    ConfusionMatrix conf;
    double accuracy = 0.0;
    std::string config_hash;
};

// Regression evaluation: AEM per the 1/(2n) formula over every evaluated
// angle pair (both eyes for dual strategies), VEM the mean per-pair arc
// angle. The metrics go through the gaze_geometry ops, not a reimplementation.
MetricsReport evaluate_hgd(HgdModel& model, const Pipeline& pipe,
                           const std::string& config_echo = "");

MetricsReport evaluate_nohp(NoHpStack& stack, const Pipeline& pipe,
                            const std::string& config_echo = "");

// Classifier evaluation: zone accuracy plus the confusion matrix.
MetricsReport evaluate_classifier(HgdModel& model, const Pipeline& pipe,
                                  const ZoneGrid& grid,
                                  const std::string& config_echo = "");

// Builds a report directly from prediction/label pairs (used by tests and by
// the dual-route cross-checks).
MetricsReport report_from_pairs(const std::vector<AnglePair>& preds,
                                const std::vector<AnglePair>& refs);

}  // namespace gazekit
