#include "gazekit/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gazekit/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gazekit {

namespace {

json stats_json(const EyeStats& s) {
    return {{"aem", s.aem}, {"vem", s.vem}, {"pairs", s.pairs}};
}

struct Extent {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool valid() const { return lo <= hi; }
    json to_json() const { return json::array({lo, hi}); }
};

}  // namespace

std::vector<std::string> render_reports(const MetricsReport& report,
                                        const TrainHistory& history,
                                        const SampleSet& set,
                                        const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> files;
    json summary;
    summary["format"] = "gazekit-summary";
    summary["version"] = 1;
    summary["aem"] = report.aem;
    summary["vem"] = report.vem;
    summary["sample_count"] = report.sample_count;
    summary["pair_count"] = report.pair_count;
    summary["config_hash"] = report.config_hash;
    for (const auto& [k, v] : report.per_subject) summary["per_subject"][k] = stats_json(v);
    for (const auto& [k, v] : report.per_eye) summary["per_eye"][k] = stats_json(v);

    try {
        if (!history.epochs.empty()) {
            // Loss curves.
            std::vector<double> xs, total, gaze, head;
            double ymax = 0.0;
            for (const auto& r : history.epochs) {
                xs.push_back(r.epoch);
                total.push_back(std::isnan(r.total_loss) ? 0.0 : r.total_loss);
                gaze.push_back(std::isnan(r.gaze_loss) ? 0.0 : r.gaze_loss);
                head.push_back(std::isnan(r.head_loss) ? 0.0 : r.head_loss);
                ymax = std::max({ymax, total.back(), gaze.back(), head.back()});
            }
            {
                AxesPlot plot(320, 480, xs.front(), xs.back() + 1e-9, 0.0, ymax * 1.05 + 1e-9);
                plot.polyline(xs, total, {30, 30, 160});
                plot.polyline(xs, gaze, {180, 40, 40});
                plot.polyline(xs, head, {40, 140, 40});
                const std::string p = (fs::path(out_dir) / "loss_curves.png").string();
                plot.save(p);
                files.push_back(p);
            }
            // AEM by epoch (train and validation when present).
            std::vector<double> ax, a_train, vx, a_val;
            for (const auto& r : history.epochs) {
                if (!std::isnan(r.train_aem)) {
                    ax.push_back(r.epoch);
                    a_train.push_back(r.train_aem);
                }
                if (!std::isnan(r.val_aem)) {
                    vx.push_back(r.epoch);
                    a_val.push_back(r.val_aem);
                }
            }
            if (!ax.empty() || !vx.empty()) {
                double amax = 1.0;
                for (const double v : a_train) amax = std::max(amax, v);
                for (const double v : a_val) amax = std::max(amax, v);
                AxesPlot plot(320, 480, xs.front(), xs.back() + 1e-9, 0.0, amax * 1.05);
                if (!ax.empty()) plot.polyline(ax, a_train, {180, 40, 40});
                if (!vx.empty()) plot.polyline(vx, a_val, {30, 30, 160});
                const std::string p = (fs::path(out_dir) / "aem_by_epoch.png").string();
                plot.save(p);
                files.push_back(p);
            }
        }

        if (!set.empty()) {
            // Head-gaze distribution: yaw panel left, pitch panel right.
            Extent hy, hp, gy, gp;
            std::vector<double> hys, gys, hps, gps;
            for (const auto& s : set.samples) {
                for (const AnglePair* g : {&s.gaze_left, &s.gaze_right}) {
                    hys.push_back(s.head.yaw);
                    gys.push_back(g->yaw);
                    hps.push_back(s.head.pitch);
                    gps.push_back(g->pitch);
                    hy.add(s.head.yaw);
                    hp.add(s.head.pitch);
                    gy.add(g->yaw);
                    gp.add(g->pitch);
                }
            }
            const double pad = 2.0;
            AxesPlot yaw_plot(360, 360, hy.lo - pad, hy.hi + pad, gy.lo - pad, gy.hi + pad);
            yaw_plot.scatter(hys, gys, {30, 30, 160});
            const std::string yaw_path = (fs::path(out_dir) / "headgaze_yaw.png").string();
            yaw_plot.save(yaw_path);
            files.push_back(yaw_path);

            AxesPlot pitch_plot(360, 360, hp.lo - pad, hp.hi + pad, gp.lo - pad, gp.hi + pad);
            pitch_plot.scatter(hps, gps, {180, 40, 40});
            const std::string pitch_path = (fs::path(out_dir) / "headgaze_pitch.png").string();
            pitch_plot.save(pitch_path);
            files.push_back(pitch_path);

            summary["scatter_extents"] = {{"head_yaw", hy.to_json()},
                                          {"head_pitch", hp.to_json()},
                                          {"gaze_yaw", gy.to_json()},
                                          {"gaze_pitch", gp.to_json()}};
        }

        if (report.has_confusion) {
            const std::string p = (fs::path(out_dir) / "confusion.png").string();
            save_heatmap(p, report.conf.rows, report.conf.k);
            files.push_back(p);
            summary["accuracy"] = report.accuracy;
            summary["confusion_rows"] = report.conf.rows;
            json support = json::array();
            for (const bool b : report.conf.row_has_support) support.push_back(b);
            summary["confusion_row_support"] = support;
        }

        const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
        {
            std::ofstream f(summary_path, std::ios::binary);
            if (!f) throw std::runtime_error("render_reports: cannot write " + summary_path);
            f << summary.dump(2) << "\n";
        }
        files.push_back(summary_path);
    } catch (...) {
        for (const auto& f : files) {
            std::error_code ec;
            fs::remove(f, ec);
        }
        throw;
    }
    return files;
}

}  // namespace gazekit
