#include "gazekit/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gazekit/loss.hpp"

using nlohmann::json;

namespace gazekit {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(const Clock::time_point& t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Tensor scaled(const Tensor& t, double s) {
    Tensor out = t;
    for (auto& v : out.data) v = static_cast<float>(v * s);
    return out;
}

// Appends (pred, label) angle pairs from (N, 2) or (N, 4) degree tensors.
void collect_pairs(const Tensor& pred_deg, const Tensor& target_deg,
                   std::vector<AnglePair>& preds, std::vector<AnglePair>& refs) {
    const int n = pred_deg.dim(0), w = pred_deg.dim(1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j + 1 < w; j += 2) {
            preds.push_back({pred_deg.data[static_cast<size_t>(i) * w + j],
                             pred_deg.data[static_cast<size_t>(i) * w + j + 1]});
            refs.push_back({target_deg.data[static_cast<size_t>(i) * w + j],
                            target_deg.data[static_cast<size_t>(i) * w + j + 1]});
        }
    }
}

double mean_vem(const std::vector<AnglePair>& preds, const std::vector<AnglePair>& refs) {
    double sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) sum += vem(preds[i], refs[i]);
    return sum / static_cast<double>(preds.size());
}

uint64_t epoch_seed(uint64_t seed, int global_epoch) {
    return Rng::splitmix64(seed ^ (0x9e3779b97f4a7c15ull + static_cast<uint64_t>(global_epoch)));
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& rows) {
    const int f = src.dim(1);
    Tensor out({static_cast<int>(rows.size()), f});
    for (size_t i = 0; i < rows.size(); ++i) {
        std::memcpy(out.ptr() + i * f, src.ptr() + static_cast<int64_t>(rows[i]) * f,
                    sizeof(float) * f);
    }
    return out;
}

[[noreturn]] void abort_nonfinite(const char* stage, int epoch, int batch,
                                  double gaze_loss, double head_loss) {
    throw std::runtime_error(std::string("training aborted: non-finite loss in stage ") +
                             stage + " at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch) + " (gaze=" + std::to_string(gaze_loss) +
                             ", head=" + std::to_string(head_loss) + ")");
}

void enable_cache_if_small(const Pipeline& pipe) {
    if (pipe.unit_count() <= 4096) pipe.set_cache_enabled(true);
}

}  // namespace

double lr_for_epoch(double base_lr, int epoch) {
    return base_lr * std::pow(0.1, epoch / 30);
}

int ZoneGrid::zone_of(const AnglePair& g, bool* outside) const {
    const bool out = g.yaw < yaw_min || g.yaw > yaw_max || g.pitch < pitch_min ||
                     g.pitch > pitch_max;
    if (outside) *outside = out;
    const double fy = (g.yaw - yaw_min) / (yaw_max - yaw_min);
    const double fp = (pitch_max - g.pitch) / (pitch_max - pitch_min);  // top row first
    const int col = std::clamp(static_cast<int>(fy * cols), 0, cols - 1);
    const int row = std::clamp(static_cast<int>(fp * rows), 0, rows - 1);
    return row * cols + col + 1;
}

Adam::Adam(std::vector<ParamRef> params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& p : params) {
        if (p.grad) params_.push_back(p);
    }
    for (const auto& p : params_) {
        m_.emplace_back(p.value->data.size(), 0.0f);
        v_.emplace_back(p.value->data.size(), 0.0f);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.grad->fill(0.0f);
}

void Adam::step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        float* w = params_[i].value->data.data();
        const float* g = params_[i].grad->data.data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        const size_t n = m_[i].size();
        for (size_t j = 0; j < n; ++j) {
            m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
            v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * static_cast<double>(g[j]) * g[j]);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

void TrainHistory::save_jsonl(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("TrainHistory: cannot write " + path);
    json header;
    header["format"] = "gazekit-history";
    header["version"] = 1;
    json bounds = json::array();
    for (const auto& [epoch, label] : stage_boundaries) {
        bounds.push_back({{"epoch", epoch}, {"stage", label}});
    }
    header["stage_boundaries"] = bounds;
    header["warnings"] = warnings;
    f << header.dump() << "\n";
    for (const auto& r : epochs) {
        json rec;
        rec["epoch"] = r.epoch;
        rec["stage"] = r.stage;
        rec["lr"] = r.lr;
        auto put = [&rec](const char* k, double v) {
            if (!std::isnan(v)) rec[k] = v;
        };
        put("gaze_loss", r.gaze_loss);
        put("head_loss", r.head_loss);
        put("total_loss", r.total_loss);
        put("train_aem", r.train_aem);
        put("val_aem", r.val_aem);
        put("val_vem", r.val_vem);
        put("landmark_px", r.landmark_px);
        put("accuracy", r.accuracy);
        if (r.out_of_grid) rec["out_of_grid"] = r.out_of_grid;
        rec["wall_seconds"] = r.wall_seconds;
        f << rec.dump() << "\n";
    }
}

TrainHistory TrainHistory::load_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("TrainHistory: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("TrainHistory: empty file " + path);
    const json header = json::parse(line);
    TrainHistory h;
    for (const auto& b : header.value("stage_boundaries", json::array())) {
        h.stage_boundaries.emplace_back(b.at("epoch").get<int>(), b.at("stage").get<std::string>());
    }
    for (const auto& w : header.value("warnings", json::array())) {
        h.warnings.push_back(w.get<std::string>());
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        EpochRecord r;
        r.epoch = rec.at("epoch").get<int>();
        r.stage = rec.at("stage").get<std::string>();
        r.lr = rec.at("lr").get<double>();
        r.gaze_loss = rec.value("gaze_loss", NAN);
        r.head_loss = rec.value("head_loss", NAN);
        r.total_loss = rec.value("total_loss", NAN);
        r.train_aem = rec.value("train_aem", NAN);
        r.val_aem = rec.value("val_aem", NAN);
        r.val_vem = rec.value("val_vem", NAN);
        r.landmark_px = rec.value("landmark_px", NAN);
        r.accuracy = rec.value("accuracy", NAN);
        r.out_of_grid = rec.value("out_of_grid", 0);
        r.wall_seconds = rec.value("wall_seconds", 0.0);
        h.epochs.push_back(std::move(r));
    }
    return h;
}

void NoHpStack::collect_params(std::vector<ParamRef>& out) {
    detector.collect_params(out);
    gaze_module.collect_params("gaze_module", out);
    head_module.collect_params("head_module", out);
    final_model.collect_params(out);
}

std::vector<std::vector<AnglePair>> predict_hgd(HgdModel& model, const Pipeline& pipe,
                                                int batch_size) {
    std::vector<std::vector<AnglePair>> out(pipe.unit_count());
    std::vector<int> idx;
    for (int i = 0; i < pipe.unit_count(); ++i) {
        idx.push_back(i);
        if (static_cast<int>(idx.size()) == batch_size || i + 1 == pipe.unit_count()) {
            const Batch b = assemble_batch(pipe, idx);
            Tensor head_feat;
            if (model.config().use_face_branch) {
                head_feat = model.forward_face(b.face, false).head_feature;
            }
            const Tensor pred = scaled(
                model.forward_gaze(b.eye, head_feat, b.lda.size() ? &b.lda : nullptr, false),
                kAngleScale);
            const int w = pred.dim(1);
            for (size_t r = 0; r < idx.size(); ++r) {
                std::vector<AnglePair> angles;
                for (int j = 0; j + 1 < w; j += 2) {
                    angles.push_back({pred.data[r * w + j], pred.data[r * w + j + 1]});
                }
                out[idx[r]] = std::move(angles);
            }
            idx.clear();
        }
    }
    return out;
}

namespace {

// Validation AEM/VEM of the regression model over a pipeline.
std::pair<double, double> hgd_val_metrics(HgdModel& model, const Pipeline& pipe) {
    const auto preds = predict_hgd(model, pipe);
    std::vector<AnglePair> p, r;
    for (int u = 0; u < pipe.unit_count(); ++u) {
        const InputUnit unit = pipe.make_unit(u);
        for (size_t j = 0; j < preds[u].size(); ++j) {
            p.push_back(preds[u][j]);
            r.push_back({unit.targets[2 * j], unit.targets[2 * j + 1]});
        }
    }
    return {aem(p, r), mean_vem(p, r)};
}

double val_head_aem(HgdModel& model, const Pipeline& pipe, int batch_size = 64) {
    std::vector<AnglePair> p, r;
    std::vector<int> idx;
    for (int i = 0; i < pipe.unit_count(); ++i) {
        idx.push_back(i);
        if (static_cast<int>(idx.size()) == batch_size || i + 1 == pipe.unit_count()) {
            const Batch b = assemble_batch(pipe, idx);
            const Tensor pred = scaled(model.forward_face(b.face, false).head_pred, kAngleScale);
            collect_pairs(pred, b.head, p, r);
            idx.clear();
        }
    }
    return aem(p, r);
}

}  // namespace

TrainHistory train_implicit(HgdModel& model, const Pipeline& train,
                            const Pipeline* val, const TrainConfig& cfg) {
    TrainHistory history;
    enable_cache_if_small(train);
    if (val) enable_cache_if_small(*val);

    std::vector<ParamRef> params;
    model.collect_params(params);
    Adam opt(std::move(params));

    const bool use_face = model.config().use_face_branch;
    const auto t0 = Clock::now();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_for_epoch(cfg.base_lr, epoch);
        const auto batches =
            batch_indices(train.unit_count(), cfg.batch_size, epoch_seed(cfg.seed, epoch));

        double gaze_sum = 0.0, head_sum = 0.0;
        std::vector<AnglePair> tp, tr;
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch b = assemble_batch(train, batches[bi]);
            FaceForward ff;
            if (use_face) ff = model.forward_face(b.face, true);
            const Tensor gaze_out =
                model.forward_gaze(b.eye, ff.head_feature, b.lda.size() ? &b.lda : nullptr, true);

            const Tensor pred_deg = scaled(gaze_out, kAngleScale);
            const LossResult gl = wing_loss(pred_deg, b.targets, cfg.wing_w, cfg.wing_eps);
            const Tensor dgaze = scaled(gl.grad, kAngleScale);

            double head_val = 0.0;
            Tensor dhead;
            if (use_face) {
                const Tensor head_deg = scaled(ff.head_pred, kAngleScale);
                const LossResult hl = wing_loss(head_deg, b.head, cfg.wing_w, cfg.wing_eps);
                head_val = hl.value;
                if (cfg.head_task && cfg.beta != 0.0) {
                    dhead = scaled(hl.grad, kAngleScale * cfg.beta);
                }
            }
            const double total = gl.value + (cfg.head_task ? cfg.beta * head_val : 0.0);
            if (!std::isfinite(total)) {
                abort_nonfinite("implicit", epoch, static_cast<int>(bi), gl.value, head_val);
            }
            opt.zero_grad();
            model.backward(dgaze, dhead, false);
            opt.step(lr);

            gaze_sum += gl.value;
            head_sum += head_val;
            collect_pairs(pred_deg, b.targets, tp, tr);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = "implicit";
        rec.lr = lr;
        rec.gaze_loss = gaze_sum / batches.size();
        rec.head_loss = use_face ? head_sum / batches.size() : NAN;
        rec.total_loss = rec.gaze_loss +
                         (cfg.head_task && use_face ? cfg.beta * (head_sum / batches.size()) : 0.0);
        rec.train_aem = aem(tp, tr);
        if (val && cfg.val_every > 0 && (epoch + 1) % cfg.val_every == 0) {
            std::tie(rec.val_aem, rec.val_vem) = hgd_val_metrics(model, *val);
        }
        rec.wall_seconds = elapsed(t0);
        history.epochs.push_back(rec);
        if (cfg.stop_train_aem > 0.0 && rec.train_aem < cfg.stop_train_aem) break;
    }
    return history;
}

TrainHistory train_explicit(HgdModel& model, const Pipeline& train,
                            const Pipeline& val, const TrainConfig& cfg) {
    if (!model.config().use_face_branch) {
        throw std::invalid_argument("train_explicit: the face branch is required");
    }
    TrainHistory history;
    enable_cache_if_small(train);
    enable_cache_if_small(val);
    const auto t0 = Clock::now();

    // Stage 1: face branch alone on head loss until the validation head AEM
    // plateaus.
    {
        std::vector<ParamRef> params;
        model.collect_face_params(params);
        Adam opt(std::move(params));
        double best = std::numeric_limits<double>::infinity();
        int best_epoch = -1;
        bool converged = false;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const double lr = lr_for_epoch(cfg.base_lr, epoch);
            const auto batches =
                batch_indices(train.unit_count(), cfg.batch_size, epoch_seed(cfg.seed, epoch));
            double head_sum = 0.0;
            for (size_t bi = 0; bi < batches.size(); ++bi) {
                const Batch b = assemble_batch(train, batches[bi]);
                const FaceForward ff = model.forward_face(b.face, true);
                const Tensor head_deg = scaled(ff.head_pred, kAngleScale);
                const LossResult hl = wing_loss(head_deg, b.head, cfg.wing_w, cfg.wing_eps);
                if (!std::isfinite(hl.value)) {
                    abort_nonfinite("explicit-1", epoch, static_cast<int>(bi), 0.0, hl.value);
                }
                opt.zero_grad();
                model.backward_head_only(scaled(hl.grad, kAngleScale));
                opt.step(lr);
                head_sum += hl.value;
            }
            EpochRecord rec;
            rec.epoch = epoch;
            rec.stage = "face";
            rec.lr = lr;
            rec.head_loss = head_sum / batches.size();
            rec.total_loss = rec.head_loss;
            rec.val_aem = val_head_aem(model, val);
            rec.wall_seconds = elapsed(t0);
            history.epochs.push_back(rec);

            if (rec.val_aem < best - cfg.plateau_improvement) {
                best = rec.val_aem;
                best_epoch = epoch;
            } else if (epoch - best_epoch >= cfg.plateau_patience) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            history.warnings.push_back(
                "stage 1 reached the epoch cap before the head AEM plateaued");
        }
    }

    // Stage 2: freeze the face model, train eye branch + fusion on gaze loss
    // from the frozen head features.
    const int stage2_start = static_cast<int>(history.epochs.size());
    history.stage_boundaries.emplace_back(stage2_start, "gaze");
    std::vector<ParamRef> frozen;
    model.collect_face_params(frozen);
    const std::string frozen_hash = params_hash(frozen);
    {
        std::vector<ParamRef> params;
        model.collect_gaze_params(params);
        Adam opt(std::move(params));
        for (int e = 0; e < cfg.epochs; ++e) {
            const int epoch = stage2_start + e;
            const double lr = lr_for_epoch(cfg.base_lr, e);
            const auto batches =
                batch_indices(train.unit_count(), cfg.batch_size, epoch_seed(cfg.seed, epoch));
            double gaze_sum = 0.0;
            std::vector<AnglePair> tp, tr;
            for (size_t bi = 0; bi < batches.size(); ++bi) {
                const Batch b = assemble_batch(train, batches[bi]);
                const FaceForward ff = model.forward_face(b.face, false);  // frozen
                const Tensor gaze_out = model.forward_gaze(
                    b.eye, ff.head_feature, b.lda.size() ? &b.lda : nullptr, true);
                const Tensor pred_deg = scaled(gaze_out, kAngleScale);
                const LossResult gl = wing_loss(pred_deg, b.targets, cfg.wing_w, cfg.wing_eps);
                if (!std::isfinite(gl.value)) {
                    abort_nonfinite("explicit-2", epoch, static_cast<int>(bi), gl.value, 0.0);
                }
                opt.zero_grad();
                model.backward(scaled(gl.grad, kAngleScale), Tensor(), true);
                opt.step(lr);
                gaze_sum += gl.value;
                collect_pairs(pred_deg, b.targets, tp, tr);
            }
            EpochRecord rec;
            rec.epoch = epoch;
            rec.stage = "gaze";
            rec.lr = lr;
            rec.gaze_loss = gaze_sum / batches.size();
            rec.total_loss = rec.gaze_loss;
            rec.train_aem = aem(tp, tr);
            if (cfg.val_every > 0 && (e + 1) % cfg.val_every == 0) {
                std::tie(rec.val_aem, rec.val_vem) = hgd_val_metrics(model, val);
            }
            rec.wall_seconds = elapsed(t0);
            history.epochs.push_back(rec);
            if (cfg.stop_train_aem > 0.0 && rec.train_aem < cfg.stop_train_aem) break;
        }
    }
    if (params_hash(frozen) != frozen_hash) {
        throw std::logic_error("train_explicit: frozen face parameters changed in stage 2");
    }
    return history;
}

Tensor detector_features(LandmarkDetector& det, const Pipeline& pipe, int batch_size) {
    Tensor feats({pipe.unit_count(), 200});
    std::vector<int> idx;
    for (int i = 0; i < pipe.unit_count(); ++i) {
        idx.push_back(i);
        if (static_cast<int>(idx.size()) == batch_size || i + 1 == pipe.unit_count()) {
            const Batch b = assemble_batch(pipe, idx);
            const LandmarkForward lf = det.forward(b.eye, false);
            for (size_t r = 0; r < idx.size(); ++r) {
                std::memcpy(feats.ptr() + static_cast<int64_t>(idx[r]) * 200,
                            lf.feature.ptr() + r * 200, sizeof(float) * 200);
            }
            idx.clear();
        }
    }
    return feats;
}

namespace {

double landmark_val_px(LandmarkDetector& det, const LandmarkPipeline& pipe) {
    double sum = 0.0;
    int64_t count = 0;
    std::vector<int> idx;
    for (int i = 0; i < pipe.unit_count(); ++i) {
        idx.push_back(i);
        if (static_cast<int>(idx.size()) == 64 || i + 1 == pipe.unit_count()) {
            const LandmarkBatch b = pipe.make_batch(idx);
            const LandmarkForward lf = det.forward(b.eye, false);
            const int n = static_cast<int>(idx.size());
            for (int r = 0; r < n; ++r) {
                for (int p = 0; p < 16; ++p) {
                    const double dx = (lf.coords.data[r * 32 + 2 * p] - b.coords.data[r * 32 + 2 * p]) *
                                      pipe.crop_width();
                    const double dy =
                        (lf.coords.data[r * 32 + 2 * p + 1] - b.coords.data[r * 32 + 2 * p + 1]) *
                        pipe.crop_height();
                    sum += std::hypot(dx, dy);
                    ++count;
                }
            }
            idx.clear();
        }
    }
    return sum / static_cast<double>(count);
}

// One Adam pass of an aux module over cached features.
struct AuxEpochResult {
    double loss = 0.0;
};

AuxEpochResult aux_epoch(AuxModule& mod, Adam& opt, const Tensor& feats,
                         const Tensor& targets_deg, const TrainConfig& cfg, double lr,
                         int epoch, const char* stage) {
    const auto batches =
        batch_indices(feats.dim(0), cfg.batch_size, epoch_seed(cfg.seed, epoch));
    double sum = 0.0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
        const Tensor f = gather_rows(feats, batches[bi]);
        const Tensor t = gather_rows(targets_deg, batches[bi]);
        const AuxForward af = mod.forward(f, true);
        const Tensor pred_deg = scaled(af.pred, kAngleScale);
        const LossResult l = wing_loss(pred_deg, t, cfg.wing_w, cfg.wing_eps);
        if (!std::isfinite(l.value)) {
            abort_nonfinite(stage, epoch, static_cast<int>(bi), l.value, 0.0);
        }
        opt.zero_grad();
        mod.backward(scaled(l.grad, kAngleScale), Tensor());
        opt.step(lr);
        sum += l.value;
    }
    return {sum / batches.size()};
}

Tensor nohp_concat(NoHpStack& stack, const Tensor& feats) {
    const int n = feats.dim(0);
    const AuxForward gf = stack.gaze_module.forward(feats, false);
    const AuxForward hf = stack.head_module.forward(feats, false);
    Tensor concat({n, 600});
    for (int i = 0; i < n; ++i) {
        std::memcpy(concat.ptr() + static_cast<int64_t>(i) * 600, feats.ptr() + static_cast<int64_t>(i) * 200,
                    sizeof(float) * 200);
        std::memcpy(concat.ptr() + static_cast<int64_t>(i) * 600 + 200,
                    gf.tap.ptr() + static_cast<int64_t>(i) * 200, sizeof(float) * 200);
        std::memcpy(concat.ptr() + static_cast<int64_t>(i) * 600 + 400,
                    hf.tap.ptr() + static_cast<int64_t>(i) * 200, sizeof(float) * 200);
    }
    return concat;
}

Tensor unit_gaze_targets(const Pipeline& pipe) {
    Tensor t({pipe.unit_count(), 2});
    for (int i = 0; i < pipe.unit_count(); ++i) {
        const InputUnit u = pipe.make_unit(i);
        t.data[2 * i] = static_cast<float>(u.targets[0]);
        t.data[2 * i + 1] = static_cast<float>(u.targets[1]);
    }
    return t;
}

Tensor unit_head_targets(const Pipeline& pipe) {
    Tensor t({pipe.unit_count(), 2});
    for (int i = 0; i < pipe.unit_count(); ++i) {
        const InputUnit u = pipe.make_unit(i);
        t.data[2 * i] = static_cast<float>(u.head_target.yaw);
        t.data[2 * i + 1] = static_cast<float>(u.head_target.pitch);
    }
    return t;
}

}  // namespace

std::vector<AnglePair> predict_nohp(NoHpStack& stack, const Pipeline& pipe, int batch_size) {
    const Tensor feats = detector_features(stack.detector, pipe, batch_size);
    const Tensor concat = nohp_concat(stack, feats);
    const Tensor pred = scaled(stack.final_model.forward(concat, false), kAngleScale);
    std::vector<AnglePair> out(pipe.unit_count());
    for (int i = 0; i < pipe.unit_count(); ++i) {
        out[i] = {pred.data[2 * i], pred.data[2 * i + 1]};
    }
    return out;
}

TrainHistory train_nohp(NoHpStack& stack, const SampleSet& synth,
                        const SampleSet& target, const TrainConfig& cfg,
                        const PreprocOptions& pre) {
    TrainHistory history;
    const auto t0 = Clock::now();

    const SampleSet synth_train = synth.with_split("train");
    const SampleSet synth_val = synth.with_split("test");
    if (synth_train.empty() || synth_val.empty()) {
        throw std::invalid_argument("train_nohp: synth set needs train and test splits");
    }

    // Stage A: landmark detector on synthetic eye crops.
    {
        const LandmarkPipeline lp_train(synth_train, pre);
        const LandmarkPipeline lp_val(synth_val, pre);
        std::vector<ParamRef> params;
        stack.detector.collect_params(params);
        Adam opt(std::move(params));
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const double lr = lr_for_epoch(cfg.base_lr, epoch);
            const auto batches =
                batch_indices(lp_train.unit_count(), cfg.batch_size, epoch_seed(cfg.seed, epoch));
            double sum = 0.0;
            for (size_t bi = 0; bi < batches.size(); ++bi) {
                const LandmarkBatch b = lp_train.make_batch(batches[bi]);
                const LandmarkForward lf = stack.detector.forward(b.eye, true);
                const LossResult l = wing_loss(lf.coords, b.coords, cfg.wing_w, cfg.wing_eps);
                if (!std::isfinite(l.value)) {
                    abort_nonfinite("nohp-A", epoch, static_cast<int>(bi), l.value, 0.0);
                }
                opt.zero_grad();
                stack.detector.backward(l.grad, Tensor());
                opt.step(lr);
                sum += l.value;
            }
            EpochRecord rec;
            rec.epoch = epoch;
            rec.stage = "landmarks";
            rec.lr = lr;
            rec.gaze_loss = NAN;
            rec.total_loss = sum / batches.size();
            rec.landmark_px = landmark_val_px(stack.detector, lp_val);
            rec.wall_seconds = elapsed(t0);
            history.epochs.push_back(rec);
        }
    }

    // Stage B: detector frozen; gaze and head modules on synthetic labels
    // from the cached 200-d features.
    int epoch_base = static_cast<int>(history.epochs.size());
    history.stage_boundaries.emplace_back(epoch_base, "modules");
    std::vector<ParamRef> frozen_det;
    stack.detector.collect_params(frozen_det);
    const std::string det_hash = params_hash(frozen_det);
    {
        const Pipeline syn_sem(synth_train, EyeMerge::SEM, pre);
        const Tensor feats = detector_features(stack.detector, syn_sem);
        const Tensor gaze_t = unit_gaze_targets(syn_sem);
        const Tensor head_t = unit_head_targets(syn_sem);

        std::vector<ParamRef> gp, hp;
        stack.gaze_module.collect_params("gaze_module", gp);
        stack.head_module.collect_params("head_module", hp);
        Adam gopt(std::move(gp)), hopt(std::move(hp));
        for (int e = 0; e < cfg.epochs; ++e) {
            const int epoch = epoch_base + e;
            const double lr = lr_for_epoch(cfg.base_lr, e);
            const auto gr = aux_epoch(stack.gaze_module, gopt, feats, gaze_t, cfg, lr, epoch, "nohp-B");
            const auto hr = aux_epoch(stack.head_module, hopt, feats, head_t, cfg, lr, epoch, "nohp-B");
            EpochRecord rec;
            rec.epoch = epoch;
            rec.stage = "modules";
            rec.lr = lr;
            rec.gaze_loss = gr.loss;
            rec.head_loss = hr.loss;
            rec.total_loss = gr.loss + hr.loss;
            rec.wall_seconds = elapsed(t0);
            history.epochs.push_back(rec);
        }
    }

    if (params_hash(frozen_det) != det_hash) {
        throw std::logic_error("train_nohp: frozen detector changed in stage B");
    }

    // Stage C: the 600-d concatenation trains the final gaze model on the
    // target set (head labels unused).
    epoch_base = static_cast<int>(history.epochs.size());
    history.stage_boundaries.emplace_back(epoch_base, "final");
    std::vector<ParamRef> frozen_mods;
    stack.gaze_module.collect_params("gaze_module", frozen_mods);
    stack.head_module.collect_params("head_module", frozen_mods);
    const std::string mods_hash = params_hash(frozen_mods);
    {
        const SampleSet tgt_train = target.with_split("train");
        const SampleSet tgt_val = target.with_split("test");
        if (tgt_train.empty()) {
            throw std::invalid_argument("train_nohp: target set has no train split");
        }
        const Pipeline tr_sem(tgt_train, EyeMerge::SEM, pre);
        const Tensor feats = detector_features(stack.detector, tr_sem);
        const Tensor concat = nohp_concat(stack, feats);
        check_shape(concat, {tr_sem.unit_count(), 600}, "train_nohp: stage C input");
        const Tensor gaze_t = unit_gaze_targets(tr_sem);

        std::vector<ParamRef> fp;
        stack.final_model.collect_params(fp);
        Adam opt(std::move(fp));
        for (int e = 0; e < cfg.epochs; ++e) {
            const int epoch = epoch_base + e;
            const double lr = lr_for_epoch(cfg.base_lr, e);
            const auto batches =
                batch_indices(concat.dim(0), cfg.batch_size, epoch_seed(cfg.seed, epoch));
            double sum = 0.0;
            std::vector<AnglePair> tp, tr;
            for (size_t bi = 0; bi < batches.size(); ++bi) {
                const Tensor x = gather_rows(concat, batches[bi]);
                const Tensor t = gather_rows(gaze_t, batches[bi]);
                const Tensor pred_deg = scaled(stack.final_model.forward(x, true), kAngleScale);
                const LossResult l = wing_loss(pred_deg, t, cfg.wing_w, cfg.wing_eps);
                if (!std::isfinite(l.value)) {
                    abort_nonfinite("nohp-C", epoch, static_cast<int>(bi), l.value, 0.0);
                }
                opt.zero_grad();
                stack.final_model.backward(scaled(l.grad, kAngleScale));
                opt.step(lr);
                sum += l.value;
                collect_pairs(pred_deg, t, tp, tr);
            }
            EpochRecord rec;
            rec.epoch = epoch;
            rec.stage = "final";
            rec.lr = lr;
            rec.gaze_loss = sum / batches.size();
            rec.total_loss = rec.gaze_loss;
            rec.train_aem = aem(tp, tr);
            if (!tgt_val.empty() && cfg.val_every > 0 && (e + 1) % cfg.val_every == 0) {
                const Pipeline va_sem(tgt_val, EyeMerge::SEM, pre);
                const auto preds = predict_nohp(stack, va_sem);
                std::vector<AnglePair> vp, vr;
                for (int u = 0; u < va_sem.unit_count(); ++u) {
                    const InputUnit unit = va_sem.make_unit(u);
                    vp.push_back(preds[u]);
                    vr.push_back({unit.targets[0], unit.targets[1]});
                }
                rec.val_aem = aem(vp, vr);
                rec.val_vem = mean_vem(vp, vr);
            }
            rec.wall_seconds = elapsed(t0);
            history.epochs.push_back(rec);
        }
    }
    if (params_hash(frozen_det) != det_hash || params_hash(frozen_mods) != mods_hash) {
        throw std::logic_error("train_nohp: frozen components changed in stage C");
    }
    return history;
}

TrainHistory train_classifier(HgdModel& model, const Pipeline& train,
                              const Pipeline* val, const TrainConfig& cfg) {
    if (!model.config().classifier) {
        throw std::invalid_argument("train_classifier: model is not the classifier variant");
    }
    TrainHistory history;
    enable_cache_if_small(train);
    if (val) enable_cache_if_small(*val);

    std::vector<ParamRef> params;
    model.collect_params(params);
    Adam opt(std::move(params));
    const bool use_face = model.config().use_face_branch;

    auto zone_labels = [&cfg](const Pipeline& pipe, const std::vector<int>& idx, int* outside) {
        std::vector<int> labels;
        for (const int u : idx) {
            const InputUnit unit = pipe.make_unit(u);
            bool out = false;
            labels.push_back(cfg.zones.zone_of({unit.targets[0], unit.targets[1]}, &out) - 1);
            if (out && outside) ++*outside;
        }
        return labels;
    };

    const auto t0 = Clock::now();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_for_epoch(cfg.base_lr, epoch);
        const auto batches =
            batch_indices(train.unit_count(), cfg.batch_size, epoch_seed(cfg.seed, epoch));
        double ce_sum = 0.0, head_sum = 0.0;
        int outside = 0;
        for (size_t bi = 0; bi < batches.size(); ++bi) {
            const Batch b = assemble_batch(train, batches[bi]);
            const std::vector<int> labels = zone_labels(train, batches[bi], &outside);
            FaceForward ff;
            if (use_face) ff = model.forward_face(b.face, true);
            const Tensor logits =
                model.forward_gaze(b.eye, ff.head_feature, b.lda.size() ? &b.lda : nullptr, true);
            const LossResult cl = softmax_cross_entropy(logits, labels);

            double head_val = 0.0;
            Tensor dhead;
            if (use_face) {
                const Tensor head_deg = scaled(ff.head_pred, kAngleScale);
                const LossResult hl = wing_loss(head_deg, b.head, cfg.wing_w, cfg.wing_eps);
                head_val = hl.value;
                if (cfg.head_task && cfg.beta != 0.0) {
                    dhead = scaled(hl.grad, kAngleScale * cfg.beta);
                }
            }
            if (!std::isfinite(cl.value + head_val)) {
                abort_nonfinite("classifier", epoch, static_cast<int>(bi), cl.value, head_val);
            }
            opt.zero_grad();
            model.backward(cl.grad, dhead, false);
            opt.step(lr);
            ce_sum += cl.value;
            head_sum += head_val;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.stage = "classifier";
        rec.lr = lr;
        rec.gaze_loss = ce_sum / batches.size();
        rec.head_loss = use_face ? head_sum / batches.size() : NAN;
        rec.total_loss = rec.gaze_loss +
                         (cfg.head_task && use_face ? cfg.beta * (head_sum / batches.size()) : 0.0);
        rec.out_of_grid = outside;
        if (val && cfg.val_every > 0 && (epoch + 1) % cfg.val_every == 0) {
            // Validation accuracy.
            int correct = 0, total = 0;
            std::vector<int> idx;
            for (int i = 0; i < val->unit_count(); ++i) {
                idx.push_back(i);
                if (static_cast<int>(idx.size()) == cfg.batch_size || i + 1 == val->unit_count()) {
                    const Batch b = assemble_batch(*val, idx);
                    const std::vector<int> labels = zone_labels(*val, idx, nullptr);
                    Tensor head_feat;
                    if (use_face) head_feat = model.forward_face(b.face, false).head_feature;
                    const Tensor logits = model.forward_gaze(
                        b.eye, head_feat, b.lda.size() ? &b.lda : nullptr, false);
                    for (size_t r = 0; r < idx.size(); ++r) {
                        int arg = 0;
                        for (int k = 1; k < 9; ++k) {
                            if (logits.data[r * 9 + k] > logits.data[r * 9 + arg]) arg = k;
                        }
                        correct += arg == labels[r];
                        ++total;
                    }
                    idx.clear();
                }
            }
            rec.accuracy = static_cast<double>(correct) / total;
        }
        rec.wall_seconds = elapsed(t0);
        history.epochs.push_back(rec);
    }
    return history;
}

}  // namespace gazekit
