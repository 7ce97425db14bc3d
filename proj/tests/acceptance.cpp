// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier training criteria run on small synthetic datasets
// generated into the system temp directory.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "gazekit/eval.hpp"
#include "gazekit/loss.hpp"
#include "gazekit/report.hpp"
#include "gazekit/synth.hpp"
#include "gazekit/train.hpp"

using namespace gazekit;
namespace fs = std::filesystem;

namespace {

struct Failure {
    std::string what;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw Failure{what};
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

class Suite {
public:
    void run(int id, const std::string& name, const std::function<std::string()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const std::string detail = body();
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::printf("[PASS] criterion %2d: %s — %s (%.1fs)\n", id, name.c_str(),
                        detail.c_str(), secs);
        } catch (const Failure& f) {
            std::printf("[FAIL] criterion %2d: %s — %s\n", id, name.c_str(), f.what.c_str());
            ++failures;
        } catch (const std::exception& e) {
            std::printf("[FAIL] criterion %2d: %s — exception: %s\n", id, name.c_str(), e.what());
            ++failures;
        }
        std::fflush(stdout);
    }

    int failures = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

fs::path workdir() {
    static const fs::path dir = [] {
        const fs::path p = fs::temp_directory_path() / "gazekit_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

// Overfit dataset: 256 samples, single split.
const SampleSet& overfit_data() {
    static const SampleSet set = [] {
        GenConfig g;
        g.n = 256;
        g.seed = 5;
        g.face_size = 64;
        g.eye_height = 32;
        g.eye_width = 48;
        g.train_fraction = 1.0;
        g.subjects = 16;
        return load_manifest(generate_dataset(g, (workdir() / "overfit").string()));
    }();
    return set;
}

// Ablation/classifier dataset: head range +-30 deg, 200 train / 40 test.
const SampleSet& ablation_data() {
    static const SampleSet set = [] {
        GenConfig g;
        g.n = 240;
        g.seed = 21;
        g.face_size = 48;
        g.eye_height = 24;
        g.eye_width = 36;
        g.train_fraction = 0.8333333;
        g.subjects = 12;
        g.ranges.head_yaw = 30;
        g.ranges.head_pitch = 20;
        g.ranges.eye_yaw = 25;
        g.ranges.eye_pitch = 15;
        return load_manifest(generate_dataset(g, (workdir() / "ablation").string()));
    }();
    return set;
}

// noHP dataset: 64x96 eye crops with landmark labels.
const SampleSet& nohp_data() {
    static const SampleSet set = [] {
        GenConfig g;
        g.n = 320;
        g.seed = 33;
        g.face_size = 32;
        g.eye_height = 64;
        g.eye_width = 96;
        g.train_fraction = 0.8;
        g.subjects = 16;
        return load_manifest(generate_dataset(g, (workdir() / "nohp").string()));
    }();
    return set;
}

// Small dataset for freeze/equivalence/determinism criteria.
const SampleSet& small_data() {
    static const SampleSet set = [] {
        GenConfig g;
        g.n = 40;
        g.seed = 4242;
        g.face_size = 32;
        g.eye_height = 24;
        g.eye_width = 36;
        g.train_fraction = 0.8;
        g.subjects = 8;
        return load_manifest(generate_dataset(g, (workdir() / "small").string()));
    }();
    return set;
}

HgdConfig hgd_config(EyeMerge strategy, bool face, bool classifier, uint64_t seed) {
    HgdConfig mc;
    mc.backbone_depth = 10;
    mc.eye_channels = strategy == EyeMerge::BEC ? 2 : 1;
    mc.gaze_outputs = target_count(strategy);
    mc.use_face_branch = face;
    mc.classifier = classifier;
    mc.init_seed = seed;
    return mc;
}

std::string criterion_metric_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1);
    double worst_vem = 0.0, worst_aem = 0.0;
    std::vector<AnglePair> preds, refs;
    for (int i = 0; i < 10000; ++i) {
        const AnglePair a{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        const AnglePair b{rng.uniform(-80, 80), rng.uniform(-80, 80)};
        // Oracle: explicit vector construction and clamped arccos.
        const double py = a.yaw * M_PI / 180, pp = a.pitch * M_PI / 180;
        const double ry = b.yaw * M_PI / 180, rp = b.pitch * M_PI / 180;
        const double dot = std::cos(pp) * std::sin(py) * std::cos(rp) * std::sin(ry) +
                           std::sin(pp) * std::sin(rp) +
                           std::cos(pp) * std::cos(py) * std::cos(rp) * std::cos(ry);
        const double oracle = std::acos(std::clamp(dot, -1.0, 1.0)) * 180 / M_PI;
        worst_vem = std::max(worst_vem, std::abs(vem(a, b) - oracle));
        preds.push_back(a);
        refs.push_back(b);
    }
    double loop_sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        loop_sum += std::abs(preds[i].yaw - refs[i].yaw) +
                    std::abs(preds[i].pitch - refs[i].pitch);
    }
    worst_aem = std::abs(aem(preds, refs) - loop_sum / (2.0 * preds.size()));
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    require(worst_vem < 1e-9, fmt("vem deviates from the oracle by %.3e deg", worst_vem));
    require(worst_aem < 1e-12, fmt("aem deviates from the oracle by %.3e deg", worst_aem));
    require(secs < 5.0, fmt("runtime %.2fs exceeds 5s", secs));
    return fmt("10000 pairs, vem err %.1e, aem err %.1e", worst_vem, worst_aem);
}

std::string criterion_roundtrip() {
    Rng rng(2);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const AnglePair a{rng.uniform(-89, 89), rng.uniform(-89, 89)};
        const AnglePair b = vector_to_angles(angles_to_vector(a));
        worst = std::max({worst, std::abs(b.yaw - a.yaw), std::abs(b.pitch - a.pitch)});
    }
    require(worst < 1e-9, fmt("round-trip error %.3e deg", worst));
    return fmt("10000 points, worst %.1e deg", worst);
}

std::string criterion_range_doubling() {
    double lo = 0.0, hi = 0.0;
    for (double hy = -30.0; hy <= 30.0 + 1e-12; hy += 0.5) {
        for (double ey = -30.0; ey <= 30.0 + 1e-12; ey += 0.5) {
            const double yaw = compose_gaze({hy, 0}, {ey, 0}).yaw;
            lo = std::min(lo, yaw);
            hi = std::max(hi, yaw);
        }
    }
    require(std::abs(hi - 60.0) < 1e-6, fmt("max composed yaw %.9f", hi));
    require(std::abs(lo + 60.0) < 1e-6, fmt("min composed yaw %.9f", lo));
    return fmt("extremes %.7f / %.7f", lo, hi);
}

std::string criterion_wing_loss() {
    const double w = 10.0, eps = 2.0;
    const double knee_gap =
        std::abs(wing_loss_value(w - 1e-9, w, eps) - wing_loss_value(w + 1e-9, w, eps));
    require(knee_gap < 1e-6, fmt("knee discontinuity %.3e", knee_gap));

    const double expect = 10.0 + 10.0 * std::log(6.0);
    const double got = wing_loss_value(20.0, w, eps);
    require(std::abs(got - expect) < 1e-9, fmt("wing(20) = %.12f, expected %.12f", got, expect));

    Rng rng(4);
    int checked = 0;
    double worst_rel = 0.0;
    const double h = 1e-5;
    while (checked < 100) {
        const double x = rng.uniform(-30, 30);
        if (std::abs(std::abs(x) - w) <= 1e-3 || std::abs(x) < 0.1) continue;
        const double fd = (wing_loss_value(x + h, w, eps) - wing_loss_value(x - h, w, eps)) / (2 * h);
        Tensor p({1, 1}), t({1, 1});
        p.data[0] = static_cast<float>(x);
        const double analytic = wing_loss(p, t, w, eps).grad.data[0];
        worst_rel = std::max(worst_rel, std::abs(analytic - fd) / std::abs(fd));
        ++checked;
    }
    require(worst_rel < 1e-4, fmt("gradient rel err %.3e", worst_rel));
    return fmt("knee gap %.1e, FD rel err %.1e", knee_gap, worst_rel);
}

std::string criterion_shapes() {
    // BEC on the published input size.
    MultiImage l(224, 224, 1), r(224, 224, 1);
    const MultiImage bec = merge_eyes(l, r, EyeMerge::BEC);
    require(bec.height == 224 && bec.width == 224 && bec.channels == 2,
            "BEC output is not (224, 224, 2)");

    // HGD hidden feature widths: 64-wide head feature fused with the 64-wide
    // gaze feature into a 128-wide fusion input.
    HgdModel model(hgd_config(EyeMerge::BEC, true, false, 1));
    require(model.config().fusion_input_width() == 128, "fusion input width is not 64 + 64");
    Tensor face({2, 1, 32, 32}), eye({2, 2, 24, 36});
    const FaceForward ff = model.forward_face(face, false);
    require(ff.head_feature.shape == std::vector<int>{2, 64}, "head feature is not 64-wide");
    require(ff.head_pred.shape == std::vector<int>{2, 2}, "head prediction is not 2-wide");
    const Tensor out = model.forward_gaze(eye, ff.head_feature, nullptr, false);
    require(out.shape == std::vector<int>{2, 4}, "BEC gaze output is not 4-wide");

    // noHP widths: 32 landmark outputs, 200-unit detector feature, 200-unit
    // module taps, 600-wide final input, 2 final outputs.
    NoHpConfig nc;
    nc.backbone_depth = 10;
    nc.init_seed = 2;
    LandmarkDetector det(nc);
    Tensor crop({2, 1, 64, 96});
    const LandmarkForward lf = det.forward(crop, false);
    require(lf.coords.shape == std::vector<int>{2, 32}, "landmark output is not 32-wide");
    require(lf.feature.shape == std::vector<int>{2, 200}, "detector feature is not 200-wide");
    AuxModule aux(3);
    const AuxForward af = aux.forward(lf.feature, false);
    require(af.tap.shape == std::vector<int>{2, 200}, "module tap is not 200-wide");
    require(af.pred.shape == std::vector<int>{2, 2}, "module prediction is not 2-wide");
    FinalGazeModel fin(4);
    Tensor concat({2, 600});
    require(fin.forward(concat, false).shape == std::vector<int>{2, 2},
            "final model output is not 2-wide");
    bool rejected = false;
    try {
        Tensor bad({2, 599});
        fin.forward(bad, false);
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    require(rejected, "final model accepted a 599-wide input");
    return "BEC 224->2ch, HGD 64/64, noHP 32/200/200/600/2";
}

std::string criterion_freeze() {
    const SampleSet& set = small_data();
    const Pipeline pipe(set.with_split("train"), EyeMerge::BEC, {});

    // Explicit stage 2: face branch frozen across >= 10 gaze updates.
    HgdModel model(hgd_config(EyeMerge::BEC, true, false, 11));
    std::vector<ParamRef> face_params;
    model.collect_face_params(face_params);
    const std::string face_before = params_hash(face_params);
    {
        std::vector<ParamRef> gaze_params;
        model.collect_gaze_params(gaze_params);
        Adam opt(std::move(gaze_params));
        for (int step = 0; step < 12; ++step) {
            const Batch b = assemble_batch(pipe, batch_indices(pipe.unit_count(), 8, step)[0]);
            const FaceForward ff = model.forward_face(b.face, false);
            Tensor out = model.forward_gaze(b.eye, ff.head_feature, nullptr, true);
            for (auto& v : out.data) v *= static_cast<float>(kAngleScale);
            LossResult l = wing_loss(out, b.targets);
            for (auto& v : l.grad.data) v *= static_cast<float>(kAngleScale);
            opt.zero_grad();
            model.backward(l.grad, Tensor(), true);
            opt.step(1e-3);
        }
    }
    require(params_hash(face_params) == face_before,
            "explicit stage 2 modified frozen face parameters");

    // noHP stages B and C: detector (and later the modules) frozen.
    NoHpConfig nc;
    nc.backbone_depth = 10;
    nc.init_seed = 12;
    NoHpStack stack(nc);
    const Pipeline sem(set.with_split("train"), EyeMerge::SEM, {});
    std::vector<ParamRef> det_params;
    stack.detector.collect_params(det_params);
    const std::string det_before = params_hash(det_params);
    const Tensor feats = detector_features(stack.detector, sem);
    {
        std::vector<ParamRef> mod_params;
        stack.gaze_module.collect_params("gaze_module", mod_params);
        Adam opt(std::move(mod_params));
        Tensor gaze_t({sem.unit_count(), 2});
        for (int i = 0; i < sem.unit_count(); ++i) {
            const InputUnit u = sem.make_unit(i);
            gaze_t.data[2 * i] = static_cast<float>(u.targets[0]);
            gaze_t.data[2 * i + 1] = static_cast<float>(u.targets[1]);
        }
        for (int step = 0; step < 12; ++step) {
            const AuxForward af = stack.gaze_module.forward(feats, true);
            Tensor pred = af.pred;
            for (auto& v : pred.data) v *= static_cast<float>(kAngleScale);
            LossResult l = wing_loss(pred, gaze_t);
            for (auto& v : l.grad.data) v *= static_cast<float>(kAngleScale);
            opt.zero_grad();
            stack.gaze_module.backward(l.grad, Tensor());
            opt.step(1e-3);
        }
    }
    require(params_hash(det_params) == det_before, "noHP stage B modified the frozen detector");

    std::vector<ParamRef> mod_params;
    stack.gaze_module.collect_params("gaze_module", mod_params);
    stack.head_module.collect_params("head_module", mod_params);
    const std::string mods_before = params_hash(mod_params);
    {
        std::vector<ParamRef> fin_params;
        stack.final_model.collect_params(fin_params);
        Adam opt(std::move(fin_params));
        const AuxForward gf = stack.gaze_module.forward(feats, false);
        const AuxForward hf = stack.head_module.forward(feats, false);
        Tensor concat({feats.dim(0), 600});
        for (int i = 0; i < feats.dim(0); ++i) {
            std::copy_n(feats.ptr() + i * 200, 200, concat.ptr() + i * 600);
            std::copy_n(gf.tap.ptr() + i * 200, 200, concat.ptr() + i * 600 + 200);
            std::copy_n(hf.tap.ptr() + i * 200, 200, concat.ptr() + i * 600 + 400);
        }
        Tensor target({feats.dim(0), 2});
        for (int step = 0; step < 12; ++step) {
            const Tensor pred = stack.final_model.forward(concat, true);
            LossResult l = wing_loss(pred, target);
            opt.zero_grad();
            stack.final_model.backward(l.grad);
            opt.step(1e-3);
        }
    }
    require(params_hash(det_params) == det_before, "noHP stage C modified the frozen detector");
    require(params_hash(mod_params) == mods_before, "noHP stage C modified the frozen modules");
    return "face, detector and module parameters bit-identical over 12 updates";
}

std::string criterion_beta_zero() {
    const SampleSet& set = small_data();
    const Pipeline pipe(set.with_split("train"), EyeMerge::BEC, {});

    TrainConfig beta0;
    beta0.epochs = 2;
    beta0.batch_size = 8;
    beta0.base_lr = 1e-3;
    beta0.seed = 13;
    beta0.beta = 0.0;
    beta0.val_every = 0;
    HgdModel a(hgd_config(EyeMerge::BEC, true, false, 13));
    train_implicit(a, pipe, nullptr, beta0);

    TrainConfig gaze_only = beta0;
    gaze_only.beta = 0.3;
    gaze_only.head_task = false;
    HgdModel b(hgd_config(EyeMerge::BEC, true, false, 13));
    train_implicit(b, pipe, nullptr, gaze_only);

    std::vector<ParamRef> pa, pb;
    a.collect_params(pa);
    b.collect_params(pb);
    require(pa.size() == pb.size(), "parameter lists differ");
    double worst = 0.0;
    for (size_t i = 0; i < pa.size(); ++i) {
        for (size_t j = 0; j < pa[i].value->data.size(); ++j) {
            worst = std::max<double>(
                worst, std::abs(pa[i].value->data[j] - pb[i].value->data[j]));
        }
    }
    require(worst <= 1e-7, fmt("parameter difference %.3e exceeds 1e-7", worst));
    return fmt("max parameter difference %.1e", worst);
}

std::string criterion_overfit() {
    const auto t0 = std::chrono::steady_clock::now();
    const SampleSet& set = overfit_data();
    const Pipeline pipe(set.with_split("train"), EyeMerge::SEM, {});
    HgdModel model(hgd_config(EyeMerge::SEM, true, false, 9));
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.base_lr = 1e-3;
    cfg.seed = 9;
    cfg.val_every = 0;
    cfg.stop_train_aem = 2.9;
    const TrainHistory h = train_implicit(model, pipe, nullptr, cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double final_aem = h.epochs.back().train_aem;
    require(final_aem < 3.0,
            fmt("train AEM %.3f after %zu epochs", final_aem, h.epochs.size()));
    require(secs < 1800.0, fmt("runtime %.0fs exceeds 30 minutes", secs));
    return fmt("256 samples, train AEM %.2f deg at epoch %d, %.0fs", final_aem,
               h.epochs.back().epoch, secs);
}

std::string criterion_ablation() {
    const SampleSet& set = ablation_data();
    const Pipeline trp(set.with_split("train"), EyeMerge::BEC, {});
    const Pipeline tep(set.with_split("test"), EyeMerge::BEC, {});

    auto run = [&](bool face, uint64_t seed) {
        HgdModel m(hgd_config(EyeMerge::BEC, face, false, seed));
        TrainConfig cfg;
        cfg.epochs = 12;
        cfg.batch_size = 16;
        cfg.base_lr = 1e-3;
        cfg.seed = seed;
        cfg.val_every = cfg.epochs;  // validate on the final epoch
        const TrainHistory h = train_implicit(m, trp, &tep, cfg);
        return h.epochs.back().val_aem;
    };
    std::vector<double> with, without;
    for (const uint64_t seed : {101ull, 202ull, 303ull}) {
        with.push_back(run(true, seed));
        without.push_back(run(false, seed));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double mw = median(with), mwo = median(without);
    require(mw < mwo, fmt("median with-face %.3f is not below without-face %.3f", mw, mwo));
    return fmt("median val AEM %.2f (with face) vs %.2f (without)", mw, mwo);
}

std::string criterion_nohp() {
    const SampleSet& set = nohp_data();
    NoHpConfig nc;
    nc.backbone_depth = 10;
    nc.init_seed = 17;
    NoHpStack stack(nc);
    TrainConfig cfg;
    cfg.epochs = 34;
    cfg.batch_size = 16;
    cfg.base_lr = 1e-3;
    cfg.seed = 17;
    cfg.val_every = 17;
    const TrainHistory h = train_nohp(stack, set, set, cfg, {});

    double final_lm = NAN;
    for (const auto& r : h.epochs) {
        if (r.stage == "landmarks") final_lm = r.landmark_px;
    }
    require(final_lm < 3.0, fmt("landmark error %.3f px on 64x96 crops", final_lm));

    NoHpStack fresh(nc);
    const Pipeline tep(set.with_split("test"), EyeMerge::SEM, {});
    const double baseline = evaluate_nohp(fresh, tep).aem;
    const double trained = evaluate_nohp(stack, tep).aem;
    require(std::isfinite(trained), "trained AEM not finite");
    require(trained <= 0.5 * baseline,
            fmt("trained AEM %.2f not 50%% under the untrained %.2f", trained, baseline));
    return fmt("landmarks %.2f px; final AEM %.2f vs untrained %.2f", final_lm, trained,
               baseline);
}

std::string criterion_classifier() {
    const SampleSet& set = ablation_data();
    const Pipeline trp(set.with_split("train"), EyeMerge::BEC, {});
    const Pipeline tep(set.with_split("test"), EyeMerge::BEC, {});
    HgdModel m(hgd_config(EyeMerge::BEC, true, true, 7));
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 16;
    cfg.base_lr = 1e-3;
    cfg.seed = 7;
    cfg.val_every = 0;
    cfg.zones.pitch_min = -45;
    cfg.zones.pitch_max = 45;
    train_classifier(m, trp, nullptr, cfg);

    const MetricsReport rep = evaluate_classifier(m, tep, cfg.zones);
    double worst_row = 0.0;
    for (int r = 1; r <= 9; ++r) {
        if (!rep.conf.row_has_support[r - 1]) continue;
        double s = 0.0;
        for (int c = 1; c <= 9; ++c) s += rep.conf.rate(r, c);
        worst_row = std::max(worst_row, std::abs(s - 1.0));
    }
    require(worst_row < 1e-9, fmt("confusion row sum off by %.3e", worst_row));
    require(rep.accuracy >= 0.33, fmt("accuracy %.3f below 3x chance", rep.accuracy));
    return fmt("accuracy %.2f, worst row-sum error %.1e", rep.accuracy, worst_row);
}

std::string criterion_determinism() {
    // generate: byte-identical outputs for a fixed seed.
    GenConfig g;
    g.n = 24;
    g.seed = 77;
    g.face_size = 32;
    g.eye_height = 24;
    g.eye_width = 36;
    g.subjects = 6;
    const fs::path da = workdir() / "det_a";
    const fs::path db = workdir() / "det_b";
    const std::string ma = generate_dataset(g, da.string());
    const std::string mb = generate_dataset(g, db.string());
    require(slurp(ma) == slurp(mb), "manifests differ for the same seed");
    require(slurp(da / "images/face_000007.png") == slurp(db / "images/face_000007.png"),
            "face images differ for the same seed");
    require(slurp(da / "images/left_000011.png") == slurp(db / "images/left_000011.png"),
            "eye images differ for the same seed");

    // train: history metrics reproduce within 1e-6.
    const SampleSet& set = small_data();
    const Pipeline pipe(set.with_split("train"), EyeMerge::BEC, {});
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.base_lr = 1e-3;
    cfg.seed = 31;
    cfg.val_every = 0;
    HgdModel m1(hgd_config(EyeMerge::BEC, true, false, 31));
    HgdModel m2(hgd_config(EyeMerge::BEC, true, false, 31));
    const TrainHistory h1 = train_implicit(m1, pipe, nullptr, cfg);
    const TrainHistory h2 = train_implicit(m2, pipe, nullptr, cfg);
    require(h1.epochs.size() == h2.epochs.size(), "history lengths differ");
    double worst = 0.0;
    for (size_t i = 0; i < h1.epochs.size(); ++i) {
        worst = std::max({worst, std::abs(h1.epochs[i].gaze_loss - h2.epochs[i].gaze_loss),
                          std::abs(h1.epochs[i].head_loss - h2.epochs[i].head_loss),
                          std::abs(h1.epochs[i].train_aem - h2.epochs[i].train_aem)});
    }
    require(worst <= 1e-6, fmt("history metrics differ by %.3e", worst));

    // eval: identical metrics and byte-identical summaries.
    const SampleSet test_set = set.with_split("test");
    const Pipeline tep(test_set, EyeMerge::BEC, {});
    const MetricsReport r1 = evaluate_hgd(m1, tep);
    const MetricsReport r2 = evaluate_hgd(m2, tep);
    require(r1.aem == r2.aem && r1.vem == r2.vem, "evaluation metrics differ across runs");
    const fs::path ra = workdir() / "rep_a";
    const fs::path rb = workdir() / "rep_b";
    render_reports(r1, h1, test_set, ra.string());
    render_reports(r2, h2, test_set, rb.string());
    require(slurp(ra / "summary.json") == slurp(rb / "summary.json"),
            "summary files differ across runs");
    return fmt("manifests hash-equal; history metric delta %.1e", worst);
}

}  // namespace

int main() {
    Suite suite;
    suite.run(1, "metric oracle equivalence", criterion_metric_oracles);
    suite.run(2, "angle/vector round-trip", criterion_roundtrip);
    suite.run(3, "gaze-range doubling", criterion_range_doubling);
    suite.run(4, "wing loss form and gradient", criterion_wing_loss);
    suite.run(5, "shape contracts", criterion_shapes);
    suite.run(6, "freeze invariants", criterion_freeze);
    suite.run(7, "beta=0 equals gaze-only training", criterion_beta_zero);
    suite.run(8, "overfit sanity", criterion_overfit);
    suite.run(9, "directional face-branch ablation", criterion_ablation);
    suite.run(10, "noHP landmark and final-model gains", criterion_nohp);
    suite.run(11, "9-zone classifier", criterion_classifier);
    suite.run(12, "end-to-end determinism", criterion_determinism);

    if (suite.failures == 0) {
        std::printf("acceptance: all 12 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", suite.failures);
    return 1;
}
