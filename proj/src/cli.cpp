#include "gazekit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <deque>
#include <map>
#include <optional>
#include <set>

#include "gazekit/eval.hpp"
#include "gazekit/report.hpp"
#include "gazekit/synth.hpp"
#include "gazekit/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gazekit {

namespace {

// Flat key=value run configuration: defaults, then the config file, then CLI
// overrides. Unknown keys in the file are rejected.
class RunOptions {
public:
    void declare(const std::string& key, const std::string& default_value) {
        values_[key] = default_value;
        known_.insert(key);
    }

    void load_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw CLI::ValidationError("--config", "cannot open config file: " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos) {
                    throw CLI::ValidationError(
                        "--config", "line " + std::to_string(lineno) + ": expected key=value");
                }
                continue;
            }
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            if (!known_.count(key)) {
                throw CLI::ValidationError("--config", "unknown key '" + key + "'");
            }
            values_[key] = val;
        }
    }

    void override_value(const std::string& key, const std::string& value) {
        values_[key] = value;
    }

    const std::string& str(const std::string& key) const { return values_.at(key); }
    double num(const std::string& key) const { return std::stod(values_.at(key)); }
    int integer(const std::string& key) const { return std::stoi(values_.at(key)); }
    uint64_t u64(const std::string& key) const { return std::stoull(values_.at(key)); }
    bool flag(const std::string& key) const {
        const std::string& v = values_.at(key);
        return v == "1" || v == "true" || v == "yes" || v == "on";
    }

    void echo(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        for (const auto& [k, v] : values_) f << k << " = " << v << "\n";
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> known_;
};

// Binds a CLI option to a RunOptions key; the CLI value wins when given.
struct Binder {
    CLI::App* cmd;
    RunOptions* opts;
    std::vector<std::pair<CLI::Option*, std::string>> bound;
    // deque: element references stay valid while binding more options
    std::shared_ptr<std::deque<std::string>> raw = std::make_shared<std::deque<std::string>>();

    void bind(const std::string& flag, const std::string& key, const std::string& default_value,
              const std::string& help) {
        opts->declare(key, default_value);
        raw->push_back("");
        auto* slot = &raw->back();
        auto* opt = cmd->add_option_function<std::string>(
            flag, [slot](const std::string& v) { *slot = v; },
            help + " [" + default_value + "]");
        bound.emplace_back(opt, key);
    }

    void apply() {
        size_t i = 0;
        for (auto& [opt, key] : bound) {
            if (opt->count() > 0) opts->override_value(key, (*raw)[i]);
            ++i;
        }
    }
};

std::string resolve_out_dir(const std::string& out, const std::string& command) {
    if (!out.empty()) return out;
    const char* root = std::getenv("GAZEKIT_OUT_ROOT");
    if (!root || !*root) {
        throw CLI::ValidationError("--out",
                                   "no output directory given and GAZEKIT_OUT_ROOT is unset");
    }
    return (fs::path(root) / command).string();
}

void prepare_out_dir(const std::string& out, bool force) {
    if (fs::exists(out) && !fs::is_empty(out)) {
        if (!force) {
            throw std::runtime_error("output directory not empty (use --force): " + out);
        }
    }
    fs::create_directories(out);
}

void require_outputs(const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        if (!fs::exists(p)) {
            throw std::runtime_error("declared output missing: " + p);
        }
    }
}

// ---- generate ----

int cmd_generate(const RunOptions& o, const std::string& out_dir, bool force) {
    prepare_out_dir(out_dir, force);
    GenConfig cfg;
    cfg.n = o.integer("n");
    if (cfg.n < 1) throw CLI::ValidationError("--n", "must be >= 1");
    cfg.seed = o.u64("seed");
    cfg.face_size = o.integer("face_size");
    cfg.eye_height = o.integer("eye_height");
    cfg.eye_width = o.integer("eye_width");
    cfg.train_fraction = o.num("train_fraction");
    cfg.subjects = o.integer("subjects");
    cfg.ranges.head_yaw = o.num("head_yaw");
    cfg.ranges.head_pitch = o.num("head_pitch");
    cfg.ranges.eye_yaw = o.num("eye_yaw");
    cfg.ranges.eye_pitch = o.num("eye_pitch");
    cfg.ranges.target_dist_min = o.num("target_dist_min");
    cfg.ranges.target_dist_max = o.num("target_dist_max");
    cfg.ranges.aperture_min = o.num("aperture_min");
    cfg.ranges.aperture_max = o.num("aperture_max");
    cfg.ranges.brightness_jitter = o.num("brightness_jitter");
    cfg.ranges.contrast_min = o.num("contrast_min");
    cfg.ranges.contrast_max = o.num("contrast_max");
    cfg.ranges.noise_sigma_max = o.num("noise_sigma_max");

    const std::string manifest = generate_dataset(cfg, out_dir);
    o.echo((fs::path(out_dir) / "run_config.cfg").string());
    require_outputs({manifest, (fs::path(out_dir) / "run_config.cfg").string()});
    std::cout << "wrote " << cfg.n << " samples; manifest: " << manifest << "\n";
    return 0;
}

// ---- shared model/run plumbing ----

PreprocOptions preproc_from(const RunOptions& o, const LdaTransform* lda) {
    PreprocOptions pre;
    pre.use_mhog = o.flag("mhog");
    pre.lda = lda;
    return pre;
}

int image_channels(bool mhog) { return mhog ? 1 + 3 : 1; }

json model_spec_json(const RunOptions& o, const std::string& regime, int lda_dim) {
    json spec;
    spec["kind"] = regime == "nohp" ? "nohp" : "hgd";
    spec["regime"] = regime;
    spec["depth"] = o.integer("depth");
    spec["strategy"] = o.str("strategy");
    spec["mhog"] = o.flag("mhog");
    spec["lda_dim"] = lda_dim;
    spec["use_face_branch"] = o.flag("face_branch");
    spec["classifier"] = regime == "classifier";
    spec["seed"] = o.u64("seed");
    spec["wing_w"] = o.num("wing_w");
    spec["wing_eps"] = o.num("wing_eps");
    spec["zones"] = {{"yaw_min", o.num("zone_yaw_min")},   {"yaw_max", o.num("zone_yaw_max")},
                     {"pitch_min", o.num("zone_pitch_min")}, {"pitch_max", o.num("zone_pitch_max")}};
    return spec;
}

HgdConfig hgd_config_from_spec(const json& spec) {
    HgdConfig mc;
    mc.backbone_depth = spec.at("depth").get<int>();
    const bool mhog = spec.at("mhog").get<bool>();
    const EyeMerge strategy = eye_merge_from_string(spec.at("strategy").get<std::string>());
    mc.face_channels = image_channels(mhog);
    mc.eye_channels = strategy == EyeMerge::BEC ? 2 * image_channels(mhog) : image_channels(mhog);
    mc.gaze_outputs = target_count(strategy);
    mc.lda_dim = spec.at("lda_dim").get<int>();
    mc.use_face_branch = spec.at("use_face_branch").get<bool>();
    mc.classifier = spec.at("classifier").get<bool>();
    mc.init_seed = spec.at("seed").get<uint64_t>();
    return mc;
}

ZoneGrid zones_from_spec(const json& spec) {
    ZoneGrid z;
    z.yaw_min = spec.at("zones").at("yaw_min").get<double>();
    z.yaw_max = spec.at("zones").at("yaw_max").get<double>();
    z.pitch_min = spec.at("zones").at("pitch_min").get<double>();
    z.pitch_max = spec.at("zones").at("pitch_max").get<double>();
    return z;
}

TrainConfig train_config_from(const RunOptions& o) {
    TrainConfig cfg;
    cfg.epochs = o.integer("epochs");
    cfg.batch_size = o.integer("batch_size");
    cfg.base_lr = o.num("lr");
    cfg.beta = o.num("beta");
    cfg.seed = o.u64("seed");
    cfg.wing_w = o.num("wing_w");
    cfg.wing_eps = o.num("wing_eps");
    cfg.head_task = o.flag("head_task");
    cfg.stop_train_aem = o.num("stop_train_aem");
    cfg.val_every = o.integer("val_every");
    cfg.plateau_improvement = o.num("plateau_improvement");
    cfg.plateau_patience = o.integer("plateau_patience");
    cfg.zones.yaw_min = o.num("zone_yaw_min");
    cfg.zones.yaw_max = o.num("zone_yaw_max");
    cfg.zones.pitch_min = o.num("zone_pitch_min");
    cfg.zones.pitch_max = o.num("zone_pitch_max");
    return cfg;
}

// Fits the LDA transform on the train split's left-eye descriptors.
LdaTransform fit_lda_for(const SampleSet& train_set, const HogConfig& hog) {
    std::vector<std::vector<float>> descriptors;
    std::vector<AnglePair> labels;
    for (const auto& s : train_set.samples) {
        descriptors.push_back(mhog_descriptor(train_set.load_left_eye(s), hog));
        labels.push_back(s.gaze_left);
    }
    return fit_lda(descriptors, labels);
}

// ---- train ----

int cmd_train(const RunOptions& o, const std::string& out_dir, bool force) {
    const std::string regime = o.str("regime");
    if (regime != "implicit" && regime != "explicit" && regime != "nohp" &&
        regime != "classifier") {
        throw CLI::ValidationError("--regime",
                                   "must be implicit, explicit, nohp or classifier");
    }
    const EyeMerge strategy = eye_merge_from_string(o.str("strategy"));
    prepare_out_dir(out_dir, force);

    const TrainConfig cfg = train_config_from(o);
    const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
    const std::string hist_path = (fs::path(out_dir) / "history.jsonl").string();

    TrainHistory history;
    if (regime == "nohp") {
        if (o.str("synth").empty() || o.str("target").empty()) {
            throw CLI::ValidationError("--synth/--target",
                                       "the nohp regime needs --synth and --target manifests");
        }
        if (o.flag("face_branch") && !o.str("manifest").empty()) {
            throw CLI::ValidationError("--regime", "nohp uses eye inputs only; pass --synth "
                                                   "and --target instead of --manifest");
        }
        const SampleSet synth = load_manifest(o.str("synth"));
        const SampleSet target = load_manifest(o.str("target"));
        const json spec = model_spec_json(o, regime, 0);
        NoHpConfig nc;
        nc.backbone_depth = spec.at("depth").get<int>();
        nc.eye_channels = image_channels(o.flag("mhog"));
        nc.init_seed = cfg.seed;
        NoHpStack stack(nc);
        const PreprocOptions pre = preproc_from(o, nullptr);
        history = train_nohp(stack, synth, target, cfg, pre);

        std::vector<ParamRef> params;
        stack.collect_params(params);
        save_checkpoint(ckpt_path, params, spec.dump(), cfg.seed);
    } else {
        if (o.str("manifest").empty()) {
            throw CLI::ValidationError("--manifest", "required for this regime");
        }
        const SampleSet set = load_manifest(o.str("manifest"));
        const SampleSet train_set = set.with_split("train");
        const SampleSet val_set = set.with_split("test");
        if (train_set.empty()) throw std::runtime_error("manifest has no train split");

        std::optional<LdaTransform> lda;
        int lda_dim = 0;
        if (o.flag("lda")) {
            lda = fit_lda_for(train_set, HogConfig{});
            lda->save((fs::path(out_dir) / "lda.bin").string());
            lda_dim = static_cast<int>(lda->projection.cols());
        }
        const json spec = model_spec_json(o, regime, lda_dim);
        HgdModel model(hgd_config_from_spec(spec));
        const PreprocOptions pre = preproc_from(o, lda ? &*lda : nullptr);
        const Pipeline train_pipe(train_set, strategy, pre);
        std::optional<Pipeline> val_pipe;
        if (!val_set.empty()) val_pipe.emplace(val_set, strategy, pre);

        if (regime == "implicit") {
            history = train_implicit(model, train_pipe, val_pipe ? &*val_pipe : nullptr, cfg);
        } else if (regime == "explicit") {
            if (!val_pipe) {
                throw std::runtime_error(
                    "explicit regime needs a test split for stage-1 convergence");
            }
            history = train_explicit(model, train_pipe, *val_pipe, cfg);
        } else {
            history = train_classifier(model, train_pipe, val_pipe ? &*val_pipe : nullptr, cfg);
        }
        std::vector<ParamRef> params;
        model.collect_params(params);
        save_checkpoint(ckpt_path, params, spec.dump(), cfg.seed);
    }

    history.save_jsonl(hist_path);
    o.echo((fs::path(out_dir) / "run_config.cfg").string());
    require_outputs({ckpt_path, ckpt_path + ".json", hist_path,
                     (fs::path(out_dir) / "run_config.cfg").string()});
    std::cout << "trained " << regime << "; checkpoint: " << ckpt_path << "\n";
    return 0;
}

// ---- eval / report ----

MetricsReport evaluate_checkpoint(const std::string& ckpt, const SampleSet& eval_set,
                                  bool classify, const std::string& lda_path) {
    const json spec = json::parse(read_checkpoint_config(ckpt));
    const EyeMerge strategy = eye_merge_from_string(spec.at("strategy").get<std::string>());

    std::optional<LdaTransform> lda;
    if (spec.at("lda_dim").get<int>() > 0) {
        lda = LdaTransform::load(lda_path);
    }
    PreprocOptions pre;
    pre.use_mhog = spec.at("mhog").get<bool>();
    pre.lda = lda ? &*lda : nullptr;

    if (spec.at("kind").get<std::string>() == "nohp") {
        NoHpConfig nc;
        nc.backbone_depth = spec.at("depth").get<int>();
        nc.eye_channels = image_channels(pre.use_mhog);
        nc.init_seed = spec.at("seed").get<uint64_t>();
        NoHpStack stack(nc);
        std::vector<ParamRef> params;
        stack.collect_params(params);
        load_checkpoint(ckpt, params);
        const Pipeline pipe(eval_set, EyeMerge::SEM, pre);
        return evaluate_nohp(stack, pipe, spec.dump());
    }

    HgdModel model(hgd_config_from_spec(spec));
    std::vector<ParamRef> params;
    model.collect_params(params);
    load_checkpoint(ckpt, params);
    const Pipeline pipe(eval_set, strategy, pre);
    if (classify || spec.at("classifier").get<bool>()) {
        return evaluate_classifier(model, pipe, zones_from_spec(spec), spec.dump());
    }
    return evaluate_hgd(model, pipe, spec.dump());
}

int cmd_eval(const RunOptions& o, const std::string& out_dir, bool force) {
    if (!fs::exists(o.str("checkpoint"))) {
        throw std::runtime_error("checkpoint not found: " + o.str("checkpoint"));
    }
    prepare_out_dir(out_dir, force);
    const SampleSet set = load_manifest(o.str("manifest"));
    const std::string split = o.str("split");
    const SampleSet eval_set = split == "all" ? set : set.with_split(split);
    if (eval_set.empty()) throw std::runtime_error("eval split '" + split + "' is empty");

    std::string lda_path = o.str("lda");
    if (lda_path.empty()) {
        lda_path = (fs::path(o.str("checkpoint")).parent_path() / "lda.bin").string();
    }
    const MetricsReport rep =
        evaluate_checkpoint(o.str("checkpoint"), eval_set, o.flag("classify"), lda_path);
    const auto files = render_reports(rep, TrainHistory{}, eval_set, out_dir);
    o.echo((fs::path(out_dir) / "run_config.cfg").string());
    require_outputs(files);
    std::cout << "aem " << rep.aem << " vem " << rep.vem;
    if (rep.has_confusion) std::cout << " accuracy " << rep.accuracy;
    std::cout << "\n";
    return 0;
}

int cmd_report(const RunOptions& o, const std::string& out_dir, bool force) {
    prepare_out_dir(out_dir, force);
    const TrainHistory history = TrainHistory::load_jsonl(o.str("history"));
    const SampleSet set = load_manifest(o.str("manifest"));
    const std::string split = o.str("split");
    const SampleSet eval_set = split == "all" ? set : set.with_split(split);

    MetricsReport rep;
    if (!o.str("checkpoint").empty()) {
        std::string lda_path = o.str("lda");
        if (lda_path.empty()) {
            lda_path = (fs::path(o.str("checkpoint")).parent_path() / "lda.bin").string();
        }
        rep = evaluate_checkpoint(o.str("checkpoint"), eval_set, o.flag("classify"), lda_path);
    }
    const auto files = render_reports(rep, history, eval_set, out_dir);
    o.echo((fs::path(out_dir) / "run_config.cfg").string());
    require_outputs(files);
    std::cout << "report written to " << out_dir << " (" << files.size() << " files)\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Head-pose-aware gaze estimation toolkit"};
    app.require_subcommand(1);

    struct CommonArgs {
        std::string config_file, out;
        bool force = false;
    };

    auto add_common = [](CLI::App* cmd, CommonArgs& args) {
        cmd->add_option("--config", args.config_file, "flat key=value config file");
        cmd->add_option("--out", args.out, "output directory (or $GAZEKIT_OUT_ROOT/<cmd>)");
        cmd->add_flag("--force", args.force, "allow writing into a non-empty directory");
    };

    // generate
    auto gen_opts = std::make_shared<RunOptions>();
    auto gen_args = std::make_shared<CommonArgs>();
    auto gen_bind = std::make_shared<Binder>();
    {
        CLI::App* cmd = app.add_subcommand("generate", "synthesize a labeled dataset");
        add_common(cmd, *gen_args);
        gen_bind->cmd = cmd;
        gen_bind->opts = gen_opts.get();
        gen_bind->bind("--n", "n", "1000", "number of samples");
        gen_bind->bind("--seed", "seed", "1", "generation seed");
        gen_bind->bind("--face-size", "face_size", "224", "face image size");
        gen_bind->bind("--eye-height", "eye_height", "64", "eye crop height");
        gen_bind->bind("--eye-width", "eye_width", "96", "eye crop width");
        gen_bind->bind("--train-fraction", "train_fraction", "0.9", "train split fraction");
        gen_bind->bind("--subjects", "subjects", "50", "synthetic subject count");
        gen_bind->bind("--head-yaw", "head_yaw", "30", "head yaw range (+-deg)");
        gen_bind->bind("--head-pitch", "head_pitch", "20", "head pitch range");
        gen_bind->bind("--eye-yaw", "eye_yaw", "30", "eye-in-head yaw range");
        gen_bind->bind("--eye-pitch", "eye_pitch", "20", "eye-in-head pitch range");
        gen_bind->bind("--target-dist-min", "target_dist_min", "4", "nearest fixation distance");
        gen_bind->bind("--target-dist-max", "target_dist_max", "20", "farthest fixation distance");
        gen_bind->bind("--aperture-min", "aperture_min", "0.6", "eyelid openness lower bound");
        gen_bind->bind("--aperture-max", "aperture_max", "1.0", "eyelid openness upper bound");
        gen_bind->bind("--brightness-jitter", "brightness_jitter", "0.18", "brightness range");
        gen_bind->bind("--contrast-min", "contrast_min", "0.85", "contrast lower bound");
        gen_bind->bind("--contrast-max", "contrast_max", "1.15", "contrast upper bound");
        gen_bind->bind("--noise-sigma-max", "noise_sigma_max", "0.02", "noise sigma upper bound");
    }

    // train
    auto train_opts = std::make_shared<RunOptions>();
    auto train_args = std::make_shared<CommonArgs>();
    auto train_bind = std::make_shared<Binder>();
    {
        CLI::App* cmd = app.add_subcommand("train", "train a model");
        add_common(cmd, *train_args);
        train_bind->cmd = cmd;
        train_bind->opts = train_opts.get();
        train_bind->bind("--regime", "regime", "implicit",
                         "implicit | explicit | nohp | classifier");
        train_bind->bind("--manifest", "manifest", "", "dataset manifest (hgd regimes)");
        train_bind->bind("--synth", "synth", "", "synthetic manifest (nohp)");
        train_bind->bind("--target", "target", "", "target manifest (nohp)");
        train_bind->bind("--epochs", "epochs", "100", "epochs per stage");
        train_bind->bind("--batch-size", "batch_size", "64", "batch size");
        train_bind->bind("--lr", "lr", "1e-4", "initial step size (decays x0.1 per 30 epochs)");
        train_bind->bind("--beta", "beta", "0.3", "head-loss weakening factor");
        train_bind->bind("--seed", "seed", "1", "training seed");
        train_bind->bind("--strategy", "strategy", "bec", "eye strategy: sem|beh|bev|bec");
        train_bind->bind("--mhog", "mhog", "0", "append mHoG channels");
        train_bind->bind("--lda", "lda", "0", "fit and append the LDA fusion vector");
        train_bind->bind("--depth", "depth", "34", "backbone depth: 10|18|34|56|101");
        train_bind->bind("--wing-w", "wing_w", "10", "wing loss w (degrees)");
        train_bind->bind("--wing-eps", "wing_eps", "2", "wing loss eps");
        train_bind->bind("--head-task", "head_task", "1", "enable the head-pose task");
        train_bind->bind("--face-branch", "face_branch", "1", "enable the face branch");
        train_bind->bind("--val-every", "val_every", "1", "validation cadence (0 = off)");
        train_bind->bind("--stop-train-aem", "stop_train_aem", "0",
                         "early stop under this train AEM (0 = off)");
        train_bind->bind("--plateau-improvement", "plateau_improvement", "0.05",
                         "stage-1 plateau threshold (deg)");
        train_bind->bind("--plateau-patience", "plateau_patience", "10",
                         "stage-1 plateau patience (epochs)");
        train_bind->bind("--zone-yaw-min", "zone_yaw_min", "-60", "classifier grid yaw min");
        train_bind->bind("--zone-yaw-max", "zone_yaw_max", "60", "classifier grid yaw max");
        train_bind->bind("--zone-pitch-min", "zone_pitch_min", "-30", "classifier grid pitch min");
        train_bind->bind("--zone-pitch-max", "zone_pitch_max", "30", "classifier grid pitch max");
    }

    // eval
    auto eval_opts = std::make_shared<RunOptions>();
    auto eval_args = std::make_shared<CommonArgs>();
    auto eval_bind = std::make_shared<Binder>();
    {
        CLI::App* cmd = app.add_subcommand("eval", "evaluate a checkpoint");
        add_common(cmd, *eval_args);
        eval_bind->cmd = cmd;
        eval_bind->opts = eval_opts.get();
        eval_bind->bind("--checkpoint", "checkpoint", "", "model checkpoint path");
        eval_bind->bind("--manifest", "manifest", "", "dataset manifest");
        eval_bind->bind("--split", "split", "test", "split tag to evaluate (or 'all')");
        eval_bind->bind("--classify", "classify", "0", "zone-classifier evaluation");
        eval_bind->bind("--lda", "lda", "", "LDA sidecar (defaults next to the checkpoint)");
    }

    // report
    auto report_opts = std::make_shared<RunOptions>();
    auto report_args = std::make_shared<CommonArgs>();
    auto report_bind = std::make_shared<Binder>();
    {
        CLI::App* cmd = app.add_subcommand("report", "render plots and a summary for a run");
        add_common(cmd, *report_args);
        report_bind->cmd = cmd;
        report_bind->opts = report_opts.get();
        report_bind->bind("--history", "history", "", "training history (history.jsonl)");
        report_bind->bind("--manifest", "manifest", "", "dataset manifest");
        report_bind->bind("--split", "split", "test", "split tag (or 'all')");
        report_bind->bind("--checkpoint", "checkpoint", "", "optional checkpoint for metrics");
        report_bind->bind("--classify", "classify", "0", "zone-classifier evaluation");
        report_bind->bind("--lda", "lda", "", "LDA sidecar path");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        auto run = [&](const char* name, RunOptions& opts, CommonArgs& args, Binder& bind,
                       int (*fn)(const RunOptions&, const std::string&, bool)) -> std::optional<int> {
            if (!app.get_subcommand(name)->parsed()) return std::nullopt;
            if (!args.config_file.empty()) opts.load_file(args.config_file);
            bind.apply();
            return fn(opts, resolve_out_dir(args.out, name), args.force);
        };
        if (auto rc = run("generate", *gen_opts, *gen_args, *gen_bind, cmd_generate)) return *rc;
        if (auto rc = run("train", *train_opts, *train_args, *train_bind, cmd_train)) return *rc;
        if (auto rc = run("eval", *eval_opts, *eval_args, *eval_bind, cmd_eval)) return *rc;
        if (auto rc = run("report", *report_opts, *report_args, *report_bind, cmd_report)) return *rc;
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gazekit
