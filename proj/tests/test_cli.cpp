#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gazekit/cli.hpp"
#include "gazekit/manifest.hpp"
#include "gazekit/train.hpp"

using namespace gazekit;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"gazekit"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("gazekit_cli_" + tag);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

// One small generated dataset reused by the train/eval/report cases.
const fs::path& cli_dataset() {
    static const fs::path dir = [] {
        const fs::path p = fresh_dir("data");
        REQUIRE(cli({"generate", "--n", "16", "--seed", "3", "--face-size", "32",
                     "--eye-height", "32", "--eye-width", "48", "--train-fraction", "0.75",
                     "--subjects", "4", "--out", p.string()}) == 0);
        return p;
    }();
    return dir;
}

}  // namespace

TEST_CASE("generate: record count, determinism, usage errors") {
    const fs::path a = fresh_dir("gen_a");
    const fs::path b = fresh_dir("gen_b");
    const std::vector<std::string> common = {
        "--n",          "12",  "--seed",      "7",  "--face-size", "32",
        "--eye-height", "32",  "--eye-width", "48", "--subjects",  "3"};
    std::vector<std::string> args_a = {"generate"};
    args_a.insert(args_a.end(), common.begin(), common.end());
    args_a.push_back("--out");
    args_a.push_back(a.string());
    REQUIRE(cli(args_a) == 0);
    const SampleSet set = load_manifest((a / "manifest.jsonl").string());
    CHECK(set.size() == 12);

    std::vector<std::string> args_b = {"generate"};
    args_b.insert(args_b.end(), common.begin(), common.end());
    args_b.push_back("--out");
    args_b.push_back(b.string());
    REQUIRE(cli(args_b) == 0);
    CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
    CHECK(slurp(a / "images/face_000005.png") == slurp(b / "images/face_000005.png"));

    // n = 0 is a usage error.
    CHECK(cli({"generate", "--n", "0", "--out", fresh_dir("gen_zero").string()}) != 0);

    // Refuses a non-empty output directory without --force.
    CHECK(cli(args_a) != 0);
    args_a.push_back("--force");
    CHECK(cli(args_a) == 0);
}

TEST_CASE("config file with CLI overrides; unknown keys rejected") {
    const fs::path dir = fresh_dir("cfg");
    fs::create_directories(dir);
    const fs::path cfg = dir / "gen.cfg";
    {
        std::ofstream f(cfg);
        f << "# sample config\n";
        f << "n = 6\n";
        f << "seed = 11\n";
        f << "face_size = 32\n";
        f << "eye_height = 32\n";
        f << "eye_width = 48\n";
    }
    const fs::path out = fresh_dir("cfg_out");
    // CLI --n overrides the file's n = 6.
    REQUIRE(cli({"generate", "--config", cfg.string(), "--n", "9", "--out", out.string()}) == 0);
    CHECK(load_manifest((out / "manifest.jsonl").string()).size() == 9);

    // Effective config is echoed with the override applied.
    const std::string echo = slurp(out / "run_config.cfg");
    CHECK(echo.find("n = 9") != std::string::npos);
    CHECK(echo.find("seed = 11") != std::string::npos);

    // Unknown keys in the file are rejected.
    const fs::path bad = dir / "bad.cfg";
    {
        std::ofstream f(bad);
        f << "definitely_not_a_key = 1\n";
    }
    CHECK(cli({"generate", "--config", bad.string(), "--n", "3",
               "--out", fresh_dir("cfg_bad").string()}) != 0);
}

TEST_CASE("train implicit: outputs checkpoint, history, config echo") {
    const fs::path data = cli_dataset();
    const fs::path out = fresh_dir("train_imp");
    REQUIRE(cli({"train", "--regime", "implicit", "--manifest",
                 (data / "manifest.jsonl").string(), "--epochs", "2", "--batch-size", "8",
                 "--depth", "10", "--strategy", "bec", "--lr", "1e-3", "--beta", "0.3",
                 "--out", out.string()}) == 0);
    CHECK(fs::exists(out / "model.ckpt"));
    CHECK(fs::exists(out / "model.ckpt.json"));
    CHECK(fs::exists(out / "history.jsonl"));
    CHECK(fs::exists(out / "run_config.cfg"));

    const TrainHistory h = TrainHistory::load_jsonl((out / "history.jsonl").string());
    REQUIRE(h.epochs.size() == 2);
    CHECK(h.epochs[0].stage == "implicit");
    CHECK(std::isfinite(h.epochs[0].gaze_loss));
    CHECK(std::isfinite(h.epochs[0].head_loss));

    // Eval the checkpoint.
    const fs::path eval_out = fresh_dir("eval_imp");
    REQUIRE(cli({"eval", "--checkpoint", (out / "model.ckpt").string(), "--manifest",
                 (data / "manifest.jsonl").string(), "--split", "test", "--out",
                 eval_out.string()}) == 0);
    const json summary = json::parse(slurp(eval_out / "summary.json"));
    CHECK(summary.contains("aem"));
    CHECK(summary.contains("vem"));
    CHECK(summary["aem"].get<double>() >= 0.0);

    // Report combines history and metrics.
    const fs::path rep_out = fresh_dir("report_imp");
    REQUIRE(cli({"report", "--history", (out / "history.jsonl").string(), "--manifest",
                 (data / "manifest.jsonl").string(), "--checkpoint",
                 (out / "model.ckpt").string(), "--split", "test", "--out",
                 rep_out.string()}) == 0);
    CHECK(fs::exists(rep_out / "summary.json"));
    CHECK(fs::exists(rep_out / "loss_curves.png"));
    CHECK(fs::exists(rep_out / "headgaze_yaw.png"));
}

TEST_CASE("train explicit: history carries exactly one stage boundary") {
    const fs::path data = cli_dataset();
    const fs::path out = fresh_dir("train_exp");
    REQUIRE(cli({"train", "--regime", "explicit", "--manifest",
                 (data / "manifest.jsonl").string(), "--epochs", "2", "--batch-size", "8",
                 "--depth", "10", "--strategy", "sem", "--lr", "1e-3",
                 "--plateau-patience", "1", "--out", out.string()}) == 0);
    const TrainHistory h = TrainHistory::load_jsonl((out / "history.jsonl").string());
    CHECK(h.stage_boundaries.size() == 1);
}

TEST_CASE("train nohp: three-stage history; usage errors for bad combinations") {
    const fs::path data = cli_dataset();
    const fs::path out = fresh_dir("train_nohp");
    REQUIRE(cli({"train", "--regime", "nohp", "--synth", (data / "manifest.jsonl").string(),
                 "--target", (data / "manifest.jsonl").string(), "--epochs", "1",
                 "--batch-size", "8", "--depth", "10", "--lr", "1e-3", "--out",
                 out.string()}) == 0);
    const TrainHistory h = TrainHistory::load_jsonl((out / "history.jsonl").string());
    CHECK(h.stage_boundaries.size() == 2);  // three stages
    CHECK(h.epochs.front().stage == "landmarks");
    CHECK(h.epochs.back().stage == "final");

    // nohp + face inputs is a usage error.
    CHECK(cli({"train", "--regime", "nohp", "--manifest", (data / "manifest.jsonl").string(),
               "--synth", (data / "manifest.jsonl").string(), "--target",
               (data / "manifest.jsonl").string(), "--out",
               fresh_dir("nohp_bad").string()}) != 0);
    // Unknown regime.
    CHECK(cli({"train", "--regime", "sideways", "--manifest",
               (data / "manifest.jsonl").string(), "--out",
               fresh_dir("regime_bad").string()}) != 0);
}

TEST_CASE("train classifier: eval emits a confusion matrix") {
    const fs::path data = cli_dataset();
    const fs::path out = fresh_dir("train_cls");
    REQUIRE(cli({"train", "--regime", "classifier", "--manifest",
                 (data / "manifest.jsonl").string(), "--epochs", "1", "--batch-size", "8",
                 "--depth", "10", "--strategy", "bec", "--lr", "1e-3", "--out",
                 out.string()}) == 0);
    const fs::path eval_out = fresh_dir("eval_cls");
    REQUIRE(cli({"eval", "--checkpoint", (out / "model.ckpt").string(), "--manifest",
                 (data / "manifest.jsonl").string(), "--split", "test", "--classify", "1",
                 "--out", eval_out.string()}) == 0);
    const json summary = json::parse(slurp(eval_out / "summary.json"));
    CHECK(summary.contains("accuracy"));
    CHECK(summary.contains("confusion_rows"));
    CHECK(fs::exists(eval_out / "confusion.png"));
}

TEST_CASE("eval with a missing checkpoint fails") {
    const fs::path data = cli_dataset();
    CHECK(cli({"eval", "--checkpoint", "/nonexistent/model.ckpt", "--manifest",
               (data / "manifest.jsonl").string(), "--out",
               fresh_dir("eval_missing").string()}) != 0);
}
