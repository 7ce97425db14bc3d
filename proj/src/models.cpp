#include "gazekit/models.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

using nlohmann::json;

namespace gazekit {

namespace {

struct StagePlan {
    std::vector<int> blocks;
    bool bottleneck;
};

StagePlan stage_plan(int depth) {
    switch (depth) {
        case 10: return {{1, 1, 1, 1}, false};
        case 18: return {{2, 2, 2, 2}, false};
        case 34: return {{3, 4, 6, 3}, false};
        case 56: return {{3, 6, 9, 9}, false};
        case 101: return {{3, 4, 23, 3}, true};
        default:
            throw std::invalid_argument("Backbone: unsupported depth " + std::to_string(depth) +
                                        " (use 10, 18, 34, 56 or 101)");
    }
}

Tensor hstack(const std::vector<const Tensor*>& parts) {
    const int N = parts[0]->dim(0);
    int total = 0;
    for (const Tensor* p : parts) total += p->dim(1);
    Tensor out({N, total});
    for (int n = 0; n < N; ++n) {
        float* dst = out.ptr() + static_cast<int64_t>(n) * total;
        for (const Tensor* p : parts) {
            const int f = p->dim(1);
            std::memcpy(dst, p->ptr() + static_cast<int64_t>(n) * f, sizeof(float) * f);
            dst += f;
        }
    }
    return out;
}

Tensor slice_cols(const Tensor& t, int begin, int width) {
    const int N = t.dim(0), F = t.dim(1);
    Tensor out({N, width});
    for (int n = 0; n < N; ++n) {
        std::memcpy(out.ptr() + static_cast<int64_t>(n) * width,
                    t.ptr() + static_cast<int64_t>(n) * F + begin, sizeof(float) * width);
    }
    return out;
}

}  // namespace

Backbone::Backbone(const BackboneConfig& cfg, Rng& rng) {
    const StagePlan plan = stage_plan(cfg.depth);
    net_.add("stem_conv", std::make_unique<Conv2d>(cfg.in_channels, 64, 7, 2, 3, false, rng));
    net_.add("stem_bn", std::make_unique<BatchNorm2d>(64));
    net_.add("stem_relu", std::make_unique<ReLU>());
    net_.add("stem_pool", std::make_unique<MaxPool2d>(3, 2, 1));

    int in_c = 64;
    const int planes[4] = {64, 128, 256, 512};
    for (int stage = 0; stage < 4; ++stage) {
        for (int b = 0; b < plan.blocks[stage]; ++b) {
            const int stride = (stage > 0 && b == 0) ? 2 : 1;
            auto block = std::make_unique<ResidualBlock>(in_c, planes[stage], stride,
                                                         plan.bottleneck, rng);
            in_c = block->out_channels();
            net_.add("stage" + std::to_string(stage + 1) + ".block" + std::to_string(b),
                     std::move(block));
        }
    }
    net_.add("pool", std::make_unique<GlobalAvgPool>());
    feature_dim_ = in_c;
}

HgdModel::HgdModel(const HgdConfig& cfg)
    : cfg_(cfg),
      eye_bb_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6579ull));  // eye branch stream
          return Backbone({cfg.backbone_depth, cfg.eye_channels}, rng);
      }()),
      gaze_fc1_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6766ull));
          return Linear(eye_bb_.feature_dim(), 64, rng);
      }()),
      fus1_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6675ull));
          return Linear(cfg.fusion_input_width(), 64, rng);
      }()),
      fus2_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6632ull));
          return Linear(64, cfg.output_width(), rng);
      }()) {
    if (cfg.gaze_outputs != 2 && cfg.gaze_outputs != 4) {
        throw std::invalid_argument("HgdModel: gaze_outputs must be 2 or 4");
    }
    if (cfg.use_face_branch) {
        Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6661ull));
        face_bb_ = std::make_unique<Backbone>(BackboneConfig{cfg.backbone_depth, cfg.face_channels}, rng);
        face_fc1_ = std::make_unique<Linear>(face_bb_->feature_dim(), 64, rng);
        face_relu_ = std::make_unique<ReLU>();
        face_fc2_ = std::make_unique<Linear>(64, 2, rng);
    }
}

FaceForward HgdModel::forward_face(const Tensor& face, bool train) {
    if (!cfg_.use_face_branch) {
        throw std::logic_error("HgdModel: face branch disabled by config");
    }
    FaceForward out;
    const Tensor feat = face_bb_->forward(face, train);
    out.head_feature = face_relu_->forward(face_fc1_->forward(feat, train), train);
    out.head_pred = face_fc2_->forward(out.head_feature, train);
    return out;
}

Tensor HgdModel::forward_gaze(const Tensor& eye, const Tensor& head_feature,
                              const Tensor* lda_vec, bool train) {
    const int N = eye.dim(0);
    const Tensor feat = eye_bb_.forward(eye, train);
    const Tensor gaze_feat = gaze_relu_.forward(gaze_fc1_.forward(feat, train), train);

    std::vector<const Tensor*> parts;
    if (cfg_.use_face_branch) {
        if (head_feature.ndim() != 2 || head_feature.dim(1) != 64) {
            throw std::invalid_argument("forward_gaze: head feature must be (N, 64)");
        }
        parts.push_back(&head_feature);
    }
    parts.push_back(&gaze_feat);
    last_lda_dim_ = 0;
    if (cfg_.lda_dim > 0) {
        if (!lda_vec || lda_vec->dim(1) != cfg_.lda_dim) {
            throw std::invalid_argument("forward_gaze: expected LDA vector of width " +
                                        std::to_string(cfg_.lda_dim));
        }
        parts.push_back(lda_vec);
        last_lda_dim_ = cfg_.lda_dim;
    }
    const Tensor concat = hstack(parts);
    check_shape(concat, {N, cfg_.fusion_input_width()}, "forward_gaze: fusion input");
    last_batch_ = N;
    return fus2_.forward(fus_relu_.forward(fus1_.forward(concat, train), train), train);
}

void HgdModel::backward(const Tensor& dgaze_pred, const Tensor& dhead_pred, bool freeze_face) {
    const Tensor dconcat = fus1_.backward(fus_relu_.backward(fus2_.backward(dgaze_pred)));
    int offset = 0;
    Tensor dhead_feat;
    if (cfg_.use_face_branch) {
        dhead_feat = slice_cols(dconcat, 0, 64);
        offset = 64;
    }
    const Tensor dgaze_feat = slice_cols(dconcat, offset, 64);
    // LDA columns, if any, are inputs and receive no gradient.

    eye_bb_.backward(gaze_fc1_.backward(gaze_relu_.backward(dgaze_feat)));

    if (cfg_.use_face_branch && !freeze_face) {
        if (dhead_pred.size() > 0) {
            const Tensor dh = face_fc2_->backward(dhead_pred);
            for (size_t i = 0; i < dhead_feat.data.size(); ++i) dhead_feat.data[i] += dh.data[i];
        }
        face_bb_->backward(face_fc1_->backward(face_relu_->backward(dhead_feat)));
    }
}

void HgdModel::backward_head_only(const Tensor& dhead_pred) {
    if (!cfg_.use_face_branch) {
        throw std::logic_error("HgdModel: face branch disabled by config");
    }
    face_bb_->backward(
        face_fc1_->backward(face_relu_->backward(face_fc2_->backward(dhead_pred))));
}

void HgdModel::collect_params(std::vector<ParamRef>& out) {
    collect_face_params(out);
    collect_gaze_params(out);
}

void HgdModel::collect_face_params(std::vector<ParamRef>& out) {
    if (!cfg_.use_face_branch) return;
    face_bb_->collect_params("face_bb", out);
    face_fc1_->collect_params("face_fc1", out);
    face_fc2_->collect_params("face_fc2", out);
}

void HgdModel::collect_gaze_params(std::vector<ParamRef>& out) {
    eye_bb_.collect_params("eye_bb", out);
    gaze_fc1_.collect_params("gaze_fc1", out);
    fus1_.collect_params("fusion1", out);
    fus2_.collect_params("fusion2", out);
}

LandmarkDetector::LandmarkDetector(const NoHpConfig& cfg)
    : bb_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6c64ull));
          return Backbone({cfg.backbone_depth, cfg.eye_channels}, rng);
      }()),
      fc1_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6c31ull));
          return Linear(bb_.feature_dim(), 200, rng);
      }()),
      fc2_([&] {
          Rng rng(Rng::splitmix64(cfg.init_seed ^ 0x6c32ull));
          return Linear(200, 32, rng);
      }()) {}

LandmarkForward LandmarkDetector::forward(const Tensor& eye, bool train) {
    LandmarkForward out;
    out.feature = relu_.forward(fc1_.forward(bb_.forward(eye, train), train), train);
    out.coords = fc2_.forward(out.feature, train);
    return out;
}

void LandmarkDetector::backward(const Tensor& dcoords, const Tensor& dfeature) {
    Tensor dfeat;
    if (dcoords.size() > 0) {
        dfeat = fc2_.backward(dcoords);
    }
    if (dfeature.size() > 0) {
        if (dfeat.size() == 0) {
            dfeat = dfeature;
        } else {
            for (size_t i = 0; i < dfeat.data.size(); ++i) dfeat.data[i] += dfeature.data[i];
        }
    }
    bb_.backward(fc1_.backward(relu_.backward(dfeat)));
}

void LandmarkDetector::collect_params(std::vector<ParamRef>& out) {
    bb_.collect_params("detector_bb", out);
    fc1_.collect_params("detector_fc1", out);
    fc2_.collect_params("detector_fc2", out);
}

AuxModule::AuxModule(uint64_t init_seed)
    : l1_([&] { Rng r(Rng::splitmix64(init_seed ^ 1)); return Linear(200, 200, r); }()),
      l2_([&] { Rng r(Rng::splitmix64(init_seed ^ 2)); return Linear(200, 200, r); }()),
      l3_([&] { Rng r(Rng::splitmix64(init_seed ^ 3)); return Linear(200, 100, r); }()),
      l4_([&] { Rng r(Rng::splitmix64(init_seed ^ 4)); return Linear(100, 50, r); }()),
      l5_([&] { Rng r(Rng::splitmix64(init_seed ^ 5)); return Linear(50, 2, r); }()) {}

AuxForward AuxModule::forward(const Tensor& feature200, bool train) {
    check_shape(feature200, {feature200.dim(0), 200}, "AuxModule input");
    AuxForward out;
    const Tensor h1 = r1_.forward(l1_.forward(feature200, train), train);
    out.tap = r2_.forward(l2_.forward(h1, train), train);
    const Tensor h3 = r3_.forward(l3_.forward(out.tap, train), train);
    const Tensor h4 = r4_.forward(l4_.forward(h3, train), train);
    out.pred = l5_.forward(h4, train);
    return out;
}

Tensor AuxModule::backward(const Tensor& dpred, const Tensor& dtap) {
    Tensor dt = l3_.backward(r3_.backward(l4_.backward(r4_.backward(l5_.backward(dpred)))));
    if (dtap.size() > 0) {
        for (size_t i = 0; i < dt.data.size(); ++i) dt.data[i] += dtap.data[i];
    }
    return l1_.backward(r1_.backward(l2_.backward(r2_.backward(dt))));
}

void AuxModule::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    l1_.collect_params(prefix + ".fc1", out);
    l2_.collect_params(prefix + ".fc2", out);
    l3_.collect_params(prefix + ".fc3", out);
    l4_.collect_params(prefix + ".fc4", out);
    l5_.collect_params(prefix + ".fc5", out);
}

FinalGazeModel::FinalGazeModel(uint64_t init_seed) {
    Rng rng(Rng::splitmix64(init_seed ^ 0x66696eull));
    net_.add("fc1", std::make_unique<Linear>(600, 600, rng));
    net_.add("relu1", std::make_unique<ReLU>());
    net_.add("fc2", std::make_unique<Linear>(600, 300, rng));
    net_.add("relu2", std::make_unique<ReLU>());
    net_.add("fc3", std::make_unique<Linear>(300, 100, rng));
    net_.add("relu3", std::make_unique<ReLU>());
    net_.add("fc4", std::make_unique<Linear>(100, 32, rng));
    net_.add("relu4", std::make_unique<ReLU>());
    net_.add("fc5", std::make_unique<Linear>(32, 2, rng));
}

Tensor FinalGazeModel::forward(const Tensor& concat600, bool train) {
    if (concat600.ndim() != 2 || concat600.dim(1) != 600) {
        throw std::invalid_argument("FinalGazeModel: input width must be exactly 600, got " +
                                    concat600.shape_str());
    }
    return net_.forward(concat600, train);
}

Tensor FinalGazeModel::backward(const Tensor& dpred) { return net_.backward(dpred); }

void FinalGazeModel::collect_params(std::vector<ParamRef>& out) {
    net_.collect_params("final", out);
}

std::string params_hash(const std::vector<ParamRef>& params) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& p : params) {
        mix(p.name.data(), p.name.size());
        mix(p.value->data.data(), p.value->data.size() * sizeof(float));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params,
                     const std::string& config_json, uint64_t seed) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
    const char magic[8] = {'G', 'Z', 'K', 'C', 'K', 'P', 'T', '1'};
    f.write(magic, 8);
    const uint32_t count = static_cast<uint32_t>(params.size());
    f.write(reinterpret_cast<const char*>(&count), sizeof(count));
    int64_t scalars = 0;
    for (const auto& p : params) {
        const uint32_t nlen = static_cast<uint32_t>(p.name.size());
        f.write(reinterpret_cast<const char*>(&nlen), sizeof(nlen));
        f.write(p.name.data(), nlen);
        const uint32_t nd = static_cast<uint32_t>(p.value->shape.size());
        f.write(reinterpret_cast<const char*>(&nd), sizeof(nd));
        for (const int d : p.value->shape) {
            const int32_t v = d;
            f.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        const uint64_t n = p.value->data.size();
        f.write(reinterpret_cast<const char*>(&n), sizeof(n));
        f.write(reinterpret_cast<const char*>(p.value->data.data()), n * sizeof(float));
        scalars += static_cast<int64_t>(n);
    }

    json side;
    side["format"] = "gazekit-checkpoint";
    side["version"] = 1;
    side["config"] = json::parse(config_json);
    side["param_tensors"] = params.size();
    side["param_count"] = scalars;
    side["content_hash"] = params_hash(params);
    side["seed"] = seed;
    std::ofstream sf(path + ".json");
    sf << side.dump(2) << "\n";
}

void load_checkpoint(const std::string& path, const std::vector<ParamRef>& params) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, "GZKCKPT1", 8) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    }
    uint32_t count = 0;
    f.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::map<std::string, std::vector<float>> blob;
    std::map<std::string, std::vector<int>> shapes;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t nlen = 0;
        f.read(reinterpret_cast<char*>(&nlen), sizeof(nlen));
        std::string name(nlen, '\0');
        f.read(name.data(), nlen);
        uint32_t nd = 0;
        f.read(reinterpret_cast<char*>(&nd), sizeof(nd));
        std::vector<int> shape(nd);
        for (auto& d : shape) {
            int32_t v = 0;
            f.read(reinterpret_cast<char*>(&v), sizeof(v));
            d = v;
        }
        uint64_t n = 0;
        f.read(reinterpret_cast<char*>(&n), sizeof(n));
        std::vector<float> data(n);
        f.read(reinterpret_cast<char*>(data.data()), n * sizeof(float));
        if (!f) throw std::runtime_error("load_checkpoint: truncated file " + path);
        blob[name] = std::move(data);
        shapes[name] = std::move(shape);
    }
    for (const auto& p : params) {
        const auto it = blob.find(p.name);
        if (it == blob.end()) {
            throw std::runtime_error("load_checkpoint: missing parameter '" + p.name + "'");
        }
        if (shapes[p.name] != p.value->shape) {
            throw std::runtime_error("load_checkpoint: shape mismatch for '" + p.name + "'");
        }
        p.value->data = it->second;
    }
}

std::string read_checkpoint_config(const std::string& path) {
    std::ifstream sf(path + ".json");
    if (!sf) throw std::runtime_error("read_checkpoint_config: cannot open " + path + ".json");
    json side = json::parse(sf);
    return side.at("config").dump();
}

}  // namespace gazekit
