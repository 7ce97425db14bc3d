#include "gazekit/pipeline.hpp"

#include <stdexcept>

namespace gazekit {

namespace {

void copy_multi(const MultiImage& src, float* dst) {
    std::copy(src.data.begin(), src.data.end(), dst);
}

}  // namespace

Pipeline::Pipeline(const SampleSet& set, EyeMerge strategy, PreprocOptions pre)
    : set_(set), strategy_(strategy), pre_(std::move(pre)) {
    for (int i = 0; i < static_cast<int>(set.size()); ++i) {
        if (strategy == EyeMerge::SEM) {
            units_.emplace_back(i, EyeSide::Left);
            units_.emplace_back(i, EyeSide::Right);
        } else {
            units_.emplace_back(i, EyeSide::Left);
        }
    }
    cache_.resize(units_.size());
}

void Pipeline::set_cache_enabled(bool on) const {
    cache_enabled_ = on;
    if (!on) {
        cache_.assign(units_.size(), std::nullopt);
    }
}

InputUnit Pipeline::make_unit(int unit_idx) const {
    if (cache_enabled_ && cache_[unit_idx]) {
        return *cache_[unit_idx];
    }
    const auto [si, side] = units_[unit_idx];
    const Sample& s = set_.samples[si];

    InputUnit unit;
    unit.sample_index = si;
    unit.sem_side = side;
    unit.head_target = s.head;

    const MultiImage left = prepare_image(set_.load_left_eye(s), pre_);
    const MultiImage right = prepare_image(set_.load_right_eye(s), pre_);
    unit.eye_tensor = merge_eyes(left, right, strategy_, side);
    unit.face_tensor = prepare_image(set_.load_face(s), pre_);

    if (strategy_ == EyeMerge::SEM) {
        const AnglePair g = side == EyeSide::Left ? s.gaze_left : s.gaze_right;
        unit.targets = {g.yaw, g.pitch};
    } else {
        unit.targets = {s.gaze_left.yaw, s.gaze_left.pitch, s.gaze_right.yaw,
                        s.gaze_right.pitch};
    }

    if (pre_.lda) {
        // LDA projection of the eye mHoG descriptor feeds the fusion input.
        const Image eye_img =
            side == EyeSide::Right && strategy_ == EyeMerge::SEM
                ? set_.load_right_eye(s)
                : set_.load_left_eye(s);
        unit.lda_vec = pre_.lda->apply(mhog_descriptor(eye_img, pre_.hog));
    }

    if (cache_enabled_) cache_[unit_idx] = unit;
    return unit;
}

int Pipeline::eye_channels() const {
    if (units_.empty()) throw std::runtime_error("Pipeline: empty set");
    return make_unit(0).eye_tensor.channels;
}

int Pipeline::face_channels() const {
    if (units_.empty()) throw std::runtime_error("Pipeline: empty set");
    return make_unit(0).face_tensor.channels;
}

Batch assemble_batch(const Pipeline& pipe, const std::vector<int>& unit_indices) {
    if (unit_indices.empty()) {
        throw std::invalid_argument("assemble_batch: empty index list");
    }
    Batch batch;
    batch.unit_indices = unit_indices;
    const int n = static_cast<int>(unit_indices.size());
    for (int i = 0; i < n; ++i) {
        const InputUnit unit = pipe.make_unit(unit_indices[i]);
        if (i == 0) {
            batch.eye = Tensor({n, unit.eye_tensor.channels, unit.eye_tensor.height,
                                unit.eye_tensor.width});
            batch.face = Tensor({n, unit.face_tensor.channels, unit.face_tensor.height,
                                 unit.face_tensor.width});
            batch.targets = Tensor({n, static_cast<int>(unit.targets.size())});
            batch.head = Tensor({n, 2});
            if (!unit.lda_vec.empty()) {
                batch.lda = Tensor({n, static_cast<int>(unit.lda_vec.size())});
            }
        }
        copy_multi(unit.eye_tensor, batch.eye.ptr() + static_cast<int64_t>(i) * batch.eye.size() / n);
        copy_multi(unit.face_tensor,
                   batch.face.ptr() + static_cast<int64_t>(i) * batch.face.size() / n);
        for (size_t t = 0; t < unit.targets.size(); ++t) {
            batch.targets.data[static_cast<size_t>(i) * unit.targets.size() + t] =
                static_cast<float>(unit.targets[t]);
        }
        batch.head.data[2 * i] = static_cast<float>(unit.head_target.yaw);
        batch.head.data[2 * i + 1] = static_cast<float>(unit.head_target.pitch);
        if (batch.lda.size() > 0) {
            std::copy(unit.lda_vec.begin(), unit.lda_vec.end(),
                      batch.lda.ptr() + static_cast<int64_t>(i) * unit.lda_vec.size());
        }
    }
    return batch;
}

LandmarkPipeline::LandmarkPipeline(const SampleSet& set, PreprocOptions pre)
    : set_(set), pre_(std::move(pre)) {
    for (int i = 0; i < static_cast<int>(set.size()); ++i) {
        const Sample& s = set.samples[i];
        if (!s.left_landmarks || !s.right_landmarks) {
            throw std::invalid_argument(
                "LandmarkPipeline: sample " + std::to_string(i) +
                " has no eye landmark labels (synthetic data required)");
        }
        if (s.left_landmarks->size() != 16 || s.right_landmarks->size() != 16) {
            throw std::invalid_argument("LandmarkPipeline: expected 16 landmarks per eye");
        }
        units_.emplace_back(i, EyeSide::Left);
        units_.emplace_back(i, EyeSide::Right);
    }
    if (!set.empty()) {
        const Image eye = set.load_left_eye(set.samples[0]);
        crop_h_ = eye.height;
        crop_w_ = eye.width;
    }
}

int LandmarkPipeline::eye_channels() const {
    if (set_.empty()) throw std::runtime_error("LandmarkPipeline: empty set");
    return prepare_image(set_.load_left_eye(set_.samples[0]), pre_).channels;
}

LandmarkBatch LandmarkPipeline::make_batch(const std::vector<int>& unit_indices) const {
    LandmarkBatch batch;
    const int n = static_cast<int>(unit_indices.size());
    for (int i = 0; i < n; ++i) {
        const auto [si, side] = units_[unit_indices[i]];
        const Sample& s = set_.samples[si];
        const Image raw = side == EyeSide::Left ? set_.load_left_eye(s)
                                                : set_.load_right_eye(s);
        const MultiImage eye = prepare_image(raw, pre_);
        const PointList& lms = side == EyeSide::Left ? *s.left_landmarks : *s.right_landmarks;
        if (i == 0) {
            batch.eye = Tensor({n, eye.channels, eye.height, eye.width});
            batch.coords = Tensor({n, 32});
            batch.gaze = Tensor({n, 2});
            batch.head = Tensor({n, 2});
        }
        copy_multi(eye, batch.eye.ptr() + static_cast<int64_t>(i) * batch.eye.size() / n);
        for (int p = 0; p < 16; ++p) {
            batch.coords.data[static_cast<size_t>(i) * 32 + 2 * p] =
                static_cast<float>(lms[p].first / crop_w_);
            batch.coords.data[static_cast<size_t>(i) * 32 + 2 * p + 1] =
                static_cast<float>(lms[p].second / crop_h_);
        }
        const AnglePair g = side == EyeSide::Left ? s.gaze_left : s.gaze_right;
        batch.gaze.data[2 * i] = static_cast<float>(g.yaw);
        batch.gaze.data[2 * i + 1] = static_cast<float>(g.pitch);
        batch.head.data[2 * i] = static_cast<float>(s.head.yaw);
        batch.head.data[2 * i + 1] = static_cast<float>(s.head.pitch);
    }
    return batch;
}

}  // namespace gazekit
