#pragma once

#include <vector>

#include "gazekit/geometry.hpp"
#include "gazekit/image.hpp"

namespace gazekit {

// Eye-input strategies: single eye, both eyes stitched horizontally /
// vertically, both eyes concatenated on the channel axis.
enum class EyeMerge { SEM, BEH, BEV, BEC };

enum class EyeSide { Left, Right };

const char* to_string(EyeMerge m);
EyeMerge eye_merge_from_string(const std::string& s);

// Merged eye tensor shapes for (H, W, C) inputs:
//   SEM -> (H, W, C)    the requested eye only
//   BEH -> (H, 2W, C)   left | right
//   BEV -> (2H, W, C)   left stacked over right
//   BEC -> (H, W, 2C)   left channels then right channels
MultiImage merge_eyes(const MultiImage& left, const MultiImage& right,
                      EyeMerge strategy, EyeSide sem_side = EyeSide::Left);

// Splits a BEC tensor back into its two eyes (exact inverse).
std::pair<MultiImage, MultiImage> split_bec(const MultiImage& merged);

// Number of gaze outputs the strategy carries: 2 for SEM, 4 otherwise.
int target_count(EyeMerge strategy);

// One network input: merged eye tensor, face tensor, gaze target(s) in the
// layout (left_yaw, left_pitch, right_yaw, right_pitch) for dual-eye
// strategies or (yaw, pitch) for SEM, plus the head-pose target.
struct InputUnit {
    MultiImage eye_tensor;
    MultiImage face_tensor;
    std::vector<double> targets;
    AnglePair head_target;
    std::vector<float> lda_vec;  // optional fusion-level feature
    int sample_index = -1;       // back-reference into the SampleSet
    EyeSide sem_side = EyeSide::Left;
};

}  // namespace gazekit
