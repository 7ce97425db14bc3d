#include "gazekit/merge.hpp"

#include <stdexcept>
#include <string>

namespace gazekit {

const char* to_string(EyeMerge m) {
    switch (m) {
        case EyeMerge::SEM: return "sem";
        case EyeMerge::BEH: return "beh";
        case EyeMerge::BEV: return "bev";
        case EyeMerge::BEC: return "bec";
    }
    return "?";
}

EyeMerge eye_merge_from_string(const std::string& s) {
    if (s == "sem") return EyeMerge::SEM;
    if (s == "beh") return EyeMerge::BEH;
    if (s == "bev") return EyeMerge::BEV;
    if (s == "bec") return EyeMerge::BEC;
    throw std::invalid_argument("unknown eye merge strategy: " + s);
}

int target_count(EyeMerge strategy) {
    return strategy == EyeMerge::SEM ? 2 : 4;
}

MultiImage merge_eyes(const MultiImage& left, const MultiImage& right,
                      EyeMerge strategy, EyeSide sem_side) {
    if (left.height != right.height || left.width != right.width ||
        left.channels != right.channels) {
        throw std::invalid_argument("merge_eyes: left/right shape mismatch");
    }
    const int h = left.height, w = left.width, c = left.channels;
    switch (strategy) {
        case EyeMerge::SEM:
            return sem_side == EyeSide::Left ? left : right;
        case EyeMerge::BEH: {
            MultiImage out(h, 2 * w, c);
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < h; ++r)
                    for (int x = 0; x < w; ++x) {
                        out.at(ch, r, x) = left.at(ch, r, x);
                        out.at(ch, r, w + x) = right.at(ch, r, x);
                    }
            return out;
        }
        case EyeMerge::BEV: {
            MultiImage out(2 * h, w, c);
            for (int ch = 0; ch < c; ++ch)
                for (int r = 0; r < h; ++r)
                    for (int x = 0; x < w; ++x) {
                        out.at(ch, r, x) = left.at(ch, r, x);
                        out.at(ch, h + r, x) = right.at(ch, r, x);
                    }
            return out;
        }
        case EyeMerge::BEC: {
            MultiImage out(h, w, 2 * c);
            for (int ch = 0; ch < c; ++ch) {
                out.set_channel(ch, left.channel(ch));
                out.set_channel(c + ch, right.channel(ch));
            }
            return out;
        }
    }
    throw std::logic_error("merge_eyes: unreachable");
}

std::pair<MultiImage, MultiImage> split_bec(const MultiImage& merged) {
    if (merged.channels % 2 != 0) {
        throw std::invalid_argument("split_bec: odd channel count");
    }
    const int c = merged.channels / 2;
    MultiImage left(merged.height, merged.width, c);
    MultiImage right(merged.height, merged.width, c);
    for (int ch = 0; ch < c; ++ch) {
        left.set_channel(ch, merged.channel(ch));
        right.set_channel(ch, merged.channel(c + ch));
    }
    return {std::move(left), std::move(right)};
}

}  // namespace gazekit
