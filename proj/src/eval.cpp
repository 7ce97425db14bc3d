#include "gazekit/eval.hpp"

#include <stdexcept>

namespace gazekit {

namespace {

struct PairAccum {
    std::vector<AnglePair> preds, refs;
    void add(const AnglePair& p, const AnglePair& r) {
        preds.push_back(p);
        refs.push_back(r);
    }
    EyeStats stats() const {
        EyeStats s;
        if (preds.empty()) return s;
        s.aem = aem(preds, refs);
        double sum = 0.0;
        for (size_t i = 0; i < preds.size(); ++i) sum += vem(preds[i], refs[i]);
        s.vem = sum / static_cast<double>(preds.size());
        s.pairs = static_cast<int64_t>(preds.size());
        return s;
    }
};

std::string fnv_hash(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

MetricsReport from_per_unit_preds(const Pipeline& pipe,
                                  const std::vector<std::vector<AnglePair>>& preds,
                                  const std::string& config_echo) {
    PairAccum all;
    std::map<std::string, PairAccum> by_subject;
    std::map<std::string, PairAccum> by_eye;
    for (int u = 0; u < pipe.unit_count(); ++u) {
        const InputUnit unit = pipe.make_unit(u);
        const Sample& s = pipe.set().samples[unit.sample_index];
        for (size_t j = 0; j < preds[u].size(); ++j) {
            const AnglePair ref{unit.targets[2 * j], unit.targets[2 * j + 1]};
            const AnglePair p = preds[u][j];
            all.add(p, ref);
            by_subject[s.subject_id].add(p, ref);
            const bool left = preds[u].size() == 2 ? j == 0 : unit.sem_side == EyeSide::Left;
            by_eye[left ? "left" : "right"].add(p, ref);
        }
    }
    MetricsReport rep;
    const EyeStats overall = all.stats();
    rep.aem = overall.aem;
    rep.vem = overall.vem;
    rep.pair_count = overall.pairs;
    rep.sample_count = static_cast<int64_t>(pipe.set().size());
    for (const auto& [k, acc] : by_subject) rep.per_subject[k] = acc.stats();
    for (const auto& [k, acc] : by_eye) rep.per_eye[k] = acc.stats();
    rep.config_hash = fnv_hash(config_echo);
    return rep;
}

}  // namespace

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                          int k) {
    if (preds.size() != labels.size()) {
        throw std::invalid_argument("confusion: size mismatch");
    }
    ConfusionMatrix m;
    m.k = k;
    m.counts.assign(static_cast<size_t>(k) * k, 0);
    m.rows.assign(static_cast<size_t>(k) * k, 0.0);
    m.row_has_support.assign(k, false);
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 1 || preds[i] > k || labels[i] < 1 || labels[i] > k) {
            throw std::invalid_argument("confusion: zone id out of [1, " + std::to_string(k) +
                                        "]");
        }
        ++m.counts[static_cast<size_t>(labels[i] - 1) * k + (preds[i] - 1)];
    }
    for (int r = 0; r < k; ++r) {
        int64_t total = 0;
        for (int c = 0; c < k; ++c) total += m.counts[static_cast<size_t>(r) * k + c];
        m.row_has_support[r] = total > 0;
        if (total > 0) {
            for (int c = 0; c < k; ++c) {
                m.rows[static_cast<size_t>(r) * k + c] =
                    static_cast<double>(m.counts[static_cast<size_t>(r) * k + c]) / total;
            }
        }
    }
    return m;
}

MetricsReport evaluate_hgd(HgdModel& model, const Pipeline& pipe,
                           const std::string& config_echo) {
    if (pipe.unit_count() == 0) {
        throw std::invalid_argument("evaluate: empty sample set");
    }
    return from_per_unit_preds(pipe, predict_hgd(model, pipe), config_echo);
}

MetricsReport evaluate_nohp(NoHpStack& stack, const Pipeline& pipe,
                            const std::string& config_echo) {
    if (pipe.unit_count() == 0) {
        throw std::invalid_argument("evaluate: empty sample set");
    }
    const std::vector<AnglePair> flat = predict_nohp(stack, pipe);
    std::vector<std::vector<AnglePair>> preds(flat.size());
    for (size_t i = 0; i < flat.size(); ++i) preds[i] = {flat[i]};
    return from_per_unit_preds(pipe, preds, config_echo);
}

MetricsReport evaluate_classifier(HgdModel& model, const Pipeline& pipe,
                                  const ZoneGrid& grid, const std::string& config_echo) {
    if (pipe.unit_count() == 0) {
        throw std::invalid_argument("evaluate: empty sample set");
    }
    std::vector<int> pred_ids, label_ids;
    std::vector<int> idx;
    const bool use_face = model.config().use_face_branch;
    for (int i = 0; i < pipe.unit_count(); ++i) {
        idx.push_back(i);
        if (static_cast<int>(idx.size()) == 64 || i + 1 == pipe.unit_count()) {
            const Batch b = assemble_batch(pipe, idx);
            Tensor head_feat;
            if (use_face) head_feat = model.forward_face(b.face, false).head_feature;
            const Tensor logits =
                model.forward_gaze(b.eye, head_feat, b.lda.size() ? &b.lda : nullptr, false);
            const int k = logits.dim(1);
            for (size_t r = 0; r < idx.size(); ++r) {
                int arg = 0;
                for (int c = 1; c < k; ++c) {
                    if (logits.data[r * k + c] > logits.data[r * k + arg]) arg = c;
                }
                pred_ids.push_back(arg + 1);
                const InputUnit unit = pipe.make_unit(idx[r]);
                label_ids.push_back(grid.zone_of({unit.targets[0], unit.targets[1]}));
            }
            idx.clear();
        }
    }
    MetricsReport rep;
    rep.sample_count = static_cast<int64_t>(pipe.set().size());
    rep.pair_count = static_cast<int64_t>(pred_ids.size());
    rep.has_confusion = true;
    rep.conf = confusion(pred_ids, label_ids, grid.zone_count());
    int64_t correct = 0;
    for (size_t i = 0; i < pred_ids.size(); ++i) correct += pred_ids[i] == label_ids[i];
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(pred_ids.size());
    rep.config_hash = rep.config_hash;
    return rep;
}

MetricsReport report_from_pairs(const std::vector<AnglePair>& preds,
                                const std::vector<AnglePair>& refs) {
    if (preds.empty()) {
        throw std::invalid_argument("report_from_pairs: empty input");
    }
    PairAccum acc;
    for (size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], refs[i]);
    const EyeStats s = acc.stats();
    MetricsReport rep;
    rep.aem = s.aem;
    rep.vem = s.vem;
    rep.pair_count = s.pairs;
    return rep;
}

}  // namespace gazekit
