#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "opauth/errors.hpp"
#include "opauth/grammar.hpp"
#include "opauth/hmm.hpp"
#include "opauth/numerics.hpp"
#include "opauth/types.hpp"

namespace opauth {

// --- single-model token passing ---------------------------------------------

struct SingleDecodeResult {
    double psi_max = kNegInf;   // best token over emitting states at the final frame
    double psi_exit = kNegInf;  // best token including the exit transition
    std::vector<std::size_t> state_path;  // 1-based emitting state per frame
};

// Viterbi by token passing over one gesture model. Ties break toward the
// lowest state index, both for backpointers and for the terminal state.
inline SingleDecodeResult decode_single(const GestureHmm& model, const ObsSequence& obs) {
    if (obs.empty()) throw UsageError("decode_single: empty observation sequence");
    const auto log_b = emission_matrix(model, obs);
    const std::size_t T = obs.size();
    const std::size_t ne = model.n_emitting();
    const auto& A = model.log_transitions;

    std::vector<Vec> psi(T, Vec(ne, kNegInf));
    std::vector<std::vector<std::size_t>> back(T, std::vector<std::size_t>(ne, 0));
    for (std::size_t j = 0; j < ne; ++j)
        if (A[0][j + 1] != kNegInf) psi[0][j] = A[0][j + 1] + log_b[0][j];
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < ne; ++j) {
            double best = kNegInf;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i <= j; ++i) {
                if (A[i + 1][j + 1] == kNegInf || psi[t - 1][i] == kNegInf) continue;
                const double cand = psi[t - 1][i] + A[i + 1][j + 1];
                if (cand > best) {
                    best = cand;
                    best_i = i;
                }
            }
            if (best != kNegInf) {
                psi[t][j] = best + log_b[t][j];
                back[t][j] = best_i;
            }
        }

    SingleDecodeResult result;
    std::size_t final_state = 0;
    for (std::size_t j = 0; j < ne; ++j) {
        if (psi[T - 1][j] > result.psi_max) {
            result.psi_max = psi[T - 1][j];
            final_state = j;
        }
        if (psi[T - 1][j] != kNegInf && A[j + 1][model.exit_state()] != kNegInf)
            result.psi_exit = std::max(result.psi_exit, psi[T - 1][j] + A[j + 1][model.exit_state()]);
    }
    if (result.psi_max == kNegInf) return result;  // no admissible path; empty path signals it

    result.state_path.assign(T, 0);
    std::size_t s = final_state;
    for (std::size_t t = T; t-- > 0;) {
        result.state_path[t] = s + 1;
        if (t > 0) s = back[t][s];
    }
    return result;
}

// Eq.-(2)-style whole-gesture recognition: argmax of decode_single over
// candidate models, ties broken lexicographically by (operator_id, gesture_id).
inline std::tuple<std::string, std::string, double> recognize_gesture(const std::vector<GestureHmm>& models,
                                                                      const ObsSequence& obs) {
    if (models.empty()) throw UsageError("recognize_gesture: no candidate models");
    std::vector<std::size_t> order(models.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(models[a].operator_id, models[a].gesture_id) <
               std::tie(models[b].operator_id, models[b].gesture_id);
    });
    double best = kNegInf;
    std::size_t winner = order.front();
    for (std::size_t idx : order) {
        const double psi = decode_single(models[idx], obs).psi_max;
        if (psi > best) {
            best = psi;
            winner = idx;
        }
    }
    return {models[winner].operator_id, models[winner].gesture_id, best};
}

// --- grammar-compiled decoding network ---------------------------------------

// All gesture models of one operator joined through their non-emitting
// entry/exit states according to a grammar. Gestures are ordered
// lexicographically; a node is one emitting state of one gesture model.
class DecodingNetwork {
public:
    DecodingNetwork(GrammarGraph grammar, std::vector<GestureHmm> models)
        : grammar_(std::move(grammar)) {
        std::sort(models.begin(), models.end(),
                  [](const GestureHmm& a, const GestureHmm& b) { return a.gesture_id < b.gesture_id; });
        for (const auto& id : grammar_.gestures()) {
            std::size_t count = 0;
            for (const auto& m : models)
                if (m.gesture_id == id) ++count;
            if (count == 0) throw ConfigError("network: no model for grammar gesture '" + id + "'");
            if (count > 1) throw ConfigError("network: duplicate model for gesture '" + id + "'");
        }
        for (const auto& m : models)
            if (!grammar_.has_gesture(m.gesture_id))
                throw ConfigError("network: model gesture '" + m.gesture_id + "' is not in the grammar");
        models_ = std::move(models);

        operator_id_ = models_.front().operator_id;
        dim_ = models_.front().dim;
        for (const auto& m : models_) {
            if (m.operator_id != operator_id_)
                throw ConfigError("network: models mix operators '" + operator_id_ + "' and '" + m.operator_id + "'");
            if (m.dim != dim_) throw ConfigError("network: models mix dimensions");
        }

        node_offset_.resize(models_.size());
        std::size_t offset = 0;
        for (std::size_t g = 0; g < models_.size(); ++g) {
            node_offset_[g] = offset;
            offset += models_[g].n_emitting();
        }
        n_nodes_ = offset;

        successors_.assign(models_.size(), {});
        predecessors_.assign(models_.size(), {});
        for (const auto& [from, to] : grammar_.edges()) {
            const std::size_t k = gesture_index(from);
            const std::size_t l = gesture_index(to);
            successors_[k].push_back(l);
            predecessors_[l].push_back(k);
        }
        is_start_.assign(models_.size(), false);
        for (const auto& id : grammar_.start_set()) is_start_[gesture_index(id)] = true;

        entry_mass_.resize(models_.size());
        for (std::size_t g = 0; g < models_.size(); ++g) {
            double mass = kNegInf;
            for (std::size_t j = 1; j <= models_[g].n_emitting(); ++j)
                mass = std::max(mass, models_[g].log_transitions[0][j]);
            entry_mass_[g] = mass;
        }
    }

    const std::string& operator_id() const { return operator_id_; }
    std::size_t dim() const { return dim_; }
    const GrammarGraph& grammar() const { return grammar_; }
    const std::vector<GestureHmm>& models() const { return models_; }
    std::size_t n_gestures() const { return models_.size(); }
    std::size_t n_nodes() const { return n_nodes_; }
    std::size_t n_inter_edges() const { return grammar_.edges().size(); }

    std::size_t gesture_index(const std::string& id) const {
        for (std::size_t g = 0; g < models_.size(); ++g)
            if (models_[g].gesture_id == id) return g;
        throw ConfigError("network: unknown gesture '" + id + "'");
    }
    const std::string& gesture_id(std::size_t g) const { return models_[g].gesture_id; }

    std::size_t node_of(std::size_t gesture, std::size_t state) const {
        return node_offset_[gesture] + (state - 1);
    }
    std::pair<std::size_t, std::size_t> gesture_state_of(std::size_t node) const {
        std::size_t g = models_.size() - 1;
        while (node_offset_[g] > node) --g;
        return {g, node - node_offset_[g] + 1};
    }

    // a_(k, entry->j) and a_(k, i->exit) in log space.
    double entry_weight(std::size_t g, std::size_t state) const {
        return models_[g].log_transitions[0][state];
    }
    double exit_weight(std::size_t g, std::size_t state) const {
        return models_[g].log_transitions[state][models_[g].exit_state()];
    }
    double intra_weight(std::size_t g, std::size_t from_state, std::size_t to_state) const {
        return models_[g].log_transitions[from_state][to_state];
    }
    // Combined inter-edge weight a_(k,i->exit) + a_(l,entry->j).
    double inter_weight(std::size_t from_g, std::size_t from_state, std::size_t to_g, std::size_t to_state) const {
        return exit_weight(from_g, from_state) + entry_weight(to_g, to_state);
    }

    double entry_mass(std::size_t g) const { return entry_mass_[g]; }
    const std::vector<std::size_t>& predecessors(std::size_t g) const { return predecessors_[g]; }
    bool is_start(std::size_t g) const { return is_start_[g]; }

private:
    GrammarGraph grammar_;
    std::vector<GestureHmm> models_;
    std::string operator_id_;
    std::size_t dim_ = 0;
    std::vector<std::size_t> node_offset_;
    std::size_t n_nodes_ = 0;
    std::vector<std::vector<std::size_t>> successors_;
    std::vector<std::vector<std::size_t>> predecessors_;
    std::vector<bool> is_start_;
    Vec entry_mass_;
};

inline DecodingNetwork compile_network(const GrammarGraph& grammar, std::vector<GestureHmm> models) {
    return DecodingNetwork(grammar, std::move(models));
}

// Boundary record written when a token crosses a model exit. Chained through
// parent indices into the per-decode arena.
struct GestureLinkRecord {
    std::size_t boundary_time = 0;  // 1-based index of the finished gesture's last frame
    std::string gesture_id;
    std::string operator_id;
    double score_at_boundary = kNegInf;
    int parent = -1;  // arena index of the previous record, -1 for none
};

struct DecodedSpan {
    std::string gesture_id;
    std::size_t start_frame = 0;  // 1-based, inclusive
    std::size_t end_frame = 0;    // 1-based, inclusive
};

struct NetworkDecodeResult {
    bool admissible = false;
    double psi_max = kNegInf;   // best token over emitting nodes at the final frame
    double psi_exit = kNegInf;  // best token that also crosses an exit at the final frame
    std::size_t winning_node = 0;
    std::string winning_gesture;
    int winning_glr = -1;
    std::size_t n_frames = 0;
    std::vector<GestureLinkRecord> glr_arena;
};

struct NetworkDecodeOptions {
    // Seed every emitting state of every gesture at t=1 with its gesture's
    // entry mass. Sliding windows start mid-gesture, so windowed
    // authentication turns this on; whole-sequence decoding leaves it off and
    // admits only start-set gestures through their entry states.
    bool seed_all_states = false;
};

// Full-sequence emission cache for one network: scores_[t][node]. Windowed
// decoding over a stream evaluates each frame once instead of once per window.
class NetworkEmissions {
public:
    NetworkEmissions(const DecodingNetwork& net, const ObsSequence& obs) {
        scores_.assign(obs.size(), Vec(net.n_nodes()));
        for (std::size_t t = 0; t < obs.size(); ++t) {
            if (obs[t].size() != net.dim()) throw UsageError("network emissions: observation dimension mismatch");
            std::size_t node = 0;
            for (std::size_t g = 0; g < net.n_gestures(); ++g) {
                const GestureHmm& m = net.models()[g];
                for (std::size_t s = 1; s <= m.n_emitting(); ++s, ++node)
                    scores_[t][node] = mixture_log_pdf(obs[t], m.mixture_of(s));
            }
        }
    }

    std::size_t n_frames() const { return scores_.size(); }
    const Vec& frame(std::size_t t) const { return scores_[t]; }

private:
    std::vector<Vec> scores_;
};

namespace detail {

// Connected token passing over emission rows [begin, begin+len). Candidate
// sources are visited in (gesture, state) order so score ties resolve toward
// the lowest source; intra edges are offered before an inter edge from the
// same source node.
inline NetworkDecodeResult decode_network_core(const DecodingNetwork& net, const NetworkEmissions& emis,
                                               std::size_t begin, std::size_t len,
                                               const NetworkDecodeOptions& opt) {
    if (len == 0) throw UsageError("decode_network: empty observation sequence");
    const std::size_t n_nodes = net.n_nodes();
    const std::size_t n_gest = net.n_gestures();

    NetworkDecodeResult result;
    result.n_frames = len;

    Vec psi(n_nodes, kNegInf);
    Vec psi_next(n_nodes, kNegInf);
    std::vector<int> glr(n_nodes, -1);
    std::vector<int> glr_next(n_nodes, -1);

    // t = 1: tokens enter through entry states (and, when seeding all states,
    // directly into every emitting state at the gesture's entry mass).
    {
        const Vec& row = emis.frame(begin);
        for (std::size_t g = 0; g < n_gest; ++g) {
            const GestureHmm& m = net.models()[g];
            for (std::size_t s = 1; s <= m.n_emitting(); ++s) {
                const std::size_t node = net.node_of(g, s);
                double start_mass = kNegInf;
                if (net.is_start(g)) start_mass = net.entry_weight(g, s);
                if (opt.seed_all_states) start_mass = std::max(start_mass, net.entry_mass(g));
                if (start_mass != kNegInf) psi[node] = start_mass + row[node];
            }
        }
    }

    std::vector<double> exit_score(n_gest);
    std::vector<std::size_t> exit_src(n_gest);
    std::vector<int> frame_glr(n_gest);

    for (std::size_t t = 1; t < len; ++t) {
        const Vec& row = emis.frame(begin + t);

        // Exit tokens: best token in each gesture that can cross its exit now.
        for (std::size_t g = 0; g < n_gest; ++g) {
            exit_score[g] = kNegInf;
            exit_src[g] = 0;
            frame_glr[g] = -1;
            const GestureHmm& m = net.models()[g];
            for (std::size_t s = 1; s <= m.n_emitting(); ++s) {
                const std::size_t node = net.node_of(g, s);
                if (psi[node] == kNegInf) continue;
                const double w = net.exit_weight(g, s);
                if (w == kNegInf) continue;
                const double cand = psi[node] + w;
                if (cand > exit_score[g]) {
                    exit_score[g] = cand;
                    exit_src[g] = s;
                }
            }
        }

        bool any = false;
        for (std::size_t l = 0; l < n_gest; ++l) {
            const GestureHmm& dest_model = net.models()[l];
            for (std::size_t j = 1; j <= dest_model.n_emitting(); ++j) {
                const std::size_t dest = net.node_of(l, j);
                double best = kNegInf;
                bool best_is_inter = false;
                std::size_t best_inter_from = 0;

                for (std::size_t g = 0; g < n_gest; ++g) {
                    if (g == l) {
                        const double entry_w = net.entry_weight(l, j);
                        const bool self_edge =
                            entry_w != kNegInf && exit_score[g] != kNegInf &&
                            std::find(net.predecessors(l).begin(), net.predecessors(l).end(), g) !=
                                net.predecessors(l).end();
                        for (std::size_t i = 1; i <= dest_model.n_emitting(); ++i) {
                            const std::size_t src = net.node_of(l, i);
                            if (psi[src] != kNegInf) {
                                const double w = net.intra_weight(l, i, j);
                                if (w != kNegInf && psi[src] + w > best) {
                                    best = psi[src] + w;
                                    best_is_inter = false;
                                    best_inter_from = 0;
                                    glr_next[dest] = glr[src];
                                }
                            }
                            if (self_edge && i == exit_src[g]) {
                                const double cand = exit_score[g] + entry_w;
                                if (cand > best) {
                                    best = cand;
                                    best_is_inter = true;
                                    best_inter_from = g;
                                }
                            }
                        }
                    } else if (exit_score[g] != kNegInf &&
                               std::find(net.predecessors(l).begin(), net.predecessors(l).end(), g) !=
                                   net.predecessors(l).end()) {
                        const double entry_w = net.entry_weight(l, j);
                        if (entry_w == kNegInf) continue;
                        const double cand = exit_score[g] + entry_w;
                        if (cand > best) {
                            best = cand;
                            best_is_inter = true;
                            best_inter_from = g;
                        }
                    }
                }

                if (best == kNegInf) {
                    psi_next[dest] = kNegInf;
                    glr_next[dest] = -1;
                    continue;
                }
                if (best_is_inter) {
                    const std::size_t g = best_inter_from;
                    if (frame_glr[g] < 0) {
                        GestureLinkRecord rec;
                        rec.boundary_time = t;  // 1-based index of frame t-1 (0-based)
                        rec.gesture_id = net.gesture_id(g);
                        rec.operator_id = net.operator_id();
                        rec.score_at_boundary = exit_score[g];
                        rec.parent = glr[net.node_of(g, exit_src[g])];
                        result.glr_arena.push_back(std::move(rec));
                        frame_glr[g] = static_cast<int>(result.glr_arena.size()) - 1;
                    }
                    glr_next[dest] = frame_glr[g];
                }
                psi_next[dest] = best + row[dest];
                any = true;
            }
        }

        if (!any) return result;  // every token hit -infinity: no admissible path
        std::swap(psi, psi_next);
        std::swap(glr, glr_next);
    }

    for (std::size_t node = 0; node < n_nodes; ++node)
        if (psi[node] > result.psi_max) {
            result.psi_max = psi[node];
            result.winning_node = node;
        }
    if (result.psi_max == kNegInf) return result;

    for (std::size_t g = 0; g < n_gest; ++g) {
        const GestureHmm& m = net.models()[g];
        for (std::size_t s = 1; s <= m.n_emitting(); ++s) {
            const std::size_t node = net.node_of(g, s);
            const double w = net.exit_weight(g, s);
            if (psi[node] != kNegInf && w != kNegInf)
                result.psi_exit = std::max(result.psi_exit, psi[node] + w);
        }
    }

    result.admissible = true;
    result.winning_gesture = net.gesture_id(net.gesture_state_of(result.winning_node).first);
    result.winning_glr = glr[result.winning_node];
    return result;
}

}  // namespace detail

inline NetworkDecodeResult decode_network(const DecodingNetwork& net, const ObsSequence& obs,
                                          const NetworkDecodeOptions& opt = {}) {
    if (obs.empty()) throw UsageError("decode_network: empty observation sequence");
    NetworkEmissions emis(net, obs);
    return detail::decode_network_core(net, emis, 0, obs.size(), opt);
}

inline NetworkDecodeResult decode_network_window(const DecodingNetwork& net, const NetworkEmissions& emis,
                                                 std::size_t begin, std::size_t len,
                                                 const NetworkDecodeOptions& opt = {}) {
    if (begin + len > emis.n_frames()) throw UsageError("decode_network_window: window exceeds emission cache");
    return detail::decode_network_core(net, emis, begin, len, opt);
}

// Walks the winning token's GLR chain back to the first frame. Spans are
// contiguous, ordered, and cover [1, T]; the span after the last boundary
// carries the winning node's gesture.
inline std::vector<DecodedSpan> traceback(const NetworkDecodeResult& result) {
    if (!result.admissible) return {};
    std::vector<DecodedSpan> spans;
    std::size_t end = result.n_frames;
    std::string gesture = result.winning_gesture;
    int rec_index = result.winning_glr;
    while (true) {
        std::size_t start = 1;
        if (rec_index >= 0) start = result.glr_arena[static_cast<std::size_t>(rec_index)].boundary_time + 1;
        spans.push_back(DecodedSpan{gesture, start, end});
        if (rec_index < 0) break;
        const GestureLinkRecord& rec = result.glr_arena[static_cast<std::size_t>(rec_index)];
        end = rec.boundary_time;
        gesture = rec.gesture_id;
        rec_index = rec.parent;
    }
    std::reverse(spans.begin(), spans.end());
    return spans;
}

}  // namespace opauth
