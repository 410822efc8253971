#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "opauth/errors.hpp"
#include "opauth/numerics.hpp"
#include "opauth/textio.hpp"
#include "opauth/types.hpp"

namespace opauth {

// Left-right HMM for one (operator, gesture) pair. State 0 is the non-emitting
// entry, state N-1 the non-emitting exit; states 1..N-2 emit through Gaussian
// mixtures. Transitions live in natural-log space.
struct GestureHmm {
    std::string operator_id;
    std::string gesture_id;
    std::size_t n_states = 0;  // total, including entry and exit
    std::size_t dim = 0;
    std::vector<Vec> log_transitions;  // n_states x n_states
    std::vector<Mixture> mixtures;     // one per emitting state, index s-1

    std::size_t n_emitting() const { return n_states >= 2 ? n_states - 2 : 0; }
    std::size_t exit_state() const { return n_states - 1; }
    const Mixture& mixture_of(std::size_t state) const { return mixtures[state - 1]; }
    Mixture& mixture_of(std::size_t state) { return mixtures[state - 1]; }
};

struct TrainReport {
    Vec log_likelihood_history;  // pre-update total log-likelihood per iteration
    std::size_t iterations = 0;
    bool converged = false;
};

// Constructor defaults: entry -> first emitting with probability 1; each
// emitting state self-loops with 0.6 and advances with 0.4. With skip_width 1
// the advance mass splits 0.3 next / 0.1 skip where a skip target exists.
inline GestureHmm new_left_right(std::size_t n_emitting, std::size_t n_mixtures, std::size_t dim,
                                 int skip_width = 0) {
    if (n_emitting < 1 || n_mixtures < 1 || dim < 1)
        throw UsageError("new_left_right: sizes must be positive");
    if (skip_width < 0 || skip_width > 1) throw UsageError("new_left_right: skip width must be 0 or 1");

    GestureHmm model;
    model.n_states = n_emitting + 2;
    model.dim = dim;
    model.log_transitions.assign(model.n_states, Vec(model.n_states, kNegInf));
    model.log_transitions[0][1] = 0.0;  // entry is a pure join point

    const std::size_t exit = model.exit_state();
    for (std::size_t i = 1; i <= n_emitting; ++i) {
        model.log_transitions[i][i] = std::log(0.6);
        if (skip_width == 1 && i + 2 <= exit) {
            model.log_transitions[i][i + 1] = std::log(0.3);
            model.log_transitions[i][i + 2] = std::log(0.1);
        } else {
            model.log_transitions[i][i + 1] = std::log(0.4);
        }
    }

    Mixture proto;
    for (std::size_t m = 0; m < n_mixtures; ++m)
        proto.components.push_back(GaussianComponent{Vec(dim, 0.0), Vec(dim, 1.0)});
    proto.log_weights.assign(n_mixtures, -std::log(static_cast<double>(n_mixtures)));
    model.mixtures.assign(n_emitting, proto);
    return model;
}

inline std::vector<std::string> validate(const GestureHmm& model) {
    std::vector<std::string> out;
    if (model.n_states < 3) {
        out.push_back("model needs at least 3 states (entry, one emitting, exit)");
        return out;
    }
    const std::size_t n = model.n_states;
    if (model.log_transitions.size() != n) out.push_back("transition matrix row count != n_states");
    for (std::size_t i = 0; i < model.log_transitions.size(); ++i)
        if (model.log_transitions[i].size() != n)
            out.push_back("transition row " + std::to_string(i) + " has wrong length");
    if (!out.empty()) return out;

    for (std::size_t i = 0; i + 1 < n; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += std::exp(model.log_transitions[i][j]);
        if (std::abs(total - 1.0) > 1e-9)
            out.push_back("row " + std::to_string(i) + " exp-sum is " + std::to_string(total));
    }
    for (std::size_t j = 0; j < n; ++j)
        if (model.log_transitions[n - 1][j] != kNegInf)
            out.push_back("exit row has outgoing transition to state " + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (model.log_transitions[i][j] != kNegInf)
                out.push_back("left-right violated: transition " + std::to_string(i) + "->" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i)
        if (model.log_transitions[i][0] != kNegInf)
            out.push_back("entry state has incoming transition from state " + std::to_string(i));

    if (model.mixtures.size() != model.n_emitting())
        out.push_back("mixture count != number of emitting states");
    for (std::size_t s = 0; s < model.mixtures.size(); ++s) {
        if (model.mixtures[s].dim() != model.dim)
            out.push_back("state " + std::to_string(s + 1) + " mixture dimension mismatch");
        for (const std::string& v : model.mixtures[s].violations())
            out.push_back("state " + std::to_string(s + 1) + ": " + v);
    }
    return out;
}

// log b_s(o_t) for every frame and emitting state; [t][s] with s 0-based over
// emitting states.
inline std::vector<Vec> emission_matrix(const GestureHmm& model, const ObsSequence& obs) {
    const std::size_t ne = model.n_emitting();
    std::vector<Vec> log_b(obs.size(), Vec(ne));
    for (std::size_t t = 0; t < obs.size(); ++t) {
        if (obs[t].size() != model.dim) throw UsageError("observation dimension mismatch");
        for (std::size_t s = 0; s < ne; ++s) log_b[t][s] = mixture_log_pdf(obs[t], model.mixtures[s]);
    }
    return log_b;
}

namespace detail {

// Forward/backward over emitting states with entry/exit handled outside the
// frame loop. alpha[t][s], beta[t][s] use 0-based emitting index s (state s+1).
struct ForwardBackward {
    std::vector<Vec> alpha;
    std::vector<Vec> beta;
    double log_likelihood = kNegInf;
};

inline std::vector<Vec> forward_pass(const GestureHmm& model, const std::vector<Vec>& log_b) {
    const std::size_t T = log_b.size();
    const std::size_t ne = model.n_emitting();
    const auto& A = model.log_transitions;
    std::vector<Vec> alpha(T, Vec(ne, kNegInf));
    for (std::size_t s = 0; s < ne; ++s)
        if (A[0][s + 1] != kNegInf) alpha[0][s] = A[0][s + 1] + log_b[0][s];
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < ne; ++j) {
            double acc = kNegInf;
            for (std::size_t i = 0; i <= j; ++i)
                if (A[i + 1][j + 1] != kNegInf && alpha[t - 1][i] != kNegInf)
                    acc = log_sum_exp(acc, alpha[t - 1][i] + A[i + 1][j + 1]);
            if (acc != kNegInf) alpha[t][j] = acc + log_b[t][j];
        }
    return alpha;
}

inline ForwardBackward forward_backward(const GestureHmm& model, const std::vector<Vec>& log_b) {
    const std::size_t T = log_b.size();
    const std::size_t ne = model.n_emitting();
    const std::size_t exit = model.exit_state();
    const auto& A = model.log_transitions;

    ForwardBackward fb;
    fb.alpha = forward_pass(model, log_b);

    fb.beta.assign(T, Vec(ne, kNegInf));
    for (std::size_t s = 0; s < ne; ++s) fb.beta[T - 1][s] = A[s + 1][exit];
    for (std::size_t t = T - 1; t-- > 0;)
        for (std::size_t i = 0; i < ne; ++i) {
            double acc = kNegInf;
            for (std::size_t j = i; j < ne; ++j)
                if (A[i + 1][j + 1] != kNegInf && fb.beta[t + 1][j] != kNegInf)
                    acc = log_sum_exp(acc, A[i + 1][j + 1] + log_b[t + 1][j] + fb.beta[t + 1][j]);
            fb.beta[t][i] = acc;
        }

    double ll = kNegInf;
    for (std::size_t s = 0; s < ne; ++s)
        if (fb.alpha[T - 1][s] != kNegInf && A[s + 1][exit] != kNegInf)
            ll = log_sum_exp(ll, fb.alpha[T - 1][s] + A[s + 1][exit]);
    fb.log_likelihood = ll;
    return fb;
}

}  // namespace detail

// log P(obs | model), summed over all paths entry -> emitting... -> exit.
// Returns -infinity when no admissible path exists (e.g. fewer frames than
// emitting states under a no-skip topology).
inline double forward_log_likelihood(const GestureHmm& model, const ObsSequence& obs) {
    if (obs.empty()) throw UsageError("forward_log_likelihood: empty observation sequence");
    const auto log_b = emission_matrix(model, obs);
    const auto alpha = detail::forward_pass(model, log_b);
    const std::size_t exit = model.exit_state();
    double ll = kNegInf;
    for (std::size_t s = 0; s < model.n_emitting(); ++s)
        if (alpha.back()[s] != kNegInf && model.log_transitions[s + 1][exit] != kNegInf)
            ll = log_sum_exp(ll, alpha.back()[s] + model.log_transitions[s + 1][exit]);
    return ll;
}

// Equal-length split initialization: segment frames are divided into
// n_emitting spans, pooled per state across segments, then seeded with
// k-means; variances come from per-cluster spread, floored.
inline GestureHmm init_from_segments(const GestureHmm& model, const std::vector<Segment>& segments,
                                     std::uint64_t seed) {
    if (segments.empty()) throw UsageError("init_from_segments: no segments");
    const std::size_t ne = model.n_emitting();
    const std::string& gesture = segments.front().gesture_id;
    for (const Segment& seg : segments) {
        if (seg.gesture_id != gesture)
            throw UsageError("init_from_segments: mixed gesture ids " + gesture + " vs " + seg.gesture_id);
        if (seg.dim() != model.dim) throw UsageError("init_from_segments: segment dimension mismatch");
        if (seg.length() < ne)
            throw DataError("segment of trial " + seg.trial_id + " (" + seg.gesture_id + ", length " +
                            std::to_string(seg.length()) + ") is shorter than " + std::to_string(ne) +
                            " emitting states");
    }

    GestureHmm out = model;
    out.gesture_id = gesture;
    out.operator_id = segments.front().operator_id;

    std::vector<Vec> all_frames;
    for (const Segment& seg : segments)
        all_frames.insert(all_frames.end(), seg.observations.begin(), seg.observations.end());
    Vec global_mean, global_var;
    pooled_moments(all_frames, global_mean, global_var);
    const Vec floor = variance_floor(global_var);

    std::mt19937_64 rng(seed);
    const std::size_t n_mix = out.mixtures.front().size();
    for (std::size_t s = 0; s < ne; ++s) {
        std::vector<Vec> pool;
        for (const Segment& seg : segments) {
            const std::size_t T = seg.length();
            const std::size_t lo = s * T / ne;
            const std::size_t hi = (s + 1) * T / ne;
            for (std::size_t t = lo; t < hi; ++t) pool.push_back(seg.observations[t]);
        }
        const std::uint64_t sub_seed = rng();
        std::vector<Vec> centers;
        if (pool.size() >= n_mix) {
            centers = kmeans_seed(pool, n_mix, sub_seed);
        } else {
            // Fewer pooled frames than mixtures: duplicate what is there.
            for (std::size_t m = 0; m < n_mix; ++m) centers.push_back(pool[m % pool.size()]);
        }

        Mixture& mix = out.mixtures[s];
        mix.log_weights.assign(n_mix, -std::log(static_cast<double>(n_mix)));
        std::vector<std::vector<Vec>> clusters(n_mix);
        for (const Vec& p : pool) {
            std::size_t best = 0;
            double best_d = detail::sq_dist(p, centers[0]);
            for (std::size_t c = 1; c < n_mix; ++c) {
                const double d = detail::sq_dist(p, centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            clusters[best].push_back(p);
        }
        for (std::size_t m = 0; m < n_mix; ++m) {
            mix.components[m].mean = centers[m];
            if (clusters[m].size() >= 2) {
                Vec cmean, cvar;
                pooled_moments(clusters[m], cmean, cvar);
                mix.components[m].variance = cvar;
            } else {
                mix.components[m].variance = global_var;
            }
            apply_variance_floor(mix.components[m], floor);
        }
    }
    return out;
}

// One Baum-Welch re-estimation over all segments. Returns the updated model
// and the pre-update total log-likelihood. The RNG drives component reseeding
// when a mixture component loses essentially all responsibility mass.
inline std::pair<GestureHmm, double> baum_welch_step(const GestureHmm& model,
                                                     const std::vector<Segment>& segments,
                                                     std::mt19937_64& rng) {
    if (segments.empty()) throw UsageError("baum_welch_step: no segments");
    const std::size_t ne = model.n_emitting();
    const std::size_t n = model.n_states;
    const std::size_t exit = model.exit_state();
    const std::size_t n_mix = model.mixtures.front().size();
    const std::size_t d = model.dim;
    const auto& A = model.log_transitions;

    std::vector<Vec> all_frames;
    for (const Segment& seg : segments)
        all_frames.insert(all_frames.end(), seg.observations.begin(), seg.observations.end());
    Vec global_mean, global_var;
    pooled_moments(all_frames, global_mean, global_var);
    const Vec floor = variance_floor(global_var);

    // Linear-domain accumulators; every responsibility term is <= 1.
    std::vector<Vec> trans_num(n, Vec(n, 0.0));
    Vec entry_num(ne, 0.0);
    Vec state_den(ne, 0.0);
    std::vector<Vec> mix_w(ne, Vec(n_mix, 0.0));
    std::vector<std::vector<Vec>> mix_mean(ne, std::vector<Vec>(n_mix, Vec(d, 0.0)));
    std::vector<std::vector<Vec>> mix_sq(ne, std::vector<Vec>(n_mix, Vec(d, 0.0)));

    double total_ll = 0.0;
    for (const Segment& seg : segments) {
        const std::size_t T = seg.length();
        // Per-component emission scores; log_bm[t][s][m], log_b[t][s].
        std::vector<std::vector<Vec>> log_bm(T, std::vector<Vec>(ne, Vec(n_mix)));
        std::vector<Vec> log_b(T, Vec(ne));
        for (std::size_t t = 0; t < T; ++t) {
            if (seg.observations[t].size() != d) throw UsageError("baum_welch_step: dimension mismatch");
            for (std::size_t s = 0; s < ne; ++s) {
                const Mixture& mix = model.mixtures[s];
                for (std::size_t m = 0; m < n_mix; ++m)
                    log_bm[t][s][m] = mix.log_weights[m] + gaussian_log_pdf(seg.observations[t], mix.components[m]);
                log_b[t][s] = log_sum_exp(log_bm[t][s]);
            }
        }

        const auto fb = detail::forward_backward(model, log_b);
        if (fb.log_likelihood == kNegInf)
            throw TrainError("segment of trial " + seg.trial_id + " (" + seg.gesture_id +
                             ") has zero likelihood under the current model");
        total_ll += fb.log_likelihood;
        const double ll = fb.log_likelihood;

        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t s = 0; s < ne; ++s) {
                if (fb.alpha[t][s] == kNegInf || fb.beta[t][s] == kNegInf) continue;
                const double log_gamma = fb.alpha[t][s] + fb.beta[t][s] - ll;
                const double gamma = std::exp(log_gamma);
                state_den[s] += gamma;
                // Split state mass over mixture components.
                for (std::size_t m = 0; m < n_mix; ++m) {
                    const double gm = std::exp(log_gamma + log_bm[t][s][m] - log_b[t][s]);
                    mix_w[s][m] += gm;
                    for (std::size_t k = 0; k < d; ++k) {
                        const double x = seg.observations[t][k];
                        mix_mean[s][m][k] += gm * x;
                        mix_sq[s][m][k] += gm * x * x;
                    }
                }
                if (t == 0) entry_num[s] += std::exp(fb.alpha[0][s] + fb.beta[0][s] - ll);
                if (t + 1 == T) trans_num[s + 1][exit] += gamma;  // exit crossed after the final frame
            }

        for (std::size_t t = 0; t + 1 < T; ++t)
            for (std::size_t i = 0; i < ne; ++i) {
                if (fb.alpha[t][i] == kNegInf) continue;
                for (std::size_t j = i; j < ne; ++j) {
                    if (A[i + 1][j + 1] == kNegInf || fb.beta[t + 1][j] == kNegInf) continue;
                    const double xi =
                        std::exp(fb.alpha[t][i] + A[i + 1][j + 1] + log_b[t + 1][j] + fb.beta[t + 1][j] - ll);
                    trans_num[i + 1][j + 1] += xi;
                }
            }
    }

    GestureHmm out = model;

    // Entry row: responsibility of starting in each emitting state.
    double entry_total = 0.0;
    for (std::size_t s = 0; s < ne; ++s)
        if (A[0][s + 1] != kNegInf) entry_total += entry_num[s];
    if (entry_total > 0.0)
        for (std::size_t s = 0; s < ne; ++s)
            out.log_transitions[0][s + 1] =
                (A[0][s + 1] != kNegInf && entry_num[s] > 0.0) ? std::log(entry_num[s] / entry_total) : kNegInf;

    for (std::size_t i = 0; i < ne; ++i) {
        if (state_den[i] <= 0.0) continue;  // state unvisited; keep its parameters
        for (std::size_t j = 0; j < n; ++j) {
            if (A[i + 1][j] == kNegInf) continue;
            const double mass = trans_num[i + 1][j];
            out.log_transitions[i + 1][j] = mass > 0.0 ? std::log(mass / state_den[i]) : kNegInf;
        }

        Mixture& mix = out.mixtures[i];
        double wsum = 0.0;
        for (std::size_t m = 0; m < n_mix; ++m) wsum += mix_w[i][m];
        for (std::size_t m = 0; m < n_mix; ++m) {
            if (mix_w[i][m] < kReseedResponsibility) {
                // Collapsed component: restart it at a random training frame.
                std::uniform_int_distribution<std::size_t> pick(0, all_frames.size() - 1);
                mix.components[m].mean = all_frames[pick(rng)];
                mix.components[m].variance = global_var;
                apply_variance_floor(mix.components[m], floor);
                mix.log_weights[m] = -std::log(static_cast<double>(n_mix));
                continue;
            }
            mix.log_weights[m] = std::log(mix_w[i][m] / wsum);
            for (std::size_t k = 0; k < d; ++k) {
                const double mu = mix_mean[i][m][k] / mix_w[i][m];
                mix.components[m].mean[k] = mu;
                mix.components[m].variance[k] = mix_sq[i][m][k] / mix_w[i][m] - mu * mu;
            }
            apply_variance_floor(mix.components[m], floor);
        }
        // Weight floor, then renormalize in log space.
        Vec w(n_mix);
        double wtotal = 0.0;
        for (std::size_t m = 0; m < n_mix; ++m) {
            w[m] = std::max(std::exp(mix.log_weights[m]), kWeightFloor);
            wtotal += w[m];
        }
        for (std::size_t m = 0; m < n_mix; ++m) mix.log_weights[m] = std::log(w[m] / wtotal);
    }

    return {std::move(out), total_ll};
}

inline std::pair<GestureHmm, double> baum_welch_step(const GestureHmm& model,
                                                     const std::vector<Segment>& segments,
                                                     std::uint64_t seed = 0) {
    std::mt19937_64 rng(seed);
    return baum_welch_step(model, segments, rng);
}

// Baum-Welch to convergence: stops when the relative log-likelihood
// improvement drops below rel_tol or after max_iter steps.
inline std::pair<GestureHmm, TrainReport> train(const GestureHmm& model, const std::vector<Segment>& segments,
                                                std::size_t max_iter = 100, double rel_tol = 1e-5,
                                                std::uint64_t seed = 0) {
    if (max_iter < 1) throw UsageError("train: max_iter must be >= 1");
    if (!(rel_tol > 0.0)) throw UsageError("train: rel_tol must be positive");

    std::mt19937_64 rng(seed);
    GestureHmm current = model;
    TrainReport report;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        auto [next, ll] = baum_welch_step(current, segments, rng);
        current = std::move(next);
        ++report.iterations;
        if (!report.log_likelihood_history.empty()) {
            const double prev = report.log_likelihood_history.back();
            const double rel = (ll - prev) / std::max(std::abs(prev), 1e-12);
            report.log_likelihood_history.push_back(ll);
            if (rel < rel_tol) {
                report.converged = true;
                break;
            }
        } else {
            report.log_likelihood_history.push_back(ll);
        }
    }
    return {std::move(current), std::move(report)};
}

// --- persistence -----------------------------------------------------------
//
// Self-describing text format, one file per model. All real parameters are
// written with 17 significant digits so load(save(m)) is bit-exact.

inline std::string save_model(const GestureHmm& model) {
    std::ostringstream out;
    out << "opauth-hmm v1\n";
    out << "operator " << model.operator_id << "\n";
    out << "gesture " << model.gesture_id << "\n";
    out << "dim " << model.dim << "\n";
    out << "states " << model.n_states << "\n";
    out << "mixtures " << (model.mixtures.empty() ? 0 : model.mixtures.front().size()) << "\n";
    out << "transitions\n";
    for (std::size_t i = 0; i < model.n_states; ++i) {
        for (std::size_t j = 0; j < model.n_states; ++j)
            out << (j ? " " : "") << fmt_full(model.log_transitions[i][j]);
        out << "\n";
    }
    for (std::size_t s = 0; s < model.mixtures.size(); ++s) {
        const Mixture& mix = model.mixtures[s];
        out << "state " << (s + 1) << "\n";
        out << "weights";
        for (double lw : mix.log_weights) out << " " << fmt_full(lw);
        out << "\n";
        for (std::size_t m = 0; m < mix.size(); ++m) {
            out << "mean " << m;
            for (double v : mix.components[m].mean) out << " " << fmt_full(v);
            out << "\n";
            out << "var " << m;
            for (double v : mix.components[m].variance) out << " " << fmt_full(v);
            out << "\n";
        }
    }
    out << "end\n";
    return out.str();
}

inline GestureHmm load_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    auto next_line = [&](const std::string& what) {
        if (!std::getline(in, line)) throw DataError("model file truncated: expected " + what);
        return std::string(trim(line));
    };

    if (next_line("header") != "opauth-hmm v1") throw DataError("not an opauth-hmm v1 model file");
    auto tail = [](const std::string& l, const std::string& key) {
        if (l.rfind(key + " ", 0) != 0) throw DataError("model file: expected '" + key + "', got '" + l + "'");
        return l.substr(key.size() + 1);
    };

    GestureHmm model;
    model.operator_id = tail(next_line("operator"), "operator");
    model.gesture_id = tail(next_line("gesture"), "gesture");
    model.dim = static_cast<std::size_t>(parse_long(tail(next_line("dim"), "dim"), "dim"));
    model.n_states = static_cast<std::size_t>(parse_long(tail(next_line("states"), "states"), "states"));
    const auto n_mix = static_cast<std::size_t>(parse_long(tail(next_line("mixtures"), "mixtures"), "mixtures"));
    if (model.n_states < 3) throw DataError("model file: fewer than 3 states");

    if (next_line("transitions") != "transitions") throw DataError("model file: expected 'transitions'");
    model.log_transitions.assign(model.n_states, Vec(model.n_states));
    for (std::size_t i = 0; i < model.n_states; ++i) {
        const auto cells = split(next_line("transition row"), ' ');
        if (cells.size() != model.n_states)
            throw DataError("model file: transition row " + std::to_string(i) + " has " +
                            std::to_string(cells.size()) + " entries");
        for (std::size_t j = 0; j < model.n_states; ++j)
            model.log_transitions[i][j] = parse_double(cells[j], "transition row " + std::to_string(i));
    }

    model.mixtures.assign(model.n_emitting(), Mixture{});
    for (std::size_t s = 0; s < model.n_emitting(); ++s) {
        const std::string header = next_line("state header");
        if (header != "state " + std::to_string(s + 1))
            throw DataError("model file: expected 'state " + std::to_string(s + 1) + "', got '" + header + "'");
        Mixture& mix = model.mixtures[s];
        const auto wcells = split(next_line("weights"), ' ');
        if (wcells.size() != n_mix + 1 || wcells[0] != "weights")
            throw DataError("model file: malformed weights line for state " + std::to_string(s + 1));
        for (std::size_t m = 0; m < n_mix; ++m)
            mix.log_weights.push_back(parse_double(wcells[m + 1], "weights"));
        for (std::size_t m = 0; m < n_mix; ++m) {
            GaussianComponent comp;
            for (const char* kind : {"mean", "var"}) {
                const auto cells = split(next_line(kind), ' ');
                if (cells.size() != model.dim + 2 || cells[0] != kind || cells[1] != std::to_string(m))
                    throw DataError("model file: malformed " + std::string(kind) + " line, state " +
                                    std::to_string(s + 1) + " component " + std::to_string(m));
                Vec& target = (std::string_view(kind) == "mean") ? comp.mean : comp.variance;
                for (std::size_t k = 0; k < model.dim; ++k)
                    target.push_back(parse_double(cells[k + 2], kind));
            }
            mix.components.push_back(std::move(comp));
        }
    }
    if (next_line("end") != "end") throw DataError("model file: missing 'end'");

    const auto problems = validate(model);
    if (!problems.empty()) throw DataError("model file fails validation: " + problems.front());
    return model;
}

inline void save_model_file(const GestureHmm& model, const std::filesystem::path& path) {
    write_text_file_atomic(path, save_model(model));
}

inline GestureHmm load_model_file(const std::filesystem::path& path) {
    return load_model(read_text_file(path));
}

}  // namespace opauth
