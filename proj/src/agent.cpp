#include "autoscope/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace autoscope::agent {

// --- TabularEnv -------------------------------------------------------------

TabularEnv::TabularEnv(int n_states, int n_actions, std::vector<double> transition,
                       std::vector<double> reward, std::vector<std::uint8_t> terminal,
                       int start_state, int max_steps)
    : n_states_(n_states),
      n_actions_(n_actions),
      start_state_(start_state),
      max_steps_(max_steps),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      terminal_(std::move(terminal)) {
    const std::size_t want = static_cast<std::size_t>(n_states) * n_actions * n_states;
    if (transition_.size() != want || reward_.size() != want ||
        terminal_.size() != static_cast<std::size_t>(n_states))
        throw std::invalid_argument("TabularEnv: tensor size mismatch");
    for (int s = 0; s < n_states_; ++s)
        for (int a = 0; a < n_actions_; ++a) {
            double sum = 0.0;
            for (int s2 = 0; s2 < n_states_; ++s2) {
                const double pv = p(s, a, s2);
                if (pv < 0.0) throw std::invalid_argument("TabularEnv: negative probability");
                if (!std::isfinite(r(s, a, s2)))
                    throw std::invalid_argument("TabularEnv: non-finite reward");
                sum += pv;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("TabularEnv: transition row does not sum to 1");
        }
    if (start_state < 0 || start_state >= n_states)
        throw std::invalid_argument("TabularEnv: bad start state");
}

TabularEnv::StepResult TabularEnv::step(int state, int action, Rng& rng) {
    if (terminal_[state]) return {state, 0.0, true};
    const double u = rng.next_double();
    double acc = 0.0;
    int s2 = n_states_ - 1;
    for (int k = 0; k < n_states_; ++k) {
        acc += p(state, action, k);
        if (u < acc) {
            s2 = k;
            break;
        }
    }
    return {s2, r(state, action, s2), terminal_[s2] != 0};
}

// --- tip conditioning env -----------------------------------------------------

namespace {

// Quality-shift distributions per action over {-2,-1,0,+1,+2} plus an
// outright destruction probability. Soft actions move +-1 with low risk,
// hard actions +-2 with real risk.
struct TipActionSpec {
    double shift_prob[5];  // P(delta = -2,-1,0,+1,+2)
    double destroy_prob;
};

constexpr TipActionSpec kTipActions[4] = {
    // soft_pulse
    {{0.00, 0.15, 0.25, 0.60, 0.00}, 0.02},
    // hard_pulse
    {{0.15, 0.10, 0.10, 0.15, 0.50}, 0.10},
    // gentle_crash
    {{0.10, 0.15, 0.20, 0.25, 0.30}, 0.05},
    // scan_anneal
    {{0.00, 0.10, 0.55, 0.35, 0.00}, 0.00},
};

constexpr int kTipStates = 6;   // 0 destroyed, 1..4 working, 5 good
constexpr double kTipStepReward = -1.0;
constexpr double kTipGoodReward = 10.0;
constexpr double kTipDestroyedReward = -10.0;

}  // namespace

TabularEnv tip_env(const TipEnvConfig& config) {
    const int S = kTipStates, A = 4;
    std::vector<double> P(static_cast<std::size_t>(S) * A * S, 0.0);
    std::vector<double> R(static_cast<std::size_t>(S) * A * S, 0.0);
    std::vector<std::uint8_t> terminal(S, 0);
    terminal[0] = 1;
    terminal[5] = 1;

    auto idx = [&](int s, int a, int s2) {
        return (static_cast<std::size_t>(s) * A + a) * S + s2;
    };

    for (int s = 1; s <= 4; ++s)
        for (int a = 0; a < A; ++a) {
            const TipActionSpec& spec = kTipActions[a];
            // destruction only through the explicit per-action risk
            P[idx(s, a, 0)] += spec.destroy_prob;
            for (int d = -2; d <= 2; ++d) {
                double q = spec.shift_prob[d + 2] * (1.0 - spec.destroy_prob);
                if (q == 0.0) continue;
                int s2 = s + d;
                if (s2 >= 5) s2 = 5;
                if (s2 < 1) s2 = 1;  // quality bottoms out at 1
                P[idx(s, a, s2)] += q;
            }
            for (int s2 = 0; s2 < S; ++s2) {
                double rew = kTipStepReward;
                if (s2 == 5) rew += kTipGoodReward;
                if (s2 == 0) rew += kTipDestroyedReward;
                R[idx(s, a, s2)] = rew;
            }
        }
    // terminal states self-loop with zero reward
    for (int s : {0, 5})
        for (int a = 0; a < A; ++a) P[idx(s, a, s)] = 1.0;

    return TabularEnv(S, A, std::move(P), std::move(R), std::move(terminal), config.start_state,
                      config.max_steps);
}

// --- write env ----------------------------------------------------------------

WriteEnv::WriteEnv(const Config& config) : config_(config) {
    cells_ = config.grid_w * config.grid_h;
    if (config.grid_w < 1 || config.grid_h < 1 || config.grid_w > 5 || config.grid_h > 5)
        throw std::invalid_argument("WriteEnv: grid must be between 1x1 and 5x5");
    if (static_cast<int>(config.goal.size()) != cells_)
        throw std::invalid_argument("WriteEnv: goal size mismatch");
    if (!config.initial.empty() && static_cast<int>(config.initial.size()) != cells_)
        throw std::invalid_argument("WriteEnv: initial size mismatch");
    if (cells_ > 20)
        throw std::invalid_argument("WriteEnv: state space too large for tabular methods");
    for (int i = 0; i < cells_; ++i) {
        if (config.goal[i]) goal_bits_ |= (1u << i);
        if (!config.initial.empty() && config.initial[i]) initial_bits_ |= (1u << i);
    }
    n_states_ = cells_ * (1 << cells_);
}

int WriteEnv::encode(int cursor, std::uint32_t pattern) const {
    return cursor * (1 << cells_) + static_cast<int>(pattern);
}

std::pair<int, std::uint32_t> WriteEnv::decode(int state) const {
    return {state >> cells_, static_cast<std::uint32_t>(state & ((1 << cells_) - 1))};
}

int WriteEnv::hamming(std::uint32_t pattern) const {
    return std::popcount(pattern ^ goal_bits_);
}

int WriteEnv::reset(Rng&) { return encode(0, initial_bits_); }

bool WriteEnv::is_terminal(int state) const { return decode(state).second == goal_bits_; }

WriteEnv::StepResult WriteEnv::step(int state, int action, Rng& rng) {
    auto [cursor, pattern] = decode(state);
    if (pattern == goal_bits_) return {state, 0.0, true};

    int cx = cursor % config_.grid_w;
    int cy = cursor / config_.grid_w;
    double reward = -config_.step_cost;
    switch (action) {
        case 0: cy = std::max(0, cy - 1); break;                  // N
        case 1: cy = std::min(config_.grid_h - 1, cy + 1); break; // S
        case 2: cx = std::min(config_.grid_w - 1, cx + 1); break; // E
        case 3: cx = std::max(0, cx - 1); break;                  // W
        case 4:
        case 5: {
            const double bias = action == 4 ? config_.pulse_bias : -config_.pulse_bias;
            const int target = action == 4 ? 1 : 0;
            const int cell = cursor;
            const int cur = (pattern >> cell) & 1u;
            if (cur != target) {
                const double p = flip_probability(bias, config_.pulse_dose, config_.coercive_bias,
                                                  config_.flip_sharpness);
                if (rng.next_double() < p) {
                    const int before = hamming(pattern);
                    pattern ^= (1u << cell);
                    reward += before - hamming(pattern);
                }
            }
            break;
        }
        default:
            throw std::invalid_argument("WriteEnv: bad action");
    }
    cursor = cy * config_.grid_w + cx;
    const int s2 = encode(cursor, pattern);
    return {s2, reward, pattern == goal_bits_};
}

// --- oracles -----------------------------------------------------------------

std::vector<double> value_iteration(const TabularEnv& env, double gamma, double tol) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("value_iteration: gamma must be in [0,1)");
    const int S = env.n_states(), A = env.n_actions();
    std::vector<double> v(S, 0.0), v2(S, 0.0);
    while (true) {
        double resid = 0.0;
        for (int s = 0; s < S; ++s) {
            if (env.is_terminal(s)) {
                v2[s] = 0.0;
                continue;
            }
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < A; ++a) {
                double q = 0.0;
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = env.p(s, a, s2);
                    if (p == 0.0) continue;
                    q += p * (env.r(s, a, s2) + gamma * v[s2]);
                }
                best = std::max(best, q);
            }
            v2[s] = best;
            resid = std::max(resid, std::abs(v2[s] - v[s]));
        }
        v.swap(v2);
        // residual of the returned iterate is <= gamma * resid < tol
        if (resid < tol) break;
    }
    return v;
}

std::vector<double> policy_evaluation(const TabularEnv& env, const std::vector<double>& policy,
                                      double gamma, double tol) {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("policy_evaluation: gamma must be in [0,1)");
    const int S = env.n_states(), A = env.n_actions();
    if (policy.size() != static_cast<std::size_t>(S) * A)
        throw std::invalid_argument("policy_evaluation: policy size mismatch");
    std::vector<double> v(S, 0.0), v2(S, 0.0);
    while (true) {
        double resid = 0.0;
        for (int s = 0; s < S; ++s) {
            if (env.is_terminal(s)) {
                v2[s] = 0.0;
                continue;
            }
            double val = 0.0;
            for (int a = 0; a < A; ++a) {
                const double pa = policy[static_cast<std::size_t>(s) * A + a];
                if (pa == 0.0) continue;
                for (int s2 = 0; s2 < S; ++s2) {
                    const double p = env.p(s, a, s2);
                    if (p == 0.0) continue;
                    val += pa * p * (env.r(s, a, s2) + gamma * v[s2]);
                }
            }
            v2[s] = val;
            resid = std::max(resid, std::abs(v2[s] - v[s]));
        }
        v.swap(v2);
        if (resid < tol) break;
    }
    return v;
}

double bellman_residual(const TabularEnv& env, const std::vector<double>& v, double gamma) {
    const int S = env.n_states(), A = env.n_actions();
    double resid = 0.0;
    for (int s = 0; s < S; ++s) {
        if (env.is_terminal(s)) {
            resid = std::max(resid, std::abs(v[s]));
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < A; ++a) {
            double q = 0.0;
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = env.p(s, a, s2);
                if (p == 0.0) continue;
                q += p * (env.r(s, a, s2) + gamma * v[s2]);
            }
            best = std::max(best, q);
        }
        resid = std::max(resid, std::abs(best - v[s]));
    }
    return resid;
}

// --- double Q ----------------------------------------------------------------

int QTables::greedy(int s) const {
    int best = 0;
    double best_v = sum(s, 0);
    for (int a = 1; a < n_actions; ++a) {
        const double v = sum(s, a);
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

namespace {

int argmax_row(const std::vector<double>& q, int s, int n_actions) {
    int best = 0;
    double best_v = q[static_cast<std::size_t>(s) * n_actions];
    for (int a = 1; a < n_actions; ++a) {
        const double v = q[static_cast<std::size_t>(s) * n_actions + a];
        if (v > best_v) {
            best_v = v;
            best = a;
        }
    }
    return best;
}

}  // namespace

DoubleQResult train_double_q(Env& env, const DoubleQConfig& config) {
    if (!(config.gamma >= 0.0 && config.gamma < 1.0))
        throw std::invalid_argument("train_double_q: gamma must be in [0,1)");
    if (!(config.alpha > 0.0 && config.alpha <= 1.0))
        throw std::invalid_argument("train_double_q: alpha must be in (0,1]");
    if (env.n_states() > (1 << 22))
        throw std::invalid_argument("train_double_q: state space too large for tables");

    const int S = env.n_states(), A = env.n_actions();
    DoubleQResult result;
    result.q.n_states = S;
    result.q.n_actions = A;
    result.q.q_a.assign(static_cast<std::size_t>(S) * A, 0.0);
    result.q.q_b.assign(static_cast<std::size_t>(S) * A, 0.0);
    auto& qa = result.q.q_a;
    auto& qb = result.q.q_b;

    Rng rng = Rng::child(config.seed, 0x64715f74);

    const int decay_span =
        std::max(1, static_cast<int>(config.decay_fraction * config.n_episodes));
    for (int ep = 0; ep < config.n_episodes; ++ep) {
        const double frac = std::min(1.0, static_cast<double>(ep) / decay_span);
        const double eps = config.epsilon0 + frac * (config.epsilon_min - config.epsilon0);

        int s = env.reset(rng);
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < env.max_steps(); ++t) {
            if (env.is_terminal(s)) break;
            int a;
            if (rng.next_double() < eps) {
                a = rng.next_int(A);
            } else {
                a = result.q.greedy(s);
            }
            const auto sr = env.step(s, a, rng);
            ret += disc * sr.reward;
            disc *= config.gamma;

            const std::size_t sa = static_cast<std::size_t>(s) * A + a;
            const bool update_a = rng.next_double() < 0.5;
            auto& upd = update_a ? qa : qb;
            auto& eval = update_a ? qb : qa;
            double target = sr.reward;
            if (!sr.done) {
                const int astar = argmax_row(upd, sr.next_state, A);
                target += config.gamma *
                          eval[static_cast<std::size_t>(sr.next_state) * A + astar];
            }
            upd[sa] += config.alpha * (target - upd[sa]);

            s = sr.next_state;
            if (sr.done) break;
        }
        result.curve.push_back({ep, ret, eps});
    }
    return result;
}

double evaluate_greedy(Env& env, const QTables& q, double gamma, int n_episodes,
                       std::uint64_t seed) {
    Rng rng = Rng::child(seed, 0x65766c67);
    double total = 0.0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        int s = env.reset(rng);
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < env.max_steps(); ++t) {
            if (env.is_terminal(s)) break;
            const auto sr = env.step(s, q.greedy(s), rng);
            ret += disc * sr.reward;
            disc *= gamma;
            s = sr.next_state;
            if (sr.done) break;
        }
        total += ret;
    }
    return total / n_episodes;
}

double evaluate_random(Env& env, double gamma, int n_episodes, std::uint64_t seed) {
    Rng rng = Rng::child(seed, 0x65766c72);
    double total = 0.0;
    for (int ep = 0; ep < n_episodes; ++ep) {
        int s = env.reset(rng);
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < env.max_steps(); ++t) {
            if (env.is_terminal(s)) break;
            const auto sr = env.step(s, rng.next_int(env.n_actions()), rng);
            ret += disc * sr.reward;
            disc *= gamma;
            s = sr.next_state;
            if (sr.done) break;
        }
        total += ret;
    }
    return total / n_episodes;
}

// --- REINFORCE ----------------------------------------------------------------

SoftmaxPolicy SoftmaxPolicy::tabular(int n_states, int n_actions) {
    SoftmaxPolicy p;
    p.n_features = n_states;
    p.n_actions = n_actions;
    p.theta.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    p.feature_map = [n_states](int s) {
        std::vector<double> f(n_states, 0.0);
        f[s] = 1.0;
        return f;
    };
    return p;
}

std::vector<double> SoftmaxPolicy::probs(int state) const {
    const std::vector<double> f = feature_map(state);
    std::vector<double> logits(n_actions, 0.0);
    for (int a = 0; a < n_actions; ++a)
        for (int k = 0; k < n_features; ++k)
            if (f[k] != 0.0) logits[a] += f[k] * theta[static_cast<std::size_t>(k) * n_actions + a];
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - m);
        z += l;
    }
    for (auto& l : logits) l /= z;
    return logits;
}

int SoftmaxPolicy::sample_action(int state, Rng& rng) const {
    const auto p = probs(state);
    const double u = rng.next_double();
    double acc = 0.0;
    for (int a = 0; a < n_actions; ++a) {
        acc += p[a];
        if (u < acc) return a;
    }
    return n_actions - 1;
}

std::vector<Trajectory> collect_batch(Env& env, const SoftmaxPolicy& policy, int batch_size,
                                      double gamma, Rng& rng) {
    std::vector<Trajectory> batch;
    batch.reserve(batch_size);
    for (int b = 0; b < batch_size; ++b) {
        Trajectory traj;
        traj.gamma = gamma;
        int s = env.reset(rng);
        double disc = 1.0;
        for (int t = 0; t < env.max_steps(); ++t) {
            if (env.is_terminal(s)) break;
            const int a = policy.sample_action(s, rng);
            const auto sr = env.step(s, a, rng);
            traj.steps.push_back({s, a, sr.reward, sr.next_state});
            traj.return_disc += disc * sr.reward;
            disc *= gamma;
            s = sr.next_state;
            if (sr.done) break;
        }
        batch.push_back(std::move(traj));
    }
    return batch;
}

namespace {

/// Per-step discounted rewards-to-go G_t = sum_{k>=t} gamma^{k-t} r_k.
std::vector<double> rewards_to_go(const Trajectory& traj) {
    std::vector<double> g(traj.steps.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = traj.steps.size(); t-- > 0;) {
        acc = traj.steps[t].reward + traj.gamma * acc;
        g[t] = acc;
    }
    return g;
}

}  // namespace

double surrogate_loss(const SoftmaxPolicy& policy, const std::vector<Trajectory>& batch) {
    double loss = 0.0;
    for (const auto& traj : batch) {
        const auto g = rewards_to_go(traj);
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto p = policy.probs(traj.steps[t].state);
            loss += std::log(std::max(p[traj.steps[t].action], 1e-300)) * g[t];
        }
    }
    return loss;
}

std::vector<double> surrogate_gradient(const SoftmaxPolicy& policy,
                                       const std::vector<Trajectory>& batch) {
    std::vector<double> grad(policy.theta.size(), 0.0);
    for (const auto& traj : batch) {
        const auto g = rewards_to_go(traj);
        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const int s = traj.steps[t].state;
            const int a = traj.steps[t].action;
            const auto p = policy.probs(s);
            const auto f = policy.feature_map(s);
            // d log pi(a|s) / d theta[k][b] = f[k] * (1[b==a] - p[b])
            for (int k = 0; k < policy.n_features; ++k) {
                if (f[k] == 0.0) continue;
                for (int b = 0; b < policy.n_actions; ++b) {
                    const double indicator = b == a ? 1.0 : 0.0;
                    grad[static_cast<std::size_t>(k) * policy.n_actions + b] +=
                        f[k] * (indicator - p[b]) * g[t];
                }
            }
        }
    }
    return grad;
}

ReinforceResult train_reinforce(Env& env, SoftmaxPolicy policy, const ReinforceConfig& config) {
    if (!(config.gamma >= 0.0 && config.gamma <= 1.0) || !(config.alpha > 0.0) ||
        config.batch_size < 1 || config.n_batches < 0)
        throw std::invalid_argument("train_reinforce: bad hyperparameters");

    ReinforceResult result;
    Rng rng = Rng::child(config.seed, 0x7265696e);

    // tabular V(s) baseline learned by moving average of returns-to-go
    std::vector<double> v_table;
    std::vector<int> v_count;
    if (config.baseline == Baseline::value) {
        v_table.assign(env.n_states(), 0.0);
        v_count.assign(env.n_states(), 0);
    }

    for (int it = 0; it < config.n_batches; ++it) {
        const auto batch = collect_batch(env, policy, config.batch_size, config.gamma, rng);

        double mean_ret = 0.0;
        for (const auto& traj : batch) mean_ret += traj.return_disc;
        mean_ret /= batch.size();

        std::vector<double> grad(policy.theta.size(), 0.0);
        for (const auto& traj : batch) {
            const auto g = rewards_to_go(traj);
            for (std::size_t t = 0; t < traj.steps.size(); ++t) {
                const int s = traj.steps[t].state;
                const int a = traj.steps[t].action;
                double advantage = g[t];
                switch (config.baseline) {
                    case Baseline::none: break;
                    case Baseline::mean: advantage -= mean_ret; break;
                    case Baseline::value: {
                        advantage -= v_table[s];
                        // moving-average critic update
                        ++v_count[s];
                        v_table[s] += (g[t] - v_table[s]) / v_count[s];
                        break;
                    }
                }
                const auto p = policy.probs(s);
                const auto f = policy.feature_map(s);
                for (int k = 0; k < policy.n_features; ++k) {
                    if (f[k] == 0.0) continue;
                    for (int b = 0; b < policy.n_actions; ++b) {
                        const double indicator = b == a ? 1.0 : 0.0;
                        grad[static_cast<std::size_t>(k) * policy.n_actions + b] +=
                            f[k] * (indicator - p[b]) * advantage;
                    }
                }
            }
        }
        double norm2 = 0.0;
        for (double gv : grad) norm2 += gv * gv;
        if (!std::isfinite(norm2))
            throw std::runtime_error("train_reinforce: non-finite gradient at batch " +
                                     std::to_string(it));

        const double scale = config.alpha / batch.size();
        for (std::size_t i = 0; i < grad.size(); ++i) policy.theta[i] += scale * grad[i];

        result.curve.push_back({it, mean_ret, std::sqrt(norm2)});
    }
    result.policy = std::move(policy);
    return result;
}

// --- intrinsic rewards ----------------------------------------------------------

CuriosityModel::CuriosityModel(int n_states, int n_actions, double laplace_alpha)
    : n_states_(n_states), n_actions_(n_actions), alpha_(laplace_alpha) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("CuriosityModel: bad dimensions");
    if (laplace_alpha < 0.0)
        throw std::invalid_argument("CuriosityModel: alpha must be >= 0");
}

void CuriosityModel::observe(int s, int a, int s2) {
    counts_[{s, a}][s2] += 1.0;
    totals_[{s, a}] += 1.0;
}

double CuriosityModel::total(int s, int a) const {
    const auto it = totals_.find({s, a});
    return it == totals_.end() ? 0.0 : it->second;
}

const std::map<int, double>* CuriosityModel::successors(int s, int a) const {
    const auto it = counts_.find({s, a});
    return it == counts_.end() ? nullptr : &it->second;
}

double CuriosityModel::p_hat(int s, int a, int s2) const {
    const double tot = total(s, a);
    double c = 0.0;
    if (const auto* succ = successors(s, a)) {
        const auto it = succ->find(s2);
        if (it != succ->end()) c = it->second;
    }
    const double denom = tot + alpha_ * n_states_;
    if (denom <= 0.0)
        throw std::invalid_argument("CuriosityModel: (s,a) unseen and alpha == 0");
    return (c + alpha_) / denom;
}

double intrinsic_reward(const CuriosityModel& model, int s, int a, int s2, IntrinsicKind kind,
                        const std::vector<double>* action_probs) {
    if (kind == IntrinsicKind::curiosity) return -std::log(model.p_hat(s, a, s2));

    if (!action_probs)
        throw std::invalid_argument("intrinsic_reward: empowerment requires a policy");
    if (static_cast<int>(action_probs->size()) != model.n_actions())
        throw std::invalid_argument("intrinsic_reward: policy size mismatch");

    // KL(p_hat(.|s,a) || sum_a' pi(a'|s) p_hat(.|s,a')), computed over the
    // union of observed successors plus a closed-form term for the untouched
    // remainder (all of which share identical smoothed probabilities).
    std::vector<int> support;
    for (int a2 = 0; a2 < model.n_actions(); ++a2)
        if (const auto* succ = model.successors(s, a2))
            for (const auto& [s2v, c] : *succ) support.push_back(s2v);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());

    auto mix_prob = [&](int state2) {
        double q = 0.0;
        for (int a2 = 0; a2 < model.n_actions(); ++a2)
            q += (*action_probs)[a2] * model.p_hat(s, a2, state2);
        return q;
    };

    double kl = 0.0;
    for (int s2v : support) {
        const double p = model.p_hat(s, a, s2v);
        const double q = mix_prob(s2v);
        if (p > 0.0 && p != q) kl += p * std::log(p / q);
    }
    const int n_rest = model.n_states() - static_cast<int>(support.size());
    if (n_rest > 0 && model.alpha() > 0.0) {
        // any never-observed successor has the same p and q; find one
        int probe = 0;
        std::size_t si = 0;
        while (si < support.size() && support[si] == probe) {
            ++probe;
            ++si;
        }
        const double p = model.p_hat(s, a, probe);
        const double q = mix_prob(probe);
        if (p > 0.0 && p != q) kl += n_rest * (p * std::log(p / q));
    }
    return kl;
}

}  // namespace autoscope::agent
