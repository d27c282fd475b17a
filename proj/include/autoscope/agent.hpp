#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "autoscope/rng.hpp"
#include "autoscope/sample.hpp"

namespace autoscope::agent {

/// Generative environment: reset/step with explicit RNG, so training runs
/// are bit-reproducible for a fixed seed. Single consumer per instance.
class Env {
public:
    virtual ~Env() = default;
    virtual int n_states() const = 0;
    virtual int n_actions() const = 0;
    virtual int max_steps() const = 0;
    virtual int reset(Rng& rng) = 0;
    struct StepResult {
        int next_state;
        double reward;
        bool done;
    };
    virtual StepResult step(int state, int action, Rng& rng) = 0;
    virtual bool is_terminal(int state) const = 0;
};

/// Explicit-tensor MDP; transition rows are validated to sum to 1.
class TabularEnv : public Env {
public:
    TabularEnv(int n_states, int n_actions, std::vector<double> transition,
               std::vector<double> reward, std::vector<std::uint8_t> terminal, int start_state,
               int max_steps);

    int n_states() const override { return n_states_; }
    int n_actions() const override { return n_actions_; }
    int max_steps() const override { return max_steps_; }
    int reset(Rng&) override { return start_state_; }
    StepResult step(int state, int action, Rng& rng) override;
    bool is_terminal(int state) const override { return terminal_[state] != 0; }

    double p(int s, int a, int s2) const {
        return transition_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2];
    }
    double r(int s, int a, int s2) const {
        return reward_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2];
    }
    int start_state() const { return start_state_; }

private:
    int n_states_, n_actions_, start_state_, max_steps_;
    std::vector<double> transition_;  // [s][a][s'] row-major
    std::vector<double> reward_;      // [s][a][s']
    std::vector<std::uint8_t> terminal_;
};

/// Tip conditioning: hidden quality 0 (destroyed, terminal) .. 5 (good,
/// terminal), 4 stochastic conditioning actions. Constants in agent.cpp.
enum class TipAction { soft_pulse = 0, hard_pulse = 1, gentle_crash = 2, scan_anneal = 3 };

struct TipEnvConfig {
    int start_state = 2;
    int max_steps = 50;
};

TabularEnv tip_env(const TipEnvConfig& config = {});

/// Domain-writing environment: cursor walks a small binary grid; signed
/// pulses flip cells through the sample's stochastic switching law. Reward
/// is the decrease in Hamming distance to the goal minus a step cost;
/// terminal on exact match. State index = cursor * 2^cells + pattern bits.
class WriteEnv : public Env {
public:
    struct Config {
        std::vector<std::uint8_t> goal;  // row-major, values 0/1
        int grid_w = 3;
        int grid_h = 3;
        double coercive_bias = 1.0;
        double flip_sharpness = 8.0;
        double pulse_bias = 2.0;
        double pulse_dose = 1.0;
        double step_cost = 0.1;
        int max_steps = 64;
        std::vector<std::uint8_t> initial;  // empty = all zeros
    };

    explicit WriteEnv(const Config& config);

    int n_states() const override { return n_states_; }
    int n_actions() const override { return 6; }  // N,S,E,W,pulse+,pulse-
    int max_steps() const override { return config_.max_steps; }
    int reset(Rng&) override;
    StepResult step(int state, int action, Rng& rng) override;
    bool is_terminal(int state) const override;

    int encode(int cursor, std::uint32_t pattern) const;
    std::pair<int, std::uint32_t> decode(int state) const;
    int hamming(std::uint32_t pattern) const;

private:
    Config config_;
    int cells_;
    int n_states_;
    std::uint32_t goal_bits_ = 0;
    std::uint32_t initial_bits_ = 0;
};

// --- planning oracles ----------------------------------------------------

/// Bellman-optimality iteration to sup-norm residual < tol.
std::vector<double> value_iteration(const TabularEnv& env, double gamma, double tol);

/// Iterative evaluation of a fixed stochastic policy (policy[s*A+a]).
std::vector<double> policy_evaluation(const TabularEnv& env, const std::vector<double>& policy,
                                      double gamma, double tol);

double bellman_residual(const TabularEnv& env, const std::vector<double>& v, double gamma);

// --- double Q-learning -----------------------------------------------------

struct QTables {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> q_a;
    std::vector<double> q_b;

    double sum(int s, int a) const {
        return q_a[static_cast<std::size_t>(s) * n_actions + a] +
               q_b[static_cast<std::size_t>(s) * n_actions + a];
    }
    /// Greedy action on q_a + q_b, lowest index wins ties.
    int greedy(int s) const;
};

struct DoubleQConfig {
    double gamma = 0.95;
    double alpha = 0.1;
    double epsilon0 = 1.0;
    double epsilon_min = 0.05;
    // epsilon decays linearly over the first decay_fraction of episodes
    double decay_fraction = 0.8;
    int n_episodes = 2000;
    std::uint64_t seed = 0;
};

struct EpisodePoint {
    int episode;
    double ret;  // discounted return of the episode
    double epsilon;
};

struct DoubleQResult {
    QTables q;
    std::vector<EpisodePoint> curve;
};

DoubleQResult train_double_q(Env& env, const DoubleQConfig& config);

/// Mean discounted return of the greedy policy over n_episodes rollouts.
double evaluate_greedy(Env& env, const QTables& q, double gamma, int n_episodes,
                       std::uint64_t seed);
double evaluate_random(Env& env, double gamma, int n_episodes, std::uint64_t seed);

// --- REINFORCE --------------------------------------------------------------

/// Linear-softmax policy over state features; identity (one-hot) features
/// by default, so tabular states work out of the box.
struct SoftmaxPolicy {
    int n_features = 0;
    int n_actions = 0;
    std::vector<double> theta;  // [feature][action] row-major
    std::function<std::vector<double>(int)> feature_map;  // state -> features

    static SoftmaxPolicy tabular(int n_states, int n_actions);

    std::vector<double> probs(int state) const;
    int sample_action(int state, Rng& rng) const;
};

struct TrajectoryStep {
    int state;
    int action;
    double reward;
    int next_state;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double return_disc = 0.0;  // sum gamma^t r_t
    double gamma = 0.99;
};

enum class Baseline { none, mean, value };

struct ReinforceConfig {
    double gamma = 0.99;
    double alpha = 0.1;
    int n_batches = 200;
    int batch_size = 32;
    Baseline baseline = Baseline::mean;
    std::uint64_t seed = 0;
};

struct BatchPoint {
    int batch;
    double mean_return;
    double grad_norm;
};

struct ReinforceResult {
    SoftmaxPolicy policy;
    std::vector<BatchPoint> curve;
};

ReinforceResult train_reinforce(Env& env, SoftmaxPolicy policy, const ReinforceConfig& config);

/// Surrogate sum_traj sum_t log pi(a_t|s_t) * G_t with the returns-to-go
/// frozen; its analytic gradient is checked against finite differences.
std::vector<Trajectory> collect_batch(Env& env, const SoftmaxPolicy& policy, int batch_size,
                                      double gamma, Rng& rng);
double surrogate_loss(const SoftmaxPolicy& policy, const std::vector<Trajectory>& batch);
std::vector<double> surrogate_gradient(const SoftmaxPolicy& policy,
                                       const std::vector<Trajectory>& batch);

// --- intrinsic rewards -------------------------------------------------------

enum class IntrinsicKind { curiosity, empowerment };

/// Count-based learned dynamics with Laplace smoothing. Sparse storage keyed
/// by (s, a), so large write_env state spaces stay cheap.
class CuriosityModel {
public:
    CuriosityModel(int n_states, int n_actions, double laplace_alpha);

    void observe(int s, int a, int s2);
    double p_hat(int s, int a, int s2) const;
    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double alpha() const { return alpha_; }
    const std::map<int, double>* successors(int s, int a) const;
    double total(int s, int a) const;

private:
    int n_states_, n_actions_;
    double alpha_;
    std::map<std::pair<int, int>, std::map<int, double>> counts_;
    std::map<std::pair<int, int>, double> totals_;
};

/// curiosity: -log p_hat(s2|s,a); empowerment: KL(p_hat(.|s,a) ||
/// sum_a' pi(a'|s) p_hat(.|s,a')), needs the action distribution at s.
double intrinsic_reward(const CuriosityModel& model, int s, int a, int s2, IntrinsicKind kind,
                        const std::vector<double>* action_probs = nullptr);

}  // namespace autoscope::agent
