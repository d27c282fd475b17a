#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "autoscope/acquire.hpp"
#include "autoscope/agent.hpp"
#include "autoscope/config.hpp"
#include "autoscope/feedback.hpp"
#include "autoscope/gp.hpp"
#include "autoscope/recon.hpp"
#include "autoscope/sample.hpp"
#include "autoscope/scope.hpp"

namespace autoscope::campaign {

enum class Kind { bo_explore, bo_spectro, bench_recon, rl_tip, rl_write, ferrobot };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

/// Exact GP training cap; budgets beyond this are rejected at validation.
inline constexpr int kGpTrainingCap = 512;

struct EngineConfig {
    gp::KernelFamily kernel = gp::KernelFamily::matern52;
    acquire::AcquisitionSpec acq;
    acquire::PathfinderPolicy pathfinder;
    int n_seed_points = 16;
    int batch = 8;
    int max_measurements = 128;
    double edge_taper_px = 2.0;
    // refit cadence: full refit while training set <= refit_dense_until,
    // afterwards every refit_every iterations (warm-started)
    int refit_dense_until = 64;
    int refit_every = 5;
    int nm_evals_cold = 200;
    int nm_evals_warm = 60;
    recon::Method recon_method = recon::Method::gp;
};

struct SpectroConfig {
    double v_max = 5.0;
    int n_steps = 32;
    std::optional<double> stop_threshold;
};

struct RlConfig {
    std::string algo = "double_q";  // or "reinforce"
    agent::DoubleQConfig dq;
    agent::ReinforceConfig pg;
    int eval_episodes = 1000;
    // write env
    agent::WriteEnv::Config write;
};

struct FerroConfig {
    feedback::FeedbackPlan plan;
    int scan_nx = 64;
    int scan_ny = 64;
};

struct CampaignSpec {
    Kind kind = Kind::bo_explore;
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    PhantomConfig sample;
    scope::DriftModel drift;
    scope::LatencyModel latency;
    double noise_sigma = 0.0;
    scope::Channel channel = scope::Channel::polarization;
    EngineConfig engine;
    SpectroConfig spectro;
    RlConfig rl;
    FerroConfig ferro;
    std::vector<double> bench_budgets{0.02, 0.05, 0.10};  // fractions of the grid

    std::string spec_text;  // verbatim config snapshot

    static CampaignSpec from_config(const config::Node& root);
    static CampaignSpec from_file(const std::string& path);
    void validate() const;

    scope::ScopeConfig scope_config() const;
};

struct DecisionRecord {
    int iteration = 0;
    double t_sim = 0.0;
    nlohmann::ordered_json payload;
};

struct ReconRow {
    std::string method;  // recon method name
    int n_obs = 0;
    double frac_sampled = 0.0;
    double rmse = 0.0;
    double psnr = 0.0;
    std::uint64_t seed = 0;
    std::string arm;  // sampling arm (bo / random / grid), empty for plain runs
};

/// Full campaign trace; everything write_outputs persists and replay
/// restores lives here.
struct RunRecord {
    std::string kind;
    std::uint64_t seed = 0;
    std::string spec_text;
    std::vector<scope::Observation> observations;
    std::vector<DecisionRecord> decisions;
    LatencyLedger ledger;
    std::vector<ReconRow> recon_rows;
    std::vector<agent::EpisodePoint> q_curve;
    std::vector<agent::BatchPoint> pg_curve;
    std::vector<feedback::Event> events;
    std::vector<std::pair<std::string, ScalarField2D>> fields;
    std::optional<nlohmann::ordered_json> model_dump;
    double wall_time_s = 0.0;  // advisory, frozen at run time
    bool failed = false;
    std::string fail_reason;
};

RunRecord run_campaign(const CampaignSpec& spec);

/// Persist the record into dir; returns the manifest path. Byte-idempotent:
/// writing the same record twice produces identical files.
std::string write_outputs(const RunRecord& record, const std::string& dir);

/// Restore a RunRecord from a manifest, verifying checksums (a mismatch is
/// an error naming the file).
RunRecord replay(const std::string& manifest_path);

/// Re-stream stored observations in simulated-time order (black-box
/// simulator mode for downstream consumers).
void replay_stream(const RunRecord& record,
                   const std::function<void(const scope::Observation&)>& on_obs);

// --- bench harness ------------------------------------------------------

enum class ArmKind { bo, random_arm, grid };

const char* arm_name(ArmKind a);

struct ArmResult {
    ReconRow row;
    ScalarField2D recon;
    std::vector<recon::Obs> points;
};

/// One sampling arm at the campaign's configured budget, measured through a
/// fresh scope session and reconstructed with the engine's recon method. The
/// BO arm and the baselines share this harness.
ArmResult run_sampling_arm(ArmKind arm, const CampaignSpec& spec, std::uint64_t seed,
                           int budget_override = 0);

/// Report generation: summary CSV + SVG/PGM figures derived from a run dir.
void write_report(const std::string& run_dir, const std::string& out_dir);

}  // namespace autoscope::campaign
