#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "autoscope/field.hpp"
#include "autoscope/ledger.hpp"
#include "autoscope/rng.hpp"
#include "autoscope/sample.hpp"

namespace autoscope::scope {

enum class PathKind { raster, serpentine, spiral, lissajous, freeform };
enum class Channel { topography, polarization, piezoresponse, custom };

const char* channel_name(Channel c);
Channel channel_from_name(const std::string& name);

/// Timed probe trajectory. line_breaks[i] is the exclusive end index of
/// logical line i; the last break equals waypoints.size().
struct ScanPath {
    PathKind kind = PathKind::raster;
    std::vector<Vec2> waypoints;
    double dwell = 1e-3;  // seconds per point
    std::vector<std::size_t> line_breaks;

    std::size_t n_lines() const { return line_breaks.size(); }
    void check_valid(const Rect& window) const;
};

struct Observation {
    Vec2 pos_nominal;
    Vec2 pos_true;
    Channel channel = Channel::polarization;
    double value = 0.0;
    double t_sim = 0.0;
};

struct DriftModel {
    Vec2 velocity{0.0, 0.0};        // nm/s, the correctable component
    double random_walk_sigma = 0.0; // nm/sqrt(s), the stochastic component
    std::uint64_t seed = 0;
};

struct LatencyModel {
    double dwell_default = 1e-3;   // s per point
    double slew_rate = 1e5;        // nm/s inter-point travel, > 0
    double flyback = 0.0;          // s per line break
    double decision_charge = 0.1;  // s per external decision call
    void check_valid() const;
};

// --- path planning -----------------------------------------------------

inline constexpr std::size_t kMaxPathPoints = 1u << 20;

ScanPath plan_raster(const Rect& window, int nx, int ny, double dwell, bool serpentine = false);
ScanPath plan_spiral(const Rect& window, double pitch_nm, double step_nm, double dwell);
ScanPath plan_lissajous(const Rect& window, double freq_a, double freq_b, double phase,
                        std::size_t n_points, double dwell);
ScanPath plan_freeform(const Rect& window, std::span<const Vec2> polyline, double step_nm,
                       double dwell);

// --- execution ---------------------------------------------------------

struct ScopeConfig {
    DriftModel drift;
    LatencyModel latency;
    double noise_sigma = 0.0;
    Channel channel = Channel::polarization;
    std::uint64_t seed = 0;
    std::optional<ScalarField2D> custom_field;  // required when channel == custom
};

struct Ramp {
    double v_start = -5.0;
    double v_end = 5.0;
    int n_steps = 50;
};

struct CurvePoint {
    double bias;
    double response;
};

struct SpectroResult {
    std::vector<CurvePoint> curve;
    bool stopped_early = false;
};

struct SurveyResult {
    ScalarField2D image;
    double elapsed = 0.0;
};

/// One execution stream over one Sample. The session owns the probe position,
/// the drift state and the simulated clock (a LatencyLedger, optionally
/// shared with a campaign). Single consumer; run distinct sessions for
/// parallel work on distinct samples.
class Session {
public:
    Session(Sample& sample, const ScopeConfig& config, LatencyLedger* shared_ledger = nullptr);

    /// Travel to pos (charged at slew rate), dwell, observe once.
    Observation measure_at(const Vec2& pos);

    /// Full-path execution; returns observations in path order plus the time
    /// this call consumed.
    std::pair<std::vector<Observation>, double> execute(const ScanPath& path);

    /// Streaming variant: on_line is invoked once per logical line, in order,
    /// before the remaining lines are executed.
    double execute(const ScanPath& path,
                   const std::function<void(std::size_t line, std::span<const Observation>)>& on_line);

    SpectroResult ramp_spectroscopy(const Vec2& pos, const Ramp& ramp,
                                    std::optional<double> stop_threshold = std::nullopt);

    /// Convenience raster execute + regrid over the window.
    SurveyResult survey(const Rect& window, int nx, int ny);

    double now() const { return ledger_->clock(); }
    const Vec2& probe_pos() const { return probe_pos_; }
    LatencyLedger& ledger() { return *ledger_; }
    Sample& sample() { return *sample_; }
    const ScopeConfig& config() const { return config_; }

    /// Value of the configured channel's ground-truth field at a pixel
    /// (no noise, no drift); used for truth maps and reports.
    ScalarField2D channel_field() const;

    /// Charge a modification action (pulses etc.) to the ledger.
    void charge(LedgerKind kind, double duration) { ledger_->advance(kind, duration); }

private:
    friend class PathRunner;
    Observation observe_point(const Vec2& nominal);
    double channel_value(const Vec2& pos) const;
    Vec2 drift_at(double t);

    Sample* sample_;
    ScopeConfig config_;
    LatencyLedger owned_ledger_;
    LatencyLedger* ledger_;
    Vec2 probe_pos_{0.0, 0.0};
    Rng noise_rng_;
    Rng walk_rng_;
    Vec2 walk_offset_{0.0, 0.0};
    double walk_t_ = 0.0;
};

/// Incremental path execution: yields one observation at a time and charges
/// travel/dwell/flyback exactly as Session::execute does. Both execute() and
/// feedback::run_ferrobot are built on this, so their ledgers agree.
class PathRunner {
public:
    PathRunner(Session& session, const ScanPath& path);

    struct Point {
        Observation obs;
        std::size_t line;           // logical line index
        std::size_t index_in_line;
        bool line_end;
    };

    std::optional<Point> next();

private:
    Session* session_;
    const ScanPath* path_;
    std::size_t i_ = 0;
    std::size_t line_ = 0;
    std::size_t line_start_ = 0;
};

/// Integer-pixel shift (dx, dy) maximizing direct normalized cross-correlation
/// between img_a and img_b over [-max_shift, max_shift]^2. Ties break toward
/// smallest |dx|+|dy|, then lexicographic (dx, dy).
std::pair<int, int> estimate_drift(const ScalarField2D& img_a, const ScalarField2D& img_b,
                                   int max_shift);

}  // namespace autoscope::scope
