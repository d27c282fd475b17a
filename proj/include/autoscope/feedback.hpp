#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "autoscope/scope.hpp"

namespace autoscope::feedback {

/// Dual-threshold crossing detector. Fires on below->above transitions
/// (value >= high after having been <= low); the hysteresis band suppresses
/// chatter. State carries across lines.
struct SchmittTrigger {
    double high = 0.5;
    double low = -0.5;
    enum class State { below, above };
    State state = State::below;

    void check_valid() const;

    /// Feed one value; returns true when a below->above crossing fires.
    bool step(double value) {
        if (state == State::below) {
            if (value >= high) {
                state = State::above;
                return true;
            }
        } else if (value <= low) {
            state = State::below;
        }
        return false;
    }
};

struct DetectResult {
    std::vector<std::size_t> indices;
    SchmittTrigger::State final_state;
};

DetectResult detect_crossings(std::span<const scope::Observation> line, SchmittTrigger trig);
DetectResult detect_crossings(std::span<const double> line, SchmittTrigger trig);

struct Pulse {
    double bias = 0.0;
    double dose = 0.0;
};

struct FeedbackPlan {
    SchmittTrigger trigger;
    std::vector<Pulse> waveform;
    int per_line_limit = 1;
    double pulse_duration = 0.0;  // seconds charged (kind=modify) per waveform pulse
    double radius_px = 0.5;       // pulse footprint

    void check_valid() const;
};

struct Event {
    double t_sim = 0.0;
    std::size_t line = 0;
    std::size_t index = 0;  // index within the line
    Vec2 pos;
    int pulses_applied = 0;
    std::vector<Pixel> flips;
};

struct FerrobotResult {
    std::vector<Event> events;
    std::vector<scope::Observation> observations;
    std::size_t n_lines = 0;
    double elapsed = 0.0;
};

/// Line-triggered feedback: scan the path point by point; each trigger fires
/// the predefined waveform at the trigger position, immediately (end of
/// point, before the next observation). Raster/serpentine paths only.
FerrobotResult run_ferrobot(scope::Session& session, const FeedbackPlan& plan,
                            const scope::ScanPath& path, std::uint64_t seed);

}  // namespace autoscope::feedback
