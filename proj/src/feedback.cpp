#include "autoscope/feedback.hpp"

#include <stdexcept>

namespace autoscope::feedback {

void SchmittTrigger::check_valid() const {
    if (!(low < high)) throw std::invalid_argument("SchmittTrigger: low must be < high");
}

void FeedbackPlan::check_valid() const {
    trigger.check_valid();
    if (waveform.empty()) throw std::invalid_argument("FeedbackPlan: waveform must be nonempty");
    if (per_line_limit < 1)
        throw std::invalid_argument("FeedbackPlan: per_line_limit must be >= 1");
    if (pulse_duration < 0.0)
        throw std::invalid_argument("FeedbackPlan: pulse_duration must be >= 0");
}

DetectResult detect_crossings(std::span<const scope::Observation> line, SchmittTrigger trig) {
    if (line.empty()) throw std::invalid_argument("detect_crossings: empty line");
    trig.check_valid();
    DetectResult out;
    for (std::size_t i = 0; i < line.size(); ++i)
        if (trig.step(line[i].value)) out.indices.push_back(i);
    out.final_state = trig.state;
    return out;
}

DetectResult detect_crossings(std::span<const double> line, SchmittTrigger trig) {
    if (line.empty()) throw std::invalid_argument("detect_crossings: empty line");
    trig.check_valid();
    DetectResult out;
    for (std::size_t i = 0; i < line.size(); ++i)
        if (trig.step(line[i])) out.indices.push_back(i);
    out.final_state = trig.state;
    return out;
}

FerrobotResult run_ferrobot(scope::Session& session, const FeedbackPlan& plan,
                            const scope::ScanPath& path, std::uint64_t seed) {
    plan.check_valid();
    if (path.kind != scope::PathKind::raster && path.kind != scope::PathKind::serpentine)
        throw std::invalid_argument("run_ferrobot: path must be raster or serpentine");

    SchmittTrigger trig = plan.trigger;
    FerrobotResult result;
    Sample& sample = session.sample();
    const GridGeom geom = sample.geom();
    const auto& latency = session.config().latency;

    const double t0 = session.now();
    scope::PathRunner runner(session, path);
    int triggers_this_line = 0;
    std::uint64_t event_counter = 0;
    while (auto pt = runner.next()) {
        result.observations.push_back(pt->obs);
        const bool fired = trig.step(pt->obs.value);
        if (fired && triggers_this_line < plan.per_line_limit) {
            ++triggers_this_line;
            // decision latency for recognizing the crossing
            session.charge(LedgerKind::decision, latency.decision_charge);
            Event ev;
            ev.line = pt->line;
            ev.index = pt->index_in_line;
            ev.pos = pt->obs.pos_nominal;
            const Pixel px = geom.nearest(pt->obs.pos_true);
            for (const auto& pulse : plan.waveform) {
                Rng pulse_rng = Rng::child(seed, event_counter * 97 + ev.pulses_applied);
                auto flips = apply_pulse(sample, px, pulse.bias, pulse.dose, plan.radius_px,
                                         pulse_rng.next_u64());
                ev.flips.insert(ev.flips.end(), flips.flipped.begin(), flips.flipped.end());
                ++ev.pulses_applied;
                if (plan.pulse_duration > 0.0)
                    session.charge(LedgerKind::modify, plan.pulse_duration);
            }
            ev.t_sim = session.now();
            result.events.push_back(std::move(ev));
            ++event_counter;
        }
        if (pt->line_end) {
            triggers_this_line = 0;
            ++result.n_lines;
        }
    }
    result.elapsed = session.now() - t0;
    return result;
}

}  // namespace autoscope::feedback
