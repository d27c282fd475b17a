#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoscope/field.hpp"

namespace autoscope {

enum class PhantomStyle { stripes, bubbles, mixed };
enum class Branch { ascending, descending };

/// Parameters of one site's hysteresis loop (shifted-tanh two-branch model).
struct SiteLoopParams {
    double amplitude = 1.0;  // response units, >= 0
    double v_plus = 1.0;     // ascending coercive bias (V)
    double v_minus = -1.0;   // descending coercive bias (V), <= v_plus
    double width = 0.5;      // branch sharpness (V), > 0
    double offset = 0.0;     // response units
};

struct LoopParamPlanes {
    ScalarField2D amplitude, v_plus, v_minus, width, offset;
};

/// Synthetic modifiable material: a ±1 polarization map plus per-site loop
/// parameters and a single stochastic switching threshold.
struct Sample {
    ScalarField2D polarization;  // values exactly ±1
    LoopParamPlanes loops;       // grids match polarization
    double coercive_bias = 1.0;
    double flip_sharpness = 4.0;

    SiteLoopParams loop_at(Pixel p) const {
        return {loops.amplitude.at(p), loops.v_plus.at(p), loops.v_minus.at(p),
                loops.width.at(p), loops.offset.at(p)};
    }
    GridGeom geom() const { return polarization.geom(); }
    void check_valid() const;
};

struct PhantomConfig {
    int width = 64;
    int height = 64;
    Vec2 extent{100.0, 100.0};  // nm
    PhantomStyle style = PhantomStyle::stripes;
    int stripe_period_px = 8;      // width of each alternating band
    double bubble_sigma_px = 4.0;  // low-pass radius for the bubbles style
    double coercive_bias = 1.0;
    double flip_sharpness = 4.0;
    double loop_amplitude = 1.0;
    double loop_vc = 1.0;      // nominal |coercive| bias of the loops
    double loop_width = 0.4;
    double wall_dip = 0.5;     // fractional amplitude dip on domain walls
};

Sample gen_domain_phantom(const PhantomConfig& cfg, std::uint64_t seed);
Sample gen_domain_phantom(int width, int height, Vec2 extent, PhantomStyle style,
                          std::uint64_t seed);

/// offset + amplitude * tanh((bias - Vc) / width), Vc chosen by branch.
double loop_response(const SiteLoopParams& params, double bias, Branch branch);

/// Trapezoid integral of (ascending - descending) over a symmetric ramp
/// -v_max..+v_max with n_steps intervals.
double loop_area(const SiteLoopParams& params, double v_max, int n_steps);

/// Logistic switching probability used by apply_pulse; exposed so tests can
/// check the Monte-Carlo frequency against it directly.
double flip_probability(double bias, double dose, double coercive_bias, double flip_sharpness);

struct PulseResult {
    std::vector<Pixel> flipped;
};

/// Each pixel within `radius_px` of pos flips toward sign(bias) independently
/// with probability flip_probability(...). dose == 0 is an explicit no-op.
PulseResult apply_pulse(Sample& sample, Pixel pos, double bias, double dose, double radius_px,
                        std::uint64_t rng_seed);

/// Serialization: <prefix>.json header, <prefix>.raw float32 planes
/// (polarization, amplitude, v_plus, v_minus, width, offset), <prefix>.pgm
/// polarization quicklook.
void save_sample(const Sample& sample, const std::string& prefix);
Sample load_sample(const std::string& prefix);

}  // namespace autoscope
