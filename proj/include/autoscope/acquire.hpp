#pragma once

#include <string>
#include <vector>

#include "autoscope/field.hpp"
#include "autoscope/gp.hpp"

namespace autoscope::acquire {

enum class AcquisitionKind { max_variance, ucb, ei, pi };

const char* acquisition_name(AcquisitionKind k);
AcquisitionKind acquisition_from_name(const std::string& name);

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::max_variance;
    double beta = 2.0;         // ucb weight on sigma, >= 0
    double xi = 0.0;           // ei/pi improvement margin, >= 0
    double best_so_far = 0.0;  // f* for ei/pi
};

/// Raised-cosine border taper: exactly 0 on the border ring, 1 at distance
/// >= taper from every border. Suppresses boundary-seeking exploration.
ScalarField2D edge_mask(int width, int height, double taper_px);

/// Membership grid for visited pixels.
struct PixelSet {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    PixelSet() = default;
    PixelSet(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
    void insert(Pixel p) { bits[static_cast<std::size_t>(p.y) * width + p.x] = 1; }
    bool contains(Pixel p) const {
        return bits[static_cast<std::size_t>(p.y) * width + p.x] != 0;
    }
    std::size_t count() const;
};

/// Per-pixel acquisition surface. Visited pixels are forced to -inf.
ScalarField2D evaluate(const AcquisitionSpec& spec, const gp::Posterior& post,
                       const ScalarField2D& mask, const PixelSet& visited);

struct Candidate {
    Pixel px;
    double score;
};

/// Greedy non-maximum suppression: global argmax, exclude a min_sep ball,
/// repeat. Ties break lexicographic (row, then col). May return fewer than k.
std::vector<Candidate> top_maxima(const ScalarField2D& acq, int k, double min_sep_px);

enum class PathfinderMode { nearest, non_crossing, directional };

const char* pathfinder_mode_name(PathfinderMode m);
PathfinderMode pathfinder_mode_from_name(const std::string& name);

struct PathfinderPolicy {
    PathfinderMode mode = PathfinderMode::nearest;
    int k = 8;             // candidate count requested from top_maxima
    double min_sep = 0.0;  // pixels
    Vec2 preferred_dir{1.0, 0.0};  // unit vector, directional mode
    double dir_penalty = 0.0;      // nm-equivalent weight on (1 - cos theta)
    double nm_per_px = 1.0;        // converts pixel distance into nm for scoring
};

/// Orders candidates into a visit sequence starting from current_pos.
/// Always a permutation of the input.
std::vector<Candidate> pathfind(const std::vector<Candidate>& candidates, Pixel current_pos,
                                const PathfinderPolicy& policy);

/// True when segments (a1,a2) and (b1,b2) properly intersect (interiors
/// cross at a single point). Shared endpoints and collinear overlap do not
/// count. Exact for integer pixel coordinates.
bool segments_properly_intersect(Pixel a1, Pixel a2, Pixel b1, Pixel b2);

/// Total tour length in pixel units: current_pos -> order[0] -> order[1] ...
double tour_length(const std::vector<Candidate>& order, Pixel current_pos);

}  // namespace autoscope::acquire
