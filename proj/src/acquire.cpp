#include "autoscope/acquire.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace autoscope::acquire {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

}  // namespace

const char* acquisition_name(AcquisitionKind k) {
    switch (k) {
        case AcquisitionKind::max_variance: return "max_variance";
        case AcquisitionKind::ucb: return "ucb";
        case AcquisitionKind::ei: return "ei";
        case AcquisitionKind::pi: return "pi";
    }
    return "?";
}

AcquisitionKind acquisition_from_name(const std::string& name) {
    for (int i = 0; i < 4; ++i) {
        const auto k = static_cast<AcquisitionKind>(i);
        if (name == acquisition_name(k)) return k;
    }
    throw std::invalid_argument("unknown acquisition kind: " + name);
}

const char* pathfinder_mode_name(PathfinderMode m) {
    switch (m) {
        case PathfinderMode::nearest: return "nearest";
        case PathfinderMode::non_crossing: return "non_crossing";
        case PathfinderMode::directional: return "directional";
    }
    return "?";
}

PathfinderMode pathfinder_mode_from_name(const std::string& name) {
    for (int i = 0; i < 3; ++i) {
        const auto m = static_cast<PathfinderMode>(i);
        if (name == pathfinder_mode_name(m)) return m;
    }
    throw std::invalid_argument("unknown pathfinder mode: " + name);
}

std::size_t PixelSet::count() const {
    std::size_t c = 0;
    for (auto b : bits) c += b;
    return c;
}

ScalarField2D edge_mask(int width, int height, double taper_px) {
    if (taper_px < 0.0) throw std::invalid_argument("edge_mask: taper must be >= 0");
    if (2.0 * taper_px > std::min(width, height))
        throw std::invalid_argument("edge_mask: 2*taper exceeds min(width, height)");
    ScalarField2D mask(width, height, {static_cast<double>(width), static_cast<double>(height)},
                       1.0);
    if (taper_px == 0.0) return mask;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int d = std::min(std::min(x, width - 1 - x), std::min(y, height - 1 - y));
            if (d >= taper_px) continue;
            mask.at(x, y) = 0.5 * (1.0 - std::cos(kPi * d / taper_px));
        }
    return mask;
}

ScalarField2D evaluate(const AcquisitionSpec& spec, const gp::Posterior& post,
                       const ScalarField2D& mask, const PixelSet& visited) {
    const auto& mu = post.mean;
    const auto& sd = post.std;
    if (mu.width != sd.width || mu.height != sd.height || mu.width != mask.width ||
        mu.height != mask.height || (visited.width && (visited.width != mu.width ||
                                                       visited.height != mu.height)))
        throw std::invalid_argument("acquire::evaluate: dimension mismatch");
    if (spec.beta < 0.0 || spec.xi < 0.0)
        throw std::invalid_argument("acquire::evaluate: beta and xi must be >= 0");

    ScalarField2D acq(mu.width, mu.height, mu.extent);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    for (int y = 0; y < mu.height; ++y)
        for (int x = 0; x < mu.width; ++x) {
            if (visited.width && visited.contains({x, y})) {
                acq.at(x, y) = neg_inf;
                continue;
            }
            const double m = mu.at(x, y);
            const double s = sd.at(x, y);
            double a = 0.0;
            switch (spec.kind) {
                case AcquisitionKind::max_variance:
                    a = s;
                    break;
                case AcquisitionKind::ucb:
                    a = m + spec.beta * s;
                    break;
                case AcquisitionKind::ei: {
                    const double imp = m - spec.best_so_far - spec.xi;
                    if (s == 0.0) {
                        a = 0.0;
                    } else {
                        const double z = imp / s;
                        a = imp * normal_cdf(z) + s * normal_pdf(z);
                    }
                    break;
                }
                case AcquisitionKind::pi: {
                    const double imp = m - spec.best_so_far - spec.xi;
                    a = s == 0.0 ? (imp > 0.0 ? 1.0 : 0.0) : normal_cdf(imp / s);
                    break;
                }
            }
            acq.at(x, y) = a * mask.at(x, y);
        }
    return acq;
}

std::vector<Candidate> top_maxima(const ScalarField2D& acq, int k, double min_sep_px) {
    if (k < 1) throw std::invalid_argument("top_maxima: k must be >= 1");
    if (min_sep_px < 0.0) throw std::invalid_argument("top_maxima: min_sep must be >= 0");

    std::vector<std::uint8_t> excluded(acq.size(), 0);
    std::vector<Candidate> out;
    const double neg_inf = -std::numeric_limits<double>::infinity();
    while (static_cast<int>(out.size()) < k) {
        double best = neg_inf;
        int bx = -1, by = -1;
        for (int y = 0; y < acq.height; ++y)
            for (int x = 0; x < acq.width; ++x) {
                if (excluded[static_cast<std::size_t>(y) * acq.width + x]) continue;
                const double v = acq.at(x, y);
                if (v > best) {  // strict: equal keeps the earlier (row, col)
                    best = v;
                    bx = x;
                    by = y;
                }
            }
        if (bx < 0 || best == neg_inf) break;
        out.push_back({{bx, by}, best});
        const int r = static_cast<int>(std::floor(min_sep_px));
        for (int y = std::max(0, by - r); y <= std::min(acq.height - 1, by + r); ++y)
            for (int x = std::max(0, bx - r); x <= std::min(acq.width - 1, bx + r); ++x) {
                const double ddx = x - bx, ddy = y - by;
                if (ddx * ddx + ddy * ddy < min_sep_px * min_sep_px)
                    excluded[static_cast<std::size_t>(y) * acq.width + x] = 1;
            }
        excluded[static_cast<std::size_t>(by) * acq.width + bx] = 1;  // min_sep 0 case
    }
    return out;
}

// --- pathfinder --------------------------------------------------------

namespace {

long long cross(Pixel o, Pixel a, Pixel b) {
    return static_cast<long long>(a.x - o.x) * (b.y - o.y) -
           static_cast<long long>(a.y - o.y) * (b.x - o.x);
}

}  // namespace

bool segments_properly_intersect(Pixel a1, Pixel a2, Pixel b1, Pixel b2) {
    const long long d1 = cross(b1, b2, a1);
    const long long d2 = cross(b1, b2, a2);
    const long long d3 = cross(a1, a2, b1);
    const long long d4 = cross(a1, a2, b2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

double tour_length(const std::vector<Candidate>& order, Pixel current_pos) {
    double len = 0.0;
    Pixel prev = current_pos;
    for (const auto& c : order) {
        len += prev.dist(c.px);
        prev = c.px;
    }
    return len;
}

namespace {

std::vector<Candidate> greedy_tour(const std::vector<Candidate>& candidates, Pixel start,
                                   const PathfinderPolicy& policy, bool directional) {
    std::vector<Candidate> pool = candidates;
    std::vector<Candidate> order;
    order.reserve(pool.size());
    Pixel cur = start;
    while (!pool.empty()) {
        std::size_t best_i = 0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const double d_px = cur.dist(pool[i].px);
            double cost = policy.nm_per_px * d_px;
            if (directional && d_px > 0.0) {
                const double cx = (pool[i].px.x - cur.x) / d_px;
                const double cy = (pool[i].px.y - cur.y) / d_px;
                const double cos_theta =
                    cx * policy.preferred_dir.x + cy * policy.preferred_dir.y;
                cost += policy.dir_penalty * (1.0 - cos_theta);
            }
            if (cost < best_cost) {  // stable: first minimum wins
                best_cost = cost;
                best_i = i;
            }
        }
        cur = pool[best_i].px;
        order.push_back(pool[best_i]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best_i));
    }
    return order;
}

// Remove proper crossings from the open tour start -> order[0..n-1] by 2-opt
// reversals. A crossing swap strictly shortens a Euclidean tour, so this
// terminates; reversals are only applied when they shorten the tour.
void uncross_2opt(std::vector<Candidate>& order, Pixel start) {
    const std::size_t n = order.size();
    if (n < 3) return;
    auto node = [&](std::size_t i) { return i == 0 ? start : order[i - 1].px; };
    // nodes are 0..n (start plus candidates); segment s_i = (node i, node i+1)
    bool changed = true;
    int guard = 0;
    while (changed && guard++ < 10000) {
        changed = false;
        for (std::size_t i = 0; i + 1 < n && !changed; ++i) {
            for (std::size_t j = i + 2; j < n && !changed; ++j) {
                if (!segments_properly_intersect(node(i), node(i + 1), node(j), node(j + 1)))
                    continue;
                // 2-opt: reverse order[i .. j-1] (candidate indices), i.e.
                // reconnect (i, j) and (i+1, j+1)
                const double before = node(i).dist(node(i + 1)) + node(j).dist(node(j + 1));
                const double after = node(i).dist(node(j)) + node(i + 1).dist(node(j + 1));
                if (after < before) {
                    std::reverse(order.begin() + static_cast<std::ptrdiff_t>(i),
                                 order.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                }
            }
        }
    }
}

}  // namespace

std::vector<Candidate> pathfind(const std::vector<Candidate>& candidates, Pixel current_pos,
                                const PathfinderPolicy& policy) {
    if (candidates.empty()) throw std::invalid_argument("pathfind: empty candidate list");
    switch (policy.mode) {
        case PathfinderMode::nearest:
            return greedy_tour(candidates, current_pos, policy, false);
        case PathfinderMode::directional:
            return greedy_tour(candidates, current_pos, policy, true);
        case PathfinderMode::non_crossing: {
            auto order = greedy_tour(candidates, current_pos, policy, false);
            uncross_2opt(order, current_pos);
            return order;
        }
    }
    return {};
}

}  // namespace autoscope::acquire
