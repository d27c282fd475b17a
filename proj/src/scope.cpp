#include "autoscope/scope.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace autoscope {

const char* ledger_kind_name(LedgerKind k) {
    switch (k) {
        case LedgerKind::dwell: return "dwell";
        case LedgerKind::travel: return "travel";
        case LedgerKind::flyback: return "flyback";
        case LedgerKind::spectro: return "spectro";
        case LedgerKind::decision: return "decision";
        case LedgerKind::modify: return "modify";
    }
    return "?";
}

LedgerKind ledger_kind_from_name(const std::string& name) {
    for (int i = 0; i < kLedgerKinds; ++i)
        if (name == ledger_kind_name(static_cast<LedgerKind>(i)))
            return static_cast<LedgerKind>(i);
    throw std::invalid_argument("unknown ledger kind: " + name);
}

void LatencyLedger::restore(std::vector<LedgerEntry> entries) {
    entries_ = std::move(entries);
    totals_.fill(0.0);
    clock_ = 0.0;
    for (const auto& e : entries_) {
        totals_[static_cast<int>(e.kind)] += e.duration;
        clock_ += e.duration;
    }
}

}  // namespace autoscope

namespace autoscope::scope {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
}  // namespace

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::topography: return "topography";
        case Channel::polarization: return "polarization";
        case Channel::piezoresponse: return "piezoresponse";
        case Channel::custom: return "custom";
    }
    return "?";
}

Channel channel_from_name(const std::string& name) {
    for (int i = 0; i < 4; ++i) {
        const auto c = static_cast<Channel>(i);
        if (name == channel_name(c)) return c;
    }
    throw std::invalid_argument("unknown channel: " + name);
}

void LatencyModel::check_valid() const {
    if (dwell_default < 0.0 || flyback < 0.0 || decision_charge < 0.0)
        throw std::invalid_argument("LatencyModel: fields must be >= 0");
    if (!(slew_rate > 0.0)) throw std::invalid_argument("LatencyModel: slew_rate must be > 0");
}

void ScanPath::check_valid(const Rect& window) const {
    if (waypoints.empty()) throw std::invalid_argument("ScanPath: waypoints must be nonempty");
    if (dwell < 0.0) throw std::invalid_argument("ScanPath: dwell must be >= 0");
    for (const auto& p : waypoints)
        if (!window.contains(p))
            throw std::invalid_argument("ScanPath: waypoint outside scan window");
    if (line_breaks.empty()) throw std::invalid_argument("ScanPath: line_breaks must be nonempty");
    std::size_t prev = 0;
    for (std::size_t b : line_breaks) {
        if (b <= prev) throw std::invalid_argument("ScanPath: line_breaks must be strictly increasing");
        prev = b;
    }
    if (line_breaks.back() != waypoints.size())
        throw std::invalid_argument("ScanPath: last line break must equal waypoint count");
}

// --- planners ------------------------------------------------------------

namespace {

void check_window(const Rect& window) {
    if (window.degenerate()) throw std::invalid_argument("plan_path: degenerate window");
}

void check_count(std::size_t n) {
    if (n == 0) throw std::invalid_argument("plan_path: empty path");
    if (n > kMaxPathPoints)
        throw std::invalid_argument("plan_path: path exceeds max_points");
}

}  // namespace

ScanPath plan_raster(const Rect& window, int nx, int ny, double dwell, bool serpentine) {
    check_window(window);
    if (nx < 1 || ny < 1) throw std::invalid_argument("plan_raster: nx, ny must be >= 1");
    check_count(static_cast<std::size_t>(nx) * ny);

    ScanPath path;
    path.kind = serpentine ? PathKind::serpentine : PathKind::raster;
    path.dwell = dwell;
    const double dx = window.width / nx;
    const double dy = window.height / ny;
    for (int j = 0; j < ny; ++j) {
        const bool reversed = serpentine && (j % 2 == 1);
        for (int i = 0; i < nx; ++i) {
            const int col = reversed ? nx - 1 - i : i;
            path.waypoints.push_back(
                {window.x0 + (col + 0.5) * dx, window.y0 + (j + 0.5) * dy});
        }
        path.line_breaks.push_back(path.waypoints.size());
    }
    return path;
}

ScanPath plan_spiral(const Rect& window, double pitch_nm, double step_nm, double dwell) {
    check_window(window);
    if (!(pitch_nm > 0.0) || !(step_nm > 0.0))
        throw std::invalid_argument("plan_spiral: pitch and step must be > 0");

    // Archimedean r = a*theta, resampled at constant arc length so dwell
    // density is uniform along the track. ds = a*sqrt(1+theta^2) dtheta.
    const double a = pitch_nm / kTwoPi;
    const Vec2 c = window.center();
    const double rmax = 0.5 * std::min(window.width, window.height);

    ScanPath path;
    path.kind = PathKind::spiral;
    path.dwell = dwell;
    double theta = 0.0;
    path.waypoints.push_back(c);
    while (a * theta < rmax) {
        // integrate theta forward by one arc-length step (RK2 midpoint)
        double remaining = step_nm;
        while (remaining > 0.0) {
            const double dth_full = remaining / (a * std::sqrt(1.0 + theta * theta));
            const double dth = std::min(dth_full, 1e-2);
            const double th_mid = theta + 0.5 * dth;
            theta += dth;
            remaining -= dth * a * std::sqrt(1.0 + th_mid * th_mid);
            if (a * theta >= rmax) break;
        }
        const double r = a * theta;
        if (r >= rmax) break;
        path.waypoints.push_back({c.x + r * std::cos(theta), c.y + r * std::sin(theta)});
        check_count(path.waypoints.size());
    }
    path.line_breaks.push_back(path.waypoints.size());
    return path;
}

ScanPath plan_lissajous(const Rect& window, double freq_a, double freq_b, double phase,
                        std::size_t n_points, double dwell) {
    check_window(window);
    if (!(freq_a > 0.0) || !(freq_b > 0.0))
        throw std::invalid_argument("plan_lissajous: frequencies must be > 0");
    check_count(n_points);

    const Vec2 c = window.center();
    const double A = 0.5 * window.width;
    const double B = 0.5 * window.height;
    ScanPath path;
    path.kind = PathKind::lissajous;
    path.dwell = dwell;
    for (std::size_t i = 0; i < n_points; ++i) {
        const double t = kTwoPi * static_cast<double>(i) / static_cast<double>(n_points);
        path.waypoints.push_back(
            {c.x + A * std::sin(freq_a * t), c.y + B * std::sin(freq_b * t + phase)});
    }
    path.line_breaks.push_back(path.waypoints.size());
    return path;
}

ScanPath plan_freeform(const Rect& window, std::span<const Vec2> polyline, double step_nm,
                       double dwell) {
    check_window(window);
    if (polyline.empty()) throw std::invalid_argument("plan_freeform: empty polyline");
    if (!(step_nm > 0.0)) throw std::invalid_argument("plan_freeform: step must be > 0");

    ScanPath path;
    path.kind = PathKind::freeform;
    path.dwell = dwell;
    path.waypoints.push_back(polyline[0]);
    double carry = 0.0;  // distance already consumed on the current segment
    for (std::size_t s = 0; s + 1 < polyline.size(); ++s) {
        const Vec2 p0 = polyline[s], p1 = polyline[s + 1];
        const double seg = p0.dist(p1);
        if (seg <= 0.0) continue;
        double d = step_nm - carry;
        while (d <= seg) {
            const double f = d / seg;
            path.waypoints.push_back({p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y)});
            check_count(path.waypoints.size());
            d += step_nm;
        }
        carry = seg - (d - step_nm);
    }
    path.line_breaks.push_back(path.waypoints.size());
    return path;
}

// --- session ---------------------------------------------------------------

Session::Session(Sample& sample, const ScopeConfig& config, LatencyLedger* shared_ledger)
    : sample_(&sample),
      config_(config),
      ledger_(shared_ledger ? shared_ledger : &owned_ledger_),
      noise_rng_(Rng::child(config.seed, 0x6e6f6973)),
      walk_rng_(Rng::child(config.drift.seed, 0x77616c6b)) {
    config_.latency.check_valid();
    if (config_.noise_sigma < 0.0)
        throw std::invalid_argument("Session: noise_sigma must be >= 0");
    if (config_.drift.random_walk_sigma < 0.0)
        throw std::invalid_argument("Session: random_walk_sigma must be >= 0");
}

ScalarField2D Session::channel_field() const {
    const auto& pol = sample_->polarization;
    ScalarField2D f(pol.width, pol.height, pol.extent);
    switch (config_.channel) {
        case Channel::polarization:
            f.values = pol.values;
            break;
        case Channel::piezoresponse:
            for (std::size_t i = 0; i < f.size(); ++i)
                f.values[i] = pol.values[i] * sample_->loops.amplitude.values[i] +
                              sample_->loops.offset.values[i];
            break;
        case Channel::topography:
            // amplitude plane stands in for surface height: smooth with dips
            // on the domain walls
            f.values = sample_->loops.amplitude.values;
            break;
        case Channel::custom:
            if (!config_.custom_field)
                throw std::invalid_argument("channel_field: custom channel needs custom_field");
            f = *config_.custom_field;
            break;
    }
    return f;
}

double Session::channel_value(const Vec2& pos) const {
    switch (config_.channel) {
        case Channel::polarization:
            return sample_->polarization.sample(pos);
        case Channel::piezoresponse:
            return sample_->polarization.sample(pos) * sample_->loops.amplitude.sample(pos) +
                   sample_->loops.offset.sample(pos);
        case Channel::topography:
            return sample_->loops.amplitude.sample(pos);
        case Channel::custom:
            if (!config_.custom_field)
                throw std::invalid_argument("Session: custom channel needs custom_field");
            return config_.custom_field->sample(pos);
    }
    return 0.0;
}

Vec2 Session::drift_at(double t) {
    // deterministic component
    Vec2 d{config_.drift.velocity.x * t, config_.drift.velocity.y * t};
    // stochastic component: advance the Wiener walk to time t
    if (config_.drift.random_walk_sigma > 0.0 && t > walk_t_) {
        const double dt = t - walk_t_;
        const double s = config_.drift.random_walk_sigma * std::sqrt(dt);
        walk_offset_.x += s * walk_rng_.next_gaussian();
        walk_offset_.y += s * walk_rng_.next_gaussian();
        walk_t_ = t;
    }
    return {d.x + walk_offset_.x, d.y + walk_offset_.y};
}

Observation Session::observe_point(const Vec2& nominal) {
    Observation obs;
    obs.pos_nominal = nominal;
    obs.t_sim = ledger_->clock();
    const Vec2 d = drift_at(obs.t_sim);
    obs.pos_true = {nominal.x + d.x, nominal.y + d.y};
    obs.channel = config_.channel;
    obs.value = channel_value(obs.pos_true);
    if (config_.noise_sigma > 0.0) obs.value += config_.noise_sigma * noise_rng_.next_gaussian();
    return obs;
}

Observation Session::measure_at(const Vec2& pos) {
    const double dist = probe_pos_.dist(pos);
    if (dist > 0.0) ledger_->advance(LedgerKind::travel, dist / config_.latency.slew_rate);
    probe_pos_ = pos;
    ledger_->advance(LedgerKind::dwell, config_.latency.dwell_default);
    return observe_point(pos);
}

PathRunner::PathRunner(Session& session, const ScanPath& path)
    : session_(&session), path_(&path) {
    const auto& ext = session.sample().polarization.extent;
    path.check_valid(Rect{0.0, 0.0, ext.x, ext.y});
}

std::optional<PathRunner::Point> PathRunner::next() {
    if (i_ >= path_->waypoints.size()) return std::nullopt;
    Session& s = *session_;
    const Vec2& wp = path_->waypoints[i_];
    const double dist = s.probe_pos_.dist(wp);
    if (dist > 0.0) s.ledger_->advance(LedgerKind::travel, dist / s.config_.latency.slew_rate);
    s.probe_pos_ = wp;
    const double dwell = path_->dwell > 0.0 ? path_->dwell : s.config_.latency.dwell_default;
    s.ledger_->advance(LedgerKind::dwell, dwell);

    Point pt;
    pt.obs = s.observe_point(wp);
    pt.line = line_;
    pt.index_in_line = i_ - line_start_;
    ++i_;
    pt.line_end = (i_ == path_->line_breaks[line_]);
    if (pt.line_end) {
        s.ledger_->advance(LedgerKind::flyback, s.config_.latency.flyback);
        line_start_ = i_;
        ++line_;
    }
    return pt;
}

double Session::execute(
    const ScanPath& path,
    const std::function<void(std::size_t, std::span<const Observation>)>& on_line) {
    const double t0 = ledger_->clock();
    PathRunner runner(*this, path);
    std::vector<Observation> line;
    std::size_t line_idx = 0;
    while (auto pt = runner.next()) {
        line.push_back(pt->obs);
        if (pt->line_end) {
            if (on_line) on_line(line_idx, std::span<const Observation>(line));
            line.clear();
            ++line_idx;
        }
    }
    return ledger_->clock() - t0;
}

std::pair<std::vector<Observation>, double> Session::execute(const ScanPath& path) {
    std::vector<Observation> all;
    all.reserve(path.waypoints.size());
    const double elapsed =
        execute(path, [&](std::size_t, std::span<const Observation> line) {
            all.insert(all.end(), line.begin(), line.end());
        });
    return {std::move(all), elapsed};
}

SpectroResult Session::ramp_spectroscopy(const Vec2& pos, const Ramp& ramp,
                                         std::optional<double> stop_threshold) {
    if (ramp.n_steps < 2)
        throw std::invalid_argument("ramp_spectroscopy: n_steps must be >= 2");

    const double dist = probe_pos_.dist(pos);
    if (dist > 0.0) ledger_->advance(LedgerKind::travel, dist / config_.latency.slew_rate);
    probe_pos_ = pos;

    const SiteLoopParams params = sample_->loop_at(sample_->geom().nearest(pos));
    SpectroResult result;
    const int n = ramp.n_steps;
    auto bias_at = [&](int i, bool up) {
        const double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
        return up ? ramp.v_start + f * (ramp.v_end - ramp.v_start)
                  : ramp.v_end + f * (ramp.v_start - ramp.v_end);
    };
    for (int half = 0; half < 2; ++half) {
        const bool up = half == 0;
        for (int i = 0; i < n; ++i) {
            ledger_->advance(LedgerKind::spectro, config_.latency.dwell_default);
            const double bias = bias_at(i, up);
            double resp =
                loop_response(params, bias, up ? Branch::ascending : Branch::descending);
            if (config_.noise_sigma > 0.0)
                resp += config_.noise_sigma * noise_rng_.next_gaussian();
            result.curve.push_back({bias, resp});
            if (stop_threshold && std::abs(resp) >= *stop_threshold) {
                result.stopped_early = true;
                return result;
            }
        }
    }
    return result;
}

SurveyResult Session::survey(const Rect& window, int nx, int ny) {
    ScanPath path = plan_raster(window, nx, ny, config_.latency.dwell_default);
    auto [obs, elapsed] = execute(path);
    SurveyResult out;
    out.image = ScalarField2D(nx, ny, {window.width, window.height});
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.image.at(i, j) = obs[static_cast<std::size_t>(j) * nx + i].value;
    out.elapsed = elapsed;
    return out;
}

// --- drift estimation -------------------------------------------------------

std::pair<int, int> estimate_drift(const ScalarField2D& img_a, const ScalarField2D& img_b,
                                   int max_shift) {
    if (img_a.width != img_b.width || img_a.height != img_b.height)
        throw std::invalid_argument("estimate_drift: dimension mismatch");
    if (max_shift < 0 || 2 * max_shift >= std::min(img_a.width, img_a.height))
        throw std::invalid_argument("estimate_drift: max_shift too large");

    double best_score = -2.0;
    int best_dx = 0, best_dy = 0;
    bool have_best = false;
    auto better = [&](double score, int dx, int dy) {
        if (!have_best || score > best_score) return true;
        if (score < best_score) return false;
        const int c0 = std::abs(best_dx) + std::abs(best_dy);
        const int c1 = std::abs(dx) + std::abs(dy);
        if (c1 != c0) return c1 < c0;
        if (dx != best_dx) return dx < best_dx;
        return dy < best_dy;
    };

    for (int dy = -max_shift; dy <= max_shift; ++dy)
        for (int dx = -max_shift; dx <= max_shift; ++dx) {
            // compare a(p) against b(p + d) on the overlap
            const int x0 = std::max(0, -dx), x1 = std::min(img_a.width, img_a.width - dx);
            const int y0 = std::max(0, -dy), y1 = std::min(img_a.height, img_a.height - dy);
            const int n = (x1 - x0) * (y1 - y0);
            if (n < 2) continue;
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double va = img_a.at(x, y);
                    const double vb = img_b.at(x + dx, y + dy);
                    sa += va; sb += vb;
                    saa += va * va; sbb += vb * vb; sab += va * vb;
                }
            const double cov = sab - sa * sb / n;
            const double var_a = saa - sa * sa / n;
            const double var_b = sbb - sb * sb / n;
            const double score =
                (var_a > 0.0 && var_b > 0.0) ? cov / std::sqrt(var_a * var_b) : 0.0;
            if (better(score, dx, dy)) {
                best_score = score;
                best_dx = dx;
                best_dy = dy;
                have_best = true;
            }
        }
    return {best_dx, best_dy};
}

}  // namespace autoscope::scope
