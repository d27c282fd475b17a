#include <doctest.h>

#include <cmath>
#include <numbers>

#include "autoscope/rng.hpp"
#include "autoscope/sample.hpp"
#include "autoscope/scope.hpp"

using namespace autoscope;
using namespace autoscope::scope;

namespace {

Sample flat_sample(int w, int h, double value) {
    // uniform-polarity phantom; polarization is constant ±1
    PhantomConfig cfg;
    cfg.width = w;
    cfg.height = h;
    cfg.extent = {static_cast<double>(w), static_cast<double>(h)};
    cfg.style = PhantomStyle::stripes;
    cfg.stripe_period_px = 2 * w;  // one band: everything +1
    Sample s = gen_domain_phantom(cfg, 0);
    if (value < 0)
        for (auto& v : s.polarization.values) v = -v;
    return s;
}

ScopeConfig quiet_config() {
    ScopeConfig cfg;
    cfg.latency.dwell_default = 1e-3;
    cfg.latency.slew_rate = 1e5;
    cfg.latency.flyback = 0.0;
    cfg.noise_sigma = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("plan_raster: 4x3 grid, row-major, 3 line breaks") {
    const Rect win{0, 0, 8, 6};
    const auto path = plan_raster(win, 4, 3, 1e-3);
    REQUIRE(path.waypoints.size() == 12);
    REQUIRE(path.line_breaks == std::vector<std::size_t>{4, 8, 12});
    for (int j = 0; j < 3; ++j)
        for (int i = 1; i < 4; ++i)
            CHECK(path.waypoints[j * 4 + i].x > path.waypoints[j * 4 + i - 1].x);
    CHECK(path.waypoints[0].x == doctest::Approx(1.0));
    CHECK(path.waypoints[0].y == doctest::Approx(1.0));
}

TEST_CASE("plan_raster serpentine: odd rows reversed") {
    const Rect win{0, 0, 8, 4};
    const auto path = plan_raster(win, 4, 2, 1e-3, true);
    for (int i = 0; i < 4; ++i) {
        CHECK(path.waypoints[i].x == doctest::Approx(path.waypoints[7 - i].x));
        CHECK(path.waypoints[i].y != path.waypoints[7 - i].y);
    }
}

TEST_CASE("plan_spiral: consecutive turns separated by the pitch") {
    const Rect win{0, 0, 100, 100};
    const double pitch = 4.0;
    const auto path = plan_spiral(win, pitch, 0.5, 1e-3);
    REQUIRE(path.waypoints.size() > 100);

    // unwrap polar angle along the path, then compare r(theta+2pi) to r(theta)
    const Vec2 c = win.center();
    std::vector<double> thetas, rs;
    double prev_angle = 0.0, offset = 0.0;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const Vec2 d = path.waypoints[i] - c;
        double ang = std::atan2(d.y, d.x);
        if (i > 1) {
            while (ang + offset < prev_angle - std::numbers::pi) offset += 2 * std::numbers::pi;
        }
        prev_angle = ang + offset;
        thetas.push_back(prev_angle);
        rs.push_back(d.norm());
    }
    int checked = 0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (thetas[i] < 4 * std::numbers::pi) continue;
        const double target = thetas[i] + 2 * std::numbers::pi;
        // find bracketing sample on the next turn
        for (std::size_t j = i + 1; j + 1 < thetas.size(); ++j) {
            if (thetas[j] <= target && target <= thetas[j + 1]) {
                const double f = (target - thetas[j]) / (thetas[j + 1] - thetas[j]);
                const double r_next = rs[j] + f * (rs[j + 1] - rs[j]);
                CHECK(std::abs((r_next - rs[i]) - pitch) < 0.01 * pitch);
                ++checked;
                break;
            }
        }
    }
    CHECK(checked > 20);
}

TEST_CASE("plan_lissajous matches the closed form") {
    const Rect win{10, 20, 40, 20};
    const auto path = plan_lissajous(win, 3.0, 2.0, 0.5, 64, 1e-3);
    REQUIRE(path.waypoints.size() == 64);
    for (std::size_t i = 0; i < 64; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / 64.0;
        CHECK(path.waypoints[i].x == doctest::Approx(30.0 + 20.0 * std::sin(3.0 * t)));
        CHECK(path.waypoints[i].y == doctest::Approx(30.0 + 10.0 * std::sin(2.0 * t + 0.5)));
    }
}

TEST_CASE("plan_freeform resamples at constant step") {
    const Rect win{0, 0, 100, 100};
    const std::vector<Vec2> poly{{10, 10}, {90, 10}, {90, 90}};
    const auto path = plan_freeform(win, poly, 5.0, 1e-3);
    REQUIRE(path.waypoints.size() > 10);
    for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
        const double d = path.waypoints[i].dist(path.waypoints[i - 1]);
        CHECK(d == doctest::Approx(5.0).epsilon(0.05));
    }
}

TEST_CASE("planners reject bad input") {
    CHECK_THROWS_AS(plan_raster({0, 0, 0, 10}, 4, 4, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(plan_raster({0, 0, 10, 10}, 2000, 2000, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(plan_spiral({0, 0, 10, 10}, -1.0, 0.5, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(plan_freeform({0, 0, 10, 10}, std::vector<Vec2>{}, 1.0, 1e-3),
                    std::invalid_argument);
}

TEST_CASE("execute: constant field, no noise or drift, reproduces the constant") {
    Sample s = flat_sample(16, 16, +1.0);
    Session session(s, quiet_config());
    const auto path = plan_raster({0, 0, 16, 16}, 8, 8, 1e-3);
    auto [obs, elapsed] = session.execute(path);
    REQUIRE(obs.size() == 64);
    for (const auto& o : obs) CHECK(o.value == 1.0);
}

TEST_CASE("execute: N coincident points cost exactly N*dwell") {
    Sample s = flat_sample(8, 8, 1.0);
    ScopeConfig cfg = quiet_config();
    cfg.latency.dwell_default = 0.25;
    Session session(s, cfg);
    ScanPath path;
    path.kind = PathKind::freeform;
    path.dwell = 0.25;
    path.waypoints.assign(10, Vec2{0.0, 0.0});  // probe starts at the origin
    path.line_breaks = {10};
    auto [obs, elapsed] = session.execute(path);
    CHECK(elapsed == 10 * 0.25);
}

TEST_CASE("execute: velocity drift shifts pos_true by v*t") {
    Sample s = flat_sample(32, 32, 1.0);
    ScopeConfig cfg = quiet_config();
    cfg.drift.velocity = {1.0, 0.0};
    cfg.latency.dwell_default = 10.0;  // one observation at t = 10 s
    Session session(s, cfg);
    ScanPath path;
    path.kind = PathKind::freeform;
    path.dwell = 10.0;
    path.waypoints = {{0.0, 0.0}};
    path.line_breaks = {1};
    auto [obs, elapsed] = session.execute(path);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].t_sim == doctest::Approx(10.0));
    CHECK(obs[0].pos_true.x - obs[0].pos_nominal.x == doctest::Approx(10.0));
    CHECK(obs[0].pos_true.y - obs[0].pos_nominal.y == doctest::Approx(0.0));
}

TEST_CASE("execute: clock nondecreasing, per-line counts match the breaks") {
    Sample s = flat_sample(16, 16, 1.0);
    ScopeConfig cfg = quiet_config();
    cfg.latency.flyback = 0.01;
    cfg.noise_sigma = 0.1;
    cfg.drift.random_walk_sigma = 0.05;
    Session session(s, cfg);
    const auto path = plan_raster({0, 0, 16, 16}, 5, 7, 1e-3, true);
    std::vector<std::size_t> line_sizes;
    double last_t = -1.0;
    session.execute(path, [&](std::size_t, std::span<const Observation> line) {
        line_sizes.push_back(line.size());
        for (const auto& o : line) {
            CHECK(o.t_sim >= last_t);
            last_t = o.t_sim;
        }
    });
    CHECK(line_sizes == std::vector<std::size_t>(7, 5));
}

TEST_CASE("execute: total time equals the component sum (100 random paths)") {
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        Sample s = flat_sample(16, 16, 1.0);
        ScopeConfig cfg = quiet_config();
        cfg.latency.dwell_default = 1e-4 + rng.next_double() * 1e-2;
        cfg.latency.slew_rate = 100.0 + rng.next_double() * 1e4;
        cfg.latency.flyback = rng.next_double() * 0.05;
        Sample s2 = s;
        Session session(s2, cfg);
        const int nx = 2 + rng.next_int(6), ny = 1 + rng.next_int(6);
        const auto path =
            plan_raster({0, 0, 16, 16}, nx, ny, cfg.latency.dwell_default, trial % 2 == 0);

        auto [obs, elapsed] = session.execute(path);
        const auto& ledger = session.ledger();
        const double component_sum =
            ledger.total(LedgerKind::dwell) + ledger.total(LedgerKind::travel) +
            ledger.total(LedgerKind::flyback);
        CHECK(std::abs(elapsed - component_sum) <= 1e-9 * std::max(1.0, component_sum));
        // dwell accounting is exact: n points * dwell
        CHECK(ledger.total(LedgerKind::dwell) ==
              doctest::Approx(nx * ny * cfg.latency.dwell_default).epsilon(1e-12));
    }
}

TEST_CASE("execute is deterministic with drift and noise disabled") {
    Sample s1 = gen_domain_phantom(24, 24, {24, 24}, PhantomStyle::bubbles, 3);
    Sample s2 = s1;
    const auto path = plan_raster({0, 0, 24, 24}, 12, 12, 1e-3);
    Session a(s1, quiet_config());
    Session b(s2, quiet_config());
    auto [obs_a, ta] = a.execute(path);
    auto [obs_b, tb] = b.execute(path);
    CHECK(ta == tb);
    for (std::size_t i = 0; i < obs_a.size(); ++i) CHECK(obs_a[i].value == obs_b[i].value);
}

TEST_CASE("ramp_spectroscopy: full cycle has exactly 2*n_steps points") {
    Sample s = gen_domain_phantom(16, 16, {16, 16}, PhantomStyle::stripes, 1);
    Session session(s, quiet_config());
    const auto res = session.ramp_spectroscopy({8, 8}, {-4.0, 4.0, 25});
    CHECK(res.curve.size() == 50);
    CHECK_FALSE(res.stopped_early);
    CHECK(res.curve.front().bias == doctest::Approx(-4.0));
    CHECK(res.curve[24].bias == doctest::Approx(4.0));
    CHECK(res.curve.back().bias == doctest::Approx(-4.0));
}

TEST_CASE("ramp_spectroscopy: threshold 0 with nonzero offset stops immediately") {
    Sample s = gen_domain_phantom(16, 16, {16, 16}, PhantomStyle::stripes, 1);
    for (auto& v : s.loops.offset.values) v = 0.5;
    Session session(s, quiet_config());
    const auto res = session.ramp_spectroscopy({8, 8}, {-4.0, 4.0, 25}, 0.0);
    CHECK(res.stopped_early);
    CHECK(res.curve.size() == 1);
}

TEST_CASE("ramp_spectroscopy: threshold above saturation never stops early") {
    Sample s = gen_domain_phantom(16, 16, {16, 16}, PhantomStyle::stripes, 1);
    Session session(s, quiet_config());
    const Pixel px = s.geom().nearest({8, 8});
    const SiteLoopParams params = s.loop_at(px);
    // oracle: max |response| over the full cycle, computed directly
    double max_abs = 0.0;
    for (int i = 0; i < 25; ++i) {
        const double bias = -4.0 + 8.0 * i / 24.0;
        max_abs = std::max(max_abs, std::abs(loop_response(params, bias, Branch::ascending)));
        max_abs = std::max(max_abs, std::abs(loop_response(params, bias, Branch::descending)));
    }
    const auto res = session.ramp_spectroscopy({8, 8}, {-4.0, 4.0, 25}, max_abs + 0.01);
    CHECK_FALSE(res.stopped_early);
    CHECK(res.curve.size() == 50);

    CHECK_THROWS_AS(session.ramp_spectroscopy({8, 8}, {-4.0, 4.0, 1}), std::invalid_argument);
}

TEST_CASE("survey: noise/drift free equals ground truth at grid points") {
    Sample s = gen_domain_phantom(32, 32, {32, 32}, PhantomStyle::bubbles, 12);
    Session session(s, quiet_config());
    const auto res = session.survey({0, 0, 32, 32}, 32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) CHECK(res.image.at(x, y) == s.polarization.at(x, y));
}

TEST_CASE("survey: same seed, fresh session, identical output") {
    ScopeConfig cfg = quiet_config();
    cfg.noise_sigma = 0.2;
    cfg.seed = 99;
    Sample s1 = gen_domain_phantom(16, 16, {16, 16}, PhantomStyle::bubbles, 4);
    Sample s2 = s1;
    Session a(s1, cfg);
    Session b(s2, cfg);
    const auto ra = a.survey({0, 0, 16, 16}, 16, 16);
    const auto rb = b.survey({0, 0, 16, 16}, 16, 16);
    CHECK(ra.image.values == rb.image.values);
    CHECK(ra.elapsed == rb.elapsed);
}

TEST_CASE("survey: halving resolution divides the dwell total by 4") {
    ScopeConfig cfg = quiet_config();
    cfg.latency.dwell_default = 0.01;
    Sample s1 = flat_sample(32, 32, 1.0);
    Sample s2 = s1;
    Session a(s1, cfg);
    Session b(s2, cfg);
    a.survey({0, 0, 32, 32}, 32, 32);
    b.survey({0, 0, 32, 32}, 16, 16);
    const double dwell_a = a.ledger().total(LedgerKind::dwell);
    const double dwell_b = b.ledger().total(LedgerKind::dwell);
    CHECK(dwell_a == doctest::Approx(4.0 * dwell_b).epsilon(1e-12));
}

TEST_CASE("estimate_drift: identity, constructed shifts, errors") {
    const Sample big = gen_domain_phantom(80, 80, {80, 80}, PhantomStyle::bubbles, 17);
    const ScalarField2D a = shifted_crop(big.polarization, 10, 10, 48, 48);

    SUBCASE("identical images give (0,0)") {
        const auto [dx, dy] = estimate_drift(a, a, 8);
        CHECK(dx == 0);
        CHECK(dy == 0);
    }
    SUBCASE("constructed shift (3,-2) recovered exactly") {
        // b[x+3, y-2] = a[x, y]  <=>  b's window starts 3 left, 2 down
        const ScalarField2D b = shifted_crop(big.polarization, 7, 12, 48, 48);
        const auto [dx, dy] = estimate_drift(a, b, 8);
        CHECK(dx == 3);
        CHECK(dy == -2);
    }
    SUBCASE("dimension mismatch rejected") {
        const ScalarField2D c = shifted_crop(big.polarization, 0, 0, 32, 32);
        CHECK_THROWS_AS(estimate_drift(a, c, 4), std::invalid_argument);
    }
    SUBCASE("max_shift too large rejected") {
        CHECK_THROWS_AS(estimate_drift(a, a, 24), std::invalid_argument);
    }
}

TEST_CASE("estimate_drift: property over random integer shifts, noise-free") {
    Rng rng(7);
    const Sample big = gen_domain_phantom(96, 96, {96, 96}, PhantomStyle::bubbles, 23);
    for (int trial = 0; trial < 25; ++trial) {
        const int sx = rng.next_int(13) - 6;
        const int sy = rng.next_int(13) - 6;
        const ScalarField2D a = shifted_crop(big.polarization, 20, 20, 48, 48);
        const ScalarField2D b = shifted_crop(big.polarization, 20 - sx, 20 - sy, 48, 48);
        const auto [dx, dy] = estimate_drift(a, b, 8);
        CHECK(dx == sx);
        CHECK(dy == sy);
    }
}

TEST_CASE("estimate_drift: known shift at SNR 10 recovered in >= 95/100 trials") {
    const Sample big = gen_domain_phantom(96, 96, {96, 96}, PhantomStyle::bubbles, 29);
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(seed * 7919 + 13);
        ScalarField2D a = shifted_crop(big.polarization, 20, 20, 48, 48);
        ScalarField2D b = shifted_crop(big.polarization, 18, 19, 48, 48);  // shift (2,1)
        for (auto& v : a.values) v += 0.1 * rng.next_gaussian();  // SNR 10 on unit signal
        for (auto& v : b.values) v += 0.1 * rng.next_gaussian();
        const auto [dx, dy] = estimate_drift(a, b, 6);
        if (dx == 2 && dy == 1) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("custom channel samples the supplied field") {
    Sample s = flat_sample(16, 16, 1.0);
    ScalarField2D custom(16, 16, {16, 16});
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) custom.at(x, y) = 0.5 * x - 0.25 * y;
    ScopeConfig cfg = quiet_config();
    cfg.channel = Channel::custom;
    cfg.custom_field = custom;
    Session session(s, cfg);
    const auto res = session.survey({0, 0, 16, 16}, 16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) CHECK(res.image.at(x, y) == custom.at(x, y));

    ScopeConfig bad = quiet_config();
    bad.channel = Channel::custom;
    Sample s2 = flat_sample(8, 8, 1.0);
    Session broken(s2, bad);
    CHECK_THROWS_AS(broken.measure_at({1, 1}), std::invalid_argument);
}
