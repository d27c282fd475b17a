#include "autoscope/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "autoscope/io.hpp"

namespace fs = std::filesystem;

namespace autoscope::campaign {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::bo_explore: return "bo_explore";
        case Kind::bo_spectro: return "bo_spectro";
        case Kind::bench_recon: return "bench_recon";
        case Kind::rl_tip: return "rl_tip";
        case Kind::rl_write: return "rl_write";
        case Kind::ferrobot: return "ferrobot";
    }
    return "?";
}

Kind kind_from_name(const std::string& name) {
    for (int i = 0; i < 6; ++i) {
        const auto k = static_cast<Kind>(i);
        if (name == kind_name(k)) return k;
    }
    throw config::ConfigError("unknown campaign kind: " + name);
}

const char* arm_name(ArmKind a) {
    switch (a) {
        case ArmKind::bo: return "bo";
        case ArmKind::random_arm: return "random";
        case ArmKind::grid: return "grid";
    }
    return "?";
}

// --- spec parsing ---------------------------------------------------------

namespace {

PhantomStyle style_from_name(const std::string& name) {
    if (name == "stripes") return PhantomStyle::stripes;
    if (name == "bubbles") return PhantomStyle::bubbles;
    if (name == "mixed") return PhantomStyle::mixed;
    throw config::ConfigError("unknown sample style: " + name);
}

agent::Baseline baseline_from_name(const std::string& name) {
    if (name == "none") return agent::Baseline::none;
    if (name == "mean") return agent::Baseline::mean;
    if (name == "value") return agent::Baseline::value;
    throw config::ConfigError("unknown baseline: " + name);
}

}  // namespace

CampaignSpec CampaignSpec::from_file(const std::string& path) {
    const std::string text = io::read_text(path);
    auto root = config::Node::parse(text);
    CampaignSpec spec = from_config(root);
    spec.spec_text = text;
    return spec;
}

CampaignSpec CampaignSpec::from_config(const config::Node& root) {
    CampaignSpec spec;
    spec.kind = kind_from_name(root.get_str("kind"));
    spec.seed = root.get_u64("seed", 0);
    spec.out_dir = root.get_str("out", "run");

    if (const auto* s = root.child_if("sample")) {
        spec.sample.width = s->get_int("width", spec.sample.width);
        spec.sample.height = s->get_int("height", spec.sample.height);
        const double ext = s->get_double("extent_nm", spec.sample.extent.x);
        spec.sample.extent = {ext, s->get_double("extent_y_nm", ext)};
        spec.sample.style = style_from_name(s->get_str("style", "stripes"));
        spec.sample.stripe_period_px = s->get_int("stripe_period_px", spec.sample.stripe_period_px);
        spec.sample.bubble_sigma_px = s->get_double("bubble_sigma_px", spec.sample.bubble_sigma_px);
        spec.sample.coercive_bias = s->get_double("coercive_bias", spec.sample.coercive_bias);
        spec.sample.flip_sharpness = s->get_double("flip_sharpness", spec.sample.flip_sharpness);
        spec.sample.loop_amplitude = s->get_double("loop_amplitude", spec.sample.loop_amplitude);
        spec.sample.loop_vc = s->get_double("loop_vc", spec.sample.loop_vc);
        spec.sample.loop_width = s->get_double("loop_width", spec.sample.loop_width);
        spec.sample.wall_dip = s->get_double("wall_dip", spec.sample.wall_dip);
    }

    if (const auto* s = root.child_if("scope")) {
        spec.latency.dwell_default = s->get_double("dwell_s", spec.latency.dwell_default);
        spec.latency.slew_rate = s->get_double("slew_nm_per_s", spec.latency.slew_rate);
        spec.latency.flyback = s->get_double("flyback_s", spec.latency.flyback);
        spec.latency.decision_charge =
            s->get_double("decision_charge_s", spec.latency.decision_charge);
        spec.noise_sigma = s->get_double("noise_sigma", spec.noise_sigma);
        spec.drift.velocity = {s->get_double("drift_vx", 0.0), s->get_double("drift_vy", 0.0)};
        spec.drift.random_walk_sigma = s->get_double("drift_walk_sigma", 0.0);
        spec.drift.seed = s->get_u64("drift_seed", 0);
        spec.channel = scope::channel_from_name(s->get_str("channel", "polarization"));
    }

    if (const auto* e = root.child_if("engine")) {
        spec.engine.kernel = gp::kernel_family_from_name(e->get_str("kernel", "matern52"));
        spec.engine.acq.kind =
            acquire::acquisition_from_name(e->get_str("acquisition", "max_variance"));
        spec.engine.acq.beta = e->get_double("beta", spec.engine.acq.beta);
        spec.engine.acq.xi = e->get_double("xi", spec.engine.acq.xi);
        spec.engine.n_seed_points = e->get_int("n_seed_points", spec.engine.n_seed_points);
        spec.engine.batch = e->get_int("batch", spec.engine.batch);
        spec.engine.max_measurements =
            e->get_int("max_measurements", spec.engine.max_measurements);
        spec.engine.edge_taper_px = e->get_double("edge_taper_px", spec.engine.edge_taper_px);
        spec.engine.refit_dense_until =
            e->get_int("refit_dense_until", spec.engine.refit_dense_until);
        spec.engine.refit_every = e->get_int("refit_every", spec.engine.refit_every);
        spec.engine.pathfinder.mode =
            acquire::pathfinder_mode_from_name(e->get_str("pathfinder", "nearest"));
        spec.engine.pathfinder.min_sep = e->get_double("min_sep_px", 3.0);
        spec.engine.pathfinder.dir_penalty = e->get_double("dir_penalty", 0.0);
        const double dx = e->get_double("dir_x", 1.0), dy = e->get_double("dir_y", 0.0);
        const double dn = std::hypot(dx, dy);
        spec.engine.pathfinder.preferred_dir = dn > 0 ? Vec2{dx / dn, dy / dn} : Vec2{1.0, 0.0};
        spec.engine.recon_method =
            recon::method_from_name(e->get_str("recon_method", "gp"));
    }

    if (const auto* s = root.child_if("spectro")) {
        spec.spectro.v_max = s->get_double("v_max", spec.spectro.v_max);
        spec.spectro.n_steps = s->get_int("n_steps", spec.spectro.n_steps);
        if (s->has("stop_threshold"))
            spec.spectro.stop_threshold = s->get_double("stop_threshold");
    }

    if (const auto* r = root.child_if("rl")) {
        spec.rl.algo = r->get_str("algo", spec.rl.algo);
        spec.rl.dq.gamma = r->get_double("gamma", spec.rl.dq.gamma);
        spec.rl.dq.alpha = r->get_double("alpha", spec.rl.dq.alpha);
        spec.rl.dq.epsilon0 = r->get_double("epsilon0", spec.rl.dq.epsilon0);
        spec.rl.dq.epsilon_min = r->get_double("epsilon_min", spec.rl.dq.epsilon_min);
        spec.rl.dq.n_episodes = r->get_int("n_episodes", spec.rl.dq.n_episodes);
        spec.rl.pg.gamma = spec.rl.dq.gamma;
        spec.rl.pg.alpha = r->get_double("pg_alpha", spec.rl.pg.alpha);
        spec.rl.pg.n_batches = r->get_int("n_batches", spec.rl.pg.n_batches);
        spec.rl.pg.batch_size = r->get_int("batch_size", spec.rl.pg.batch_size);
        spec.rl.pg.baseline = baseline_from_name(r->get_str("baseline", "mean"));
        spec.rl.eval_episodes = r->get_int("eval_episodes", spec.rl.eval_episodes);
        spec.rl.write.grid_w = r->get_int("write_grid_w", spec.rl.write.grid_w);
        spec.rl.write.grid_h = r->get_int("write_grid_h", spec.rl.write.grid_h);
        spec.rl.write.max_steps = r->get_int("write_max_steps", spec.rl.write.max_steps);
        if (r->has("write_goal")) {
            const auto goal = r->get_doubles("write_goal");
            spec.rl.write.goal.clear();
            for (double g : goal)
                spec.rl.write.goal.push_back(g != 0.0 ? 1 : 0);
        }
    }

    if (const auto* f = root.child_if("plan")) {
        spec.ferro.plan.trigger.low = f->get_double("low", spec.ferro.plan.trigger.low);
        spec.ferro.plan.trigger.high = f->get_double("high", spec.ferro.plan.trigger.high);
        spec.ferro.plan.per_line_limit =
            f->get_int("per_line_limit", spec.ferro.plan.per_line_limit);
        spec.ferro.plan.pulse_duration =
            f->get_double("pulse_duration_s", spec.ferro.plan.pulse_duration);
        spec.ferro.plan.radius_px = f->get_double("radius_px", spec.ferro.plan.radius_px);
        const double bias = f->get_double("bias", 2.0);
        const double dose = f->get_double("dose", 1.0);
        const int pulses = f->get_int("pulses", 1);
        spec.ferro.plan.waveform.assign(static_cast<std::size_t>(pulses), {bias, dose});
        spec.ferro.scan_nx = f->get_int("scan_nx", spec.ferro.scan_nx);
        spec.ferro.scan_ny = f->get_int("scan_ny", spec.ferro.scan_ny);
    }

    if (root.has("bench_budgets")) spec.bench_budgets = root.get_doubles("bench_budgets");

    root.check_all_consumed();
    spec.validate();
    return spec;
}

void CampaignSpec::validate() const {
    if (engine.n_seed_points < 2)
        throw config::ConfigError("engine.n_seed_points must be >= 2");
    if (engine.batch < 1) throw config::ConfigError("engine.batch must be >= 1");
    if (engine.max_measurements < engine.n_seed_points)
        throw config::ConfigError("engine.max_measurements must be >= n_seed_points");
    if (engine.max_measurements > kGpTrainingCap)
        throw config::ConfigError("engine.max_measurements exceeds the GP training cap (512)");
    for (double b : bench_budgets)
        if (!(b > 0.0) || b > 1.0)
            throw config::ConfigError("bench_budgets entries must be in (0, 1]");
    latency.check_valid();
    if (kind == Kind::ferrobot) ferro.plan.check_valid();
}

scope::ScopeConfig CampaignSpec::scope_config() const {
    scope::ScopeConfig cfg;
    cfg.drift = drift;
    cfg.latency = latency;
    cfg.noise_sigma = noise_sigma;
    cfg.channel = channel;
    cfg.seed = seed;
    return cfg;
}

// --- helpers ---------------------------------------------------------------

namespace {

double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    std::uint64_t i = index;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

/// n distinct seed pixels from the Halton (2,3) sequence.
std::vector<Pixel> halton_pixels(int n, const GridGeom& geom) {
    std::vector<Pixel> out;
    std::set<std::pair<int, int>> seen;
    std::uint64_t idx = 1;
    while (static_cast<int>(out.size()) < n) {
        const int x = std::min(static_cast<int>(halton(idx, 2) * geom.width), geom.width - 1);
        const int y = std::min(static_cast<int>(halton(idx, 3) * geom.height), geom.height - 1);
        ++idx;
        if (seen.insert({y, x}).second) out.push_back({x, y});
        if (idx > 1000000) throw std::runtime_error("halton_pixels: grid too small for budget");
    }
    return out;
}

std::vector<Pixel> random_pixels(int n, const GridGeom& geom, Rng& rng) {
    std::vector<Pixel> out;
    std::set<std::pair<int, int>> seen;
    while (static_cast<int>(out.size()) < n) {
        const Pixel p{rng.next_int(geom.width), rng.next_int(geom.height)};
        if (seen.insert({p.y, p.x}).second) out.push_back(p);
    }
    return out;
}

std::vector<Pixel> grid_pixels(int budget, const GridGeom& geom) {
    const double aspect = static_cast<double>(geom.width) / geom.height;
    int nx = std::max(1, static_cast<int>(std::floor(std::sqrt(budget * aspect))));
    int ny = std::max(1, budget / std::max(nx, 1));
    nx = std::min(nx, geom.width);
    ny = std::min(ny, geom.height);
    std::vector<Pixel> out;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int x = static_cast<int>((i + 0.5) * geom.width / nx);
            const int y = static_cast<int>((j + 0.5) * geom.height / ny);
            out.push_back({std::min(x, geom.width - 1), std::min(y, geom.height - 1)});
        }
    return out;
}

/// Area under a measured hysteresis curve: the first half is the ascending
/// branch, the second the descending one (reversed bias order). Trapezoid
/// over bias pairs present in both branches.
double curve_loop_area(const std::vector<scope::CurvePoint>& curve, int n_steps) {
    const int n = std::min<int>(n_steps, static_cast<int>(curve.size()));
    std::vector<double> gap;       // ascending-bias order
    std::vector<double> biases;
    for (int i = 0; i < n; ++i) {
        const int desc_idx = 2 * n_steps - 1 - i;  // same bias on the way down
        if (desc_idx < static_cast<int>(curve.size()) && desc_idx >= n) {
            gap.push_back(curve[desc_idx].response - curve[i].response);
            biases.push_back(curve[i].bias);
        }
    }
    if (gap.size() < 2) return 0.0;
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < gap.size(); ++i)
        area += 0.5 * (gap[i] + gap[i + 1]) * (biases[i + 1] - biases[i]);
    return area;
}

struct Measurer {
    virtual ~Measurer() = default;
    virtual scope::Observation measure(scope::Session& session, const Vec2& pos) = 0;
    virtual ScalarField2D truth(scope::Session& session) const = 0;
};

struct ImageMeasurer : Measurer {
    scope::Observation measure(scope::Session& session, const Vec2& pos) override {
        return session.measure_at(pos);
    }
    ScalarField2D truth(scope::Session& session) const override {
        return session.channel_field();
    }
};

struct SpectroMeasurer : Measurer {
    SpectroConfig cfg;
    explicit SpectroMeasurer(const SpectroConfig& c) : cfg(c) {}
    scope::Observation measure(scope::Session& session, const Vec2& pos) override {
        const scope::Ramp ramp{-cfg.v_max, cfg.v_max, cfg.n_steps};
        const auto res = session.ramp_spectroscopy(pos, ramp, cfg.stop_threshold);
        scope::Observation obs;
        obs.pos_nominal = pos;
        obs.pos_true = pos;  // the ramp addresses the nominal site
        obs.channel = scope::Channel::custom;  // derived descriptor, not a raw channel
        obs.value = curve_loop_area(res.curve, cfg.n_steps);
        obs.t_sim = session.now();
        return obs;
    }
    ScalarField2D truth(scope::Session& session) const override {
        // analytic loop-area descriptor map
        const Sample& sample = session.sample();
        const auto& pol = sample.polarization;
        ScalarField2D f(pol.width, pol.height, pol.extent);
        for (int y = 0; y < pol.height; ++y)
            for (int x = 0; x < pol.width; ++x)
                f.at(x, y) = loop_area(sample.loop_at({x, y}), cfg.v_max, 4 * cfg.n_steps);
        return f;
    }
};

gp::FitConfig base_fit_config(const CampaignSpec& spec, const GridGeom& geom) {
    gp::FitConfig cfg;
    cfg.lengthscale_min = std::min(geom.dx(), geom.dy());
    cfg.lengthscale_max = std::hypot(geom.rect.width, geom.rect.height);
    cfg.nelder_mead_evals = spec.engine.nm_evals_cold;
    return cfg;
}

/// Cold fits at large n are expensive (full grid sweep); pre-fit on a
/// deterministic subset, then warm-refine on everything.
gp::GpModel fit_budgeted(const std::vector<Vec2>& xs, const std::vector<double>& ys,
                         const CampaignSpec& spec, const GridGeom& geom,
                         std::optional<std::array<double, 3>> warm) {
    gp::FitConfig cfg = base_fit_config(spec, geom);
    if (!warm && xs.size() > 160) {
        // grid-search on a spatially unbiased subset, then warm-refine on
        // everything. A deterministic shuffle avoids aliased subsets when the
        // measurement order is structured (grid scans, BO tours).
        std::vector<std::size_t> idx(xs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng shuffle_rng = Rng::child(0x73687566, xs.size());
        for (std::size_t i = idx.size(); i-- > 1;)
            std::swap(idx[i], idx[static_cast<std::size_t>(shuffle_rng.next_int(
                          static_cast<int>(i + 1)))]);
        std::vector<Vec2> sub_x;
        std::vector<double> sub_y;
        for (std::size_t i = 0; i < 128; ++i) {
            sub_x.push_back(xs[idx[i]]);
            sub_y.push_back(ys[idx[i]]);
        }
        const auto pre = gp::GpModel::fit(std::move(sub_x), sub_y, spec.engine.kernel, cfg);
        warm = pre.log_params();
    }
    if (warm) {
        cfg.warm_start = warm;
        cfg.use_grid = false;
        cfg.nelder_mead_evals = spec.engine.nm_evals_warm;
    }
    return gp::GpModel::fit(xs, ys, spec.engine.kernel, cfg);
}

nlohmann::ordered_json pixel_json(Pixel p) { return nlohmann::ordered_json::array({p.x, p.y}); }

}  // namespace

// --- BO loop ------------------------------------------------------------------

namespace {

struct FinalRecon {
    ScalarField2D field;
    std::optional<nlohmann::ordered_json> model_json;
};

/// Final full-frame reconstruction shared by the BO arm and the baselines;
/// a gp warm start skips the coarse hyperparameter grid.
FinalRecon final_recon(const std::vector<recon::Obs>& points, const CampaignSpec& spec,
                       const GridGeom& geom, std::optional<std::array<double, 3>> warm) {
    FinalRecon out;
    if (spec.engine.recon_method == recon::Method::gp) {
        std::vector<Vec2> xs;
        std::vector<double> ys;
        for (const auto& [p, v] : points) {
            xs.push_back(p);
            ys.push_back(v);
        }
        const auto model = fit_budgeted(xs, ys, spec, geom, warm);
        out.field = model.posterior(geom).mean;
        out.model_json = model.dump();
    } else {
        recon::Params rp;
        rp.method = spec.engine.recon_method;
        out.field = recon::reconstruct(points, geom, rp);
    }
    return out;
}

struct BoOutcome {
    std::vector<recon::Obs> points;
    ScalarField2D recon;
    std::optional<nlohmann::ordered_json> model_json;
    std::optional<std::array<double, 3>> hyper;
    gp::Posterior last_posterior;
    ScalarField2D last_acq;
    bool have_posterior = false;
};

BoOutcome run_bo_loop(const CampaignSpec& spec, scope::Session& session, Measurer& measurer,
                      RunRecord* record) {
    const GridGeom geom = session.sample().geom();
    const EngineConfig& eng = spec.engine;

    BoOutcome out;
    acquire::PixelSet visited(geom.width, geom.height);
    const ScalarField2D mask = acquire::edge_mask(geom.width, geom.height, eng.edge_taper_px);

    std::vector<Vec2> xs;
    std::vector<double> ys;

    auto measure_pixel = [&](Pixel px) {
        const Vec2 pos = geom.center_of(px);
        const scope::Observation obs = measurer.measure(session, pos);
        visited.insert(px);
        xs.push_back(pos);
        ys.push_back(obs.value);
        out.points.push_back({pos, obs.value});
        if (record) record->observations.push_back(obs);
    };

    // seed phase: one decision charge for the seed selection
    session.charge(LedgerKind::decision, spec.latency.decision_charge);
    const auto seeds = halton_pixels(eng.n_seed_points, geom);
    if (record) {
        DecisionRecord dec;
        dec.iteration = 0;
        dec.t_sim = session.now();
        dec.payload["stage"] = "seed";
        dec.payload["n_obs_used"] = 0;
        auto& arr = dec.payload["points"] = nlohmann::ordered_json::array();
        for (const auto& p : seeds) arr.push_back(pixel_json(p));
        record->decisions.push_back(std::move(dec));
    }
    for (const auto& px : seeds) measure_pixel(px);

    std::optional<std::array<double, 3>> hyper;
    int iters_since_refit = 0;
    int iteration = 0;
    std::optional<gp::GpModel> model;

    while (static_cast<int>(xs.size()) < eng.max_measurements) {
        ++iteration;
        const bool dense_phase = static_cast<int>(xs.size()) <= eng.refit_dense_until;
        const bool refit = !model || dense_phase || iters_since_refit >= eng.refit_every;
        if (refit) {
            // dense phase refits stay cold so early aliased lengthscales
            // cannot lock in through the warm start
            model = fit_budgeted(xs, ys, spec, geom,
                                 dense_phase ? std::nullopt : hyper);
            hyper = model->log_params();
            iters_since_refit = 0;
        } else {
            gp::KernelSpec k{eng.kernel, std::exp((*hyper)[0]), std::exp((*hyper)[1])};
            model = gp::GpModel::make(k, std::exp((*hyper)[2]), xs, ys);
            ++iters_since_refit;
        }

        const gp::Posterior post = model->posterior(geom);
        acquire::AcquisitionSpec acq_spec = eng.acq;
        acq_spec.best_so_far = *std::max_element(ys.begin(), ys.end());
        const ScalarField2D acq = acquire::evaluate(acq_spec, post, mask, visited);

        const int want = std::min<int>(eng.batch, eng.max_measurements -
                                                      static_cast<int>(xs.size()));
        auto cands = acquire::top_maxima(acq, want, eng.pathfinder.min_sep);
        if (cands.empty()) break;  // surface exhausted

        acquire::PathfinderPolicy policy = eng.pathfinder;
        policy.nm_per_px = std::min(geom.dx(), geom.dy());
        const Pixel cur = geom.nearest(session.probe_pos());
        const auto tour = acquire::pathfind(cands, cur, policy);

        session.charge(LedgerKind::decision, spec.latency.decision_charge);
        if (record) {
            DecisionRecord dec;
            dec.iteration = iteration;
            dec.t_sim = session.now();
            dec.payload["stage"] = "bo";
            dec.payload["n_obs_used"] = xs.size();
            dec.payload["lengthscale"] = model->kernel().lengthscale;
            dec.payload["signal_variance"] = model->kernel().signal_variance;
            dec.payload["noise_variance"] = model->noise_variance();
            dec.payload["best_so_far"] = acq_spec.best_so_far;
            auto& carr = dec.payload["candidates"] = nlohmann::ordered_json::array();
            for (const auto& c : cands)
                carr.push_back(nlohmann::ordered_json::array({c.px.x, c.px.y, c.score}));
            auto& tarr = dec.payload["tour"] = nlohmann::ordered_json::array();
            for (const auto& c : tour) tarr.push_back(pixel_json(c.px));
            record->decisions.push_back(std::move(dec));
        }

        for (const auto& c : tour) measure_pixel(c.px);

        out.last_posterior = post;
        out.last_acq = acq;
        out.have_posterior = true;
    }

    // budgeted cold fit, identical to what the baseline arms get
    auto fin = final_recon(out.points, spec, geom, std::nullopt);
    out.recon = std::move(fin.field);
    out.model_json = std::move(fin.model_json);
    out.hyper = hyper;
    return out;
}

}  // namespace

ArmResult run_sampling_arm(ArmKind arm, const CampaignSpec& spec, std::uint64_t seed,
                           int budget_override) {
    CampaignSpec local = spec;
    local.seed = seed;
    if (budget_override > 0) {
        local.engine.max_measurements = budget_override;
        local.engine.n_seed_points = std::min(local.engine.n_seed_points, budget_override);
    }
    local.validate();

    Sample sample = gen_domain_phantom(local.sample, local.seed);
    const GridGeom geom = sample.geom();
    LatencyLedger ledger;
    scope::Session session(sample, local.scope_config(), &ledger);

    std::unique_ptr<Measurer> measurer;
    if (spec.kind == Kind::bo_spectro)
        measurer = std::make_unique<SpectroMeasurer>(local.spectro);
    else
        measurer = std::make_unique<ImageMeasurer>();

    ArmResult result;
    result.row.arm = arm_name(arm);
    result.row.seed = seed;
    result.row.method = recon::method_name(local.engine.recon_method);

    const ScalarField2D truth = measurer->truth(session);

    if (arm == ArmKind::bo) {
        auto out = run_bo_loop(local, session, *measurer, nullptr);
        result.recon = std::move(out.recon);
        result.points = std::move(out.points);
    } else {
        const int budget = local.engine.max_measurements;
        std::vector<Pixel> pixels;
        if (arm == ArmKind::random_arm) {
            Rng rng = Rng::child(seed, 0x726e6431);
            pixels = random_pixels(budget, geom, rng);
        } else {
            pixels = grid_pixels(budget, geom);
        }
        for (const auto& px : pixels) {
            const Vec2 pos = geom.center_of(px);
            result.points.push_back({pos, measurer->measure(session, pos).value});
        }
        result.recon = final_recon(result.points, local, geom, std::nullopt).field;
    }

    const auto rep = recon::metrics(result.recon, truth, result.points,
                                    local.engine.recon_method);
    result.row.n_obs = rep.n_obs;
    result.row.frac_sampled = rep.frac_sampled;
    result.row.rmse = rep.rmse;
    result.row.psnr = rep.psnr;
    return result;
}

// --- campaign runners -----------------------------------------------------------

namespace {

void run_bo_campaign(const CampaignSpec& spec, RunRecord& record) {
    Sample sample = gen_domain_phantom(spec.sample, spec.seed);
    scope::Session session(sample, spec.scope_config(), &record.ledger);

    std::unique_ptr<Measurer> measurer;
    if (spec.kind == Kind::bo_spectro)
        measurer = std::make_unique<SpectroMeasurer>(spec.spectro);
    else
        measurer = std::make_unique<ImageMeasurer>();

    const ScalarField2D truth = measurer->truth(session);
    auto out = run_bo_loop(spec, session, *measurer, &record);

    const auto rep =
        recon::metrics(out.recon, truth, out.points, spec.engine.recon_method);
    ReconRow row;
    row.method = recon::method_name(spec.engine.recon_method);
    row.n_obs = rep.n_obs;
    row.frac_sampled = rep.frac_sampled;
    row.rmse = rep.rmse;
    row.psnr = rep.psnr;
    row.seed = spec.seed;
    row.arm = "bo";
    record.recon_rows.push_back(row);

    record.fields.emplace_back("truth", truth);
    record.fields.emplace_back("recon", out.recon);
    if (out.have_posterior) {
        record.fields.emplace_back("posterior_std", out.last_posterior.std);
        // visited pixels hold a -inf sentinel; clamp for the artifact files
        ScalarField2D acq = out.last_acq;
        double lo = 0.0;
        bool have_lo = false;
        for (double v : acq.values)
            if (std::isfinite(v) && (!have_lo || v < lo)) {
                lo = v;
                have_lo = true;
            }
        for (double& v : acq.values)
            if (!std::isfinite(v)) v = lo;
        record.fields.emplace_back("acquisition", acq);
    }
    record.model_dump = std::move(out.model_json);
}

void run_bench_campaign(const CampaignSpec& spec, RunRecord& record) {
    const GridGeom geom =
        GridGeom{spec.sample.width, spec.sample.height,
                 Rect{0.0, 0.0, spec.sample.extent.x, spec.sample.extent.y}};
    const int total = geom.size();
    bool saved_fields = false;
    for (double frac : spec.bench_budgets) {
        const int budget =
            std::clamp(static_cast<int>(std::lround(frac * total)), 4, kGpTrainingCap);
        for (ArmKind arm : {ArmKind::grid, ArmKind::random_arm, ArmKind::bo}) {
            auto res = run_sampling_arm(arm, spec, spec.seed, budget);
            record.recon_rows.push_back(res.row);
            if (!saved_fields && frac == spec.bench_budgets.back()) {
                record.fields.emplace_back(std::string("recon_") + arm_name(arm), res.recon);
            }
        }
    }
    // ground truth for reference
    Sample sample = gen_domain_phantom(spec.sample, spec.seed);
    scope::Session session(sample, spec.scope_config());
    if (spec.kind == Kind::bo_spectro) {
        SpectroMeasurer m(spec.spectro);
        record.fields.emplace_back("truth", m.truth(session));
    } else {
        ImageMeasurer m;
        record.fields.emplace_back("truth", m.truth(session));
    }
}

void run_rl_campaign(const CampaignSpec& spec, RunRecord& record) {
    if (spec.kind == Kind::rl_tip) {
        auto env = agent::tip_env();
        agent::DoubleQConfig cfg = spec.rl.dq;
        cfg.seed = spec.seed;
        if (spec.rl.algo == "reinforce") {
            agent::ReinforceConfig pg = spec.rl.pg;
            pg.seed = spec.seed;
            auto policy = agent::SoftmaxPolicy::tabular(env.n_states(), env.n_actions());
            auto res = agent::train_reinforce(env, std::move(policy), pg);
            record.pg_curve = std::move(res.curve);
            nlohmann::ordered_json dump;
            dump["algo"] = "reinforce";
            dump["theta"] = res.policy.theta;
            record.model_dump = dump;
        } else {
            auto res = agent::train_double_q(env, cfg);
            record.q_curve = std::move(res.curve);
            const double greedy_ret = agent::evaluate_greedy(env, res.q, cfg.gamma,
                                                             spec.rl.eval_episodes, spec.seed);
            // exact random baseline by policy evaluation
            std::vector<double> uniform(
                static_cast<std::size_t>(env.n_states()) * env.n_actions(),
                1.0 / env.n_actions());
            const auto v_rand = agent::policy_evaluation(env, uniform, cfg.gamma, 1e-10);
            nlohmann::ordered_json dump;
            dump["algo"] = "double_q";
            dump["gamma"] = cfg.gamma;
            dump["q_a"] = res.q.q_a;
            dump["q_b"] = res.q.q_b;
            dump["greedy_mean_return"] = greedy_ret;
            dump["random_policy_value_at_start"] = v_rand[env.start_state()];
            record.model_dump = dump;
        }
    } else {  // rl_write
        agent::WriteEnv::Config wcfg = spec.rl.write;
        if (wcfg.goal.empty()) {
            wcfg.goal.assign(static_cast<std::size_t>(wcfg.grid_w) * wcfg.grid_h, 0);
            for (int i = 0; i < wcfg.grid_w; ++i) wcfg.goal[i] = 1;  // top row on
        }
        wcfg.coercive_bias = spec.sample.coercive_bias;
        wcfg.flip_sharpness = spec.sample.flip_sharpness;
        agent::WriteEnv env(wcfg);
        if (spec.rl.algo == "reinforce") {
            agent::ReinforceConfig pg = spec.rl.pg;
            pg.seed = spec.seed;
            auto policy = agent::SoftmaxPolicy::tabular(env.n_states(), env.n_actions());
            auto res = agent::train_reinforce(env, std::move(policy), pg);
            record.pg_curve = std::move(res.curve);
        } else {
            agent::DoubleQConfig cfg = spec.rl.dq;
            cfg.seed = spec.seed;
            auto res = agent::train_double_q(env, cfg);
            record.q_curve = std::move(res.curve);
            nlohmann::ordered_json dump;
            dump["algo"] = "double_q";
            dump["gamma"] = cfg.gamma;
            dump["greedy_mean_return"] = agent::evaluate_greedy(
                env, res.q, cfg.gamma, spec.rl.eval_episodes, spec.seed);
            record.model_dump = dump;
        }
    }
}

void run_ferrobot_campaign(const CampaignSpec& spec, RunRecord& record) {
    Sample sample = gen_domain_phantom(spec.sample, spec.seed);
    scope::Session session(sample, spec.scope_config(), &record.ledger);

    record.fields.emplace_back("polarization_pre", sample.polarization);

    const Rect window{0.0, 0.0, sample.polarization.extent.x, sample.polarization.extent.y};
    const auto path = scope::plan_raster(window, spec.ferro.scan_nx, spec.ferro.scan_ny,
                                         spec.latency.dwell_default);
    auto res = feedback::run_ferrobot(session, spec.ferro.plan, path, spec.seed);

    record.observations = std::move(res.observations);
    record.events = std::move(res.events);
    record.fields.emplace_back("polarization_post", sample.polarization);
}

}  // namespace

RunRecord run_campaign(const CampaignSpec& spec) {
    spec.validate();
    RunRecord record;
    record.kind = kind_name(spec.kind);
    record.seed = spec.seed;
    record.spec_text = spec.spec_text;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        switch (spec.kind) {
            case Kind::bo_explore:
            case Kind::bo_spectro: run_bo_campaign(spec, record); break;
            case Kind::bench_recon: run_bench_campaign(spec, record); break;
            case Kind::rl_tip:
            case Kind::rl_write: run_rl_campaign(spec, record); break;
            case Kind::ferrobot: run_ferrobot_campaign(spec, record); break;
        }
    } catch (const std::exception& e) {
        record.failed = true;
        record.fail_reason = e.what();
    }
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return record;
}

}  // namespace autoscope::campaign
