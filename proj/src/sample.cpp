#include "autoscope/sample.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "autoscope/io.hpp"
#include "autoscope/rng.hpp"

namespace autoscope {

namespace {

constexpr double kPi = 3.14159265358979323846;

void gaussian_blur_inplace(ScalarField2D& f, double sigma_px) {
    if (sigma_px <= 0.0) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_px)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma_px * sigma_px));
        ksum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= ksum;

    ScalarField2D tmp = f;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xi = std::clamp(x + i, 0, f.width - 1);
                acc += kernel[i + radius] * f.at(xi, y);
            }
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yi = std::clamp(y + i, 0, f.height - 1);
                acc += kernel[i + radius] * tmp.at(x, yi);
            }
            f.at(x, y) = acc;
        }
}

ScalarField2D smooth_noise(int w, int h, Vec2 extent, double sigma_px, Rng rng) {
    ScalarField2D f(w, h, extent);
    for (auto& v : f.values) v = rng.next_gaussian();
    gaussian_blur_inplace(f, sigma_px);
    // rescale to unit-ish spread so downstream scaling knobs stay meaningful
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= static_cast<double>(f.size());
    double var = 0.0;
    for (double v : f.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(f.size());
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (auto& v : f.values) v = (v - mean) * scale;
    return f;
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

}  // namespace

void Sample::check_valid() const {
    polarization.check_valid();
    for (double v : polarization.values)
        if (v != 1.0 && v != -1.0)
            throw std::invalid_argument("Sample: polarization values must be exactly ±1");
    const ScalarField2D* planes[] = {&loops.amplitude, &loops.v_plus, &loops.v_minus,
                                     &loops.width, &loops.offset};
    for (const ScalarField2D* p : planes)
        if (p->width != polarization.width || p->height != polarization.height)
            throw std::invalid_argument("Sample: loop-param grid must match polarization grid");
}

Sample gen_domain_phantom(int width, int height, Vec2 extent, PhantomStyle style,
                          std::uint64_t seed) {
    PhantomConfig cfg;
    cfg.width = width;
    cfg.height = height;
    cfg.extent = extent;
    cfg.style = style;
    return gen_domain_phantom(cfg, seed);
}

Sample gen_domain_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
    if (cfg.width < 8 || cfg.height < 8)
        throw std::invalid_argument("gen_domain_phantom: width and height must be >= 8");
    if (cfg.stripe_period_px < 1)
        throw std::invalid_argument("gen_domain_phantom: stripe_period_px must be >= 1");

    const int w = cfg.width, h = cfg.height;
    Sample s;
    s.coercive_bias = cfg.coercive_bias;
    s.flip_sharpness = cfg.flip_sharpness;
    s.polarization = ScalarField2D(w, h, cfg.extent);

    auto stripe_sign = [&](int x) {
        // sign of a sinusoid whose half-period is one band
        return std::sin(kPi * (x + 0.5) / cfg.stripe_period_px) > 0.0 ? 1.0 : -1.0;
    };

    ScalarField2D bubble;
    if (cfg.style != PhantomStyle::stripes) {
        bubble = smooth_noise(w, h, cfg.extent, cfg.bubble_sigma_px, Rng::child(seed, 0));
    }
    const double bubble_thr =
        cfg.style != PhantomStyle::stripes ? median_of(bubble.values) : 0.0;

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v;
            switch (cfg.style) {
                case PhantomStyle::stripes: v = stripe_sign(x); break;
                case PhantomStyle::bubbles: v = bubble.at(x, y) > bubble_thr ? 1.0 : -1.0; break;
                case PhantomStyle::mixed:
                    v = x < w / 2 ? stripe_sign(x) : (bubble.at(x, y) > bubble_thr ? 1.0 : -1.0);
                    break;
                default: v = 1.0;
            }
            s.polarization.at(x, y) = v;
        }

    // wall proximity: blurred indicator of having an opposite-signed 4-neighbor
    ScalarField2D wall(w, h, cfg.extent, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double p = s.polarization.at(x, y);
            const bool on_wall = (x > 0 && s.polarization.at(x - 1, y) != p) ||
                                 (x + 1 < w && s.polarization.at(x + 1, y) != p) ||
                                 (y > 0 && s.polarization.at(x, y - 1) != p) ||
                                 (y + 1 < h && s.polarization.at(x, y + 1) != p);
            wall.at(x, y) = on_wall ? 1.0 : 0.0;
        }
    gaussian_blur_inplace(wall, 1.0);
    const double wall_max = std::max(wall.max_value(), 1e-12);
    for (auto& v : wall.values) v /= wall_max;

    auto plane = [&](std::uint64_t stream, double base, double rel_spread, double sigma_px) {
        ScalarField2D noise = smooth_noise(w, h, cfg.extent, sigma_px, Rng::child(seed, stream));
        ScalarField2D out(w, h, cfg.extent);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] = base * (1.0 + rel_spread * noise.values[i]);
        return out;
    };

    s.loops.amplitude = plane(1, cfg.loop_amplitude, 0.10, 6.0);
    for (std::size_t i = 0; i < s.loops.amplitude.size(); ++i) {
        double a = s.loops.amplitude.values[i] * (1.0 - cfg.wall_dip * wall.values[i]);
        s.loops.amplitude.values[i] = std::max(a, 0.0);
    }
    s.loops.v_plus = plane(2, cfg.loop_vc, 0.08, 6.0);
    s.loops.v_minus = plane(3, -cfg.loop_vc, 0.08, 6.0);
    s.loops.width = plane(4, cfg.loop_width, 0.10, 6.0);
    s.loops.offset = plane(5, 0.0, 0.0, 6.0);
    for (std::size_t i = 0; i < s.loops.width.size(); ++i)
        s.loops.width.values[i] = std::max(s.loops.width.values[i], 0.05 * cfg.loop_width);
    // keep v_minus <= v_plus everywhere
    for (std::size_t i = 0; i < s.loops.v_plus.size(); ++i) {
        double& vp = s.loops.v_plus.values[i];
        double& vm = s.loops.v_minus.values[i];
        if (vm > vp) std::swap(vm, vp);
    }

    s.check_valid();
    return s;
}

double loop_response(const SiteLoopParams& params, double bias, Branch branch) {
    const double vc = branch == Branch::ascending ? params.v_plus : params.v_minus;
    return params.offset + params.amplitude * std::tanh((bias - vc) / params.width);
}

double loop_area(const SiteLoopParams& params, double v_max, int n_steps) {
    if (!(v_max > 0.0)) throw std::invalid_argument("loop_area: v_max must be > 0");
    if (n_steps < 4) throw std::invalid_argument("loop_area: n_steps must be >= 4");
    // signed enclosed area; the descending branch lies above the ascending
    // one whenever v_minus <= v_plus, so this is nonnegative there
    const double h = 2.0 * v_max / n_steps;
    double acc = 0.0;
    for (int i = 0; i <= n_steps; ++i) {
        const double v = -v_max + h * i;
        const double gap = loop_response(params, v, Branch::descending) -
                           loop_response(params, v, Branch::ascending);
        acc += (i == 0 || i == n_steps) ? 0.5 * gap : gap;
    }
    return acc * h;
}

double flip_probability(double bias, double dose, double coercive_bias, double flip_sharpness) {
    const double drive = std::abs(bias) * dose - coercive_bias;
    return 1.0 / (1.0 + std::exp(-flip_sharpness * drive));
}

PulseResult apply_pulse(Sample& sample, Pixel pos, double bias, double dose, double radius_px,
                        std::uint64_t rng_seed) {
    const auto& pol = sample.polarization;
    if (pos.x < 0 || pos.y < 0 || pos.x >= pol.width || pos.y >= pol.height)
        throw std::invalid_argument("apply_pulse: pos outside grid");
    if (dose < 0.0) throw std::invalid_argument("apply_pulse: dose must be >= 0");

    PulseResult result;
    if (dose == 0.0 || bias == 0.0) return result;  // explicit no-op

    const double target = bias > 0.0 ? 1.0 : -1.0;
    const double p = flip_probability(bias, dose, sample.coercive_bias, sample.flip_sharpness);
    Rng rng(rng_seed);

    const int r = static_cast<int>(std::floor(radius_px));
    for (int y = std::max(0, pos.y - r); y <= std::min(pol.height - 1, pos.y + r); ++y)
        for (int x = std::max(0, pos.x - r); x <= std::min(pol.width - 1, pos.x + r); ++x) {
            const double ddx = x - pos.x, ddy = y - pos.y;
            if (ddx * ddx + ddy * ddy > radius_px * radius_px) continue;
            if (sample.polarization.at(x, y) == target) continue;  // already aligned
            if (rng.next_double() < p) {
                sample.polarization.at(x, y) = target;
                result.flipped.push_back({x, y});
            }
        }
    return result;
}

void save_sample(const Sample& sample, const std::string& prefix) {
    sample.check_valid();
    nlohmann::ordered_json hdr;
    hdr["width"] = sample.polarization.width;
    hdr["height"] = sample.polarization.height;
    hdr["extent_nm"] = {sample.polarization.extent.x, sample.polarization.extent.y};
    hdr["coercive_bias"] = sample.coercive_bias;
    hdr["flip_sharpness"] = sample.flip_sharpness;
    hdr["planes"] = {"polarization", "amplitude", "v_plus", "v_minus", "width", "offset"};
    hdr["dtype"] = "float32le";
    io::write_text(prefix + ".json", hdr.dump(2) + "\n");

    std::vector<std::uint8_t> raw;
    io::append_plane_f32(raw, sample.polarization.values);
    io::append_plane_f32(raw, sample.loops.amplitude.values);
    io::append_plane_f32(raw, sample.loops.v_plus.values);
    io::append_plane_f32(raw, sample.loops.v_minus.values);
    io::append_plane_f32(raw, sample.loops.width.values);
    io::append_plane_f32(raw, sample.loops.offset.values);
    io::write_bytes(prefix + ".raw", raw);

    io::write_pgm(sample.polarization, prefix + ".pgm");
}

Sample load_sample(const std::string& prefix) {
    const auto hdr = nlohmann::json::parse(io::read_text(prefix + ".json"));
    const int w = hdr.at("width").get<int>();
    const int h = hdr.at("height").get<int>();
    const Vec2 extent{hdr.at("extent_nm")[0].get<double>(), hdr.at("extent_nm")[1].get<double>()};
    const auto raw = io::read_bytes(prefix + ".raw");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (raw.size() != n * 4 * 6)
        throw std::runtime_error("sample raw size mismatch: " + prefix + ".raw");

    Sample s;
    auto make_plane = [&](std::size_t idx) {
        ScalarField2D f(w, h, extent);
        f.values = io::read_plane_f32(raw, idx, n);
        return f;
    };
    s.polarization = make_plane(0);
    s.loops.amplitude = make_plane(1);
    s.loops.v_plus = make_plane(2);
    s.loops.v_minus = make_plane(3);
    s.loops.width = make_plane(4);
    s.loops.offset = make_plane(5);
    s.coercive_bias = hdr.at("coercive_bias").get<double>();
    s.flip_sharpness = hdr.at("flip_sharpness").get<double>();
    s.check_valid();
    return s;
}

}  // namespace autoscope
