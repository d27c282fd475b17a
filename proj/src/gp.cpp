#include "autoscope/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "autoscope/linalg.hpp"

namespace autoscope::gp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

const char* kernel_family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::rbf: return "rbf";
        case KernelFamily::matern32: return "matern32";
        case KernelFamily::matern52: return "matern52";
    }
    return "?";
}

KernelFamily kernel_family_from_name(const std::string& name) {
    for (int i = 0; i < 3; ++i) {
        const auto f = static_cast<KernelFamily>(i);
        if (name == kernel_family_name(f)) return f;
    }
    throw std::invalid_argument("unknown kernel family: " + name);
}

double kernel_eval(const KernelSpec& spec, const Vec2& a, const Vec2& b) {
    const double r = a.dist(b);
    const double l = spec.lengthscale;
    const double s2 = spec.signal_variance;
    switch (spec.family) {
        case KernelFamily::rbf:
            return s2 * std::exp(-0.5 * (r * r) / (l * l));
        case KernelFamily::matern32: {
            const double u = 1.7320508075688772 * r / l;  // sqrt(3) r / l
            return s2 * (1.0 + u) * std::exp(-u);
        }
        case KernelFamily::matern52: {
            const double u = 2.23606797749979 * r / l;  // sqrt(5) r / l
            return s2 * (1.0 + u + u * u / 3.0) * std::exp(-u);
        }
    }
    return 0.0;
}

// --- construction ------------------------------------------------------

namespace {

struct Standardized {
    std::vector<double> ys;
    double mean;
    double std;
};

Standardized standardize(const std::vector<double>& ys) {
    Standardized out;
    const double n = static_cast<double>(ys.size());
    double mean = 0.0;
    for (double y : ys) {
        if (!std::isfinite(y)) throw std::invalid_argument("gp: non-finite target value");
        mean += y;
    }
    mean /= n;
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    var /= n;
    out.mean = mean;
    out.std = var > 1e-24 ? std::sqrt(var) : 1.0;
    out.ys.resize(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) out.ys[i] = (ys[i] - mean) / out.std;
    return out;
}

void check_inputs(const std::vector<Vec2>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("gp: xs/ys size mismatch");
    if (xs.size() < 2) throw std::invalid_argument("gp: need at least 2 observations");
    for (const auto& x : xs)
        if (!std::isfinite(x.x) || !std::isfinite(x.y))
            throw std::invalid_argument("gp: non-finite position");
    bool distinct = false;
    for (std::size_t i = 1; i < xs.size() && !distinct; ++i)
        if (!(xs[i] == xs[0])) distinct = true;
    if (!distinct) throw std::invalid_argument("gp: need at least 2 distinct positions");
}

}  // namespace

GpModel GpModel::make(const KernelSpec& kernel, double noise_variance, std::vector<Vec2> xs,
                      const std::vector<double>& ys) {
    check_inputs(xs, ys);
    if (!(kernel.lengthscale > 0.0) || !(kernel.signal_variance > 0.0))
        throw std::invalid_argument("gp: kernel hyperparameters must be > 0");
    if (noise_variance < 0.0) throw std::invalid_argument("gp: noise_variance must be >= 0");

    GpModel m;
    m.kernel_ = kernel;
    m.noise_variance_ = noise_variance;
    m.xs_ = std::move(xs);
    auto std_ys = standardize(ys);
    m.ys_std_ = std::move(std_ys.ys);
    m.y_mean_ = std_ys.mean;
    m.y_std_ = std_ys.std;
    m.factorize();
    return m;
}

void GpModel::factorize() {
    const std::size_t n = xs_.size();
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = kernel_eval(kernel_, xs_[i], xs_[j]);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    // jitter schedule: 1e-10 * trace/n, x10 on failure, cap 1e-4 * trace/n
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += gram[i * n + i];
    const double base = trace / static_cast<double>(n);
    double jitter = 1e-10 * base;
    const double jitter_max = 1e-4 * base;
    while (true) {
        chol_ = gram;
        for (std::size_t i = 0; i < n; ++i) chol_[i * n + i] += noise_variance_ + jitter;
        if (linalg::cholesky(chol_, n)) break;
        jitter *= 10.0;
        if (jitter > jitter_max)
            throw std::runtime_error("gp: Gram matrix not factorizable (jitter exhausted)");
    }
    jitter_ = jitter;
    alpha_ = ys_std_;
    linalg::solve_lower(chol_, n, alpha_);
    linalg::solve_lower_transposed(chol_, n, alpha_);
}

GpModel::Prediction GpModel::predict(const Vec2& x) const {
    const std::size_t n = xs_.size();
    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) kstar[i] = kernel_eval(kernel_, x, xs_[i]);
    const double mean_std = linalg::dot(kstar, alpha_, n);
    std::vector<double> v = kstar;
    linalg::solve_lower(chol_, n, v);
    double var = kernel_.signal_variance - linalg::dot(v, v, n);
    if (var < 0.0) var = 0.0;
    return {y_mean_ + y_std_ * mean_std, y_std_ * std::sqrt(var)};
}

Posterior GpModel::posterior(const GridGeom& grid) const {
    if (grid.width < 1 || grid.height < 1)
        throw std::invalid_argument("gp: empty query grid");
    const std::size_t n = xs_.size();
    Posterior post;
    const Vec2 ext{grid.rect.width, grid.rect.height};
    post.mean = ScalarField2D(grid.width, grid.height, ext);
    post.std = ScalarField2D(grid.width, grid.height, ext);

    std::vector<double> kstar(n), v(n);
    for (int j = 0; j < grid.height; ++j) {
        for (int i = 0; i < grid.width; ++i) {
            const Vec2 q = grid.center_of({i, j});
            for (std::size_t t = 0; t < n; ++t) kstar[t] = kernel_eval(kernel_, q, xs_[t]);
            const double mean_std = linalg::dot(kstar, alpha_, n);
            v = kstar;
            linalg::solve_lower(chol_, n, v);
            double var = kernel_.signal_variance - linalg::dot(v, v, n);
            if (var < 0.0) var = 0.0;
            post.mean.at(i, j) = y_mean_ + y_std_ * mean_std;
            post.std.at(i, j) = y_std_ * std::sqrt(var);
        }
    }
    return post;
}

double GpModel::log_marginal_likelihood() const {
    const std::size_t n = xs_.size();
    double fit_term = 0.0;
    for (std::size_t i = 0; i < n; ++i) fit_term += ys_std_[i] * alpha_[i];
    double logdet_half = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet_half += std::log(chol_[i * n + i]);
    return -0.5 * fit_term - logdet_half - 0.5 * static_cast<double>(n) * kLog2Pi;
}

std::array<double, 3> GpModel::log_params() const {
    return {std::log(kernel_.lengthscale), std::log(kernel_.signal_variance),
            std::log(std::max(noise_variance_, 1e-300))};
}

double log_marginal_likelihood(const KernelSpec& kernel, double noise_variance,
                               const std::vector<Vec2>& xs, const std::vector<double>& ys) {
    return GpModel::make(kernel, noise_variance, xs, ys).log_marginal_likelihood();
}

// --- fitting -----------------------------------------------------------

namespace {

struct SearchBounds {
    double log_l_min, log_l_max;
    double log_s2_min, log_s2_max;
    double log_n2_min, log_n2_max;

    std::array<double, 3> clamp(std::array<double, 3> p) const {
        p[0] = std::clamp(p[0], log_l_min, log_l_max);
        p[1] = std::clamp(p[1], log_s2_min, log_s2_max);
        p[2] = std::clamp(p[2], log_n2_min, log_n2_max);
        return p;
    }
};

SearchBounds derive_bounds(const std::vector<Vec2>& xs, const FitConfig& cfg) {
    double lmin = cfg.lengthscale_min;
    double lmax = cfg.lengthscale_max;
    if (!(lmin > 0.0) || !(lmax > 0.0)) {
        // data-derived fallback: min pairwise distance .. bbox diagonal
        double xlo = xs[0].x, xhi = xs[0].x, ylo = xs[0].y, yhi = xs[0].y;
        for (const auto& p : xs) {
            xlo = std::min(xlo, p.x); xhi = std::max(xhi, p.x);
            ylo = std::min(ylo, p.y); yhi = std::max(yhi, p.y);
        }
        const double diag = std::hypot(xhi - xlo, yhi - ylo);
        double dmin = diag;
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = i + 1; j < xs.size(); ++j) {
                const double d = xs[i].dist(xs[j]);
                if (d > 0.0) dmin = std::min(dmin, d);
            }
        if (!(lmin > 0.0)) lmin = std::max(dmin, 1e-6 * diag);
        if (!(lmax > 0.0)) lmax = std::max(diag, lmin * 2.0);
    }
    if (lmax < lmin) lmax = lmin;
    SearchBounds b;
    b.log_l_min = std::log(lmin);
    b.log_l_max = std::log(lmax);
    // standardized targets have unit variance
    b.log_s2_min = std::log(1e-3);
    b.log_s2_max = std::log(1e3);
    b.log_n2_min = std::log(1e-6);
    b.log_n2_max = std::log(1.0);
    return b;
}

}  // namespace

GpModel GpModel::fit(std::vector<Vec2> xs, const std::vector<double>& ys, KernelFamily family,
                     const FitConfig& config) {
    check_inputs(xs, ys);
    const SearchBounds bounds = derive_bounds(xs, config);

    auto std_ys = standardize(ys);

    auto objective = [&](const std::array<double, 3>& logp) -> double {
        const KernelSpec k{family, std::exp(logp[0]), std::exp(logp[1])};
        GpModel m;
        m.kernel_ = k;
        m.noise_variance_ = std::exp(logp[2]);
        m.xs_ = xs;
        m.ys_std_ = std_ys.ys;
        m.y_mean_ = std_ys.mean;
        m.y_std_ = std_ys.std;
        try {
            m.factorize();
        } catch (const std::runtime_error&) {
            return -std::numeric_limits<double>::infinity();
        }
        return m.log_marginal_likelihood();
    };

    std::array<double, 3> best{};
    double best_val = -std::numeric_limits<double>::infinity();

    if (config.warm_start) {
        best = bounds.clamp(*config.warm_start);
        best_val = objective(best);
    }
    if (config.use_grid || !config.warm_start) {
        const int g = std::max(config.grid_points, 2);
        auto axis = [&](double lo, double hi, int i) {
            return lo + (hi - lo) * static_cast<double>(i) / (g - 1);
        };
        for (int il = 0; il < g; ++il)
            for (int is = 0; is < g; ++is)
                for (int in = 0; in < g; ++in) {
                    const std::array<double, 3> p = {
                        axis(bounds.log_l_min, bounds.log_l_max, il),
                        axis(bounds.log_s2_min, bounds.log_s2_max, is),
                        axis(bounds.log_n2_min, bounds.log_n2_max, in)};
                    const double v = objective(p);
                    if (v > best_val) {
                        best_val = v;
                        best = p;
                    }
                }
    }
    if (!std::isfinite(best_val))
        throw std::runtime_error("gp fit: no factorizable hyperparameters found");

    // Nelder-Mead refinement (standard coefficients), clamped to bounds.
    const int max_evals = std::max(config.nelder_mead_evals, 0);
    if (max_evals > 0) {
        struct Vertex {
            std::array<double, 3> p;
            double v;
        };
        std::vector<Vertex> simplex;
        int evals = 0;
        auto eval = [&](std::array<double, 3> p) {
            p = bounds.clamp(p);
            ++evals;
            return Vertex{p, objective(p)};
        };
        simplex.push_back({best, best_val});
        for (int d = 0; d < 3; ++d) {
            auto p = best;
            p[d] += 0.25;
            simplex.push_back(eval(p));
        }
        auto order = [&] {
            std::stable_sort(simplex.begin(), simplex.end(),
                             [](const Vertex& a, const Vertex& b) { return a.v > b.v; });
        };
        order();
        while (evals < max_evals) {
            std::array<double, 3> centroid{};
            for (int i = 0; i < 3; ++i)
                for (int d = 0; d < 3; ++d) centroid[d] += simplex[i].p[d] / 3.0;
            const Vertex& worst = simplex[3];
            auto mix = [&](double t) {
                std::array<double, 3> p;
                for (int d = 0; d < 3; ++d) p[d] = centroid[d] + t * (centroid[d] - worst.p[d]);
                return p;
            };
            Vertex refl = eval(mix(1.0));
            if (refl.v > simplex[0].v) {
                Vertex expa = eval(mix(2.0));
                simplex[3] = expa.v > refl.v ? expa : refl;
            } else if (refl.v > simplex[2].v) {
                simplex[3] = refl;
            } else {
                Vertex contr = eval(mix(-0.5));
                if (contr.v > worst.v) {
                    simplex[3] = contr;
                } else {
                    for (int i = 1; i < 4; ++i) {
                        for (int d = 0; d < 3; ++d)
                            simplex[i].p[d] = 0.5 * (simplex[i].p[d] + simplex[0].p[d]);
                        simplex[i] = eval(simplex[i].p);
                        if (evals >= max_evals) break;
                    }
                }
            }
            order();
            const double spread = std::abs(simplex[0].v - simplex[3].v);
            if (spread < 1e-10 * (1.0 + std::abs(simplex[0].v))) break;
        }
        if (simplex[0].v > best_val) {
            best = simplex[0].p;
            best_val = simplex[0].v;
        }
    }

    const KernelSpec kernel{family, std::exp(best[0]), std::exp(best[1])};
    GpModel m;
    m.kernel_ = kernel;
    m.noise_variance_ = std::exp(best[2]);
    m.xs_ = std::move(xs);
    m.ys_std_ = std::move(std_ys.ys);
    m.y_mean_ = std_ys.mean;
    m.y_std_ = std_ys.std;
    m.factorize();
    return m;
}

nlohmann::ordered_json GpModel::dump() const {
    nlohmann::ordered_json j;
    j["kernel"] = kernel_family_name(kernel_.family);
    j["lengthscale"] = kernel_.lengthscale;
    j["signal_variance"] = kernel_.signal_variance;
    j["noise_variance"] = noise_variance_;
    j["y_mean"] = y_mean_;
    j["y_std"] = y_std_;
    j["jitter"] = jitter_;
    auto& tx = j["train_x"] = nlohmann::ordered_json::array();
    for (const auto& p : xs_) tx.push_back({p.x, p.y});
    auto& ty = j["train_y_standardized"] = nlohmann::ordered_json::array();
    for (double y : ys_std_) ty.push_back(y);
    return j;
}

}  // namespace autoscope::gp
