#include "autoscope/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace autoscope::recon {

const char* method_name(Method m) {
    switch (m) {
        case Method::gp: return "gp";
        case Method::idw: return "idw";
        case Method::nearest: return "nearest";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    for (int i = 0; i < 3; ++i) {
        const auto m = static_cast<Method>(i);
        if (name == method_name(m)) return m;
    }
    throw std::invalid_argument("unknown recon method: " + name);
}

namespace {

ScalarField2D idw_reconstruct(const std::vector<Obs>& obs, const GridGeom& grid,
                              const Params& params) {
    ScalarField2D out(grid.width, grid.height, {grid.rect.width, grid.rect.height});
    for (int j = 0; j < grid.height; ++j)
        for (int i = 0; i < grid.width; ++i) {
            const Vec2 q = grid.center_of({i, j});
            double wsum = 0.0, vsum = 0.0;
            double exact_sum = 0.0;
            int exact_n = 0;
            for (const auto& [p, v] : obs) {
                const double d = q.dist(p);
                if (d == 0.0) {
                    exact_sum += v;
                    ++exact_n;
                    continue;
                }
                const double w = 1.0 / (std::pow(d, params.idw_power) + params.idw_eps0);
                wsum += w;
                vsum += w * v;
            }
            // exact hits dominate: reproduce observed values exactly
            out.at(i, j) = exact_n > 0 ? exact_sum / exact_n : vsum / wsum;
        }
    return out;
}

ScalarField2D nearest_reconstruct(const std::vector<Obs>& obs, const GridGeom& grid) {
    ScalarField2D out(grid.width, grid.height, {grid.rect.width, grid.rect.height});
    for (int j = 0; j < grid.height; ++j)
        for (int i = 0; i < grid.width; ++i) {
            const Vec2 q = grid.center_of({i, j});
            double best_d = std::numeric_limits<double>::infinity();
            double best_v = 0.0;
            Vec2 best_p{};
            for (const auto& [p, v] : obs) {
                const double d = q.dist(p);
                if (d < best_d ||
                    (d == best_d && (p.y < best_p.y || (p.y == best_p.y && p.x < best_p.x)))) {
                    best_d = d;
                    best_v = v;
                    best_p = p;
                }
            }
            out.at(i, j) = best_v;
        }
    return out;
}

}  // namespace

ScalarField2D reconstruct(const std::vector<Obs>& observations, const GridGeom& grid,
                          const Params& params) {
    if (observations.empty()) throw std::invalid_argument("reconstruct: no observations");
    if (grid.width < 1 || grid.height < 1)
        throw std::invalid_argument("reconstruct: empty grid");

    switch (params.method) {
        case Method::idw:
            return idw_reconstruct(observations, grid, params);
        case Method::nearest:
            return nearest_reconstruct(observations, grid);
        case Method::gp: {
            std::vector<Vec2> xs;
            std::vector<double> ys;
            xs.reserve(observations.size());
            ys.reserve(observations.size());
            for (const auto& [p, v] : observations) {
                xs.push_back(p);
                ys.push_back(v);
            }
            const auto model = gp::GpModel::fit(std::move(xs), ys, params.kernel, params.fit);
            return model.posterior(grid).mean;
        }
    }
    throw std::invalid_argument("reconstruct: bad method");
}

Report metrics(const ScalarField2D& recon, const ScalarField2D& truth,
               const std::vector<Obs>& observations, Method method) {
    if (recon.width != truth.width || recon.height != truth.height)
        throw std::invalid_argument("metrics: dimension mismatch");

    Report rep;
    rep.method = method;
    rep.n_obs = static_cast<int>(observations.size());

    double se = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = recon.values[i] - truth.values[i];
        se += d * d;
    }
    rep.rmse = std::sqrt(se / static_cast<double>(truth.size()));

    const double range = truth.max_value() - truth.min_value();
    rep.psnr = (range > 0.0 && rep.rmse > 0.0)
                   ? 20.0 * std::log10(range / rep.rmse)
                   : std::numeric_limits<double>::infinity();

    const GridGeom geom = truth.geom();
    std::set<std::pair<int, int>> distinct;
    for (const auto& [p, v] : observations) {
        const Pixel px = geom.nearest(p);
        distinct.insert({px.y, px.x});
    }
    rep.frac_sampled = static_cast<double>(distinct.size()) / static_cast<double>(truth.size());
    return rep;
}

}  // namespace autoscope::recon
