#pragma once

#include <string>
#include <utility>
#include <vector>

#include "autoscope/field.hpp"
#include "autoscope/gp.hpp"

namespace autoscope::recon {

enum class Method { gp, idw, nearest };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct Params {
    Method method = Method::gp;
    // gp
    gp::KernelFamily kernel = gp::KernelFamily::matern52;
    gp::FitConfig fit;
    // idw (Shepard): w = 1 / (d^power + eps0)
    double idw_power = 2.0;
    double idw_eps0 = 1e-9;  // nm^power
};

using Obs = std::pair<Vec2, double>;

/// Full-frame reconstruction from scattered observations.
ScalarField2D reconstruct(const std::vector<Obs>& observations, const GridGeom& grid,
                          const Params& params);

struct Report {
    Method method = Method::gp;
    double rmse = 0.0;
    double psnr = 0.0;  // dB; +inf sentinel when truth range or rmse is 0
    double frac_sampled = 0.0;
    int n_obs = 0;
};

Report metrics(const ScalarField2D& recon, const ScalarField2D& truth,
               const std::vector<Obs>& observations, Method method);

}  // namespace autoscope::recon
