#include "dls/heat.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dls {

namespace {

// FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void HeatParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("heat: gamma must be > 0");
}

Profile heat_solve(const Profile& rho0, double t, const HeatParams& params) {
    params.validate();
    if (t < 0.0) throw std::invalid_argument("heat: t must be >= 0");
    const std::size_t m = rho0.grid_size();
    if (m == 0) throw std::invalid_argument("heat: empty initial profile");
    if (params.grid_size != 0 && params.grid_size != m)
        throw std::invalid_argument("heat: grid size " + std::to_string(params.grid_size) +
                                    " differs from the profile's " + std::to_string(m));
    if (t == 0.0) return rho0;

    const int n = static_cast<int>(m);
    const std::size_t nc = m / 2 + 1;
    std::vector<double> real(rho0.values);
    std::vector<std::complex<double>> modes(nc);
    auto* spec = reinterpret_cast<fftw_complex*>(modes.data());
    fftw_plan fwd, bwd;
    {
        const std::lock_guard lock(plan_mutex());
        fwd = fftw_plan_dft_r2c_1d(n, real.data(), spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(n, spec, real.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    const double md = static_cast<double>(m);
    for (std::size_t k = 0; k < nc; ++k) {
        const double s = std::sin(std::numbers::pi * static_cast<double>(k) / md);
        modes[k] *= std::exp(-(1.0 / params.gamma) * 4.0 * md * md * s * s * t) / md;
    }
    fftw_execute(bwd);
    {
        const std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    return Profile(std::move(real));
}

double profile_distance(const Profile& a, const Profile& b, Norm norm) {
    if (a.grid_size() != b.grid_size())
        throw std::invalid_argument("profile_distance: grid sizes " + std::to_string(a.grid_size()) +
                                    " and " + std::to_string(b.grid_size()) + " differ");
    if (a.grid_size() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.grid_size(); ++i) {
        const double d = std::abs(a.values[i] - b.values[i]);
        acc = norm == Norm::sup ? std::max(acc, d) : acc + d * d;
    }
    return norm == Norm::sup ? acc : std::sqrt(acc / static_cast<double>(a.grid_size()));
}

}  // namespace dls
