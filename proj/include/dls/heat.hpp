#pragma once

// Reference solution of d rho/dt = (1/gamma) rho'' on the unit torus by exact
// damping of the discrete Fourier modes of the grid.

#include "dls/chain.hpp"

namespace dls {

struct HeatParams {
    double gamma = 1.0;
    std::size_t grid_size = 0;   // 0: use the grid of rho0
    double dt_pde = 0.0;         // unused: the modal solution is exact in time

    void validate() const;
};

/// Each mode k is multiplied by exp(-(1/gamma) 4 M^2 sin^2(pi k / M) t).
Profile heat_solve(const Profile& rho0, double t, const HeatParams& params);

enum class Norm { L2, sup };

/// L2 = sqrt(mean (a-b)^2), sup = max |a-b|; throws on a grid mismatch.
double profile_distance(const Profile& a, const Profile& b, Norm norm);

}  // namespace dls
