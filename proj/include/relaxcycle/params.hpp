#ifndef RELAXCYCLE_PARAMS_HPP
#define RELAXCYCLE_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace relaxcycle {

// Model parameters of the spring-block system: rate-and-state parameter
// alpha, spring stiffness xi, timescale separation eps.
struct Params {
    double alpha = 0.8;
    double xi = 0.5;
    double eps = 1e-2;

    Params() = default;
    Params(double alpha_, double xi_, double eps_ = 0.0) : alpha(alpha_), xi(xi_), eps(eps_)
    {
        validate();
    }

    void validate() const
    {
        if (!(alpha > 0.0)) throw std::invalid_argument("Params: alpha must be > 0");
        if (!(xi > 0.0)) throw std::invalid_argument("Params: xi must be > 0");
        if (!(eps >= 0.0)) throw std::invalid_argument("Params: eps must be >= 0");
    }

    // alpha > xi: the regime with relaxation oscillations.
    bool is_oscillatory() const { return alpha > xi; }

    // alpha == xi up to a relative tolerance; the reduced flow is Hamiltonian.
    bool is_hamiltonian() const
    {
        return std::abs(alpha - xi) <= 1e-12 * std::max(alpha, xi);
    }

    // alpha > 1: min z on the cycle detaches from the log-branch.
    bool is_supercritical_amplitude() const { return alpha > 1.0; }
};

} // namespace relaxcycle

#endif
