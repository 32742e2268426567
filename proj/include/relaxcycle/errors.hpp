#ifndef RELAXCYCLE_ERRORS_HPP
#define RELAXCYCLE_ERRORS_HPP

#include <array>
#include <stdexcept>
#include <string>

namespace relaxcycle {

// Thrown when an exponential term would leave the representable range.
// Callers that integrate treat it as the signal to change charts.
class RangeError : public std::runtime_error {
public:
    RangeError(const std::string& what, std::array<double, 3> state, double argument)
        : std::runtime_error(what + " (exp argument " + std::to_string(argument) + ")"),
          state_(state),
          argument_(argument)
    {
    }

    const std::array<double, 3>& state() const { return state_; }
    double argument() const { return argument_; }

private:
    std::array<double, 3> state_;
    double argument_;
};

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
public:
    enum class Kind { StepUnderflow, MaxSteps, NoCrossing, TangentialCrossing, WindowEscape };

    IntegrationError(Kind kind, const std::string& what, double t)
        : std::runtime_error(what), kind_(kind), t_(t)
    {
    }

    Kind kind() const { return kind_; }
    double time() const { return t_; }

private:
    Kind kind_;
    double t_;
};

namespace detail {

// exp with the project overflow policy: arguments past +/-690 (~log 1e300)
// raise RangeError instead of silently producing inf/0-denormals.
inline constexpr double kExpArgLimit = 690.0;

inline double checked_exp(double a, const char* what, std::array<double, 3> s = {0, 0, 0})
{
    if (!(a < kExpArgLimit)) throw RangeError(what, s, a);
    return std::exp(a);
}

} // namespace detail

} // namespace relaxcycle

#endif
