#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace dq {

using cplx = std::complex<double>;

inline constexpr cplx I{0.0, 1.0};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlowUpError : std::runtime_error {
    double time;
    explicit BlowUpError(double t)
        : std::runtime_error("blow-up suspected at t=" + std::to_string(t)), time(t) {}
};

struct OverflowDiagnostic : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResonanceError : std::runtime_error {
    int degree;
    int out;
    double denom_abs;
    ResonanceError(int deg, int o, double den, const std::string& what)
        : std::runtime_error(what), degree(deg), out(o), denom_abs(den) {}
};

} // namespace dq
