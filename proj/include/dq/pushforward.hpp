#pragma once

#include "dq/formal.hpp"
#include "dq/functional.hpp"
#include "dq/kleingordon.hpp"

namespace dq {

// Star-product transported along a linearization map Omega (formal mode) or
// verified pointwise along a numeric wave operator (numeric mode).
struct PushedStarProduct {
    enum class Mode { formal, numeric };
    Mode mode = Mode::formal;
    GridPtr grid;
    FormalSeries omega;
    FormalSeries omega_inverse;
    double roundtrip_residual = 0.0;

    static PushedStarProduct formal(GridPtr grid, const FormalSeries& omega);
};

// F compose Omega as a PolyFunctional, truncated at max_degree.
PolyFunctional pullback(const PolyFunctional& F, const FormalSeries& omega,
                        int max_degree);

// (F star_pm G) with (F star_pm G) compose Omega = (F o Omega) *_N (G o Omega).
FormalSeriesInHbar star_pm(const PolyFunctional& F, const PolyFunctional& G,
                           const PushedStarProduct& product, int hbar_order,
                           int max_degree);

FormalSeriesInHbar star_power(const PolyFunctional& F, int k,
                              const PushedStarProduct* pm, int hbar_order,
                              int max_degree);

struct HamIdentityReport {
    int k = 1;
    int represented_degree = 0;
    // residual per hbar order, split at the representable degree boundary
    std::vector<double> represented_residual;
    std::vector<double> boundary_residual;
    // numeric spot check: per horizon, max over samples of
    // |H(v)^k - H0(U1_{-T} U_T v)^k|
    std::vector<double> numeric_horizons;
    std::vector<double> numeric_residual;
};

// Eq. (ham): (star_pm H)^k = (star_N H0)^k compose Omega^{-1}.
HamIdentityReport check_ham_identity(const PolyFunctional& H,
                                     const PolyFunctional& H0,
                                     const PushedStarProduct& product, int k,
                                     int hbar_order, int max_degree,
                                     int represented_degree);

void check_ham_identity_numeric(HamIdentityReport& rpt, const Potential& V,
                                int k, const std::vector<double>& horizons,
                                double dt,
                                const std::vector<ModeVector>& samples);

} // namespace dq
