#pragma once

#include "dq/functional.hpp"
#include "dq/grid.hpp"
#include "dq/rep.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dq {

// Polynomial self-interaction V(s) = sum_{j>=3} c_j s^j / j, so that
// V'(s) = sum c_j s^{j-1}; the structural constraint V(0)=V'(0)=V''(0)=0
// is enforced by admitting only degrees >= 3.
struct Potential {
    std::vector<std::pair<int, double>> coeffs; // (j, c_j), j >= 3, sorted

    Potential() = default;
    explicit Potential(std::vector<std::pair<int, double>> cs);

    static Potential phi4(double g) { return Potential({{4, g}}); }
    static Potential phi3(double g) { return Potential({{3, g}}); }

    bool empty() const { return coeffs.empty(); }
    int degree() const; // K, 0 when empty

    template <typename T> T v(T s) const {
        T r{};
        for (auto [j, c] : coeffs) {
            T p = s;
            for (int l = 1; l < j; ++l) p *= s;
            r += (c / j) * p;
        }
        return r;
    }
    template <typename T> T vprime(T s) const {
        T r{};
        for (auto [j, c] : coeffs) {
            T p = s;
            for (int l = 2; l < j; ++l) p *= s;
            r += c * p;
        }
        return r;
    }

    struct Certificate {
        bool ok = false;
        std::string detail;
    };
    // Leading coefficient / parity check plus a sampled lower bound of
    // V(s) + m^2 s^2 / 2 (the Hamiltonian density must stay positive).
    Certificate positivity_certificate(double mass, double s_range = 10.0,
                                       int samples = 2001) const;
};

// The ten (for d=3; fewer for d<3) Poincare generators over one grid, as
// formal-series vector fields and as Hamiltonian-form functionals.
struct GeneratorSet {
    GridPtr grid;
    Potential potential; // empty for the free set
    std::vector<std::string> labels;
    std::vector<FormalSeries> series;
    std::vector<PolyFunctional> functionals;

    int index_of(const std::string& label) const;
    const PolyFunctional& hamiltonian() const {
        return functionals[index_of("P0")];
    }
    NonlinearRep rep() const;
};

std::vector<std::string> poincare_labels(int d);
// [X, Y] as a combination of basis generators, X/Y given by label.
std::vector<std::pair<std::string, double>>
poincare_bracket(const std::string& x, const std::string& y);

// degree_cap bounds the series degree; func_max_degree the functional degree.
GeneratorSet build_free_rep(GridPtr grid, int degree_cap = 3,
                            int func_max_degree = Mono::cap);
GeneratorSet build_interaction(GridPtr grid, const Potential& V,
                               int degree_cap = 3,
                               int func_max_degree = Mono::cap);

// Exact free flow: abar_i -> e^{+i omega_i t} abar_i, a_i -> e^{-i omega_i t} a_i.
ModeVector free_flow(const ModeVector& v, double t);
void free_flow_c(CCauchyData& state, double t);

struct EvolveOptions {
    double blowup_threshold = 1e6;
    // Called after every step with (t, state).
    std::function<void(double, const CCauchyData&)> observer;
};

CauchyData evolve(const CauchyData& data, const Potential& V, double t_final,
                  double dt, const EvolveOptions& opt = {});
CCauchyData evolve_c(const CCauchyData& data, const Potential& V,
                     double t_final, double dt, const EvolveOptions& opt = {});

// Numeric generator evaluation on mode vectors (holomorphic in (abar, a)).
cplx eval_h0(const ModeVector& v);
cplx eval_momentum(const ModeVector& v, int axis);             // P_j
cplx eval_rotation_free(const ModeVector& v, int ax_i, int ax_j);
cplx eval_boost_free(const ModeVector& v, int axis);
cplx eval_hamiltonian(const ModeVector& v, const Potential& V); // H0 + int V
cplx eval_boost(const ModeVector& v, int axis, const Potential& V);
cplx eval_generator(const ModeVector& v, const std::string& label,
                    const Potential& V);

// Discrete L2 norm of the Cauchy-data difference.
double state_distance(const ModeVector& u, const ModeVector& v);
double state_norm(const ModeVector& v);

struct WaveOperatorEstimate {
    int direction = -1; // +1 or -1
    double horizon = 0.0;
    int steps = 0;
    ModeVector result;
    std::vector<std::pair<double, double>> convergence_log; // (T, drift)
};

// Omega_- = U_{+T} o U1_{-T}, Omega_+ = U_{-T} o U1_{+T}; the drift entry
// compares against the half-horizon estimate.
WaveOperatorEstimate wave_operator(int direction, const Potential& V,
                                   double horizon_T, double dt,
                                   const ModeVector& v_free);
ModeVector wave_operator_map(int direction, const Potential& V,
                             double horizon_T, double dt, const ModeVector& v);
// Inverse map U1_{-dir*T} o U_{dir*T}.
ModeVector wave_operator_inverse(int direction, const Potential& V,
                                 double horizon_T, double dt,
                                 const ModeVector& v);

// S = (Omega+)^{-1} Omega_- = U1_{-T} o U_{2T} o U1_{-T}.
ModeVector scattering_operator(const Potential& V, double horizon_T, double dt,
                               const ModeVector& v);

struct LinearizationCheck {
    std::vector<std::string> labels;
    std::vector<double> horizons;
    // residual[g][h] = max over samples of |G(Omega_- psi) - G_f(psi)|.
    std::vector<std::vector<double>> residual;
    // relative to |G_f(psi)| scale
    std::vector<std::vector<double>> relative_residual;
};

LinearizationCheck check_linearization(const Potential& V,
                                       const std::vector<double>& horizons,
                                       double dt,
                                       const std::vector<ModeVector>& samples);

// Deterministic smooth small-data sample with max-norm amplitude `amp`.
CauchyData sample_small_data(GridPtr grid, uint64_t seed, double amp);

} // namespace dq
