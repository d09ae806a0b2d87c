#pragma once

#include "dq/common.hpp"

#include <array>
#include <memory>
#include <vector>

namespace dq {

// Periodic box [0,L)^d sampled on n_per_axis points per axis.  Momenta are
// k = (2pi/L) z with integer z in {-n/2,...,n/2-1}, stored in FFT bin order
// so that mode index i corresponds directly to the i-th DFT bin.
struct ModeGrid {
    int d = 1;
    int n_per_axis = 0;
    double box_length = 0.0;
    double mass = 0.0;

    int n_modes = 0;                     // N = n_per_axis^d
    double weight = 0.0;                 // w = (2pi/L)^d
    double dx = 0.0;                     // L / n_per_axis
    std::vector<std::array<int, 3>> zs;  // integer momenta per mode
    std::vector<std::array<double, 3>> momenta;
    std::vector<double> omegas;

    ModeGrid(int d_, int n_, double L, double m);

    // FFT bin <-> integer frequency on one axis.
    int z_of_bin(int t) const { return t < n_per_axis / 2 ? t : t - n_per_axis; }
    int bin_of_z(int z) const { return z >= 0 ? z : z + n_per_axis; }
    bool z_in_window(long long z) const {
        return z >= -n_per_axis / 2 && z <= n_per_axis / 2 - 1;
    }

    int index_of_z(const std::array<int, 3>& z) const;
    // Mode index of -k (Nyquist bins map to themselves).
    int reflect(int i) const;

    double omega_of_z(const std::array<int, 3>& z) const;

    bool compatible(const ModeGrid& o) const {
        return d == o.d && n_per_axis == o.n_per_axis &&
               box_length == o.box_length && mass == o.mass;
    }

    uint64_t hash() const;
};

using GridPtr = std::shared_ptr<const ModeGrid>;

GridPtr make_grid(int d, int n_per_axis, double box_length, double mass);

enum class ModeKind { abar_a, pm };

// A point of the complexified truncated phase space.  In kind abar_a the
// arrays hold (abar_i, a_i); in kind pm they hold the position-space samples
// of (a_+, a_-).
struct ModeVector {
    GridPtr grid;
    ModeKind kind = ModeKind::abar_a;
    std::vector<cplx> abar;
    std::vector<cplx> a;

    ModeVector() = default;
    explicit ModeVector(GridPtr g, ModeKind k = ModeKind::abar_a)
        : grid(std::move(g)), kind(k), abar(grid->n_modes), a(grid->n_modes) {}
};

struct CauchyData {
    GridPtr grid;
    std::vector<double> phi;
    std::vector<double> pi;

    CauchyData() = default;
    explicit CauchyData(GridPtr g)
        : grid(std::move(g)), phi(grid->n_modes, 0.0), pi(grid->n_modes, 0.0) {}
};

// Complexified Cauchy data, used internally by the integrator and the wave
// operators so that abar and a can be perturbed independently.
struct CCauchyData {
    GridPtr grid;
    std::vector<cplx> phi;
    std::vector<cplx> pi;

    CCauchyData() = default;
    explicit CCauchyData(GridPtr g)
        : grid(std::move(g)), phi(grid->n_modes, cplx{}), pi(grid->n_modes, cplx{}) {}
};

// In-place d-dimensional DFT over the grid's coarse lattice.
// sign = -1: X(q) = sum_x f(x) e^{-iqx} (unnormalized), sign = +1 adjoint.
void fft(const ModeGrid& g, std::vector<cplx>& data, int sign);
// Same on an arbitrary cube of edge n (used by the dealiased kick).
void fft_cube(int d, int n, std::vector<cplx>& data, int sign);

ModeVector decompose(const CauchyData& data);
CauchyData reconstruct(const ModeVector& modes);

ModeVector decompose_c(const CCauchyData& data);
CCauchyData reconstruct_c(const ModeVector& modes);

// Eq. (a+a-) realized on the grid: a_+ = i w (2pi)^{-d/2} sum_k abar_k e^{-ikx},
// a_- = -i w (2pi)^{-d/2} sum_k a_k e^{+ikx}, sampled at lattice sites.
ModeVector to_pm(const ModeVector& modes);
ModeVector from_pm(const ModeVector& pm);

// Max-norm departure from the real-field predicate abar_i = conj(a_i).
double reality_residual(const ModeVector& modes);

} // namespace dq
