#include "dq/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <sstream>

namespace dq {

namespace {
constexpr double pi = std::numbers::pi;

double two_pi_pow_half_d(int d) { return std::pow(2.0 * pi, 0.5 * d); }
} // namespace

ModeGrid::ModeGrid(int d_, int n_, double L, double m)
    : d(d_), n_per_axis(n_), box_length(L), mass(m) {
    if (d < 1 || d > 3) throw ConfigError("grid: d must be 1, 2 or 3");
    if (n_per_axis < 2 || n_per_axis % 2 != 0)
        throw ConfigError("grid: n_per_axis must be even and >= 2");
    if (!(L > 0.0)) throw ConfigError("grid: box_length must be > 0");
    if (!(m > 0.0)) throw ConfigError("grid: mass must be > 0 (massive case only)");

    n_modes = 1;
    for (int i = 0; i < d; ++i) n_modes *= n_per_axis;
    weight = std::pow(2.0 * pi / L, d);
    dx = L / n_per_axis;

    zs.resize(n_modes);
    momenta.resize(n_modes);
    omegas.resize(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        std::array<int, 3> z{0, 0, 0};
        int r = i;
        // Row-major over axes, axis d-1 fastest (matches FFTW layout).
        for (int ax = d - 1; ax >= 0; --ax) {
            z[ax] = z_of_bin(r % n_per_axis);
            r /= n_per_axis;
        }
        zs[i] = z;
        std::array<double, 3> k{0.0, 0.0, 0.0};
        for (int ax = 0; ax < d; ++ax) k[ax] = 2.0 * pi / L * z[ax];
        momenta[i] = k;
        omegas[i] = omega_of_z(z);
    }
}

double ModeGrid::omega_of_z(const std::array<int, 3>& z) const {
    double k2 = 0.0;
    for (int ax = 0; ax < d; ++ax) {
        double k = 2.0 * pi / box_length * z[ax];
        k2 += k * k;
    }
    return std::sqrt(k2 + mass * mass);
}

int ModeGrid::index_of_z(const std::array<int, 3>& z) const {
    int i = 0;
    for (int ax = 0; ax < d; ++ax) i = i * n_per_axis + bin_of_z(z[ax]);
    return i;
}

int ModeGrid::reflect(int i) const {
    std::array<int, 3> z = zs[i];
    std::array<int, 3> rz{0, 0, 0};
    for (int ax = 0; ax < d; ++ax)
        rz[ax] = (z[ax] == -n_per_axis / 2) ? z[ax] : -z[ax];
    return index_of_z(rz);
}

uint64_t ModeGrid::hash() const {
    std::ostringstream os;
    os << d << ':' << n_per_axis << ':' << box_length << ':' << mass;
    uint64_t h = 14695981039346656037ull;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

GridPtr make_grid(int d, int n_per_axis, double box_length, double mass) {
    return std::make_shared<const ModeGrid>(d, n_per_axis, box_length, mass);
}

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    fftw_complex* buf = nullptr;
    size_t size = 0;
};

PlanPair& plan_for(int d, int n) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    auto key = std::make_pair(d, n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PlanPair p;
    p.size = 1;
    for (int i = 0; i < d; ++i) p.size *= static_cast<size_t>(n);
    p.buf = fftw_alloc_complex(p.size);
    int dims[3] = {n, n, n};
    p.fwd = fftw_plan_dft(d, dims, p.buf, p.buf, FFTW_FORWARD, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft(d, dims, p.buf, p.buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    return cache.emplace(key, p).first->second;
}

} // namespace

void fft_cube(int d, int n, std::vector<cplx>& data, int sign) {
    PlanPair& p = plan_for(d, n);
    if (data.size() != p.size) throw ConfigError("fft: size mismatch");
    std::memcpy(p.buf, data.data(), p.size * sizeof(cplx));
    fftw_execute(sign < 0 ? p.fwd : p.bwd);
    std::memcpy(data.data(), p.buf, p.size * sizeof(cplx));
}

void fft(const ModeGrid& g, std::vector<cplx>& data, int sign) {
    fft_cube(g.d, g.n_per_axis, data, sign);
}

namespace {

ModeVector decompose_impl(const ModeGrid& g, GridPtr gp,
                          const std::vector<cplx>& phi,
                          const std::vector<cplx>& pi_) {
    if (static_cast<int>(phi.size()) != g.n_modes ||
        static_cast<int>(pi_.size()) != g.n_modes)
        throw ConfigError("decompose: array length does not match grid");

    std::vector<cplx> phat(phi), pihat(pi_);
    fft(g, phat, -1);
    fft(g, pihat, -1);
    double vol = std::pow(g.dx, g.d);
    double s = vol / two_pi_pow_half_d(g.d);

    ModeVector mv(std::move(gp));
    for (int q = 0; q < g.n_modes; ++q) {
        int r = g.reflect(q);
        mv.a[q] = s * (g.omegas[q] * phat[q] + I * pihat[q]);
        mv.abar[q] = s * (g.omegas[q] * phat[r] - I * pihat[r]);
    }
    return mv;
}

void reconstruct_impl(const ModeVector& mv, std::vector<cplx>& phi,
                      std::vector<cplx>& pi_) {
    const ModeGrid& g = *mv.grid;
    if (mv.kind != ModeKind::abar_a)
        throw ConfigError("reconstruct: expected (abar, a) coordinates");
    double s = g.weight / (2.0 * two_pi_pow_half_d(g.d));

    std::vector<cplx> cm(g.n_modes), cp(g.n_modes), dm(g.n_modes), dp(g.n_modes);
    for (int q = 0; q < g.n_modes; ++q) {
        cm[q] = s / g.omegas[q] * mv.abar[q]; // e^{-iqx} synthesis
        cp[q] = s / g.omegas[q] * mv.a[q];    // e^{+iqx} synthesis
        dm[q] = I * s * mv.abar[q];
        dp[q] = -I * s * mv.a[q];
    }
    fft(g, cm, -1);
    fft(g, cp, +1);
    fft(g, dm, -1);
    fft(g, dp, +1);
    phi.resize(g.n_modes);
    pi_.resize(g.n_modes);
    for (int x = 0; x < g.n_modes; ++x) {
        phi[x] = cm[x] + cp[x];
        pi_[x] = dm[x] + dp[x];
    }
}

} // namespace

ModeVector decompose(const CauchyData& data) {
    std::vector<cplx> phi(data.phi.begin(), data.phi.end());
    std::vector<cplx> pi_(data.pi.begin(), data.pi.end());
    return decompose_impl(*data.grid, data.grid, phi, pi_);
}

ModeVector decompose_c(const CCauchyData& data) {
    return decompose_impl(*data.grid, data.grid, data.phi, data.pi);
}

CauchyData reconstruct(const ModeVector& modes) {
    double rr = reality_residual(modes);
    double scale = 0.0;
    for (int i = 0; i < modes.grid->n_modes; ++i)
        scale = std::max({scale, std::abs(modes.a[i]), std::abs(modes.abar[i])});
    if (rr > 1e-9 * std::max(scale, 1.0))
        throw ConfigError("reconstruct: mode vector violates the reality predicate");
    std::vector<cplx> phi, pi_;
    reconstruct_impl(modes, phi, pi_);
    CauchyData cd(modes.grid);
    for (int x = 0; x < modes.grid->n_modes; ++x) {
        cd.phi[x] = phi[x].real();
        cd.pi[x] = pi_[x].real();
    }
    return cd;
}

CCauchyData reconstruct_c(const ModeVector& modes) {
    CCauchyData cd(modes.grid);
    reconstruct_impl(modes, cd.phi, cd.pi);
    return cd;
}

ModeVector to_pm(const ModeVector& modes) {
    const ModeGrid& g = *modes.grid;
    if (modes.kind != ModeKind::abar_a)
        throw ConfigError("to_pm: expected (abar, a) coordinates");
    double s = g.weight / two_pi_pow_half_d(g.d);
    ModeVector out(modes.grid, ModeKind::pm);
    std::vector<cplx> plus(modes.abar), minus(modes.a);
    fft(g, plus, -1);
    fft(g, minus, +1);
    for (int x = 0; x < g.n_modes; ++x) {
        out.abar[x] = I * s * plus[x];   // a_+
        out.a[x] = -I * s * minus[x];    // a_-
    }
    return out;
}

ModeVector from_pm(const ModeVector& pm) {
    const ModeGrid& g = *pm.grid;
    if (pm.kind != ModeKind::pm)
        throw ConfigError("from_pm: expected (a+, a-) coordinates");
    double s = two_pi_pow_half_d(g.d) / g.weight;
    ModeVector out(pm.grid, ModeKind::abar_a);
    std::vector<cplx> plus(pm.abar), minus(pm.a);
    fft(g, plus, +1);
    fft(g, minus, -1);
    double inv_n = 1.0 / g.n_modes;
    for (int q = 0; q < g.n_modes; ++q) {
        out.abar[q] = -I * s * inv_n * plus[q];
        out.a[q] = I * s * inv_n * minus[q];
    }
    return out;
}

double reality_residual(const ModeVector& modes) {
    double r = 0.0;
    for (size_t i = 0; i < modes.a.size(); ++i)
        r = std::max(r, std::abs(modes.abar[i] - std::conj(modes.a[i])));
    return r;
}

} // namespace dq
