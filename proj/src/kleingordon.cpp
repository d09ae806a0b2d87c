#include "dq/kleingordon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace dq {

namespace {
constexpr double pi = std::numbers::pi;

double gamma_factor(const ModeGrid& g) {
    return std::pow(2.0 * pi, 0.5 * g.d) / g.weight;
}
double rho_factor(const ModeGrid& g, int mode) {
    return g.weight / (2.0 * std::pow(2.0 * pi, 0.5 * g.d) * g.omegas[mode]);
}
} // namespace

Potential::Potential(std::vector<std::pair<int, double>> cs)
    : coeffs(std::move(cs)) {
    std::sort(coeffs.begin(), coeffs.end());
    for (auto [j, c] : coeffs)
        if (j < 3)
            throw ConfigError(
                "potential: coefficient at degree " + std::to_string(j) +
                " violates V(0)=V'(0)=V''(0)=0 (degrees must be >= 3)");
    std::erase_if(coeffs, [](auto& p) { return p.second == 0.0; });
}

int Potential::degree() const { return coeffs.empty() ? 0 : coeffs.back().first; }

Potential::Certificate Potential::positivity_certificate(double mass,
                                                         double s_range,
                                                         int samples) const {
    Certificate cert;
    if (coeffs.empty()) {
        cert.ok = true;
        cert.detail = "V = 0";
        return cert;
    }
    auto sampled_min = [&](double range, double& at) {
        double worst = 0.0;
        at = 0.0;
        for (int i = 0; i < samples; ++i) {
            double s = -range + 2.0 * range * i / (samples - 1);
            double h = v(s) + 0.5 * mass * mass * s * s;
            if (h < worst) {
                worst = h;
                at = s;
            }
        }
        return worst;
    };
    auto [K, cK] = coeffs.back();
    double at = 0.0;
    if (K % 2 == 0 && cK > 0.0 && sampled_min(s_range, at) >= 0.0) {
        cert.ok = true;
        cert.detail = "sampled V(s) + m^2 s^2/2 >= 0 on [-" +
                      std::to_string(s_range) + ", " + std::to_string(s_range) +
                      "]";
        return cert;
    }
    // Not globally bounded below (or dips negative far out); small-data runs
    // only need positivity of the energy density near the vacuum.
    if (sampled_min(1.0, at) >= 0.0) {
        cert.ok = true;
        cert.detail = "V(s) + m^2 s^2/2 >= 0 near the vacuum (|s| <= 1) only";
        return cert;
    }
    std::ostringstream os;
    os << "V(s) + m^2 s^2/2 < 0 at s = " << at;
    cert.detail = os.str();
    return cert;
}

std::vector<std::string> poincare_labels(int d) {
    std::vector<std::string> ls;
    for (int mu = 0; mu <= d; ++mu) ls.push_back("P" + std::to_string(mu));
    for (int i = 1; i <= d; ++i)
        for (int j = i + 1; j <= d; ++j)
            ls.push_back("M" + std::to_string(i) + std::to_string(j));
    for (int j = 1; j <= d; ++j) ls.push_back("M0" + std::to_string(j));
    return ls;
}

namespace {

struct Gen {
    bool is_p = false;
    int mu = 0, nu = 0; // P_mu or M_{mu,nu} with mu < nu
};

Gen parse_label(const std::string& s) {
    Gen g;
    if (s[0] == 'P') {
        g.is_p = true;
        g.mu = s[1] - '0';
    } else {
        g.mu = s[1] - '0';
        g.nu = s[2] - '0';
    }
    return g;
}

void emit_m(std::vector<std::pair<std::string, double>>& out, int a, int b,
            double c) {
    if (a == b || c == 0.0) return;
    if (a > b) {
        std::swap(a, b);
        c = -c;
    }
    out.emplace_back("M" + std::to_string(a) + std::to_string(b), c);
}

void emit_p(std::vector<std::pair<std::string, double>>& out, int mu, double c) {
    if (c != 0.0) out.emplace_back("P" + std::to_string(mu), c);
}

} // namespace

// Structure constants of the realized representation: [P0, M0l] = P_l,
// [P_j, M0l] = delta_{jl} P0, [M0j, M0l] = M_{jl},
// [P_l, M_{ij}] = delta_{il} P_j - delta_{jl} P_i,
// [M_{ij}, M0l] = delta_{jl} M0i - delta_{il} M0j, and the Euclidean
// rotation algebra among the spatial M's.
std::vector<std::pair<std::string, double>>
poincare_bracket(const std::string& x, const std::string& y) {
    Gen X = parse_label(x), Y = parse_label(y);
    std::vector<std::pair<std::string, double>> out;
    if (X.is_p && Y.is_p) return out;
    if (X.is_p && !Y.is_p) {
        int l = X.mu;
        if (Y.mu == 0) { // boost M_{0,nu}
            int b = Y.nu;
            if (l == 0)
                emit_p(out, b, 1.0);
            else if (l == b)
                emit_p(out, 0, 1.0);
        } else { // rotation M_{ij}
            int i = Y.mu, j = Y.nu;
            if (l == i) emit_p(out, j, 1.0);
            if (l == j) emit_p(out, i, -1.0);
        }
        return out;
    }
    if (!X.is_p && Y.is_p) {
        out = poincare_bracket(y, x);
        for (auto& [lbl, c] : out) c = -c;
        return out;
    }
    // both M
    bool xb = X.mu == 0, yb = Y.mu == 0;
    if (xb && yb) {
        emit_m(out, X.nu, Y.nu, 1.0); // [M0j, M0l] = M_{jl}
        return out;
    }
    if (!xb && yb) {
        int i = X.mu, j = X.nu, l = Y.nu;
        if (j == l) emit_m(out, 0, i, 1.0);
        if (i == l) emit_m(out, 0, j, -1.0);
        return out;
    }
    if (xb && !yb) {
        out = poincare_bracket(y, x);
        for (auto& [lbl, c] : out) c = -c;
        return out;
    }
    int a = X.mu, b = X.nu, c_ = Y.mu, d_ = Y.nu;
    if (b == c_) emit_m(out, a, d_, 1.0);
    if (a == d_) emit_m(out, b, c_, 1.0);
    if (a == c_) emit_m(out, b, d_, -1.0);
    if (b == d_) emit_m(out, a, c_, -1.0);
    return out;
}

int GeneratorSet::index_of(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
        throw ConfigError("generator set: unknown label " + label);
    return static_cast<int>(it - labels.begin());
}

NonlinearRep GeneratorSet::rep() const {
    NonlinearRep r;
    r.labels = labels;
    r.images = series;
    int n = static_cast<int>(labels.size());
    r.structure.assign(n, std::vector<std::vector<std::pair<int, double>>>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                for (const auto& [lbl, c] : poincare_bracket(labels[i], labels[j]))
                    r.structure[i][j].emplace_back(
                        static_cast<int>(std::find(labels.begin(), labels.end(),
                                                   lbl) -
                                         labels.begin()),
                        c);
    return r;
}

// ---------------------------------------------------------------------------
// Block operator applications: u holds coefficients in the basis e^{s i k x}
// (s = +1 for the a block, s = -1 for the abar block).

namespace {

std::vector<double> sawtooth(const ModeGrid& g) {
    std::vector<double> s(g.n_per_axis);
    for (int t = 0; t < g.n_per_axis; ++t)
        s[t] = g.dx * (t < g.n_per_axis / 2 ? t : t - g.n_per_axis);
    return s;
}

// DFT of the sampled sawtooth: shat[r] = (1/n) sum_t saw(t) e^{-2 pi i r t / n}.
std::vector<cplx> saw_hat(const ModeGrid& g) {
    int n = g.n_per_axis;
    auto s = sawtooth(g);
    std::vector<cplx> sh(n, cplx{});
    for (int r = 0; r < n; ++r) {
        cplx acc{};
        for (int t = 0; t < n; ++t)
            acc += s[t] * std::exp(cplx{0.0, -2.0 * pi * r * t / n});
        sh[r] = acc / static_cast<double>(n);
    }
    return sh;
}

std::vector<cplx> apply_mult_omega(const ModeGrid& g, std::vector<cplx> u) {
    for (int q = 0; q < g.n_modes; ++q) u[q] *= g.omegas[q];
    return u;
}

std::vector<cplx> apply_deriv(const ModeGrid& g, int s, int axis,
                              std::vector<cplx> u) {
    for (int q = 0; q < g.n_modes; ++q)
        u[q] *= cplx{0.0, s * g.momenta[q][axis]};
    return u;
}

// Pointwise multiplication by the sawtooth coordinate on the coarse lattice.
std::vector<cplx> apply_saw(const ModeGrid& g, int s, int axis,
                            std::vector<cplx> u) {
    auto saw = sawtooth(g);
    fft(g, u, s > 0 ? +1 : -1); // synthesize at lattice sites
    int n = g.n_per_axis;
    // site index along `axis` for flattened row-major layout
    int stride = 1;
    for (int ax = g.d - 1; ax > axis; --ax) stride *= n;
    for (int x = 0; x < g.n_modes; ++x) u[x] *= saw[(x / stride) % n];
    fft(g, u, s > 0 ? -1 : +1); // analyze
    double inv_n = 1.0 / g.n_modes;
    for (auto& c : u) c *= inv_n;
    return u;
}

std::vector<cplx> apply_block_op(const ModeGrid& g, const std::string& label,
                                 int s, std::vector<cplx> u) {
    Gen gen = parse_label(label);
    if (gen.is_p) {
        if (gen.mu == 0) {
            u = apply_mult_omega(g, std::move(u));
            for (auto& c : u) c *= cplx{0.0, static_cast<double>(-s)};
        } else {
            u = apply_deriv(g, s, gen.mu - 1, std::move(u));
        }
        return u;
    }
    if (gen.mu == 0) { // boost: -s * i * omega(saw_j u)
        u = apply_saw(g, s, gen.nu - 1, std::move(u));
        u = apply_mult_omega(g, std::move(u));
        for (auto& c : u) c *= cplx{0.0, static_cast<double>(-s)};
        return u;
    }
    // rotation: saw_i d_j - saw_j d_i
    auto u1 = apply_saw(g, s, gen.mu - 1, apply_deriv(g, s, gen.nu - 1, u));
    auto u2 = apply_saw(g, s, gen.nu - 1, apply_deriv(g, s, gen.mu - 1, u));
    for (int q = 0; q < g.n_modes; ++q) u1[q] -= u2[q];
    return u1;
}

// Dense a-block matrix of a generator (column-by-column operator application).
std::vector<std::vector<cplx>> block_matrix(const ModeGrid& g,
                                            const std::string& label, int s) {
    std::vector<std::vector<cplx>> cols(g.n_modes);
    for (int q = 0; q < g.n_modes; ++q) {
        std::vector<cplx> e(g.n_modes, cplx{});
        e[q] = 1.0;
        cols[q] = apply_block_op(g, label, s, std::move(e));
    }
    return cols;
}

constexpr int kMaxFormalModes = 192;

void check_formal_size(const ModeGrid& g) {
    if (g.n_modes > kMaxFormalModes)
        throw ConfigError(
            "grid too large for formal generator assembly (n_modes = " +
            std::to_string(g.n_modes) + " > " +
            std::to_string(kMaxFormalModes) + "); use the numeric operations");
}

} // namespace

GeneratorSet build_free_rep(GridPtr grid, int degree_cap, int func_max_degree) {
    check_formal_size(*grid);
    const ModeGrid& g = *grid;
    int N = g.n_modes;
    GeneratorSet gs;
    gs.grid = grid;
    gs.labels = poincare_labels(g.d);

    for (const auto& label : gs.labels) {
        FormalSeries T(2 * N, degree_cap);
        PolyFunctional B(grid, func_max_degree);
        Gen gen = parse_label(label);
        bool diagonal = gen.is_p;
        if (diagonal) {
            for (int q = 0; q < N; ++q) {
                cplx lam = gen.mu == 0
                               ? cplx{0.0, -g.omegas[q]}
                               : cplx{0.0, g.momenta[q][gen.mu - 1]};
                // a block eigenvalue lam, abar block conj(lam)
                T.add_term(N + q, Mono::var(N + q), lam);
                T.add_term(q, Mono::var(q), std::conj(lam));
                Mono m;
                Mono::mul(Mono::var(q), Mono::var(N + q), m);
                B.add_term(m, I * g.weight * lam / (2.0 * g.omegas[q]));
            }
        } else {
            auto cols = block_matrix(g, label, +1); // M^- columns
            double scale = 0.0;
            for (const auto& col : cols)
                for (const auto& c : col) scale = std::max(scale, std::abs(c));
            double eps = 1e-15 * scale;
            for (int q = 0; q < N; ++q)
                for (int p = 0; p < N; ++p) {
                    cplx m = cols[q][p];
                    if (std::abs(m) <= eps) continue;
                    T.add_term(N + p, Mono::var(N + q), m);
                    // real operator: abar block is the complex conjugate
                    T.add_term(p, Mono::var(q), std::conj(m));
                    Mono mono;
                    Mono::mul(Mono::var(p), Mono::var(N + q), mono);
                    B.add_term(mono, I * g.weight * m / (2.0 * g.omegas[p]));
                }
        }
        gs.series.push_back(std::move(T));
        gs.functionals.push_back(std::move(B));
    }
    return gs;
}

// ---------------------------------------------------------------------------
// Interaction assembly.  The nonlinearity F = -V'(phi) is expanded over
// monomials in (abar, a) with exact integer momentum bookkeeping; momentum
// selection onto the truncated window is the dealiasing rule.

namespace {

struct InteractionTerm {
    Mono mono;               // over 2N variables
    double coeff;            // coefficient of the monomial in -V'(phi)
    std::array<long long, 3> Q; // total signed integer momentum
};

// All degree-p monomials of (-c_j) phi^{p} ... more precisely of one power
// phi^p with unit coefficient; caller scales.
void enumerate_monomials(const ModeGrid& g, int p,
                         const std::function<void(const Mono&, double,
                                                  const std::array<long long, 3>&)>& emit) {
    int N = g.n_modes;
    std::vector<uint16_t> vars;
    std::array<long long, 3> Q{0, 0, 0};
    double factorial_p = 1.0;
    for (int l = 2; l <= p; ++l) factorial_p *= l;

    std::function<void(int, double)> rec = [&](int start, double rho_prod) {
        if (static_cast<int>(vars.size()) == p) {
            // multinomial p! / prod(mult!)
            double mult = factorial_p;
            int run = 1;
            for (size_t l = 1; l <= vars.size(); ++l) {
                if (l < vars.size() && vars[l] == vars[l - 1]) {
                    ++run;
                    mult /= run;
                } else {
                    run = 1;
                }
            }
            emit(Mono::from_indices(vars), mult * rho_prod, Q);
            return;
        }
        for (int v = start; v < 2 * N; ++v) {
            int mode = v % N;
            int sign = v < N ? -1 : +1;
            vars.push_back(static_cast<uint16_t>(v));
            for (int ax = 0; ax < g.d; ++ax) Q[ax] += sign * g.zs[mode][ax];
            rec(v, rho_prod * rho_factor(g, mode));
            vars.pop_back();
            for (int ax = 0; ax < g.d; ++ax) Q[ax] -= sign * g.zs[mode][ax];
        }
    };
    rec(0, 1.0);
}

bool window_index(const ModeGrid& g, const std::array<long long, 3>& Q,
                  int* idx) {
    std::array<int, 3> z{0, 0, 0};
    for (int ax = 0; ax < g.d; ++ax) {
        if (!g.z_in_window(Q[ax])) return false;
        z[ax] = static_cast<int>(Q[ax]);
    }
    *idx = g.index_of_z(z);
    return true;
}

} // namespace

GeneratorSet build_interaction(GridPtr grid, const Potential& V, int degree_cap,
                               int func_max_degree) {
    GeneratorSet gs = build_free_rep(grid, degree_cap, func_max_degree);
    gs.potential = V;
    if (V.empty()) return gs;
    const ModeGrid& g = *grid;
    int N = g.n_modes;
    if (V.degree() - 1 > degree_cap)
        throw ConfigError("build_interaction: degree_cap " +
                          std::to_string(degree_cap) +
                          " is smaller than the degree of V' (" +
                          std::to_string(V.degree() - 1) + ")");

    double gam = gamma_factor(g);
    double Ld = std::pow(g.box_length, g.d);
    auto sh = saw_hat(g);
    int n = g.n_per_axis;

    int i_p0 = gs.index_of("P0");
    FormalSeries& T_p0 = gs.series[i_p0];
    PolyFunctional& H = gs.functionals[i_p0];

    for (auto [j, cj] : V.coeffs) {
        int p = j - 1;
        // Vector-field terms from F = -V'(phi): the monomial at total
        // momentum Q feeds da_Q/dt (and dabar_{-Q}/dt) after projection onto
        // the momentum window.
        enumerate_monomials(g, p, [&](const Mono& m, double base,
                                      const std::array<long long, 3>& Q) {
            double A = -cj * base;
            int idx;
            if (window_index(g, Q, &idx))
                T_p0.add_term(N + idx, m, I * gam * A);
            std::array<long long, 3> mQ{-Q[0], -Q[1], -Q[2]};
            if (window_index(g, mQ, &idx))
                T_p0.add_term(idx, m, -I * gam * A);
            // Boosts: multiply the window-projected F by the sawtooth along
            // the boost axis, analyzed on the coarse lattice.
            int widx;
            if (!window_index(g, Q, &widx)) return;
            for (int ax = 0; ax < g.d; ++ax) {
                FormalSeries& T_b =
                    gs.series[gs.index_of("M0" + std::to_string(ax + 1))];
                std::array<int, 3> zq = g.zs[widx];
                int bq = g.bin_of_z(zq[ax]);
                for (int b = 0; b < n; ++b) {
                    std::array<int, 3> zo = zq;
                    zo[ax] = g.z_of_bin(b);
                    int out = g.index_of_z(zo);
                    cplx sa = sh[((b - bq) % n + n) % n];
                    if (sa != cplx{})
                        T_b.add_term(N + out, m, I * gam * A * sa);
                    std::array<int, 3> zr;
                    for (int ax2 = 0; ax2 < g.d; ++ax2)
                        zr[ax2] = g.z_of_bin((n - g.bin_of_z(zq[ax2])) % n);
                    zr[ax] = g.z_of_bin(b);
                    int outr = g.index_of_z(zr);
                    cplx sar = sh[(((n - b) % n - bq) % n + n) % n];
                    if (sar != cplx{})
                        T_b.add_term(outr, m, -I * gam * A * sar);
                }
            }
        });

        // Hamiltonian-form functionals: int V and int saw_j V.
        if (j <= func_max_degree) {
            enumerate_monomials(g, j, [&](const Mono& m, double base,
                                          const std::array<long long, 3>& Q) {
                bool zero = true;
                for (int ax = 0; ax < g.d; ++ax) zero = zero && Q[ax] == 0;
                double hc = cj / j * Ld * base;
                if (zero) H.add_term(m, hc);
                // boost potential term: coarse-lattice quadrature of saw * V
                std::array<long long, 3> Qm{((Q[0] % n) + n) % n,
                                            ((Q[1] % n) + n) % n,
                                            ((Q[2] % n) + n) % n};
                for (int ax = 0; ax < g.d; ++ax) {
                    bool others = true;
                    for (int ax2 = 0; ax2 < g.d; ++ax2)
                        if (ax2 != ax && Qm[ax2] != 0) others = false;
                    if (!others) continue;
                    cplx sa = sh[static_cast<size_t>((n - Qm[ax]) % n)];
                    if (sa == cplx{}) continue;
                    PolyFunctional& Bf = gs.functionals[gs.index_of(
                        "M0" + std::to_string(ax + 1))];
                    Bf.add_term(m, hc * sa);
                }
            });
        }
    }
    return gs;
}

// ---------------------------------------------------------------------------
// Flows.

ModeVector free_flow(const ModeVector& v, double t) {
    const ModeGrid& g = *v.grid;
    ModeVector out(v.grid, v.kind);
    if (v.kind != ModeKind::abar_a)
        throw ConfigError("free_flow: expected (abar, a) coordinates");
    for (int q = 0; q < g.n_modes; ++q) {
        cplx ph = std::exp(cplx{0.0, g.omegas[q] * t});
        out.abar[q] = v.abar[q] * ph;
        out.a[q] = v.a[q] / ph;
    }
    return out;
}

namespace {

// In-place exact free flow on complexified Cauchy data via Fourier rotation.
void free_step(const ModeGrid& g, std::vector<cplx>& phat,
               std::vector<cplx>& pihat, double t) {
    for (int q = 0; q < g.n_modes; ++q) {
        double w = g.omegas[q];
        double c = std::cos(w * t), s = std::sin(w * t);
        cplx f = phat[q], p = pihat[q];
        phat[q] = c * f + s / w * p;
        pihat[q] = -w * s * f + c * p;
    }
}

int fine_per_axis(const ModeGrid& g, int K) {
    return g.n_per_axis * (K / 2 + 1);
}

// Dealiased evaluation of V'(phi) projected back to the window, from the
// coarse spectrum (unnormalized forward DFT of phi).
std::vector<cplx> kick_term(const ModeGrid& g, const Potential& V,
                            const std::vector<cplx>& phat) {
    int K = V.degree();
    int nf = fine_per_axis(g, K);
    size_t fine_size = 1;
    for (int ax = 0; ax < g.d; ++ax) fine_size *= static_cast<size_t>(nf);
    std::vector<cplx> fine(fine_size, cplx{});
    double inv_nc = 1.0 / g.n_modes;
    for (int q = 0; q < g.n_modes; ++q) {
        size_t fi = 0;
        for (int ax = 0; ax < g.d; ++ax) {
            int z = g.zs[q][ax];
            fi = fi * nf + static_cast<size_t>(z >= 0 ? z : z + nf);
        }
        fine[fi] = phat[q] * inv_nc;
    }
    fft_cube(g.d, nf, fine, +1);
    for (auto& x : fine) x = V.vprime(x);
    fft_cube(g.d, nf, fine, -1);
    std::vector<cplx> out(g.n_modes);
    double inv_nfd = 1.0 / static_cast<double>(fine_size);
    for (int q = 0; q < g.n_modes; ++q) {
        size_t fi = 0;
        for (int ax = 0; ax < g.d; ++ax) {
            int z = g.zs[q][ax];
            fi = fi * nf + static_cast<size_t>(z >= 0 ? z : z + nf);
        }
        out[q] = fine[fi] * inv_nfd; // spectral coefficient of P_W[V'(phi)]
    }
    return out;
}

} // namespace

CCauchyData evolve_c(const CCauchyData& data, const Potential& V,
                     double t_final, double dt, const EvolveOptions& opt) {
    const ModeGrid& g = *data.grid;
    if (!(dt > 0.0)) throw ConfigError("evolve: dt must be > 0");
    double max_omega = 0.0;
    for (double w : g.omegas) max_omega = std::max(max_omega, w);
    if (dt * max_omega >= pi)
        throw ConfigError("evolve: dt * max(omega) must be < pi");
    double steps_f = std::abs(t_final) / dt;
    long steps = std::lround(steps_f);
    if (std::abs(steps_f - steps) > 1e-9)
        throw ConfigError("evolve: |t_final| / dt must be an integer");
    double h = t_final >= 0 ? dt : -dt;

    // Work in the coarse spectrum throughout.
    std::vector<cplx> phat(data.phi), pihat(data.pi);
    fft(g, phat, -1);
    fft(g, pihat, -1);

    auto kick = [&](double tau, double tnow) {
        if (V.empty()) return;
        auto f = kick_term(g, V, phat);
        for (int q = 0; q < g.n_modes; ++q)
            pihat[q] -= tau * f[q] * static_cast<double>(g.n_modes);
        double mx = 0.0;
        for (int q = 0; q < g.n_modes; ++q)
            mx = std::max(mx, std::abs(phat[q]) / g.n_modes);
        if (!(mx < opt.blowup_threshold)) throw BlowUpError(tnow);
    };

    auto emit = [&](double tnow) {
        if (!opt.observer) return;
        CCauchyData s(data.grid);
        s.phi = phat;
        s.pi = pihat;
        fft(g, s.phi, +1);
        fft(g, s.pi, +1);
        double inv_n = 1.0 / g.n_modes;
        for (auto& x : s.phi) x *= inv_n;
        for (auto& x : s.pi) x *= inv_n;
        opt.observer(tnow, s);
    };

    for (long s = 0; s < steps; ++s) {
        double t0 = s * h;
        kick(h / 2.0, t0);
        free_step(g, phat, pihat, h);
        kick(h / 2.0, t0 + h);
        emit(t0 + h);
    }

    CCauchyData out(data.grid);
    out.phi = phat;
    out.pi = pihat;
    fft(g, out.phi, +1);
    fft(g, out.pi, +1);
    double inv_n = 1.0 / g.n_modes;
    for (auto& x : out.phi) x *= inv_n;
    for (auto& x : out.pi) x *= inv_n;
    return out;
}

CauchyData evolve(const CauchyData& data, const Potential& V, double t_final,
                  double dt, const EvolveOptions& opt) {
    CCauchyData c(data.grid);
    for (int x = 0; x < data.grid->n_modes; ++x) {
        c.phi[x] = data.phi[x];
        c.pi[x] = data.pi[x];
    }
    CCauchyData r = evolve_c(c, V, t_final, dt, opt);
    CauchyData out(data.grid);
    for (int x = 0; x < data.grid->n_modes; ++x) {
        out.phi[x] = r.phi[x].real();
        out.pi[x] = r.pi[x].real();
    }
    return out;
}

void free_flow_c(CCauchyData& state, double t) {
    const ModeGrid& g = *state.grid;
    fft(g, state.phi, -1);
    fft(g, state.pi, -1);
    free_step(g, state.phi, state.pi, t);
    fft(g, state.phi, +1);
    fft(g, state.pi, +1);
    double inv_n = 1.0 / g.n_modes;
    for (auto& x : state.phi) x *= inv_n;
    for (auto& x : state.pi) x *= inv_n;
}

// ---------------------------------------------------------------------------
// Numeric generator evaluation.

cplx eval_h0(const ModeVector& v) {
    const ModeGrid& g = *v.grid;
    cplx r{};
    for (int q = 0; q < g.n_modes; ++q) r += v.abar[q] * v.a[q];
    return r * (g.weight / 2.0);
}

cplx eval_momentum(const ModeVector& v, int axis) {
    const ModeGrid& g = *v.grid;
    cplx r{};
    for (int q = 0; q < g.n_modes; ++q)
        r -= g.weight * g.momenta[q][axis] / (2.0 * g.omegas[q]) * v.abar[q] *
             v.a[q];
    return r;
}

namespace {

cplx quadratic_form(const ModeVector& v, const std::string& label) {
    const ModeGrid& g = *v.grid;
    auto Ma = apply_block_op(g, label, +1, v.a);
    cplx r{};
    for (int p = 0; p < g.n_modes; ++p)
        r += v.abar[p] * I * g.weight / (2.0 * g.omegas[p]) * Ma[p];
    return r;
}

// Band-limited field values on the fine lattice from mode coordinates.
std::vector<cplx> fine_field(const ModeVector& v, int nf) {
    const ModeGrid& g = *v.grid;
    size_t fine_size = 1;
    for (int ax = 0; ax < g.d; ++ax) fine_size *= static_cast<size_t>(nf);
    std::vector<cplx> fine(fine_size, cplx{});
    double s = g.weight / (2.0 * std::pow(2.0 * pi, 0.5 * g.d));
    for (int q = 0; q < g.n_modes; ++q) {
        cplx cq = s / g.omegas[q] * (v.a[q]); // e^{+iqx}
        cplx cmq = s / g.omegas[q] * (v.abar[q]); // e^{-iqx}
        size_t fi = 0, fir = 0;
        for (int ax = 0; ax < g.d; ++ax) {
            int z = g.zs[q][ax];
            fi = fi * nf + static_cast<size_t>(z >= 0 ? z : z + nf);
            int zr = -z;
            fir = fir * nf + static_cast<size_t>(zr >= 0 ? zr : zr + nf);
        }
        fine[fi] += cq;
        fine[fir] += cmq;
    }
    fft_cube(g.d, nf, fine, +1);
    return fine;
}

} // namespace

cplx eval_rotation_free(const ModeVector& v, int ax_i, int ax_j) {
    return quadratic_form(v, "M" + std::to_string(ax_i) + std::to_string(ax_j));
}

cplx eval_boost_free(const ModeVector& v, int axis) {
    return quadratic_form(v, "M0" + std::to_string(axis));
}

cplx eval_hamiltonian(const ModeVector& v, const Potential& V) {
    cplx r = eval_h0(v);
    if (V.empty()) return r;
    const ModeGrid& g = *v.grid;
    int nf = fine_per_axis(g, V.degree());
    auto fine = fine_field(v, nf);
    double dv = std::pow(g.box_length / nf, g.d);
    cplx pot{};
    for (const auto& x : fine) pot += V.v(x);
    return r + dv * pot;
}

cplx eval_boost(const ModeVector& v, int axis, const Potential& V) {
    cplx r = eval_boost_free(v, axis);
    if (V.empty()) return r;
    const ModeGrid& g = *v.grid;
    // Coarse-lattice quadrature of saw_j * V(phi), matching the assembled
    // boost realization.
    CCauchyData s = reconstruct_c(v);
    auto saw = sawtooth(g);
    int n = g.n_per_axis;
    int stride = 1;
    for (int ax = g.d - 1; ax > axis - 1; --ax) stride *= n;
    double dv = std::pow(g.dx, g.d);
    cplx pot{};
    for (int x = 0; x < g.n_modes; ++x)
        pot += saw[(x / stride) % n] * V.v(s.phi[x]);
    return r + dv * pot;
}

cplx eval_generator(const ModeVector& v, const std::string& label,
                    const Potential& V) {
    Gen gen = parse_label(label);
    if (gen.is_p)
        return gen.mu == 0 ? eval_hamiltonian(v, V)
                           : eval_momentum(v, gen.mu - 1);
    if (gen.mu == 0) return eval_boost(v, gen.nu, V);
    return eval_rotation_free(v, gen.mu, gen.nu);
}

// ---------------------------------------------------------------------------
// Wave and scattering operators.

double state_norm(const ModeVector& v) {
    CCauchyData s = reconstruct_c(v);
    double dv = std::pow(v.grid->dx, v.grid->d);
    double r = 0.0;
    for (int x = 0; x < v.grid->n_modes; ++x)
        r += std::norm(s.phi[x]) + std::norm(s.pi[x]);
    return std::sqrt(dv * r);
}

double state_distance(const ModeVector& u, const ModeVector& v) {
    ModeVector d(u.grid, u.kind);
    for (int q = 0; q < u.grid->n_modes; ++q) {
        d.abar[q] = u.abar[q] - v.abar[q];
        d.a[q] = u.a[q] - v.a[q];
    }
    return state_norm(d);
}

ModeVector wave_operator_map(int direction, const Potential& V,
                             double horizon_T, double dt, const ModeVector& v) {
    ModeVector w = free_flow(v, direction * horizon_T);
    CCauchyData s = reconstruct_c(w);
    s = evolve_c(s, V, -direction * horizon_T, dt);
    return decompose_c(s);
}

ModeVector wave_operator_inverse(int direction, const Potential& V,
                                 double horizon_T, double dt,
                                 const ModeVector& v) {
    CCauchyData s = reconstruct_c(v);
    s = evolve_c(s, V, direction * horizon_T, dt);
    return free_flow(decompose_c(s), -direction * horizon_T);
}

WaveOperatorEstimate wave_operator(int direction, const Potential& V,
                                   double horizon_T, double dt,
                                   const ModeVector& v_free) {
    if (direction != 1 && direction != -1)
        throw ConfigError("wave_operator: direction must be +1 or -1");
    WaveOperatorEstimate est;
    est.direction = direction;
    est.horizon = horizon_T;
    est.steps = static_cast<int>(std::lround(horizon_T / dt));
    auto snap = [&](double t) { return std::lround(t / dt) * dt; };
    double t4 = snap(horizon_T / 4.0), t2 = snap(horizon_T / 2.0);
    ModeVector q4 = wave_operator_map(direction, V, t4, dt, v_free);
    ModeVector q2 = wave_operator_map(direction, V, t2, dt, v_free);
    est.result = wave_operator_map(direction, V, horizon_T, dt, v_free);
    est.convergence_log.emplace_back(t2, state_distance(q2, q4));
    est.convergence_log.emplace_back(horizon_T, state_distance(est.result, q2));
    return est;
}

ModeVector scattering_operator(const Potential& V, double horizon_T, double dt,
                               const ModeVector& v) {
    // S = (Omega+)^{-1} Omega_- = U1_{-T} o U_{2T} o U1_{-T}.
    ModeVector w = free_flow(v, -horizon_T);
    CCauchyData s = reconstruct_c(w);
    s = evolve_c(s, V, 2.0 * horizon_T, dt);
    return free_flow(decompose_c(s), -horizon_T);
}

LinearizationCheck check_linearization(const Potential& V,
                                       const std::vector<double>& horizons,
                                       double dt,
                                       const std::vector<ModeVector>& samples) {
    if (samples.empty()) throw ConfigError("check_linearization: no samples");
    const ModeGrid& g = *samples.front().grid;
    LinearizationCheck rpt;
    rpt.labels = poincare_labels(g.d);
    rpt.horizons = horizons;
    size_t ng = rpt.labels.size();
    rpt.residual.assign(ng, std::vector<double>(horizons.size(), 0.0));
    rpt.relative_residual.assign(ng, std::vector<double>(horizons.size(), 0.0));
    Potential none;
    for (const ModeVector& psi : samples) {
        std::vector<cplx> free_vals(ng);
        for (size_t gi = 0; gi < ng; ++gi)
            free_vals[gi] = eval_generator(psi, rpt.labels[gi], none);
        for (size_t h = 0; h < horizons.size(); ++h) {
            ModeVector om = wave_operator_map(-1, V, horizons[h], dt, psi);
            for (size_t gi = 0; gi < ng; ++gi) {
                cplx val = eval_generator(om, rpt.labels[gi], V);
                double res = std::abs(val - free_vals[gi]);
                rpt.residual[gi][h] = std::max(rpt.residual[gi][h], res);
                double scale = std::max(std::abs(free_vals[gi]), 1e-30);
                rpt.relative_residual[gi][h] =
                    std::max(rpt.relative_residual[gi][h], res / scale);
            }
        }
    }
    return rpt;
}

CauchyData sample_small_data(GridPtr grid, uint64_t seed, double amp) {
    const ModeGrid& g = *grid;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto unif = [&]() {
        return (rng() >> 11) * (1.0 / 9007199254740992.0); // [0,1)
    };
    CauchyData cd(grid);
    int band = std::max(1, g.n_per_axis / 8);
    int n = g.n_per_axis;
    std::vector<std::array<int, 3>> zs;
    std::array<int, 3> z{0, 0, 0};
    std::function<void(int)> gen = [&](int ax) {
        if (ax == g.d) {
            zs.push_back(z);
            return;
        }
        for (int t = -band; t <= band; ++t) {
            z[ax] = t;
            gen(ax + 1);
        }
    };
    gen(0);
    auto field = [&](std::vector<double>& out) {
        std::vector<double> amps, phases;
        for (size_t i = 0; i < zs.size(); ++i) {
            amps.push_back(unif() * 2.0 - 1.0);
            phases.push_back(unif() * 2.0 * pi);
        }
        for (int x = 0; x < g.n_modes; ++x) {
            std::array<int, 3> site{0, 0, 0};
            int r = x;
            for (int ax = g.d - 1; ax >= 0; --ax) {
                site[ax] = r % n;
                r /= n;
            }
            double val = 0.0;
            for (size_t i = 0; i < zs.size(); ++i) {
                double arg = phases[i];
                for (int ax = 0; ax < g.d; ++ax)
                    arg += 2.0 * pi * zs[i][ax] * site[ax] / n;
                val += amps[i] * std::cos(arg);
            }
            out[x] = val;
        }
        double mx = 0.0;
        for (double vv : out) mx = std::max(mx, std::abs(vv));
        if (mx > 0.0)
            for (double& vv : out) vv *= amp / mx;
    };
    field(cd.phi);
    field(cd.pi);
    return cd;
}

} // namespace dq
