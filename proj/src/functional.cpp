#include "dq/functional.hpp"

#include <cmath>
#include <set>

namespace dq {

PolyFunctional PolyFunctional::constant(GridPtr g, cplx c, int maxdeg) {
    PolyFunctional F(std::move(g), maxdeg);
    F.add_term(Mono{}, c);
    return F;
}

PolyFunctional PolyFunctional::coordinate_abar(GridPtr g, int i, int maxdeg) {
    PolyFunctional F(g, maxdeg);
    F.add_term(Mono::var(i), {1.0, 0.0});
    return F;
}

PolyFunctional PolyFunctional::coordinate_a(GridPtr g, int i, int maxdeg) {
    PolyFunctional F(g, maxdeg);
    F.add_term(Mono::var(g->n_modes + i), {1.0, 0.0});
    return F;
}

namespace {

void check_same_grid(const PolyFunctional& F, const PolyFunctional& G) {
    if (!F.grid || !G.grid || !F.grid->compatible(*G.grid))
        throw ConfigError("functional: grid mismatch");
}

int side_degree(const PolyFunctional& F, bool a_side) {
    int N = F.n_modes();
    int best = 0;
    for (const auto& [m, c] : F.terms) {
        int d = 0;
        for (int l = 0; l < m.degree(); ++l)
            if ((m.v[l] >= N) == a_side) ++d;
        best = std::max(best, d);
    }
    return best;
}

} // namespace

int PolyFunctional::a_degree() const { return side_degree(*this, true); }
int PolyFunctional::abar_degree() const { return side_degree(*this, false); }

cplx evaluate(const PolyFunctional& F, const ModeVector& v) {
    if (!F.grid->compatible(*v.grid))
        throw ConfigError("evaluate: grid mismatch");
    int N = F.n_modes();
    cplx r{0.0, 0.0};
    for (const auto& [m, c] : F.terms) {
        cplx t = c;
        for (const auto& [var, mult] : m.factors()) {
            cplx x = var < N ? v.abar[var] : v.a[var - N];
            for (int j = 0; j < mult; ++j) t *= x;
        }
        r += t;
    }
    return r;
}

PolyFunctional multiply(const PolyFunctional& F, const PolyFunctional& G) {
    check_same_grid(F, G);
    PolyFunctional R(F.grid, std::min(F.max_degree, G.max_degree));
    R.truncated = F.truncated || G.truncated;
    poly_mul_acc(R.terms, F.terms, G.terms, {1.0, 0.0}, R.max_degree,
                 &R.truncated);
    return R;
}

PolyFunctional add(const PolyFunctional& F, const PolyFunctional& G, cplx sF,
                   cplx sG) {
    check_same_grid(F, G);
    PolyFunctional R(F.grid, std::min(F.max_degree, G.max_degree));
    R.truncated = F.truncated || G.truncated;
    poly_axpy(R.terms, F.terms, sF);
    poly_axpy(R.terms, G.terms, sG);
    return R;
}

PolyFunctional dnorm(const PolyFunctional& F, Slot slot, int mode_index) {
    int N = F.n_modes();
    if (mode_index < 0 || mode_index >= N)
        throw ConfigError("dnorm: mode index out of range");
    int var = slot == Slot::a ? N + mode_index : mode_index;
    double s = std::sqrt(2.0 * F.grid->omegas[mode_index]) / F.grid->weight;
    PolyFunctional R(F.grid, F.max_degree);
    R.truncated = F.truncated;
    for (const auto& [m, c] : F.terms) {
        Mono md;
        if (!m.remove_var(var, md)) continue;
        poly_add(R.terms, md, c * static_cast<double>(m.count(var)) * s);
    }
    return R;
}

namespace {

// All n-fold partial derivatives of F with respect to one side's variables:
// gamma (a multiset of mode indices) -> d^gamma F, with falling-factorial
// coefficients but without the omega weights.
std::map<Mono, Poly> derivative_table(const PolyFunctional& F, int n,
                                      bool a_side) {
    int N = F.n_modes();
    std::map<Mono, Poly> table;
    for (const auto& [m, c] : F.terms) {
        std::vector<std::pair<uint16_t, int>> side;
        for (const auto& [var, mult] : m.factors())
            if ((var >= N) == a_side)
                side.emplace_back(static_cast<uint16_t>(a_side ? var - N : var),
                                  mult);
        // Choose a sub-multiset of total size n across the side variables.
        struct Rec {
            const std::vector<std::pair<uint16_t, int>>& side;
            const Mono& m;
            cplx c;
            int N;
            bool a_side;
            std::map<Mono, Poly>& table;
            std::vector<uint16_t> gamma;
            void go(size_t pos, int left, double coef, Mono rem) {
                if (left == 0) {
                    poly_add(table[Mono::from_indices(gamma)], rem, c * coef);
                    return;
                }
                if (pos == side.size()) return;
                auto [mode, mult] = side[pos];
                int var = a_side ? N + mode : mode;
                double f = coef;
                Mono cur = rem;
                go(pos + 1, left, coef, rem);
                for (int take = 1; take <= std::min(mult, left); ++take) {
                    f *= (mult - take + 1);
                    Mono nxt;
                    cur.remove_var(var, nxt);
                    cur = nxt;
                    for (int t = 0; t < take; ++t) gamma.push_back(mode);
                    go(pos + 1, left - take, f, cur);
                    for (int t = 0; t < take; ++t) gamma.pop_back();
                }
            }
        } rec{side, m, c, N, a_side, table, {}};
        rec.go(0, n, 1.0, m);
    }
    return table;
}

} // namespace

PolyFunctional normal_cochain(int n, const PolyFunctional& F,
                              const PolyFunctional& G) {
    check_same_grid(F, G);
    if (n < 1) throw ConfigError("normal_cochain: n must be >= 1");
    PolyFunctional R(F.grid, std::min(F.max_degree, G.max_degree));
    R.truncated = F.truncated || G.truncated;
    auto DF = derivative_table(F, n, /*a_side=*/true);
    if (DF.empty()) return R;
    auto DG = derivative_table(G, n, /*a_side=*/false);
    for (const auto& [gamma, df] : DF) {
        auto it = DG.find(gamma);
        if (it == DG.end()) continue;
        double scale = 1.0;
        for (const auto& [mode, mult] : gamma.factors()) {
            double f = 2.0 * F.grid->omegas[mode] / F.grid->weight;
            for (int j = 0; j < mult; ++j) scale *= f / (j + 1);
        }
        poly_mul_acc(R.terms, df, it->second, {scale, 0.0}, R.max_degree,
                     &R.truncated);
    }
    return R;
}

PolyFunctional poisson(const PolyFunctional& F, const PolyFunctional& G) {
    check_same_grid(F, G);
    int N = F.n_modes();
    std::set<int> modes;
    for (const auto& [m, c] : F.terms)
        for (int l = 0; l < m.degree(); ++l) modes.insert(m.v[l] % N);
    PolyFunctional R(F.grid, std::min(F.max_degree, G.max_degree));
    R.truncated = F.truncated || G.truncated;
    cplx s = cplx{2.0, 0.0} / I * F.grid->weight;
    for (int i : modes) {
        auto FA = dnorm(F, Slot::a, i);
        if (!FA.terms.empty()) {
            auto GB = dnorm(G, Slot::abar, i);
            poly_mul_acc(R.terms, FA.terms, GB.terms, s, R.max_degree,
                         &R.truncated);
        }
        auto FB = dnorm(F, Slot::abar, i);
        if (!FB.terms.empty()) {
            auto GA = dnorm(G, Slot::a, i);
            poly_mul_acc(R.terms, FB.terms, GA.terms, -s, R.max_degree,
                         &R.truncated);
        }
    }
    return R;
}

FormalSeriesInHbar star_normal(const PolyFunctional& F, const PolyFunctional& G,
                               int hbar_order) {
    if (hbar_order < 0) throw ConfigError("star_normal: hbar_order must be >= 0");
    FormalSeriesInHbar S;
    S.min_power = 0;
    S.coeffs.push_back(multiply(F, G));
    int nmax = std::min({hbar_order, F.a_degree(), G.abar_degree()});
    for (int n = 1; n <= hbar_order; ++n) {
        if (n <= nmax)
            S.coeffs.push_back(normal_cochain(n, F, G));
        else
            S.coeffs.push_back(PolyFunctional(
                F.grid, std::min(F.max_degree, G.max_degree)));
    }
    return S;
}

FormalSeriesInHbar star_bracket(const PolyFunctional& F, const PolyFunctional& G,
                                int hbar_order) {
    FormalSeriesInHbar S;
    S.min_power = 0;
    cplx s = cplx{2.0, 0.0} / I;
    for (int n = 0; n <= hbar_order; ++n) {
        auto C = add(normal_cochain(n + 1, F, G), normal_cochain(n + 1, G, F),
                     s, -s);
        S.coeffs.push_back(std::move(C));
    }
    return S;
}

FormalSeriesInHbar hbar_series_mul(const FormalSeriesInHbar& A,
                                   const FormalSeriesInHbar& B, int hbar_order) {
    GridPtr g = A.coeffs.at(0).grid;
    FormalSeriesInHbar R;
    R.min_power = A.min_power + B.min_power;
    int len = hbar_order - R.min_power + 1;
    if (len < 1) len = 1;
    R.coeffs.assign(len, PolyFunctional(g));
    for (size_t i = 0; i < A.coeffs.size(); ++i)
        for (size_t j = 0; j < B.coeffs.size(); ++j) {
            int base = A.min_power + static_cast<int>(i) + B.min_power +
                       static_cast<int>(j);
            if (base > hbar_order) continue;
            auto S = star_normal(A.coeffs[i], B.coeffs[j], hbar_order - base);
            for (size_t n = 0; n < S.coeffs.size(); ++n) {
                int p = base + static_cast<int>(n);
                int slot = p - R.min_power;
                R.coeffs[slot] = add(R.coeffs[slot], S.coeffs[n]);
            }
        }
    return R;
}

StarExponential star_exponential(const PolyFunctional& F, double t,
                                 int hbar_order, int term_count,
                                 double coeff_bound) {
    if (term_count < 0)
        throw ConfigError("star_exponential: term_count must be >= 0");
    StarExponential out;
    out.series.min_power = term_count > 0 ? -term_count : 0;
    out.series.coeffs.assign(hbar_order - out.series.min_power + 1,
                             PolyFunctional(F.grid, F.max_degree));
    // (star F)^0 = 1.
    FormalSeriesInHbar power;
    power.min_power = 0;
    power.coeffs.push_back(PolyFunctional::constant(F.grid, {1.0, 0.0},
                                                    F.max_degree));
    FormalSeriesInHbar Fser;
    Fser.min_power = 0;
    Fser.coeffs.push_back(F);

    double fact = 1.0;
    for (int n = 0; n <= term_count; ++n) {
        if (n > 0) {
            power = hbar_series_mul(power, Fser, hbar_order + term_count);
            fact *= n;
        }
        // (1/n!) (t / (i hbar))^n = (1/n!) t^n (-i)^n hbar^{-n}.
        cplx pref = std::pow(t, n) / fact;
        cplx mi{0.0, -1.0};
        for (int j = 0; j < n; ++j) pref *= mi;
        bool last = (n == term_count);
        for (size_t k = 0; k < power.coeffs.size(); ++k) {
            int p = power.min_power + static_cast<int>(k) - n;
            auto it = out.series.at_power(p);
            if (!it) continue;
            int slot = p - out.series.min_power;
            PolyFunctional contrib = power.coeffs[k];
            for (auto& [m, c] : contrib.terms) c *= pref;
            if (last) {
                double mag = max_coeff(contrib);
                if (mag > 0.0 || !out.series.coeffs[slot].terms.empty())
                    out.last_term_magnitude[p] = mag;
            }
            out.series.coeffs[slot] = add(out.series.coeffs[slot], contrib);
            if (max_coeff(out.series.coeffs[slot]) > coeff_bound)
                throw OverflowDiagnostic(
                    "star_exponential: coefficient magnitude exceeds bound at "
                    "hbar power " + std::to_string(p));
        }
    }
    if (term_count == 0) out.last_term_magnitude[0] = 1.0;
    return out;
}

PolyFunctional free_hamiltonian(GridPtr g, int maxdeg) {
    PolyFunctional H(g, maxdeg);
    for (int i = 0; i < g->n_modes; ++i) {
        Mono m;
        Mono::mul(Mono::var(i), Mono::var(g->n_modes + i), m);
        H.add_term(m, {g->weight / 2.0, 0.0});
    }
    return H;
}

double max_coeff(const PolyFunctional& F) { return poly_max_abs(F.terms); }

double max_coeff_diff(const PolyFunctional& F, const PolyFunctional& G) {
    Poly d = F.terms;
    for (const auto& [m, c] : G.terms) poly_add(d, m, -c);
    return poly_max_abs(d);
}

} // namespace dq
