#include "dq/pushforward.hpp"

#include <cmath>

namespace dq {

PushedStarProduct PushedStarProduct::formal(GridPtr grid,
                                            const FormalSeries& omega) {
    if (omega.dim != 2 * grid->n_modes)
        throw ConfigError("push-forward: omega dimension does not match grid");
    PushedStarProduct p;
    p.mode = Mode::formal;
    p.grid = std::move(grid);
    p.omega = omega;
    p.omega_inverse = invert(omega);
    FormalSeries id = FormalSeries::identity(omega.dim, omega.degree_cap);
    double r1 = fs_max_coeff_diff(compose(p.omega, p.omega_inverse), id);
    double r2 = fs_max_coeff_diff(compose(p.omega_inverse, p.omega), id);
    p.roundtrip_residual = std::max(r1, r2);
    if (p.roundtrip_residual > 1e-9)
        throw ConfigError("push-forward: omega round-trip residual " +
                          std::to_string(p.roundtrip_residual));
    return p;
}

PolyFunctional pullback(const PolyFunctional& F, const FormalSeries& omega,
                        int max_degree) {
    if (omega.dim != 2 * F.n_modes())
        throw ConfigError("pullback: omega dimension does not match grid");
    PolyFunctional R(F.grid, max_degree);
    R.truncated = F.truncated;
    for (const auto& [m, c] : F.terms) {
        Poly prod;
        prod[Mono{}] = c;
        for (int l = 0; l < m.degree(); ++l) {
            Poly next;
            poly_mul_acc(next, prod, omega.comp[m.v[l]], {1.0, 0.0}, max_degree,
                         &R.truncated);
            prod.swap(next);
        }
        poly_axpy(R.terms, prod);
    }
    return R;
}

FormalSeriesInHbar star_pm(const PolyFunctional& F, const PolyFunctional& G,
                           const PushedStarProduct& product, int hbar_order,
                           int max_degree) {
    if (product.mode != PushedStarProduct::Mode::formal)
        throw ConfigError("star_pm: construction requires formal mode");
    PolyFunctional Fo = pullback(F, product.omega, max_degree);
    PolyFunctional Go = pullback(G, product.omega, max_degree);
    FormalSeriesInHbar S = star_normal(Fo, Go, hbar_order);
    for (auto& coeff : S.coeffs)
        coeff = pullback(coeff, product.omega_inverse, max_degree);
    return S;
}

namespace {

FormalSeriesInHbar hbar_mul(const FormalSeriesInHbar& A,
                            const FormalSeriesInHbar& B,
                            const PushedStarProduct* pm, int hbar_order,
                            int max_degree) {
    GridPtr g = A.coeffs.at(0).grid;
    FormalSeriesInHbar R;
    R.min_power = 0;
    R.coeffs.assign(hbar_order + 1, PolyFunctional(g, max_degree));
    for (size_t i = 0; i < A.coeffs.size(); ++i)
        for (size_t j = 0; j < B.coeffs.size(); ++j) {
            int base = static_cast<int>(i + j);
            if (base > hbar_order) continue;
            FormalSeriesInHbar S =
                pm ? star_pm(A.coeffs[i], B.coeffs[j], *pm, hbar_order - base,
                             max_degree)
                   : star_normal(A.coeffs[i], B.coeffs[j], hbar_order - base);
            for (size_t n = 0; n < S.coeffs.size(); ++n) {
                int p = base + static_cast<int>(n);
                if (p > hbar_order) continue;
                R.coeffs[p] = add(R.coeffs[p], S.coeffs[n]);
            }
        }
    return R;
}

} // namespace

FormalSeriesInHbar star_power(const PolyFunctional& F, int k,
                              const PushedStarProduct* pm, int hbar_order,
                              int max_degree) {
    if (k < 0) throw ConfigError("star_power: k must be >= 0");
    FormalSeriesInHbar R;
    R.min_power = 0;
    R.coeffs.assign(1, PolyFunctional::constant(F.grid, {1.0, 0.0}, max_degree));
    FormalSeriesInHbar Fser;
    Fser.min_power = 0;
    Fser.coeffs.push_back(F);
    for (int i = 0; i < k; ++i) R = hbar_mul(R, Fser, pm, hbar_order, max_degree);
    return R;
}

HamIdentityReport check_ham_identity(const PolyFunctional& H,
                                     const PolyFunctional& H0,
                                     const PushedStarProduct& product, int k,
                                     int hbar_order, int max_degree,
                                     int represented_degree) {
    if (k < 1) throw ConfigError("check_ham_identity: k must be >= 1");
    HamIdentityReport rpt;
    rpt.k = k;
    rpt.represented_degree = represented_degree;
    FormalSeriesInHbar lhs = star_power(H, k, &product, hbar_order, max_degree);
    FormalSeriesInHbar rhs = star_power(H0, k, nullptr, hbar_order, max_degree);
    for (auto& coeff : rhs.coeffs)
        coeff = pullback(coeff, product.omega_inverse, max_degree);
    rpt.represented_residual.assign(hbar_order + 1, 0.0);
    rpt.boundary_residual.assign(hbar_order + 1, 0.0);
    for (int p = 0; p <= hbar_order; ++p) {
        Poly diff = lhs.coeffs[p].terms;
        for (const auto& [m, c] : rhs.coeffs[p].terms) poly_add(diff, m, -c);
        for (const auto& [m, c] : diff) {
            double& slot = m.degree() <= represented_degree
                               ? rpt.represented_residual[p]
                               : rpt.boundary_residual[p];
            slot = std::max(slot, std::abs(c));
        }
    }
    return rpt;
}

void check_ham_identity_numeric(HamIdentityReport& rpt, const Potential& V,
                                int k, const std::vector<double>& horizons,
                                double dt,
                                const std::vector<ModeVector>& samples) {
    rpt.numeric_horizons = horizons;
    rpt.numeric_residual.assign(horizons.size(), 0.0);
    for (size_t h = 0; h < horizons.size(); ++h) {
        for (const ModeVector& v : samples) {
            cplx lhs = std::pow(eval_hamiltonian(v, V), k);
            ModeVector w = wave_operator_inverse(-1, V, horizons[h], dt, v);
            cplx rhs = std::pow(eval_h0(w), k);
            rpt.numeric_residual[h] =
                std::max(rpt.numeric_residual[h], std::abs(lhs - rhs));
        }
    }
}

} // namespace dq
