#pragma once

#include "dq/grid.hpp"
#include "dq/mono.hpp"

#include <vector>

namespace dq {

// Polynomial functional on the truncated phase space.  Variables 0..N-1 are
// the abar modes, N..2N-1 the a modes; monomial coefficients are stored in
// canonical sorted form, so F(abar,a) = sum_m c_m * prod vars(m).
struct PolyFunctional {
    GridPtr grid;
    int max_degree = Mono::cap;
    bool truncated = false; // set when a product dropped overflow terms
    Poly terms;

    PolyFunctional() = default;
    explicit PolyFunctional(GridPtr g, int maxdeg = Mono::cap)
        : grid(std::move(g)), max_degree(maxdeg) {}

    int n_modes() const { return grid->n_modes; }
    int var_abar(int i) const { return i; }
    int var_a(int i) const { return grid->n_modes + i; }

    static PolyFunctional constant(GridPtr g, cplx c, int maxdeg = Mono::cap);
    static PolyFunctional coordinate_abar(GridPtr g, int i, int maxdeg = Mono::cap);
    static PolyFunctional coordinate_a(GridPtr g, int i, int maxdeg = Mono::cap);

    void add_term(const Mono& m, cplx c) { poly_add(terms, m, c); }

    int a_degree() const;    // max a-degree over terms
    int abar_degree() const; // max abar-degree over terms
};

// Formal series in hbar of polynomial functionals; powers run
// min_power .. min_power + coeffs.size() - 1 (min_power < 0 marks a
// Laurent-truncated object, which only star_exponential produces).
struct FormalSeriesInHbar {
    int min_power = 0;
    std::vector<PolyFunctional> coeffs;

    const PolyFunctional* at_power(int p) const {
        int i = p - min_power;
        if (i < 0 || i >= static_cast<int>(coeffs.size())) return nullptr;
        return &coeffs[i];
    }
};

cplx evaluate(const PolyFunctional& F, const ModeVector& v);
PolyFunctional multiply(const PolyFunctional& F, const PolyFunctional& G);
PolyFunctional add(const PolyFunctional& F, const PolyFunctional& G,
                   cplx sF = {1, 0}, cplx sG = {1, 0});

enum class Slot { a, abar };

// Normalized functional derivative D = sqrt(2 omega_i)/w * d/d(slot_i).
PolyFunctional dnorm(const PolyFunctional& F, Slot slot, int mode_index);

PolyFunctional poisson(const PolyFunctional& F, const PolyFunctional& G);

// Cochain C_n of the normal star-product (deformation parameter i*hbar/2
// absorbed): (1/n!) sum_{i_1..i_n} prod (2 omega/w) d^n F/da * d^n G/dabar.
PolyFunctional normal_cochain(int n, const PolyFunctional& F,
                              const PolyFunctional& G);

FormalSeriesInHbar star_normal(const PolyFunctional& F, const PolyFunctional& G,
                               int hbar_order);

// (2/(i hbar)) (F * G - G * F) as a series starting at hbar^0.
FormalSeriesInHbar star_bracket(const PolyFunctional& F, const PolyFunctional& G,
                                int hbar_order);

FormalSeriesInHbar hbar_series_mul(const FormalSeriesInHbar& A,
                                   const FormalSeriesInHbar& B, int hbar_order);

struct StarExponential {
    FormalSeriesInHbar series;
    // hbar power -> max coefficient magnitude contributed by the last term,
    // the convergence diagnostic requested for Laurent-truncated objects.
    std::map<int, double> last_term_magnitude;
};

StarExponential star_exponential(const PolyFunctional& F, double t,
                                 int hbar_order, int term_count,
                                 double coeff_bound = 1e100);

// H0 = sum_i (w/2) abar_i a_i.
PolyFunctional free_hamiltonian(GridPtr g, int maxdeg = Mono::cap);

double max_coeff(const PolyFunctional& F);
double max_coeff_diff(const PolyFunctional& F, const PolyFunctional& G);

} // namespace dq
