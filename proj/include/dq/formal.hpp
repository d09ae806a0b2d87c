#pragma once

#include "dq/common.hpp"
#include "dq/mono.hpp"

#include <vector>

namespace dq {

// Truncated formal series F = sum_{n>=1} f^n of symmetric n-linear maps on
// C^dim, stored per output component as a polynomial over the coordinates.
// The coefficient of a sorted multi-index monomial equals the symmetric
// tensor entry summed over distinct slot orderings.
struct FormalSeries {
    int dim = 0;
    int degree_cap = 1;
    std::vector<Poly> comp; // size dim, monomial degrees 1..degree_cap

    FormalSeries() = default;
    FormalSeries(int dim_, int cap) : dim(dim_), degree_cap(cap), comp(dim_) {}

    static FormalSeries identity(int dim, int cap);

    void add_term(int out, const Mono& m, cplx c) { poly_add(comp[out], m, c); }

    // Homogeneous degree-n part.
    FormalSeries homogeneous(int n) const;
    FormalSeries truncate(int cap) const;
    bool is_zero(double tol = 0.0) const;
};

FormalSeries fs_add(const FormalSeries& F, const FormalSeries& H,
                    cplx sF = {1, 0}, cplx sH = {1, 0});

// Eq. (A.1): composition of formal series, truncated at the common cap.
FormalSeries compose(const FormalSeries& F, const FormalSeries& H);

// Eq. (A.2): the bullet operation (slot-wise insertion of H into F).
FormalSeries bullet(const FormalSeries& F, const FormalSeries& H);

// [F,H] = F bullet H - H bullet F.
FormalSeries lie_bracket(const FormalSeries& F, const FormalSeries& H);

// Compositional inverse; throws if the linear part is singular.
FormalSeries invert(const FormalSeries& F);

// Coordinate evaluation F(x); exact monomial sum.
std::vector<cplx> fs_evaluate(const FormalSeries& F, const std::vector<cplx>& x);

// Brute-force coordinate substitution F(H(x)); test oracle for compose.
FormalSeries substitute_oracle(const FormalSeries& F, const FormalSeries& H);

double fs_max_coeff(const FormalSeries& F);
double fs_max_coeff_deg(const FormalSeries& F, int degree);
double fs_max_coeff_diff(const FormalSeries& F, const FormalSeries& H);

} // namespace dq
