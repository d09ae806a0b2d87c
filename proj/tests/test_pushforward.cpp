#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dq/pushforward.hpp"
#include "dq/rep.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dq;

namespace {

constexpr double pi = std::numbers::pi;

// Invertible near-identity map on the doubled mode space of `g`.
FormalSeries near_identity(GridPtr g, int cap, uint64_t seed) {
    int dim = 2 * g->n_modes;
    FormalSeries F(dim, cap);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.15, 0.15);
    std::uniform_int_distribution<int> var(0, dim - 1);
    for (int o = 0; o < dim; ++o) {
        F.add_term(o, Mono::var(o), {1.0, 0.0});
        for (int t = 0; t < 3; ++t) {
            std::vector<uint16_t> idx;
            std::uniform_int_distribution<int> deg(2, cap);
            int dd = deg(rng);
            for (int l = 0; l < dd; ++l)
                idx.push_back(static_cast<uint16_t>(var(rng)));
            F.add_term(o, Mono::from_indices(idx), {u(rng), u(rng)});
        }
    }
    return F;
}

PolyFunctional random_functional(GridPtr g, int term_degree, uint64_t seed,
                                 int terms = 5) {
    PolyFunctional F(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> var(0, 2 * g->n_modes - 1);
    std::uniform_int_distribution<int> deg(0, term_degree);
    for (int t = 0; t < terms; ++t) {
        std::vector<uint16_t> idx;
        int dd = deg(rng);
        for (int l = 0; l < dd; ++l)
            idx.push_back(static_cast<uint16_t>(var(rng)));
        F.add_term(Mono::from_indices(idx), {u(rng), u(rng)});
    }
    return F;
}

double series_diff(const FormalSeriesInHbar& A, const FormalSeriesInHbar& B) {
    REQUIRE(A.min_power == B.min_power);
    REQUIRE(A.coeffs.size() == B.coeffs.size());
    double r = 0.0;
    for (size_t i = 0; i < A.coeffs.size(); ++i)
        r = std::max(r, max_coeff_diff(A.coeffs[i], B.coeffs[i]));
    return r;
}

} // namespace

TEST_CASE("pullback along the identity is the identity") {
    GridPtr g = make_grid(1, 4, 2.0 * pi, 1.0);
    FormalSeries id = FormalSeries::identity(2 * g->n_modes, 4);
    PolyFunctional F = random_functional(g, 4, 11);
    CHECK(max_coeff_diff(pullback(F, id, 8), F) < 1e-15);
}

TEST_CASE("pullback is linear") {
    GridPtr g = make_grid(1, 2, 2.0 * pi, 1.0);
    FormalSeries om = near_identity(g, 3, 5);
    PolyFunctional F = random_functional(g, 3, 13);
    PolyFunctional G = random_functional(g, 3, 17);
    PolyFunctional lhs = pullback(add(F, G, {2.0, 0.0}, {0.0, 1.0}), om, 6);
    PolyFunctional rhs = add(pullback(F, om, 6), pullback(G, om, 6),
                             {2.0, 0.0}, {0.0, 1.0});
    CHECK(max_coeff_diff(lhs, rhs) < 1e-13);
}

TEST_CASE("pullback evaluates as composition below the truncation degree") {
    GridPtr g = make_grid(1, 2, 2.0 * pi, 1.0);
    int dim = 2 * g->n_modes;
    // quadratic map, quadratic functional: the composite has degree <= 4
    FormalSeries om(dim, 2);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int o = 0; o < dim; ++o) {
        om.add_term(o, Mono::var(o), {1.0, 0.0});
        om.add_term(o, Mono::from_indices({0, static_cast<uint16_t>(o)}),
                    {u(rng), u(rng)});
    }
    PolyFunctional F = random_functional(g, 2, 23);
    PolyFunctional Fo = pullback(F, om, 4);
    ModeVector v(g);
    for (int q = 0; q < g->n_modes; ++q) {
        v.abar[q] = {u(rng), u(rng)};
        v.a[q] = {u(rng), u(rng)};
    }
    std::vector<cplx> x(dim);
    for (int q = 0; q < g->n_modes; ++q) {
        x[q] = v.abar[q];
        x[g->n_modes + q] = v.a[q];
    }
    std::vector<cplx> y = fs_evaluate(om, x);
    ModeVector w(g);
    for (int q = 0; q < g->n_modes; ++q) {
        w.abar[q] = y[q];
        w.a[q] = y[g->n_modes + q];
    }
    CHECK(std::abs(evaluate(Fo, v) - evaluate(F, w)) < 1e-13);
}

TEST_CASE("pushed product construction checks the round trip") {
    GridPtr g = make_grid(1, 2, 2.0 * pi, 1.0);
    PushedStarProduct p = PushedStarProduct::formal(g, near_identity(g, 3, 7));
    CHECK(p.roundtrip_residual < 1e-11);

    FormalSeries bad(2 * g->n_modes, 3); // zero linear part
    CHECK_THROWS_AS(PushedStarProduct::formal(g, bad), ConfigError);
    FormalSeries wrong_dim = FormalSeries::identity(3, 3);
    CHECK_THROWS_AS(PushedStarProduct::formal(g, wrong_dim), ConfigError);
}

TEST_CASE("star_pm along the identity is the normal star product") {
    GridPtr g = make_grid(1, 2, 2.0 * pi, 1.0);
    PushedStarProduct p =
        PushedStarProduct::formal(g, FormalSeries::identity(2 * g->n_modes, 4));
    PolyFunctional F = random_functional(g, 3, 29);
    PolyFunctional G = random_functional(g, 3, 31);
    CHECK(series_diff(star_pm(F, G, p, 3, 8), star_normal(F, G, 3)) < 1e-12);
}

TEST_CASE("star_power small cases") {
    GridPtr g = make_grid(1, 2, 2.0 * pi, 1.0);
    PolyFunctional F = random_functional(g, 2, 37);
    FormalSeriesInHbar p0 = star_power(F, 0, nullptr, 2, 6);
    REQUIRE(!p0.coeffs.empty());
    CHECK(std::abs(p0.coeffs[0].terms.at(Mono{}) - cplx{1.0, 0.0}) < 1e-15);

    FormalSeriesInHbar p1 = star_power(F, 1, nullptr, 2, 6);
    REQUIRE(p1.coeffs.size() == 3);
    CHECK(max_coeff_diff(p1.coeffs[0], F) < 1e-14);
    CHECK(max_coeff(p1.coeffs[1]) == 0.0);

    FormalSeriesInHbar p2 = star_power(F, 2, nullptr, 2, 6);
    CHECK(max_coeff_diff(p2.coeffs[0], multiply(F, F)) < 1e-13);
    // hbar^1 coefficient is the first normal cochain
    CHECK(max_coeff_diff(p2.coeffs[1], normal_cochain(1, F, F)) < 1e-13);
    CHECK_THROWS_AS(star_power(F, -1, nullptr, 2, 6), ConfigError);
}

TEST_CASE("ham identity is exact for the free field") {
    GridPtr g = make_grid(1, 4, 2.0 * pi, 1.0);
    PolyFunctional H0 = free_hamiltonian(g, 8);
    PushedStarProduct p =
        PushedStarProduct::formal(g, FormalSeries::identity(2 * g->n_modes, 3));
    for (int k : {1, 2}) {
        HamIdentityReport rpt = check_ham_identity(H0, H0, p, k, 2, 6, 6);
        for (double r : rpt.represented_residual) CHECK(r < 1e-12);
        for (double r : rpt.boundary_residual) CHECK(r < 1e-12);
    }
    CHECK_THROWS_AS(check_ham_identity(H0, H0, p, 0, 2, 6, 6), ConfigError);
}

TEST_CASE("ham identity holds at represented degrees for the phi^4 field") {
    GridPtr grid = make_grid(1, 2, 2.0 * pi, 1.0);
    GeneratorSet gens = build_interaction(grid, Potential::phi4(0.2), 4, 10);
    LinearizeOptions opt;
    opt.resonance_tol = 0.01;
    opt.policy = ResonancePolicy::hamiltonian_match;
    opt.hamiltonian = &gens.hamiltonian();
    LinearizeResult r = linearize(gens.rep(), opt);
    PushedStarProduct p = PushedStarProduct::formal(grid, r.omega);
    PolyFunctional H0 = free_hamiltonian(grid, 10);
    for (int k : {1, 2}) {
        HamIdentityReport rpt =
            check_ham_identity(gens.hamiltonian(), H0, p, k, 2, 6, 4);
        for (double res : rpt.represented_residual) CHECK(res < 1e-10);
        // the boundary carries the truncation of Omega, nothing more
        for (double res : rpt.boundary_residual) CHECK(res < 1.0);
    }
}

TEST_CASE("numeric spot check of the ham identity") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    std::vector<ModeVector> samples;
    for (uint64_t s = 0; s < 3; ++s)
        samples.push_back(decompose(sample_small_data(g, 100 + s, 0.05)));

    HamIdentityReport rpt;
    check_ham_identity_numeric(rpt, Potential(), 1, {1.0, 2.0}, 0.01, samples);
    for (double r : rpt.numeric_residual) CHECK(r < 1e-12);

    HamIdentityReport rpt2;
    check_ham_identity_numeric(rpt2, Potential::phi4(0.1), 2, {2.0, 4.0}, 0.01,
                               samples);
    REQUIRE(rpt2.numeric_residual.size() == 2);
    // interacting residual is small at this amplitude but not zero
    CHECK(rpt2.numeric_residual[1] > 0.0);
    CHECK(rpt2.numeric_residual[1] < 1e-4);
}
