#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dq/kleingordon.hpp"
#include "dq/pushforward.hpp"
#include "dq/rep.hpp"

#include <cmath>
#include <numbers>

using namespace dq;

namespace {

constexpr double pi = std::numbers::pi;

// sl(2): h = diag(1,-1), e = E12, f = E21 with [h,e] = 2e, [e,f] = h,
// [h,f] = -2f.
NonlinearRep sl2_rep(int cap) {
    NonlinearRep rep;
    rep.labels = {"h", "e", "f"};
    FormalSeries H(2, cap), E(2, cap), F(2, cap);
    H.add_term(0, Mono::var(0), {1.0, 0.0});
    H.add_term(1, Mono::var(1), {-1.0, 0.0});
    E.add_term(0, Mono::var(1), {1.0, 0.0});
    F.add_term(1, Mono::var(0), {1.0, 0.0});
    rep.images = {H, E, F};
    rep.structure.assign(3, std::vector<std::vector<std::pair<int, double>>>(3));
    auto set = [&](int i, int j, int k, double c) {
        rep.structure[i][j] = {{k, c}};
        rep.structure[j][i] = {{k, -c}};
    };
    set(0, 1, 1, 2.0);  // [h,e] = 2e
    set(1, 2, 0, 1.0);  // [e,f] = h
    set(0, 2, 2, -2.0); // [h,f] = -2f
    return rep;
}

// One-mode toy: T1 = diag(i omega, -i omega) on (x0, x1) = (abar, a),
// T2_abar = +i g (abar + a)^2, T2_a = -i g (abar + a)^2.
NonlinearRep toy_rep(double omega, double g, int cap) {
    NonlinearRep rep;
    rep.labels = {"P0"};
    FormalSeries T(2, cap);
    T.add_term(0, Mono::var(0), I * omega);
    T.add_term(1, Mono::var(1), -I * omega);
    Mono sq[3] = {Mono::from_indices({0, 0}), Mono::from_indices({0, 1}),
                  Mono::from_indices({1, 1})};
    double binom[3] = {1.0, 2.0, 1.0};
    for (int l = 0; l < 3; ++l) {
        T.add_term(0, sq[l], I * g * binom[l]);
        T.add_term(1, sq[l], -I * g * binom[l]);
    }
    rep.images = {T};
    rep.structure.assign(1, std::vector<std::vector<std::pair<int, double>>>(1));
    return rep;
}

} // namespace

TEST_CASE("check_rep accepts an exact matrix representation") {
    ClosureReport rpt = check_rep(sl2_rep(3), 1e-12);
    CHECK(rpt.pairs.size() == 3);
    CHECK(rpt.max_residual < 1e-14);
    for (const auto& p : rpt.pairs) CHECK(!p.flagged);
}

TEST_CASE("check_rep flags a corrupted structure constant") {
    NonlinearRep rep = sl2_rep(3);
    rep.structure[0][1] = {{1, 2.5}}; // should be 2
    ClosureReport rpt = check_rep(rep, 1e-12);
    bool flagged = false;
    for (const auto& p : rpt.pairs) flagged |= p.flagged;
    CHECK(flagged);
    CHECK(rpt.max_residual == doctest::Approx(0.5).epsilon(1e-12));
    // residual is concentrated at degree 1
    for (const auto& p : rpt.pairs)
        if (p.flagged) CHECK(p.residual_by_degree[1] == doctest::Approx(0.5));
}

TEST_CASE("linearize solves the one-mode homological equation in closed form") {
    double omega = 1.3, g = 0.25;
    LinearizeOptions opt;
    opt.resonance_tol = 1e-6;
    LinearizeResult r = linearize(toy_rep(omega, g, 2), opt);

    // Omega^2_{o,alpha} = T^2_{o,alpha} / (sum lambda_alpha - lambda_o).
    Mono sq[3] = {Mono::from_indices({0, 0}), Mono::from_indices({0, 1}),
                  Mono::from_indices({1, 1})};
    cplx want_a[3] = {{-g / (3.0 * omega), 0.0},
                      {-2.0 * g / omega, 0.0},
                      {g / omega, 0.0}};
    cplx want_abar[3] = {{g / omega, 0.0},
                         {-2.0 * g / omega, 0.0},
                         {-g / (3.0 * omega), 0.0}};
    for (int l = 0; l < 3; ++l) {
        CHECK(std::abs(r.omega.comp[1].at(sq[l]) - want_a[l]) < 1e-12);
        CHECK(std::abs(r.omega.comp[0].at(sq[l]) - want_abar[l]) < 1e-12);
    }
    CHECK(r.resonances.empty());
    CHECK(r.min_nonresonant_denom == doctest::Approx(omega).epsilon(1e-12));
    // intertwining residual for P0 vanishes at the solved degree
    CHECK(r.residuals[0][2] < 1e-12);

    // Dual route: T compose Omega - Omega bullet T1 = 0 at degree 2.
    NonlinearRep toy = toy_rep(omega, g, 2);
    const FormalSeries& T = toy.images[0];
    FormalSeries E = fs_add(compose(T, r.omega),
                            bullet(r.omega, T.homogeneous(1)), {1, 0}, {-1, 0});
    CHECK(fs_max_coeff_deg(E, 2) < 1e-13);
}

TEST_CASE("degree-3 resonance raises with the error policy") {
    LinearizeOptions opt;
    opt.resonance_tol = 1e-6;
    CHECK_THROWS_AS(linearize(toy_rep(1.0, 0.3, 3), opt), ResonanceError);
}

TEST_CASE("degree-3 resonance is recorded with the zero policy") {
    LinearizeOptions opt;
    opt.resonance_tol = 1e-6;
    opt.policy = ResonancePolicy::zero;
    LinearizeResult r = linearize(toy_rep(1.0, 0.3, 3), opt);
    REQUIRE(!r.resonances.empty());
    for (const auto& rec : r.resonances) {
        CHECK(rec.degree == 3);
        CHECK(rec.denom_abs < 1e-6);
        CHECK(rec.action == "zeroed");
        CHECK(rec.numer_abs > 0.0);
    }
    // the resonant obstruction shows up in the reported residual, degree 3
    CHECK(r.residuals[0][3] > 1e-6);
    CHECK(r.residuals[0][2] < 1e-12);
}

TEST_CASE("linearize rejects a non-diagonal linear part") {
    NonlinearRep rep;
    rep.labels = {"P0"};
    FormalSeries T(2, 2);
    T.add_term(0, Mono::var(1), {1.0, 0.0});
    T.add_term(1, Mono::var(0), {1.0, 0.0});
    rep.images = {T};
    rep.structure.assign(1, std::vector<std::vector<std::pair<int, double>>>(1));
    CHECK_THROWS_AS(linearize(rep, LinearizeOptions{}), ConfigError);
}

TEST_CASE("hamiltonian_match requires the Hamiltonian") {
    LinearizeOptions opt;
    opt.policy = ResonancePolicy::hamiltonian_match;
    CHECK_THROWS_AS(linearize(toy_rep(1.0, 0.3, 3), opt), ConfigError);
}

TEST_CASE("hamiltonian_match transports H onto H0 through Omega") {
    GridPtr grid = make_grid(1, 2, 2.0 * pi, 1.0);
    GeneratorSet gens = build_interaction(grid, Potential::phi4(0.2), 4, 10);
    LinearizeOptions opt;
    opt.resonance_tol = 0.01;
    opt.policy = ResonancePolicy::hamiltonian_match;
    opt.hamiltonian = &gens.hamiltonian();
    LinearizeResult r = linearize(gens.rep(), opt);
    REQUIRE(!r.resonances.empty());
    bool matched = false;
    for (const auto& rec : r.resonances) matched |= rec.action == "hamiltonian_match";
    CHECK(matched);
    // P0 intertwining holds at the non-resonant degree 2; the resonant
    // obstructions at odd degrees are genuine and stay in the residual report.
    int ip0 = 0;
    for (size_t g = 0; g < r.labels.size(); ++g)
        if (r.labels[g] == "P0") ip0 = static_cast<int>(g);
    CHECK(r.residuals[ip0][2] < 1e-10);
    // and H compose Omega agrees with H0 on the solved degrees
    PolyFunctional Ho = pullback(gens.hamiltonian(), r.omega, 5);
    PolyFunctional H0 = free_hamiltonian(grid, 10);
    Poly diff = Ho.terms;
    for (const auto& [m, c] : H0.terms) poly_add(diff, m, -c);
    double worst = 0.0;
    for (const auto& [m, c] : diff)
        if (m.degree() >= 3 && m.degree() <= 4)
            worst = std::max(worst, std::abs(c));
    CHECK(worst < 1e-9);
}
