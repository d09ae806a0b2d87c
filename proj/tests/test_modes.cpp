#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dq/grid.hpp"
#include "dq/kleingordon.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dq;

namespace {

constexpr double pi = std::numbers::pi;

CauchyData rand_cauchy(GridPtr g, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CauchyData d(g);
    for (auto& x : d.phi) x = u(rng);
    for (auto& x : d.pi) x = u(rng);
    return d;
}

double data_dist(const CauchyData& a, const CauchyData& b) {
    double r = 0.0;
    for (size_t i = 0; i < a.phi.size(); ++i) {
        r = std::max(r, std::abs(a.phi[i] - b.phi[i]));
        r = std::max(r, std::abs(a.pi[i] - b.pi[i]));
    }
    return r;
}

} // namespace

TEST_CASE("grid bookkeeping") {
    GridPtr g = make_grid(2, 8, 5.0, 1.3);
    CHECK(g->n_modes == 64);
    CHECK(g->weight == doctest::Approx(std::pow(2.0 * pi / 5.0, 2)).epsilon(1e-15));
    CHECK(g->z_of_bin(0) == 0);
    CHECK(g->z_of_bin(3) == 3);
    CHECK(g->z_of_bin(4) == -4);
    CHECK(g->z_of_bin(7) == -1);
    for (int b = 0; b < 8; ++b) CHECK(g->bin_of_z(g->z_of_bin(b)) == b);
    for (int i = 0; i < g->n_modes; ++i) {
        CHECK(g->index_of_z(g->zs[i]) == i);
        double k2 = 0.0;
        for (int ax = 0; ax < 2; ++ax) {
            double k = 2.0 * pi / 5.0 * g->zs[i][ax];
            k2 += k * k;
            CHECK(g->momenta[i][ax] == doctest::Approx(k).epsilon(1e-15));
        }
        CHECK(g->omegas[i] == doctest::Approx(std::sqrt(k2 + 1.3 * 1.3)).epsilon(1e-15));
    }
}

TEST_CASE("reflect is an involution fixing Nyquist") {
    for (int d : {1, 2}) {
        GridPtr g = make_grid(d, 6, 2.0 * pi, 1.0);
        for (int i = 0; i < g->n_modes; ++i) {
            int r = g->reflect(i);
            CHECK(g->reflect(r) == i);
            for (int ax = 0; ax < d; ++ax) {
                int z = g->zs[i][ax];
                CHECK(g->zs[r][ax] == (z == -3 ? z : -z));
            }
        }
    }
}

TEST_CASE("grid hash distinguishes parameters") {
    GridPtr a = make_grid(1, 8, 2.0 * pi, 1.0);
    GridPtr b = make_grid(1, 8, 2.0 * pi, 1.0);
    CHECK(a->hash() == b->hash());
    CHECK(a->hash() != make_grid(1, 16, 2.0 * pi, 1.0)->hash());
    CHECK(a->hash() != make_grid(1, 8, 2.0 * pi, 1.5)->hash());
    CHECK(a->hash() != make_grid(1, 8, 5.0, 1.0)->hash());
}

TEST_CASE("grid rejects invalid parameters") {
    CHECK_THROWS_AS(make_grid(0, 8, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 7, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 8, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 8, 1.0, 0.0), ConfigError);
}

TEST_CASE("fft round-trip") {
    GridPtr g = make_grid(2, 4, 3.0, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<cplx> v(g->n_modes);
    for (auto& x : v) x = {u(rng), u(rng)};
    auto w = v;
    fft(*g, w, -1);
    fft(*g, w, +1);
    for (int i = 0; i < g->n_modes; ++i)
        CHECK(std::abs(w[i] / double(g->n_modes) - v[i]) < 1e-14);
}

TEST_CASE("decompose/reconstruct round-trips") {
    int cases[][2] = {{1, 8}, {1, 16}, {1, 32}, {2, 8}, {2, 16}};
    for (auto [d, n] : cases) {
        GridPtr g = make_grid(d, n, 4.0, 0.8);
        CauchyData data = rand_cauchy(g, 100 + n + d);
        ModeVector mv = decompose(data);
        CHECK(reality_residual(mv) < 1e-12);
        CauchyData back = reconstruct(mv);
        CHECK(data_dist(back, data) < 1e-12);
    }
}

TEST_CASE("complex decompose/reconstruct round-trips without reality") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CCauchyData data(g);
    for (auto& x : data.phi) x = {u(rng), u(rng)};
    for (auto& x : data.pi) x = {u(rng), u(rng)};
    ModeVector mv = decompose_c(data);
    CHECK(reality_residual(mv) > 1e-3); // generic complex data
    CCauchyData back = reconstruct_c(mv);
    for (int i = 0; i < g->n_modes; ++i) {
        CHECK(std::abs(back.phi[i] - data.phi[i]) < 1e-12);
        CHECK(std::abs(back.pi[i] - data.pi[i]) < 1e-12);
    }
}

TEST_CASE("single cosine decomposes onto one mode pair") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    double A = 0.7;
    CauchyData data(g);
    for (int x = 0; x < 8; ++x) data.phi[x] = A * std::cos(g->dx * x);
    ModeVector mv = decompose(data);
    int i1 = g->index_of_z({1, 0, 0});
    int im1 = g->index_of_z({-1, 0, 0});
    double omega = std::sqrt(2.0);
    // phi-hat(+-1) = dx * n * A / 2 = L A / 2; a_q = (dx/sqrt(2pi)) omega phihat-sum.
    double expect = g->dx * omega * A * 4.0 / std::sqrt(2.0 * pi);
    for (int q = 0; q < 8; ++q) {
        cplx want = (q == i1 || q == im1) ? cplx{expect, 0.0} : cplx{0.0, 0.0};
        CHECK(std::abs(mv.a[q] - want) < 1e-13);
        CHECK(std::abs(mv.abar[q] - std::conj(want)) < 1e-13);
    }
    // Field energy of A cos(x): (A^2/2) omega^2 * L/2.
    double E = A * A / 2.0 * omega * omega * pi;
    CHECK(std::abs(eval_h0(mv).real() - E) < 1e-12);
}

TEST_CASE("reconstruction synthesis formula for one mode") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    int i1 = g->index_of_z({1, 0, 0});
    cplx alpha{0.3, -0.4};
    ModeVector mv(g);
    mv.a[i1] = alpha;
    mv.abar[i1] = std::conj(alpha);
    CauchyData cd = reconstruct(mv);
    double omega = std::sqrt(2.0);
    double s = g->weight / (2.0 * std::sqrt(2.0 * pi));
    for (int x = 0; x < 8; ++x) {
        cplx e = std::exp(I * (g->dx * x));
        CHECK(std::abs(cd.phi[x] - 2.0 * s / omega * (alpha * e).real()) < 1e-14);
        CHECK(std::abs(cd.pi[x] - 2.0 * s * (alpha * e).imag()) < 1e-14);
    }
}

TEST_CASE("reconstruct rejects reality violations") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    ModeVector mv(g);
    mv.a[2] = {1.0, 0.0};
    mv.abar[2] = {0.5, 0.0};
    CHECK_THROWS_AS(reconstruct(mv), ConfigError);
}

TEST_CASE("to_pm matches the holomorphic-coordinate formula") {
    GridPtr g = make_grid(1, 8, 2.0 * pi, 1.0);
    int i1 = g->index_of_z({1, 0, 0});
    cplx alpha{0.2, 0.5}, beta{-0.1, 0.3};
    ModeVector mv(g);
    mv.a[i1] = alpha;
    mv.abar[i1] = beta; // independent coordinates, no reality imposed
    ModeVector pm = to_pm(mv);
    CHECK(pm.kind == ModeKind::pm);
    double s = g->weight / std::sqrt(2.0 * pi);
    for (int x = 0; x < 8; ++x) {
        cplx ep = std::exp(I * (g->dx * x));
        CHECK(std::abs(pm.abar[x] - I * s * beta / ep) < 1e-14);  // a_+
        CHECK(std::abs(pm.a[x] + I * s * alpha * ep) < 1e-14);    // a_-
    }
    ModeVector back = from_pm(pm);
    CHECK(back.kind == ModeKind::abar_a);
    for (int q = 0; q < 8; ++q) {
        CHECK(std::abs(back.a[q] - mv.a[q]) < 1e-14);
        CHECK(std::abs(back.abar[q] - mv.abar[q]) < 1e-14);
    }
}

TEST_CASE("pm round-trip on random vectors, d=2") {
    GridPtr g = make_grid(2, 8, 4.0, 1.1);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ModeVector mv(g);
    for (int q = 0; q < g->n_modes; ++q) {
        mv.a[q] = {u(rng), u(rng)};
        mv.abar[q] = {u(rng), u(rng)};
    }
    ModeVector back = from_pm(to_pm(mv));
    for (int q = 0; q < g->n_modes; ++q) {
        CHECK(std::abs(back.a[q] - mv.a[q]) < 1e-13);
        CHECK(std::abs(back.abar[q] - mv.abar[q]) < 1e-13);
    }
    CHECK_THROWS_AS(to_pm(to_pm(mv)), ConfigError);
    CHECK_THROWS_AS(from_pm(mv), ConfigError);
}

TEST_CASE("free Hamiltonian is invariant under the pm change of coordinates") {
    // H0 evaluated on (abar, a) equals the quadratic form it pushes to; the
    // pm round-trip must preserve it exactly.
    GridPtr g = make_grid(1, 16, 2.0 * pi, 1.0);
    CauchyData data = rand_cauchy(g, 42);
    ModeVector mv = decompose(data);
    double e = eval_h0(mv).real();
    ModeVector back = from_pm(to_pm(mv));
    CHECK(std::abs(eval_h0(back).real() - e) < 1e-12 * std::abs(e));
}
