#include "dq/formal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>

namespace dq {

FormalSeries FormalSeries::identity(int dim, int cap) {
    FormalSeries F(dim, cap);
    for (int i = 0; i < dim; ++i) F.add_term(i, Mono::var(i), {1.0, 0.0});
    return F;
}

FormalSeries FormalSeries::homogeneous(int n) const {
    FormalSeries R(dim, degree_cap);
    for (int o = 0; o < dim; ++o)
        for (const auto& [m, c] : comp[o])
            if (m.degree() == n) R.add_term(o, m, c);
    return R;
}

FormalSeries FormalSeries::truncate(int cap) const {
    FormalSeries R(dim, cap);
    for (int o = 0; o < dim; ++o)
        for (const auto& [m, c] : comp[o])
            if (m.degree() <= cap) R.add_term(o, m, c);
    return R;
}

bool FormalSeries::is_zero(double tol) const {
    for (const auto& p : comp)
        for (const auto& [m, c] : p)
            if (std::abs(c) > tol) return false;
    return true;
}

FormalSeries fs_add(const FormalSeries& F, const FormalSeries& H, cplx sF,
                    cplx sH) {
    if (F.dim != H.dim) throw ConfigError("formal series: dimension mismatch");
    FormalSeries R(F.dim, std::min(F.degree_cap, H.degree_cap));
    for (int o = 0; o < F.dim; ++o) {
        poly_axpy(R.comp[o], F.comp[o], sF);
        poly_axpy(R.comp[o], H.comp[o], sH);
    }
    return R;
}

namespace {

// Number of distinct slot orderings of a sorted multi-index: p! / prod(mult!).
double ordering_count(const Mono& m) {
    double num = 1.0;
    for (int j = 2; j <= m.degree(); ++j) num *= j;
    for (const auto& [v, mult] : m.factors())
        for (int j = 2; j <= mult; ++j) num /= j;
    return num;
}

// Homogeneous parts of H, indexed by degree, per output component.
std::vector<std::vector<Poly>> homog_parts(const FormalSeries& H) {
    std::vector<std::vector<Poly>> parts(H.degree_cap + 1,
                                         std::vector<Poly>(H.dim));
    for (int o = 0; o < H.dim; ++o)
        for (const auto& [m, c] : H.comp[o])
            if (m.degree() <= H.degree_cap) parts[m.degree()][o][m] = c;
    return parts;
}

// Ordered compositions of n into p parts >= 1.
void compositions(int n, int p, std::vector<int>& cur,
                  const std::function<void(const std::vector<int>&)>& emit) {
    if (p == 1) {
        if (n >= 1) {
            cur.push_back(n);
            emit(cur);
            cur.pop_back();
        }
        return;
    }
    for (int first = 1; first <= n - (p - 1); ++first) {
        cur.push_back(first);
        compositions(n - first, p - 1, cur, emit);
        cur.pop_back();
    }
}

} // namespace

FormalSeries compose(const FormalSeries& F, const FormalSeries& H) {
    if (F.dim != H.dim) throw ConfigError("compose: dimension mismatch");
    int cap = std::min(F.degree_cap, H.degree_cap);
    FormalSeries R(F.dim, cap);
    auto parts = homog_parts(H);

    for (int o = 0; o < F.dim; ++o) {
        for (const auto& [mu, c] : F.comp[o]) {
            int p = mu.degree();
            if (p == 0 || p > cap) continue;
            cplx t = c / ordering_count(mu); // per-ordered-tuple tensor entry
            std::vector<uint16_t> base = mu.indices();
            // Eq. (A.1): sum over compositions n_1+...+n_p = n <= cap of
            // f^p(h^{n_1} x ... x h^{n_p}) over all tensor slot orderings.
            for (int n = p; n <= cap; ++n) {
                std::vector<int> cur;
                compositions(
                    n, p, cur, [&](const std::vector<int>& comp_parts) {
                        std::vector<uint16_t> perm = base;
                        do {
                            Poly prod;
                            prod[Mono{}] = t;
                            bool dead = false;
                            for (int l = 0; l < p && !dead; ++l) {
                                const Poly& hp = parts[comp_parts[l]][perm[l]];
                                if (hp.empty()) {
                                    dead = true;
                                    break;
                                }
                                Poly next;
                                poly_mul_acc(next, prod, hp, {1.0, 0.0},
                                             Mono::cap, nullptr);
                                prod.swap(next);
                            }
                            if (!dead) poly_axpy(R.comp[o], prod);
                        } while (std::next_permutation(perm.begin(), perm.end()));
                    });
            }
        }
    }
    return R;
}

FormalSeries bullet(const FormalSeries& F, const FormalSeries& H) {
    if (F.dim != H.dim) throw ConfigError("bullet: dimension mismatch");
    int cap = std::min(F.degree_cap, H.degree_cap);
    FormalSeries R(F.dim, cap);
    auto parts = homog_parts(H);

    for (int o = 0; o < F.dim; ++o) {
        for (const auto& [mu, c] : F.comp[o]) {
            int p = mu.degree();
            if (p == 0) continue;
            cplx t = c / ordering_count(mu);
            std::vector<uint16_t> base = mu.indices();
            // Eq. (A.2): insert h^{q} into one slot, identity in the others,
            // summed over slots and tensor orderings; output degree p-1+q.
            for (int q = 1; p - 1 + q <= cap && q <= H.degree_cap; ++q) {
                std::vector<uint16_t> perm = base;
                do {
                    for (int slot = 0; slot < p; ++slot) {
                        const Poly& hp = parts[q][perm[slot]];
                        if (hp.empty()) continue;
                        std::vector<uint16_t> rest;
                        rest.reserve(p - 1);
                        for (int l = 0; l < p; ++l)
                            if (l != slot) rest.push_back(perm[l]);
                        Mono rem = Mono::from_indices(rest);
                        for (const auto& [hm, hc] : hp) {
                            Mono m;
                            if (!Mono::mul(rem, hm, m)) continue;
                            poly_add(R.comp[o], m, t * hc);
                        }
                    }
                } while (std::next_permutation(perm.begin(), perm.end()));
            }
        }
    }
    return R;
}

FormalSeries lie_bracket(const FormalSeries& F, const FormalSeries& H) {
    return fs_add(bullet(F, H), bullet(H, F), {1, 0}, {-1, 0});
}

FormalSeries invert(const FormalSeries& F) {
    int dim = F.dim, cap = F.degree_cap;
    Eigen::MatrixXcd f1 = Eigen::MatrixXcd::Zero(dim, dim);
    for (int o = 0; o < dim; ++o)
        for (const auto& [m, c] : F.comp[o])
            if (m.degree() == 1) f1(o, m.v[0]) = c;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(f1);
    if (!lu.isInvertible())
        throw ConfigError("invert: not invertible at linear order");
    Eigen::MatrixXcd f1inv = lu.inverse();

    FormalSeries G(dim, cap);
    for (int o = 0; o < dim; ++o)
        for (int j = 0; j < dim; ++j)
            if (f1inv(o, j) != cplx{0.0, 0.0})
                G.add_term(o, Mono::var(j), f1inv(o, j));

    for (int n = 2; n <= cap; ++n) {
        FormalSeries Rn = compose(F, G).homogeneous(n);
        for (int o = 0; o < dim; ++o)
            for (int j = 0; j < dim; ++j) {
                if (f1inv(o, j) == cplx{0.0, 0.0}) continue;
                for (const auto& [m, c] : Rn.comp[j])
                    poly_add(G.comp[o], m, -f1inv(o, j) * c);
            }
    }
    return G;
}

std::vector<cplx> fs_evaluate(const FormalSeries& F, const std::vector<cplx>& x) {
    if (static_cast<int>(x.size()) != F.dim)
        throw ConfigError("fs_evaluate: dimension mismatch");
    std::vector<cplx> y(F.dim, cplx{});
    for (int o = 0; o < F.dim; ++o)
        for (const auto& [m, c] : F.comp[o]) {
            cplx t = c;
            for (int l = 0; l < m.degree(); ++l) t *= x[m.v[l]];
            y[o] += t;
        }
    return y;
}

FormalSeries substitute_oracle(const FormalSeries& F, const FormalSeries& H) {
    int cap = std::min(F.degree_cap, H.degree_cap);
    FormalSeries R(F.dim, cap);
    for (int o = 0; o < F.dim; ++o)
        for (const auto& [m, c] : F.comp[o]) {
            Poly prod;
            prod[Mono{}] = c;
            for (int l = 0; l < m.degree(); ++l) {
                Poly next;
                poly_mul_acc(next, prod, H.comp[m.v[l]], {1.0, 0.0}, cap,
                             nullptr);
                prod.swap(next);
            }
            poly_axpy(R.comp[o], prod);
        }
    return R;
}

double fs_max_coeff(const FormalSeries& F) {
    double r = 0.0;
    for (const auto& p : F.comp) r = std::max(r, poly_max_abs(p));
    return r;
}

double fs_max_coeff_deg(const FormalSeries& F, int degree) {
    double r = 0.0;
    for (const auto& p : F.comp)
        for (const auto& [m, c] : p)
            if (m.degree() == degree) r = std::max(r, std::abs(c));
    return r;
}

double fs_max_coeff_diff(const FormalSeries& F, const FormalSeries& H) {
    double r = 0.0;
    for (int o = 0; o < F.dim; ++o) {
        Poly d = F.comp[o];
        for (const auto& [m, c] : H.comp[o]) poly_add(d, m, -c);
        r = std::max(r, poly_max_abs(d));
    }
    return r;
}

} // namespace dq
