#pragma once

#include "dq/common.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace dq {

// Monomial over a finite variable set, stored as the sorted list of variable
// indices with repetition.  Degree is capped so products of the functionals
// and series used throughout stay representable.
struct Mono {
    static constexpr int cap = 12;

    std::array<uint16_t, cap> v{};
    uint8_t deg = 0;

    Mono() = default;

    static Mono var(int i) {
        Mono m;
        m.v[0] = static_cast<uint16_t>(i);
        m.deg = 1;
        return m;
    }

    static Mono from_indices(std::vector<uint16_t> idx) {
        std::sort(idx.begin(), idx.end());
        Mono m;
        m.deg = static_cast<uint8_t>(idx.size());
        std::copy(idx.begin(), idx.end(), m.v.begin());
        return m;
    }

    int degree() const { return deg; }

    bool operator==(const Mono& o) const {
        if (deg != o.deg) return false;
        return std::equal(v.begin(), v.begin() + deg, o.v.begin());
    }
    bool operator<(const Mono& o) const {
        if (deg != o.deg) return deg < o.deg;
        return std::lexicographical_compare(v.begin(), v.begin() + deg,
                                            o.v.begin(), o.v.begin() + o.deg);
    }

    // Multiplicity of variable i.
    int count(int i) const {
        return static_cast<int>(
            std::count(v.begin(), v.begin() + deg, static_cast<uint16_t>(i)));
    }

    // Distinct variables with multiplicities.
    std::vector<std::pair<uint16_t, int>> factors() const {
        std::vector<std::pair<uint16_t, int>> f;
        for (int i = 0; i < deg;) {
            int j = i;
            while (j < deg && v[j] == v[i]) ++j;
            f.emplace_back(v[i], j - i);
            i = j;
        }
        return f;
    }

    std::vector<uint16_t> indices() const { return {v.begin(), v.begin() + deg}; }

    // Product of two monomials; returns false if the degree cap is exceeded.
    static bool mul(const Mono& a, const Mono& b, Mono& out) {
        if (a.deg + b.deg > cap) return false;
        out.deg = static_cast<uint8_t>(a.deg + b.deg);
        std::merge(a.v.begin(), a.v.begin() + a.deg, b.v.begin(),
                   b.v.begin() + b.deg, out.v.begin());
        return true;
    }

    bool mul_var(int i, Mono& out) const {
        if (deg + 1 > cap) return false;
        Mono m = Mono::var(i);
        return mul(*this, m, out);
    }

    // Remove one copy of variable i; false if absent.
    bool remove_var(int i, Mono& out) const {
        auto it = std::find(v.begin(), v.begin() + deg, static_cast<uint16_t>(i));
        if (it == v.begin() + deg) return false;
        out = *this;
        auto pos = out.v.begin() + (it - v.begin());
        std::copy(pos + 1, out.v.begin() + deg, pos);
        out.deg = static_cast<uint8_t>(deg - 1);
        out.v[out.deg] = 0;
        return true;
    }
};

using Poly = std::map<Mono, cplx>;

inline void poly_add(Poly& dst, const Mono& m, cplx c) {
    if (c == cplx{0.0, 0.0}) return;
    auto [it, fresh] = dst.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second == cplx{0.0, 0.0}) dst.erase(it);
    }
}

inline void poly_axpy(Poly& dst, const Poly& src, cplx s = {1.0, 0.0}) {
    for (const auto& [m, c] : src) poly_add(dst, m, s * c);
}

// dst += s * a * b, truncated at max_degree; sets *truncated on overflow.
inline void poly_mul_acc(Poly& dst, const Poly& a, const Poly& b, cplx s,
                         int max_degree, bool* truncated) {
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            Mono m;
            if (ma.degree() + mb.degree() > max_degree || !Mono::mul(ma, mb, m)) {
                if (truncated) *truncated = true;
                continue;
            }
            poly_add(dst, m, s * ca * cb);
        }
}

inline double poly_max_abs(const Poly& p) {
    double r = 0.0;
    for (const auto& [m, c] : p) r = std::max(r, std::abs(c));
    return r;
}

inline void poly_prune(Poly& p, double eps) {
    for (auto it = p.begin(); it != p.end();)
        it = (std::abs(it->second) <= eps) ? p.erase(it) : std::next(it);
}

} // namespace dq
