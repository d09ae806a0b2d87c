#include "dq/rep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace dq {

int NonlinearRep::index_of(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
        throw ConfigError("rep: unknown generator label " + label);
    return static_cast<int>(it - labels.begin());
}

ClosureReport check_rep(const NonlinearRep& rep, double tolerance) {
    ClosureReport rpt;
    rpt.tolerance = tolerance;
    int n_gen = static_cast<int>(rep.labels.size());
    for (int i = 0; i < n_gen; ++i)
        for (int j = i + 1; j < n_gen; ++j) {
            FormalSeries B = lie_bracket(rep.images[i], rep.images[j]);
            for (const auto& [k, c] : rep.structure[i][j])
                B = fs_add(B, rep.images[k], {1, 0}, {-c, 0});
            ClosureReport::Pair pr;
            pr.i = i;
            pr.j = j;
            pr.residual_by_degree.assign(B.degree_cap + 1, 0.0);
            for (int n = 1; n <= B.degree_cap; ++n)
                pr.residual_by_degree[n] = fs_max_coeff_deg(B, n);
            pr.max_residual = fs_max_coeff(B);
            pr.flagged = pr.max_residual > tolerance;
            rpt.max_residual = std::max(rpt.max_residual, pr.max_residual);
            rpt.pairs.push_back(std::move(pr));
        }
    return rpt;
}

namespace {

// Polynomial substitution of a functional's terms by the series components,
// truncated at max_degree (used by the hamiltonian_match kernel policy).
Poly substitute_poly(const Poly& terms, const FormalSeries& omega,
                     int max_degree) {
    Poly R;
    for (const auto& [m, c] : terms) {
        Poly prod;
        prod[Mono{}] = c;
        for (int l = 0; l < m.degree(); ++l) {
            Poly next;
            poly_mul_acc(next, prod, omega.comp[m.v[l]], {1.0, 0.0}, max_degree,
                         nullptr);
            prod.swap(next);
        }
        poly_axpy(R, prod);
    }
    return R;
}

std::string tuple_string(int out, const Mono& m) {
    std::ostringstream os;
    os << "out=" << out << " in=(";
    for (int l = 0; l < m.degree(); ++l) {
        if (l) os << ',';
        os << m.v[l];
    }
    os << ')';
    return os.str();
}

} // namespace

LinearizeResult linearize(const NonlinearRep& rep, const LinearizeOptions& opt) {
    int p0 = rep.index_of(opt.p0_label);
    const FormalSeries& T = rep.images[p0];
    int dim = T.dim, cap = T.degree_cap;

    // T1_{P0} must be diagonal in this basis.
    std::vector<cplx> lambda(dim, cplx{});
    for (int o = 0; o < dim; ++o)
        for (const auto& [m, c] : T.comp[o]) {
            if (m.degree() != 1) continue;
            if (m.v[0] == o)
                lambda[o] = c;
            else if (std::abs(c) > 1e-12)
                throw ConfigError(
                    "linearize: T1_{P0} is not diagonal in the mode basis");
        }

    if (opt.policy == ResonancePolicy::hamiltonian_match && !opt.hamiltonian)
        throw ConfigError(
            "linearize: hamiltonian_match policy requires the Hamiltonian");
    std::vector<cplx> qdiag;
    if (opt.policy == ResonancePolicy::hamiltonian_match) {
        if (dim % 2 != 0)
            throw ConfigError("linearize: hamiltonian_match needs paired modes");
        int N = dim / 2;
        qdiag.assign(N, cplx{});
        for (const auto& [m, c] : opt.hamiltonian->terms) {
            if (m.degree() != 2) continue;
            if (m.v[1] == m.v[0] + N)
                qdiag[m.v[0]] = c;
            else if (std::abs(c) > 1e-12)
                throw ConfigError(
                    "linearize: Hamiltonian quadratic part is not diagonal");
        }
        for (int i = 0; i < N; ++i)
            if (std::abs(qdiag[i]) < 1e-300)
                throw ConfigError(
                    "linearize: vanishing diagonal Hamiltonian coefficient");
    }

    LinearizeResult res;
    res.omega = FormalSeries::identity(dim, cap);
    res.min_nonresonant_denom = std::numeric_limits<double>::infinity();
    FormalSeries T1 = T.homogeneous(1);

    for (int n = 2; n <= cap; ++n) {
        FormalSeries Rn =
            fs_add(compose(T, res.omega), bullet(res.omega, T1), {1, 0}, {-1, 0})
                .homogeneous(n);
        std::vector<size_t> fresh;
        for (int o = 0; o < dim; ++o) {
            for (const auto& [m, c] : Rn.comp[o]) {
                cplx den = lambda[o];
                for (int l = 0; l < m.degree(); ++l) den -= lambda[m.v[l]];
                double da = std::abs(den);
                if (da < opt.resonance_tol) {
                    if (opt.policy == ResonancePolicy::error)
                        throw ResonanceError(
                            n, o, da,
                            "linearize: resonant denominator |" +
                                std::to_string(da) + "| at degree " +
                                std::to_string(n) + ", " + tuple_string(o, m));
                    ResonanceRecord rec;
                    rec.degree = n;
                    rec.out = o;
                    rec.in = m.indices();
                    rec.numer_abs = std::abs(c);
                    rec.denom_abs = da;
                    rec.action = "zeroed";
                    res.resonances.push_back(std::move(rec));
                    fresh.push_back(res.resonances.size() - 1);
                    continue;
                }
                res.min_nonresonant_denom =
                    std::min(res.min_nonresonant_denom, da);
                poly_add(res.omega.comp[o], m, -c / den);
            }
        }
        if (opt.policy == ResonancePolicy::hamiltonian_match && !fresh.empty()) {
            // Use the kernel freedom at the resonant components to cancel the
            // resonant degree-(n+1) part of H compose Omega (the target
            // identity is H compose Omega = H0, which has no terms beyond
            // degree 2): adjusting Omega_o[alpha] shifts the coefficient of
            // beta = alpha * x_{partner(o)} by the diagonal weight q.
            int N = dim / 2;
            Poly D = substitute_poly(opt.hamiltonian->terms, res.omega, n + 1);
            std::map<Mono, std::vector<size_t>> groups;
            for (size_t ri : fresh) {
                const ResonanceRecord& r = res.resonances[ri];
                int partner = r.out < N ? r.out + N : r.out - N;
                Mono beta;
                if (!Mono::from_indices(r.in).mul_var(partner, beta)) continue;
                groups[beta].push_back(ri);
            }
            for (auto& [beta, recs] : groups) {
                auto it = D.find(beta);
                cplx defect = it == D.end() ? cplx{} : it->second;
                ResonanceRecord& r = res.resonances[recs.front()];
                int mode = r.out < N ? r.out : r.out - N;
                cplx val = -defect / qdiag[mode];
                if (val != cplx{}) {
                    poly_add(res.omega.comp[r.out], Mono::from_indices(r.in),
                             val);
                    r.action = "hamiltonian_match";
                }
            }
        }
    }

    res.labels = rep.labels;
    for (size_t g = 0; g < rep.labels.size(); ++g) {
        const FormalSeries& Tg = rep.images[g];
        FormalSeries E = fs_add(compose(Tg, res.omega),
                                bullet(res.omega, Tg.homogeneous(1)), {1, 0},
                                {-1, 0});
        std::vector<double> by_degree(cap + 1, 0.0);
        for (int n = 1; n <= cap; ++n) by_degree[n] = fs_max_coeff_deg(E, n);
        res.residuals.push_back(std::move(by_degree));
    }
    return res;
}

} // namespace dq
