#include "dq/serialize.hpp"

#include <fstream>

namespace dq {

json grid_to_json(const ModeGrid& g) {
    return json{{"d", g.d},
                {"n_per_axis", g.n_per_axis},
                {"box_length", g.box_length},
                {"mass", g.mass}};
}

GridPtr grid_from_json(const json& j) {
    if (!j.contains("d") || !j.contains("n_per_axis") ||
        !j.contains("box_length") || !j.contains("mass"))
        throw ConfigError("grid: requires d, n_per_axis, box_length, mass");
    return make_grid(j.at("d").get<int>(), j.at("n_per_axis").get<int>(),
                     j.at("box_length").get<double>(),
                     j.at("mass").get<double>());
}

namespace {

json carray_to_json(const std::vector<cplx>& v) {
    json a = json::array();
    for (const cplx& c : v) a.push_back(json::array({c.real(), c.imag()}));
    return a;
}

std::vector<cplx> carray_from_json(const json& j) {
    std::vector<cplx> v;
    for (const auto& e : j) v.emplace_back(e.at(0).get<double>(),
                                           e.at(1).get<double>());
    return v;
}

} // namespace

json mode_vector_to_json(const ModeVector& v) {
    return json{{"d", v.grid->d},
                {"n_per_axis", v.grid->n_per_axis},
                {"kind", v.kind == ModeKind::abar_a ? "abar_a" : "pm"},
                {"abar", carray_to_json(v.abar)},
                {"a", carray_to_json(v.a)}};
}

ModeVector mode_vector_from_json(const json& j, GridPtr grid) {
    if (j.at("d").get<int>() != grid->d ||
        j.at("n_per_axis").get<int>() != grid->n_per_axis)
        throw ConfigError("mode vector: header does not match grid");
    ModeVector v(grid, j.at("kind").get<std::string>() == "pm"
                           ? ModeKind::pm
                           : ModeKind::abar_a);
    v.abar = carray_from_json(j.at("abar"));
    v.a = carray_from_json(j.at("a"));
    if (static_cast<int>(v.abar.size()) != grid->n_modes ||
        static_cast<int>(v.a.size()) != grid->n_modes)
        throw ConfigError("mode vector: array length does not match grid");
    return v;
}

json cauchy_to_json(const CauchyData& d) {
    return json{{"d", d.grid->d},
                {"n_per_axis", d.grid->n_per_axis},
                {"kind", "cauchy"},
                {"phi", d.phi},
                {"pi", d.pi}};
}

CauchyData cauchy_from_json(const json& j, GridPtr grid) {
    CauchyData d(grid);
    d.phi = j.at("phi").get<std::vector<double>>();
    d.pi = j.at("pi").get<std::vector<double>>();
    if (static_cast<int>(d.phi.size()) != grid->n_modes ||
        static_cast<int>(d.pi.size()) != grid->n_modes)
        throw ConfigError("cauchy data: array length does not match grid");
    return d;
}

json functional_to_json(const PolyFunctional& F) {
    int N = F.n_modes();
    json terms = json::array();
    for (const auto& [mono, c] : F.terms) {
        json alpha = json::array(), beta = json::array();
        for (int l = 0; l < mono.degree(); ++l) {
            if (mono.v[l] < N)
                alpha.push_back(mono.v[l]);
            else
                beta.push_back(mono.v[l] - N);
        }
        terms.push_back(json{{"m", alpha.size()},
                             {"n", beta.size()},
                             {"alpha", alpha},
                             {"beta", beta},
                             {"re", c.real()},
                             {"im", c.imag()}});
    }
    return json{{"grid_hash", F.grid->hash()},
                {"max_degree", F.max_degree},
                {"truncated", F.truncated},
                {"terms", terms}};
}

PolyFunctional functional_from_json(const json& j, GridPtr grid) {
    if (j.contains("grid_hash") &&
        j.at("grid_hash").get<uint64_t>() != grid->hash())
        throw ConfigError("functional: grid hash mismatch");
    PolyFunctional F(grid, j.value("max_degree", static_cast<int>(Mono::cap)));
    F.truncated = j.value("truncated", false);
    int N = grid->n_modes;
    for (const auto& t : j.at("terms")) {
        std::vector<uint16_t> idx;
        for (const auto& e : t.at("alpha")) {
            int i = e.get<int>();
            if (i < 0 || i >= N) throw ConfigError("functional: bad abar index");
            idx.push_back(static_cast<uint16_t>(i));
        }
        for (const auto& e : t.at("beta")) {
            int i = e.get<int>();
            if (i < 0 || i >= N) throw ConfigError("functional: bad a index");
            idx.push_back(static_cast<uint16_t>(N + i));
        }
        if (static_cast<int>(idx.size()) > Mono::cap)
            throw ConfigError("functional: monomial degree exceeds cap");
        F.add_term(Mono::from_indices(idx),
                   cplx{t.at("re").get<double>(), t.at("im").get<double>()});
    }
    return F;
}

json formal_series_to_json(const FormalSeries& F) {
    json terms = json::array();
    for (int o = 0; o < F.dim; ++o)
        for (const auto& [m, c] : F.comp[o]) {
            json in = json::array();
            for (int l = 0; l < m.degree(); ++l) in.push_back(m.v[l]);
            terms.push_back(json{{"n", m.degree()},
                                 {"out", o},
                                 {"in_multi_index", in},
                                 {"re", c.real()},
                                 {"im", c.imag()}});
        }
    return json{{"dim", F.dim}, {"degree_cap", F.degree_cap}, {"terms", terms}};
}

FormalSeries formal_series_from_json(const json& j) {
    FormalSeries F(j.at("dim").get<int>(), j.at("degree_cap").get<int>());
    for (const auto& t : j.at("terms")) {
        std::vector<uint16_t> idx;
        for (const auto& e : t.at("in_multi_index")) {
            int i = e.get<int>();
            if (i < 0 || i >= F.dim)
                throw ConfigError("formal series: index out of range");
            idx.push_back(static_cast<uint16_t>(i));
        }
        int out = t.at("out").get<int>();
        if (out < 0 || out >= F.dim)
            throw ConfigError("formal series: output index out of range");
        F.add_term(out, Mono::from_indices(idx),
                   cplx{t.at("re").get<double>(), t.at("im").get<double>()});
    }
    return F;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace dq
