#pragma once

#include "dq/formal.hpp"
#include "dq/functional.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dq {

// Nonlinear representation of a Lie algebra: generator labels, their images
// as formal series, and the structure-constant table
// [T_i, T_j] = sum_k c * T_k.
struct NonlinearRep {
    std::vector<std::string> labels;
    std::vector<FormalSeries> images;
    // structure[i][j] = list of (k, c).
    std::vector<std::vector<std::vector<std::pair<int, double>>>> structure;

    int index_of(const std::string& label) const;
};

struct ClosureReport {
    struct Pair {
        int i = 0, j = 0;
        std::vector<double> residual_by_degree; // index 1..degree_cap
        double max_residual = 0.0;
        bool flagged = false;
    };
    std::vector<Pair> pairs;
    double max_residual = 0.0;
    double tolerance = 0.0;
};

ClosureReport check_rep(const NonlinearRep& rep, double tolerance);

enum class ResonancePolicy {
    error,             // throw on any |denominator| < resonance_tol
    zero,              // leave resonant components at zero, record them
    hamiltonian_match, // fix resonant components so H compose Omega = H0
};

struct ResonanceRecord {
    int degree = 0;
    int out = 0;
    std::vector<uint16_t> in; // input multi-index
    double numer_abs = 0.0;
    double denom_abs = 0.0;
    std::string action;
};

struct LinearizeOptions {
    double resonance_tol = 0.01;
    ResonancePolicy policy = ResonancePolicy::error;
    // Required by hamiltonian_match: interacting Hamiltonian whose quadratic
    // part is diagonal, sum q_i abar_i a_i.
    const PolyFunctional* hamiltonian = nullptr;
    std::string p0_label = "P0";
};

struct LinearizeResult {
    FormalSeries omega;
    std::vector<ResonanceRecord> resonances;
    double min_nonresonant_denom = 0.0;
    // residuals[g][n] = max coefficient of (T_g compose Omega - Omega bullet
    // T1_g) at degree n (index 0 unused).
    std::vector<std::string> labels;
    std::vector<std::vector<double>> residuals;
};

// Order-by-order solve of T_{P0} compose Omega = Omega bullet T1_{P0}; the
// remaining generators are verified post hoc, never assumed.
LinearizeResult linearize(const NonlinearRep& rep, const LinearizeOptions& opt);

} // namespace dq
