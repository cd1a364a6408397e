#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsr/classical_oracle.hpp"
#include "qsr/protocol.hpp"

namespace qsr {

// Deterministic stream (splitmix64 + explicit Box-Muller), reproducible
// across platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double normal();
    cx cnormal() { return cx(normal(), normal()); }
};

ComplexMatrix random_density(Rng& rng, std::size_t dim);
PureState random_pure(Rng& rng, const RegisterShape& shape);

enum class InstanceKind { haar_pure, markov_blocks, ghz, classical };

struct InstanceDims {
    std::size_t dim_r = 2, dim_a = 2, dim_b = 2, dim_c = 2;
    std::size_t blocks = 2;           // markov_blocks
    std::size_t block_dim_br = 1;     // per-block B^R factor
    std::size_t block_dim_bc = 1;     // per-block B^C factor
    bool pure_blocks = true;          // markov_blocks: rank-one block states
};

RedistributionInstance random_instance(InstanceKind kind, const InstanceDims& dims,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// asymptotic sweep on commuting states

struct SweepPoint {
    std::size_t n = 1;
    double dmax_bits = 0.0;  // smoothed, n-fold
    double dh_bits = 0.0;    // n-fold
    double bound_bits = 0.0; // full upper-bound expression
    double bound_per_n = 0.0;
};

struct SweepReport {
    std::vector<SweepPoint> rows;
    double eps = 0.1;
    double cmi = 0.0;        // I(R:C|B) of the single-letter state
    double variance = 0.0;   // V of the D_max pair
    double window_c = 0.0;   // 3 sqrt(V)
    std::size_t n0 = 0;      // first n from which all later points sit in the window
    bool in_window_to_end = false;
    double trend_slope = 0.0;  // least-squares slope of bound/n against n
};

// Joint diagonal distribution over (R, B, C) with the given dimensions.
struct ClassicalTriple {
    std::size_t dim_r = 2, dim_b = 2, dim_c = 2;
    std::vector<double> p;  // length dim_r * dim_b * dim_c

    void validate() const;
    std::vector<double> marginal_rb() const;
    std::vector<double> marginal_b() const;
    std::vector<double> marginal_c() const;
    std::vector<double> marginal_bc() const;
    double cmi() const;  // I(R:C|B), bits
};

SweepReport asymptotic_sweep(const ClassicalTriple& psi, std::size_t n_min, std::size_t n_max,
                             double eps, std::size_t max_types = 2000000);

// ---------------------------------------------------------------------------
// reports

std::string to_csv(const SweepReport& rep);
std::string to_svg(const SweepReport& rep);
void write_file(const std::string& path, const std::string& contents);

}  // namespace qsr
