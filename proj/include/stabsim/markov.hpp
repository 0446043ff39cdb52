#pragma once

#include <string>
#include <vector>

namespace stabsim {

// Finite Markov chain with one absorbing state.  Rows of `p` must each sum
// to 1 within 1e-12 and the absorbing row must be a unit vector.
struct AbsorbingChain {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> p;
  int absorbing = 0;

  int size() const { return static_cast<int>(p.size()); }
};

// Steps-to-absorption moments per state.  Entries at the absorbing state
// are 0.  Solved through linear systems against (I - Q), where Q is the
// transient part of the transition matrix; the matrix is never inverted.
// Triangular systems (either orientation) are solved by substitution,
// everything else by Gaussian elimination with partial pivoting.
struct ChainSolution {
  std::vector<double> expected;
  std::vector<double> variance;
};

// Throws std::invalid_argument for malformed chains and std::runtime_error
// "absorbing state unreachable from state <label>" when some transient
// state has no path into the absorbing state.
ChainSolution solve_absorbing(const AbsorbingChain& chain);

// Recovery of d independent nodes that each resolve with probability 1/2
// per round.  States count unresolved nodes: labels "0".."d", state 0
// absorbing, and k -> k-j with probability C(k,j) * 2^-k.
AbsorbingChain message_chain(int d);

// Recovery of a corrupted node v plus the d conflicting neighbors that
// adopt its color.  States in order: I (all of S conflicted, flags still
// set), C^0..C^d (j of the d neighbors resolved, v unresolved), P (v holds
// a free color, flag not yet set), F (absorbed).  Indices: I=0, C^j=j+1,
// P=d+2, F=d+3.
AbsorbingChain memory_chain(int d);

// Upper-triangular chain assembled from per-transition lower bounds
// p_ij (i < j) on a progress measure with levels 0..d; level d absorbs.
// Diagonal entries take the leftover mass 1 - sum_{j>i} p_ij.  Expected
// absorption times of this chain dominate those of any process whose true
// transition probabilities meet the bounds.
AbsorbingChain dominating_chain(int d, const std::vector<std::vector<double>>& lower_bounds);

double harmonic(int d);  // H_d

// E[max of d geometrics] = sum_{l>=0} (1 - (1-q^l)^d), truncated once the
// geometric tail bound d*q^l/(1-q) drops below tol (the bound is added).
double expected_series(int d, double q, double tol = 1e-12);

// Var[max of d geometrics]; assembled from the shifted second-moment sum
// 2*sum_{l>=1} l*(1-(1-q^l)^d) + E - E^2.
double variance_series(int d, double q, double tol = 1e-12);

// Closed-form approximation -H_d/ln(q) + 1/2 of expected_series(d, q).
double harmonic_bound(int d, double q);

// (1/ln^2 2) * sum_{i=1}^d 1/i^2 + 1/4: variance overestimate at size d.
double variance_partial_bound(int d);

// pi^2/(6 ln^2 2) + 1/4, the d -> infinity limit of the above (~3.6737).
double variance_bound();

// Containment-time bounds for a single corrupted broadcast (d conflicting
// receivers) and a single corrupted memory (independent degree delta_i).
double containment_bound_message(int d);    // H_d/ln 2 + 1/2
double containment_bound_memory(int delta_i);  // H_{delta_i}/ln 2 + 5.5

}  // namespace stabsim
