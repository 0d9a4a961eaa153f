#pragma once

// Data-parallel inner loops of the dynamic-programming and instance-analysis
// code. Every kernel exists twice: an OpenMP version used by the library and a
// plain serial reference kept for testing and benchmarking. Both produce
// bit-identical results because each output entry is computed by one thread
// with the same arithmetic order.

#include <span>
#include <vector>

#include "bpi/mdp.hpp"

namespace bpi {

/// Per-pair next-state statistics of a value vector.
struct PairStatistics {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> span;                       // sup over all states
  std::vector<std::vector<double>> moment_roots;  // [k-1][pair]
};

namespace serial {

/// q = r + gamma * P v and v_next = max_a q. Returns sup |v_next - v|.
double bellman_backup(const TabularMdp& mdp, std::span<const double> rewards,
                      std::span<const double> v, std::span<double> q,
                      std::span<double> v_next);

/// v_next(s) = sum_a pi(a|s) (r(s,a) + gamma * P v). Returns sup |v_next - v|.
double policy_backup(const TabularMdp& mdp, std::span<const double> rewards,
                     std::span<const double> policy_probs, std::span<const double> v,
                     std::span<double> v_next);

PairStatistics pair_statistics(const TabularMdp& mdp, std::span<const double> v, int k_max);

}  // namespace serial

namespace parallel {

double bellman_backup(const TabularMdp& mdp, std::span<const double> rewards,
                      std::span<const double> v, std::span<double> q,
                      std::span<double> v_next);

double policy_backup(const TabularMdp& mdp, std::span<const double> rewards,
                     std::span<const double> policy_probs, std::span<const double> v,
                     std::span<double> v_next);

PairStatistics pair_statistics(const TabularMdp& mdp, std::span<const double> v, int k_max);

}  // namespace parallel

/// Root of the 2^k-th central moment of values under probs, computed in
/// scaled form so that k up to 19 neither overflows nor underflows.
double central_moment_root(std::span<const double> probs, std::span<const double> values,
                           double mean, int k);

}  // namespace bpi
