#pragma once

#include <optional>
#include <vector>

#include "sflow/error.hpp"

namespace sflow {

// Log leg-norms a_1..a_n with the flow time spent on each leg.
struct WeightSequence {
  std::vector<double> values;
  std::vector<double> durations;

  std::size_t size() const { return values.size(); }
  void validate() const;
  double total_duration() const;
  double total() const;
};

// An offset whose tail partial sums are all bounded by n * lambda2.
struct PlissSelection {
  int L = 0;
  double lambda2 = 0;
  int verified_upto = 0;  // number of tail entries the bound was checked on
};

// Smallest integer N with C + N*lambda1 < N*lambda2, the inequality being
// evaluated exactly as written (a closed-form floor can land one short in
// floating point, so the scan re-checks the defining inequality).
int pliss_bound(double C, double lambda1, double lambda2);

// Smallest L >= 0 with sum(a_{L+1}..a_{L+n}) <= n*lambda2 for every n up to
// the end of the sequence; nullopt when no offset works.
std::optional<PlissSelection> find_tail_offset(const WeightSequence& seq, double lambda2);

// Branch-and-bound search over all sequences of the given length with
// entries on the grid inside [entry_lo, entry_hi], subject to the premise
// sum(a_1..a_k) <= C + k*lambda1 for every k, maximizing the L returned by
// find_tail_offset.  The pruning rules are exact, so an un-flagged result is
// the true worst case over the grid.
struct AdversarialResult {
  int worst_L = -1;
  std::vector<double> witness;
  long long nodes = 0;
  bool budget_exceeded = false;  // partial result: a larger L may exist
  bool tail_violation = false;   // some premise-valid sequence had no offset at all
};

AdversarialResult adversarial_search(double C, double lambda1, double lambda2,
                                     int length, double grid, double entry_lo = 0,
                                     double entry_hi = 0,
                                     long long node_budget = 400000000LL);

// Offsets k (within the first copy) such that every tail sum starting at k,
// across `copies` concatenated repetitions of the sequence, is bounded by
// -eta times the elapsed leg time.  Periodic data: pointing at a position on
// a closed orbit from which the rescaled products contract at rate eta.
std::vector<int> pliss_point(const WeightSequence& seq, double eta, int copies = 2);

}  // namespace sflow
