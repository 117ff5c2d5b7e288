#include "sflow/pliss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace sflow {

void WeightSequence::validate() const {
  if (values.size() != durations.size())
    fail(errc::bad_parameters, "values and durations must have equal length");
  for (double d : durations)
    if (!(d > 0)) fail(errc::bad_parameters, "leg durations must be positive");
}

double WeightSequence::total_duration() const {
  return std::accumulate(durations.begin(), durations.end(), 0.0);
}

double WeightSequence::total() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

int pliss_bound(double C, double lambda1, double lambda2) {
  if (!(lambda1 < lambda2)) fail(errc::bad_parameters, "need lambda1 < lambda2");
  if (!(C >= 0)) fail(errc::bad_parameters, "need C >= 0");
  // closed-form start, then verify the strict inequality as written
  double guess = std::floor(C / (lambda2 - lambda1));
  long long N = std::max(1LL, static_cast<long long>(guess) - 2);
  while (!(C + static_cast<double>(N) * lambda1 < static_cast<double>(N) * lambda2)) {
    ++N;
    if (N > (1LL << 40)) fail(errc::bad_parameters, "pliss_bound does not terminate");
  }
  return static_cast<int>(N);
}

std::optional<PlissSelection> find_tail_offset(const WeightSequence& seq,
                                               double lambda2) {
  seq.validate();
  const std::size_t n = seq.size();
  if (n == 0) return std::nullopt;

  // b_k = S_k - k*lambda2; offset L works iff b_L >= b_k for every k > L.
  std::vector<double> b(n + 1);
  b[0] = 0.0;
  double S = 0.0, bmax = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    S += seq.values[k - 1];
    b[k] = S - static_cast<double>(k) * lambda2;
    bmax = std::max(bmax, std::abs(b[k]));
  }
  const double eps = 1e-12 * std::max(1.0, bmax);

  double suffix = b[n];
  std::optional<std::size_t> best;
  for (std::size_t k = n; k-- > 0;) {  // k = n-1 .. 0
    if (b[k] >= suffix - eps) best = k;
    suffix = std::max(suffix, b[k]);
  }
  if (!best) return std::nullopt;
  PlissSelection sel;
  sel.L = static_cast<int>(*best);
  sel.lambda2 = lambda2;
  sel.verified_upto = static_cast<int>(n - *best);
  return sel;
}

namespace {

struct Search {
  double C, l1, l2;
  int n;
  std::vector<double> candidates;     // descending
  std::vector<long long> cand_units;  // candidates on the grid lattice
  long long budget;
  double eps;

  std::vector<double> a;      // current entries
  std::vector<double> S;      // prefix sums, S[0] = 0
  std::vector<long long> Su;  // the same sums in grid units, exact
  std::vector<double> b;      // S[k] - k*l2
  std::vector<int> stack;     // unfailed offsets, bottom = smallest
  long long nodes = 0;
  bool exceeded = false;
  AdversarialResult result;
  double fill_value = 0;  // premise-safe filler for pruned-subtree witnesses
  double vmax = 0;        // largest admissible entry

  // The answer at a leaf is the leftmost running argmax of b_m = S_m - m*l2.
  // Whatever entry first tops the current argmax pops the whole offset stack,
  // so the best completion from depth k is a function of (k, S_k) and the
  // argmax pair (L0, S_L0) alone -- everything between them is irrelevant.
  // That makes the enumeration memoizable on those four lattice numbers.
  bool memo_ok = false;
  std::unordered_map<std::uint64_t, int> memo;

  static std::uint64_t pack_u(long long u) {
    return static_cast<std::uint64_t>(u + 32768) & 0xffffu;
  }
  std::uint64_t state_key(int k, int L0) const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) << 48) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(L0)) << 32) |
           (pack_u(Su[static_cast<std::size_t>(k)]) << 16) |
           pack_u(Su[static_cast<std::size_t>(L0)]);
  }

  void note_best(int L, bool fill_rest) {
    if (L > result.worst_L) {
      result.worst_L = L;
      result.witness = a;
      if (fill_rest)
        result.witness.resize(static_cast<std::size_t>(n), fill_value);
    }
  }

  // Best leaf answer reachable below the current prefix, or -1 when the
  // premise admits no completion at all.
  int run(int k) {
    int L0 = stack.front();
    if (exceeded) return -1;
    if (++nodes > budget) {
      exceeded = true;
      return -1;
    }
    if (k == n) {
      if (L0 >= n) {
        // premise-valid sequence with no working offset: a counterexample
        result.tail_violation = true;
      }
      note_best(L0, false);
      return L0;
    }
    // The argmax can only move to a later position m if b_m exceeds b[L0],
    // and two lines pin where that can still happen: the premise cap forces
    // b_m <= C - m*(l2 - l1) (a descending line through C), and the climb
    // back from b[k] at the largest entry allows b_m at most
    // b[k] + (m - k)*(vmax - l2).  If the window they leave is empty the
    // answer below here is exactly L0.
    const double bL0 = b[static_cast<std::size_t>(L0)];
    long long mhi = n;
    {
      const double lim = (C - bL0 + eps) / (l2 - l1);  // need m < lim
      if (lim < static_cast<double>(n))
        mhi = static_cast<long long>(std::ceil(lim)) - 1;
    }
    if (vmax <= l2) {
      mhi = -1;  // b cannot rise at all, so no later argmax
    } else {
      const double bk = b[static_cast<std::size_t>(k)];
      if (bL0 > bk) {
        const double need = (bL0 - bk) / (vmax - l2);  // steps to climb back
        const long long mlo =
            k + std::max<long long>(1, static_cast<long long>(std::ceil(need - 1e-12)));
        if (mlo > mhi) mhi = -1;
      }
    }
    if (mhi < 0) {
      note_best(L0, true);
      return L0;
    }
    std::uint64_t key = 0;
    if (memo_ok) {
      key = state_key(k, L0);
      auto it = memo.find(key);
      // A cached subtree was fully explored once, so its leaves have already
      // been offered to note_best; just reuse the value.
      if (it != memo.end()) return it->second;
    }
    double cap = C + static_cast<double>(k + 1) * l1 + eps;
    int best = -1;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      if (S[static_cast<std::size_t>(k)] + candidates[ci] > cap)
        continue;  // premise violated
      push(k, candidates[ci], cand_units[ci]);
      best = std::max(best, run(k + 1));
      pop(k);
      if (exceeded) return best;
    }
    if (memo_ok) memo.emplace(key, best);
    return best;
  }

  std::vector<std::vector<int>> undo;  // popped offsets per depth

  void push(int k, double v, long long u) {
    a.push_back(v);
    S[static_cast<std::size_t>(k) + 1] = S[static_cast<std::size_t>(k)] + v;
    Su[static_cast<std::size_t>(k) + 1] = Su[static_cast<std::size_t>(k)] + u;
    double bk = S[static_cast<std::size_t>(k) + 1] - static_cast<double>(k + 1) * l2;
    b[static_cast<std::size_t>(k) + 1] = bk;
    auto& popped = undo[static_cast<std::size_t>(k)];
    popped.clear();
    while (!stack.empty() && b[static_cast<std::size_t>(stack.back())] + eps < bk) {
      popped.push_back(stack.back());
      stack.pop_back();
    }
    stack.push_back(k + 1);
  }

  void pop(int k) {
    stack.pop_back();
    auto& popped = undo[static_cast<std::size_t>(k)];
    for (auto it = popped.rbegin(); it != popped.rend(); ++it) stack.push_back(*it);
    a.pop_back();
  }
};

double grid_floor(double v, double grid) { return std::floor(v / grid) * grid; }

}  // namespace

AdversarialResult adversarial_search(double C, double lambda1, double lambda2,
                                     int length, double grid, double entry_lo,
                                     double entry_hi, long long node_budget) {
  if (!(lambda1 < lambda2)) fail(errc::bad_parameters, "need lambda1 < lambda2");
  if (!(grid > 0) || length < 1) fail(errc::bad_parameters, "bad grid or length");
  if (entry_lo == 0 && entry_hi == 0) {
    // default range: wide enough to include the premise-saturating profiles
    entry_hi = C + std::max(lambda1, 0.0) + grid;
    entry_lo = lambda1 - 4.0 * (lambda2 - lambda1) - 2.0 * grid;
  }
  if (!(entry_lo < entry_hi)) fail(errc::bad_parameters, "empty entry range");

  Search s;
  s.C = C;
  s.l1 = lambda1;
  s.l2 = lambda2;
  s.n = length;
  s.budget = node_budget;
  s.eps = 1e-11 * std::max({1.0, std::abs(C), std::abs(entry_hi)});
  for (double v = grid_floor(entry_hi, grid); v >= entry_lo - 1e-12; v -= grid) {
    s.candidates.push_back(v);
    s.cand_units.push_back(std::llround(v / grid));
  }
  s.vmax = s.candidates.front();
  s.fill_value = grid_floor(lambda1, grid);
  long long umax = 0;
  for (long long u : s.cand_units) umax = std::max(umax, std::llabs(u));
  // the memo key packs position and unit sums into 16-bit fields
  s.memo_ok = length < 65535 && umax * (length + 1) < 32700;
  s.a.reserve(static_cast<std::size_t>(length));
  s.S.assign(static_cast<std::size_t>(length) + 1, 0.0);
  s.Su.assign(static_cast<std::size_t>(length) + 1, 0);
  s.b.assign(static_cast<std::size_t>(length) + 1, 0.0);
  s.stack = {0};
  s.undo.resize(static_cast<std::size_t>(length));
  s.run(0);

  s.result.nodes = s.nodes;
  s.result.budget_exceeded = s.exceeded;
  if (s.result.worst_L < 0) s.result.worst_L = 0;  // no premise-valid sequence beat L=0
  return s.result;
}

std::vector<int> pliss_point(const WeightSequence& seq, double eta, int copies) {
  seq.validate();
  if (!(eta > 0)) fail(errc::bad_parameters, "eta must be positive");
  if (copies < 1) fail(errc::bad_parameters, "copies must be >= 1");
  const std::size_t n = seq.size();
  if (n == 0) fail(errc::bad_parameters, "empty sequence");

  double avg = seq.total() / seq.total_duration();
  if (!(avg <= -eta + 1e-12))
    fail(errc::no_pliss_point,
         "time-weighted average " + std::to_string(avg) + " is not below -eta");

  // c_k = V_k + eta * U_k over the concatenation; offset k works iff
  // c_j <= c_k for every j > k.
  const std::size_t N = n * static_cast<std::size_t>(copies);
  std::vector<double> c(N + 1);
  c[0] = 0.0;
  double V = 0, U = 0, cmax = 0;
  for (std::size_t j = 1; j <= N; ++j) {
    V += seq.values[(j - 1) % n];
    U += seq.durations[(j - 1) % n];
    c[j] = V + eta * U;
    cmax = std::max(cmax, std::abs(c[j]));
  }
  const double eps = 1e-12 * std::max(1.0, cmax);

  std::vector<int> out;
  // suffix maxima from the right; qualifying offsets restricted to copy 0
  std::vector<double> sufmax(N + 1);
  sufmax[N] = c[N];
  for (std::size_t j = N; j-- > 0;) sufmax[j] = std::max(c[j], sufmax[j + 1]);
  for (std::size_t k = 0; k < n; ++k)
    if (c[k] >= sufmax[k + 1] - eps) out.push_back(static_cast<int>(k));
  return out;
}

}  // namespace sflow
