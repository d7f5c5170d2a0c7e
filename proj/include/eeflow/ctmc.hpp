#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "eeflow/errors.hpp"
#include "eeflow/rng.hpp"

namespace eeflow {

// Virtual-connection-control chain over three traffic classes: s = fresh
// admission requests (gated by alpha_s), r = relayed/handoff connections
// (overflow queue of size M), tau = background sessions (overflow queue of
// size N). alpha_v weights service completion; alpha_v = 1 is the plain
// loss+queue system.
struct CtmcSpec {
  int servers = 1;           // C
  int queue_r_capacity = 0;  // M
  int queue_tau_capacity = 0;  // N
  double lambda_s = 0.0;
  double lambda_r = 0.0;
  double lambda_tau = 0.0;
  double mu_s = 1.0;
  double mu_r = 1.0;
  double mu_tau = 1.0;
  double alpha_s = 1.0;
  double alpha_v = 1.0;

  // Effective service weighting applied to every departure rate.
  double departure_factor() const {
    return alpha_s + alpha_v * (1.0 - alpha_s);
  }
};

inline void validate_ctmc(const CtmcSpec& spec) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(errc::validation_error, msg);
  };
  require(spec.servers >= 1, "need at least one server");
  require(spec.queue_r_capacity >= 0 && spec.queue_tau_capacity >= 0,
          "queue capacities must be nonnegative");
  require(spec.lambda_s >= 0.0 && spec.lambda_r >= 0.0 &&
              spec.lambda_tau >= 0.0,
          "arrival rates must be nonnegative");
  require(spec.mu_s >= 0.0 && spec.mu_r >= 0.0 && spec.mu_tau >= 0.0,
          "service rates must be nonnegative");
  require(spec.lambda_s == 0.0 || spec.mu_s > 0.0,
          "class s needs mu_s > 0 when lambda_s > 0");
  require(spec.lambda_r == 0.0 || spec.mu_r > 0.0,
          "class r needs mu_r > 0 when lambda_r > 0");
  require(spec.lambda_tau == 0.0 || spec.mu_tau > 0.0,
          "class tau needs mu_tau > 0 when lambda_tau > 0");
  require(spec.alpha_s >= 0.0 && spec.alpha_s <= 1.0 && spec.alpha_v >= 0.0 &&
              spec.alpha_v <= 1.0,
          "alpha_s and alpha_v must lie in [0,1]");
}

struct CtmcState {
  int i = 0, j = 0, k = 0, m = 0, n = 0;
  auto operator<=>(const CtmcState&) const = default;
};

struct StateSpace {
  std::vector<CtmcState> states;  // lexicographic in (i,j,k,m,n)

  int size() const { return static_cast<int>(states.size()); }

  int index_of(const CtmcState& s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || *it != s) return -1;
    return static_cast<int>(it - states.begin());
  }
};

// All (i,j,k,m,n) with i+j+k <= C, 0 <= m <= M, 0 <= n <= N. The count is
// the (C choose 3)-simplex times the two queue ranges.
inline StateSpace enumerate_states(const CtmcSpec& spec) {
  validate_ctmc(spec);
  const int c = spec.servers;
  const int m_cap = spec.queue_r_capacity;
  const int n_cap = spec.queue_tau_capacity;
  const double simplex =
      (c + 1.0) * (c + 2.0) * (c + 3.0) / 6.0;
  if (simplex * (m_cap + 1.0) * (n_cap + 1.0) > 1e6)
    fail(errc::state_space_too_large,
         "state space exceeds 1e6 states");

  StateSpace space;
  space.states.reserve(static_cast<size_t>(
      simplex * (m_cap + 1.0) * (n_cap + 1.0)));
  for (int i = 0; i <= c; ++i)
    for (int j = 0; j + i <= c; ++j)
      for (int k = 0; k + j + i <= c; ++k)
        for (int m = 0; m <= m_cap; ++m)
          for (int n = 0; n <= n_cap; ++n)
            space.states.push_back(CtmcState{i, j, k, m, n});
  return space;
}

namespace detail {

// Single source of truth for the transition structure; the generator and
// the Monte-Carlo simulator both walk it.
//
// Arrivals take a free server; when all servers are busy, class r overflows
// into the m-queue and class tau into the n-queue (class s is lost). A
// departure from a saturated system promotes a queued job, r-queue first.
template <typename Emit>
void for_each_transition(const CtmcSpec& spec, const CtmcState& s,
                         Emit&& emit) {
  const int c = spec.servers;
  const bool full = s.i + s.j + s.k == c;
  const double dep = spec.departure_factor();

  // Arrivals.
  if (!full) {
    if (spec.alpha_s * spec.lambda_s > 0.0)
      emit(CtmcState{s.i + 1, s.j, s.k, s.m, s.n},
           spec.alpha_s * spec.lambda_s);
    if (spec.lambda_r > 0.0)
      emit(CtmcState{s.i, s.j + 1, s.k, s.m, s.n}, spec.lambda_r);
    if (spec.lambda_tau > 0.0)
      emit(CtmcState{s.i, s.j, s.k + 1, s.m, s.n}, spec.lambda_tau);
  } else {
    if (spec.lambda_r > 0.0 && s.m < spec.queue_r_capacity)
      emit(CtmcState{s.i, s.j, s.k, s.m + 1, s.n}, spec.lambda_r);
    if (spec.lambda_tau > 0.0 && s.n < spec.queue_tau_capacity)
      emit(CtmcState{s.i, s.j, s.k, s.m, s.n + 1}, spec.lambda_tau);
  }

  // Departures, with promotion out of the queues while saturated.
  const bool promote_r = full && s.m > 0;
  const bool promote_tau = full && s.m == 0 && s.n > 0;
  auto depart = [&](int di, int dj, int dk, double rate) {
    if (rate <= 0.0) return;
    CtmcState t{s.i + di, s.j + dj, s.k + dk, s.m, s.n};
    if (promote_r) {
      t.j += 1;
      t.m -= 1;
    } else if (promote_tau) {
      t.k += 1;
      t.n -= 1;
    }
    emit(t, rate);
  };
  depart(-1, 0, 0, s.i * spec.mu_s * dep);
  depart(0, -1, 0, s.j * spec.mu_r * dep);
  depart(0, 0, -1, s.k * spec.mu_tau * dep);
}

}  // namespace detail

// Sparse generator; diag holds the negated row sums.
struct Generator {
  int size = 0;
  std::vector<std::vector<std::pair<int, double>>> off_diag;
  std::vector<double> diag;
};

inline Generator build_generator(const CtmcSpec& spec,
                                 const StateSpace& space) {
  validate_ctmc(spec);
  Generator q;
  q.size = space.size();
  q.off_diag.assign(static_cast<size_t>(q.size), {});
  q.diag.assign(static_cast<size_t>(q.size), 0.0);
  for (int row = 0; row < q.size; ++row) {
    const CtmcState& s = space.states[static_cast<size_t>(row)];
    detail::for_each_transition(spec, s, [&](const CtmcState& t,
                                             double rate) {
      const int col = space.index_of(t);
      if (col < 0)
        fail(errc::validation_error, "transition leaves the state space");
      q.off_diag[static_cast<size_t>(row)].emplace_back(col, rate);
      q.diag[static_cast<size_t>(row)] -= rate;
    });
  }
  return q;
}

// max_c |sum_r pi_r Q_rc|, the global-balance residual.
inline double stationary_residual(const Generator& q,
                                  const std::vector<double>& pi) {
  std::vector<double> flow(static_cast<size_t>(q.size), 0.0);
  for (int row = 0; row < q.size; ++row) {
    flow[static_cast<size_t>(row)] +=
        pi[static_cast<size_t>(row)] * q.diag[static_cast<size_t>(row)];
    for (const auto& [col, rate] : q.off_diag[static_cast<size_t>(row)])
      flow[static_cast<size_t>(col)] += pi[static_cast<size_t>(row)] * rate;
  }
  double worst = 0.0;
  for (double f : flow) worst = std::max(worst, std::abs(f));
  return worst;
}

// Solve pi Q = 0 with sum(pi) = 1, restricted to the states reachable from
// the empty state; everything else gets pi = 0. Dense elimination for the
// sizes this model produces, with an uniformized power iteration past that.
inline std::vector<double> solve_stationary(const Generator& q) {
  const int n = q.size;
  if (n == 0) fail(errc::singular_system, "empty generator");

  // Reachable set from state 0 (the lexicographically first state is the
  // empty one).
  std::vector<int> order;
  std::vector<int> compact(static_cast<size_t>(n), -1);
  {
    std::vector<int> stack = {0};
    compact[0] = 0;
    order.push_back(0);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& [v, rate] : q.off_diag[static_cast<size_t>(u)]) {
        (void)rate;
        if (compact[static_cast<size_t>(v)] < 0) {
          compact[static_cast<size_t>(v)] = static_cast<int>(order.size());
          order.push_back(v);
          stack.push_back(v);
        }
      }
    }
  }
  const int r = static_cast<int>(order.size());

  std::vector<double> pi_r(static_cast<size_t>(r), 0.0);
  if (r == 1) {
    pi_r[0] = 1.0;
  } else if (r <= 2048) {
    // Columns of Q restricted to the reachable block are the balance
    // equations; the last one is replaced by normalization.
    std::vector<double> a(static_cast<size_t>(r) * (r + 1), 0.0);
    auto at = [&](int row, int col) -> double& {
      return a[static_cast<size_t>(row) * (r + 1) + col];
    };
    for (int u = 0; u < r; ++u) {
      const int full_u = order[static_cast<size_t>(u)];
      for (const auto& [v, rate] : q.off_diag[static_cast<size_t>(full_u)]) {
        const int cv = compact[static_cast<size_t>(v)];
        if (cv < 0) continue;
        if (cv < r - 1) at(cv, u) += rate;
      }
      if (u < r - 1) at(u, u) += q.diag[static_cast<size_t>(full_u)];
    }
    for (int u = 0; u < r; ++u) at(r - 1, u) = 1.0;
    at(r - 1, r) = 1.0;

    for (int col = 0; col < r; ++col) {
      int pivot = col;
      for (int row = col + 1; row < r; ++row)
        if (std::abs(at(row, col)) > std::abs(at(pivot, col))) pivot = row;
      if (std::abs(at(pivot, col)) < 1e-300)
        fail(errc::singular_system, "singular balance system");
      if (pivot != col)
        for (int c2 = col; c2 <= r; ++c2) std::swap(at(pivot, c2), at(col, c2));
      for (int row = 0; row < r; ++row) {
        if (row == col) continue;
        const double factor = at(row, col) / at(col, col);
        if (factor == 0.0) continue;
        for (int c2 = col; c2 <= r; ++c2) at(row, c2) -= factor * at(col, c2);
      }
    }
    for (int u = 0; u < r; ++u) pi_r[static_cast<size_t>(u)] = at(u, r) / at(u, u);
  } else {
    // Uniformization: pi <- pi (I + Q/Lambda) until the balance residual
    // vanishes.
    double lambda = 0.0;
    for (int u = 0; u < r; ++u)
      lambda = std::max(lambda,
                        -q.diag[static_cast<size_t>(order[static_cast<size_t>(u)])]);
    lambda *= 1.05;
    if (lambda <= 0.0) {
      pi_r[0] = 1.0;
    } else {
      std::vector<double> cur(static_cast<size_t>(r),
                              1.0 / static_cast<double>(r));
      std::vector<double> next(static_cast<size_t>(r), 0.0);
      for (int iter = 0; iter < 2000000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int u = 0; u < r; ++u) {
          const int full_u = order[static_cast<size_t>(u)];
          const double p = cur[static_cast<size_t>(u)];
          next[static_cast<size_t>(u)] +=
              p * (1.0 + q.diag[static_cast<size_t>(full_u)] / lambda);
          for (const auto& [v, rate] :
               q.off_diag[static_cast<size_t>(full_u)]) {
            const int cv = compact[static_cast<size_t>(v)];
            next[static_cast<size_t>(cv)] += p * rate / lambda;
          }
        }
        double drift = 0.0;
        for (int u = 0; u < r; ++u)
          drift = std::max(drift, std::abs(next[static_cast<size_t>(u)] -
                                           cur[static_cast<size_t>(u)]));
        cur.swap(next);
        if (drift * lambda < 1e-13) break;
      }
      pi_r = std::move(cur);
    }
  }

  // Clean tiny negatives from elimination and renormalize exactly once.
  double sum = 0.0;
  for (double& p : pi_r) {
    if (p < 0.0 && p > -1e-12) p = 0.0;
    sum += p;
  }
  if (!(sum > 0.0)) fail(errc::singular_system, "balance solve degenerated");
  std::vector<double> pi(static_cast<size_t>(n), 0.0);
  for (int u = 0; u < r; ++u)
    pi[static_cast<size_t>(order[static_cast<size_t>(u)])] =
        pi_r[static_cast<size_t>(u)] / sum;
  return pi;
}

namespace detail {

inline double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

// Forced-termination weight: saturated-state occupancy over the residual
// admission capacity, with guarded denominators.
inline double forced_weight(int occupancy, int c, int j, double pb_s) {
  if (occupancy <= 0) return 0.0;
  const double denom = (c - j) * (1.0 - pb_s);
  if (denom <= 0.0) return 1.0;
  return clip01(static_cast<double>(occupancy) / denom);
}

}  // namespace detail

// Forced-termination / blocking probabilities per queueing class. pf1
// covers the class-r queue (full when m = M), pf2 the class-tau queue
// (n = N); both are weighted sums over saturated states, clipped into
// [0,1].
inline std::pair<double, double> blocking_metrics(
    const CtmcSpec& spec, const StateSpace& space,
    const std::vector<double>& pi) {
  const int c = spec.servers;
  double pb_s = 0.0;
  for (int idx = 0; idx < space.size(); ++idx) {
    const CtmcState& s = space.states[static_cast<size_t>(idx)];
    if (s.i + s.j + s.k == c) pb_s += pi[static_cast<size_t>(idx)];
  }
  double pf1 = 0.0, pf2 = 0.0;
  for (int idx = 0; idx < space.size(); ++idx) {
    const CtmcState& s = space.states[static_cast<size_t>(idx)];
    if (s.i + s.j + s.k != c) continue;
    if (s.m == spec.queue_r_capacity)
      pf1 += pi[static_cast<size_t>(idx)] *
             detail::forced_weight(s.j, c, s.j, pb_s);
    if (s.n == spec.queue_tau_capacity)
      pf2 += pi[static_cast<size_t>(idx)] *
             detail::forced_weight(s.k, c, s.j, pb_s);
  }
  return {detail::clip01(pf1), detail::clip01(pf2)};
}

// Service completion rates for the two queued classes and mean server
// utilization.
inline std::tuple<double, double, double> completion_and_utilization(
    const CtmcSpec& spec, const StateSpace& space,
    const std::vector<double>& pi) {
  const double dep = spec.departure_factor();
  double scr1 = 0.0, scr2 = 0.0, util = 0.0;
  for (int idx = 0; idx < space.size(); ++idx) {
    const CtmcState& s = space.states[static_cast<size_t>(idx)];
    const double p = pi[static_cast<size_t>(idx)];
    scr1 += s.j * spec.mu_r * dep * p;
    scr2 += s.k * spec.mu_tau * dep * p;
    util += static_cast<double>(s.i + s.j + s.k) / spec.servers * p;
  }
  return {scr1, scr2, util};
}

struct DelayMetrics {
  double l1 = 0.0;
  double l2 = 0.0;
  std::optional<double> d1;  // empty when the arrival rate is zero
  std::optional<double> d2;
  double r_interrupt = 0.0;
};

// Mean queue lengths and Little-style delays. An undefined delay (zero
// arrival rate into the queue) stays unset rather than reading as zero.
inline DelayMetrics delays(const CtmcSpec& spec, const StateSpace& space,
                           const std::vector<double>& pi) {
  DelayMetrics out;
  const int c = spec.servers;
  for (int idx = 0; idx < space.size(); ++idx) {
    const CtmcState& s = space.states[static_cast<size_t>(idx)];
    const double p = pi[static_cast<size_t>(idx)];
    out.l1 += s.m * p;
    out.l2 += s.n * p;
    if (s.i + s.j + s.k == c && s.j < c)
      out.r_interrupt +=
          spec.lambda_r * static_cast<double>(s.k) / (c - s.j) * p;
  }
  if (spec.lambda_r > 0.0) out.d1 = out.l1 / spec.lambda_r;
  const double denom2 = spec.lambda_tau + out.r_interrupt;
  if (denom2 > 0.0) out.d2 = out.l2 / denom2;
  return out;
}

// M/M/1-style mean response time with a capacity share beta.
inline double mean_response_time(double beta, double mu, double lambda) {
  if (beta * mu <= lambda)
    fail(errc::unstable, "beta*mu must exceed lambda");
  return 1.0 / (beta * mu - lambda);
}

// Exponential smoothing of per-class arrival estimates; one class moves
// per observation, the rest hold.
struct EstimatorState {
  std::vector<double> s_hat;
  double alpha_smooth = 0.5;
};

inline EstimatorState estimator_update(EstimatorState state, size_t cls,
                                       double observed) {
  if (state.alpha_smooth < 0.0 || state.alpha_smooth > 1.0)
    fail(errc::validation_error, "alpha_smooth must lie in [0,1]");
  if (cls >= state.s_hat.size())
    fail(errc::validation_error, "estimator class out of range");
  state.s_hat[cls] += state.alpha_smooth * (observed - state.s_hat[cls]);
  return state;
}

// Gillespie run over the same transition structure; returns time-weighted
// state frequencies aligned with enumerate_states. Deterministic per seed.
inline std::vector<double> simulate_ctmc(const CtmcSpec& spec,
                                         uint64_t max_events,
                                         uint64_t seed) {
  validate_ctmc(spec);
  if (max_events == 0)
    fail(errc::validation_error, "horizon must be positive");
  const StateSpace space = enumerate_states(spec);
  std::vector<double> weight(static_cast<size_t>(space.size()), 0.0);

  SplitMix64 rng(derive_seed(seed, 71));
  int current = 0;  // empty state
  double total_time = 0.0;
  std::vector<std::pair<int, double>> moves;
  for (uint64_t event = 0; event < max_events; ++event) {
    moves.clear();
    double rate_sum = 0.0;
    detail::for_each_transition(
        spec, space.states[static_cast<size_t>(current)],
        [&](const CtmcState& t, double rate) {
          moves.emplace_back(space.index_of(t), rate);
          rate_sum += rate;
        });
    if (rate_sum <= 0.0) {
      // Absorbing. Valid specs only hit this at the empty state before any
      // event; guard the general case anyway.
      if (total_time == 0.0) {
        weight[static_cast<size_t>(current)] = 1.0;
        return weight;
      }
      break;
    }
    double u = rng.next_double();
    while (u <= 0.0) u = rng.next_double();
    const double dwell = -std::log(u) / rate_sum;
    weight[static_cast<size_t>(current)] += dwell;
    total_time += dwell;

    double pick = rng.next_double() * rate_sum;
    int chosen = moves.back().first;
    for (const auto& [target, rate] : moves) {
      if (pick < rate) {
        chosen = target;
        break;
      }
      pick -= rate;
    }
    current = chosen;
  }
  for (double& wgt : weight) wgt /= total_time;
  return weight;
}

// Everything the CLI reports for one spec.
struct QueueMetrics {
  double pf1 = 0.0, pf2 = 0.0;
  double scr1 = 0.0, scr2 = 0.0;
  double utilization = 0.0;
  double l1 = 0.0, l2 = 0.0;
  std::optional<double> d1, d2;
  double r_interrupt = 0.0;
};

inline QueueMetrics queue_metrics(const CtmcSpec& spec,
                                  const StateSpace& space,
                                  const std::vector<double>& pi) {
  QueueMetrics out;
  std::tie(out.pf1, out.pf2) = blocking_metrics(spec, space, pi);
  std::tie(out.scr1, out.scr2, out.utilization) =
      completion_and_utilization(spec, space, pi);
  const DelayMetrics d = delays(spec, space, pi);
  out.l1 = d.l1;
  out.l2 = d.l2;
  out.d1 = d.d1;
  out.d2 = d.d2;
  out.r_interrupt = d.r_interrupt;
  return out;
}

inline QueueMetrics queue_metrics(const CtmcSpec& spec) {
  const StateSpace space = enumerate_states(spec);
  const Generator q = build_generator(spec, space);
  const std::vector<double> pi = solve_stationary(q);
  return queue_metrics(spec, space, pi);
}

}  // namespace eeflow
