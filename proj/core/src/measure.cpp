#include "capi/measure.hpp"

#include "capi/errors.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

namespace capi {

std::size_t horizon(double omega, double gamma) {
  if (!(omega > 0.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParams("horizon needs omega > 0 and gamma in (0, 1)");
  }
  const double target = (omega / 4.0) * (1.0 - gamma);
  if (!(target < 1.0)) throw InvalidParams("(omega/4)(1-gamma) must be below 1");
  return static_cast<std::size_t>(std::ceil(std::log(target) / std::log(gamma)));
}

std::size_t num_episodes(double omega, double gamma, double zeta) {
  if (!(omega > 0.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParams("episode count needs omega > 0 and gamma in (0, 1)");
  }
  if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidParams("zeta must lie in (0, 1]");
  const double accuracy = omega / 4.0;
  const double n = std::log(2.0 / zeta) / (2.0 * accuracy * accuracy * (1.0 - gamma) * (1.0 - gamma));
  return static_cast<std::size_t>(std::ceil(n));
}

namespace {

double discounted_sum(const std::vector<double>& rewards, double gamma) {
  double sum = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    sum += weight * r;
    weight *= gamma;
  }
  return sum;
}

}  // namespace

MeasureResult measure(Simulator& sim, StateId s, ActionId a, const PolicyFn& policy,
                      const StatePredicate& s_prime, double omega, double zeta,
                      const MeasureOptions& options) {
  const TabularMdp& mdp = sim.mdp();
  const std::size_t H = horizon(omega, mdp.gamma());
  const std::size_t n = options.n_override.value_or(num_episodes(omega, mdp.gamma(), zeta));
  if (n == 0) throw InvalidParams("episode count must be positive");
  sim.check_query(s, a);
  const std::uint64_t block = sim.reserve_stream_block();

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n));
  if (threads == 1) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EpisodeRecord record =
          roll_episode(mdp, sim.episode_stream(block, i), s, a, policy, H, s_prime);
      sim.commit(record);
      if (const auto* escaped = std::get_if<Escaped>(&record.outcome)) {
        return MeasureDiscover{escaped->state};
      }
      total += discounted_sum(std::get<Trajectory>(record.outcome).rewards, mdp.gamma());
    }
    return MeasureSuccess{total / static_cast<double>(n)};
  }

  // Workers claim episode indices; once some episode escapes, higher indices
  // are skipped. The merge below replays the serial semantics exactly.
  std::vector<EpisodeRecord> records(n);
  std::vector<char> done(n, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_escape{std::numeric_limits<std::size_t>::max()};
  std::vector<std::exception_ptr> errors(threads);

  auto worker = [&](std::size_t id) {
    try {
      for (std::size_t i = next++; i < n; i = next++) {
        if (i > first_escape.load()) break;
        records[i] = roll_episode(mdp, sim.episode_stream(block, i), s, a, policy, H, s_prime);
        done[i] = 1;
        if (std::holds_alternative<Escaped>(records[i].outcome)) {
          std::size_t seen = first_escape.load();
          while (i < seen && !first_escape.compare_exchange_weak(seen, i)) {
          }
        }
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) throw Error("internal: episode skipped before the first escape");
    sim.commit(records[i]);
    if (const auto* escaped = std::get_if<Escaped>(&records[i].outcome)) {
      return MeasureDiscover{escaped->state};
    }
    total += discounted_sum(std::get<Trajectory>(records[i].outcome).rewards, mdp.gamma());
  }
  return MeasureSuccess{total / static_cast<double>(n)};
}

}  // namespace capi
