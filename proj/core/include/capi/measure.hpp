#pragma once

#include "capi/mdp.hpp"
#include "capi/simulator.hpp"

#include <cstddef>
#include <optional>
#include <variant>

namespace capi {

/// Effective horizon ceil(ln((omega/4)(1-gamma)) / ln gamma).
/// Throws InvalidParams unless 0 < (omega/4)(1-gamma) < 1.
std::size_t horizon(double omega, double gamma);

/// Episode count ceil((omega/4)^-2 (1-gamma)^-2 ln(2/zeta) / 2) for zeta in (0, 1].
std::size_t num_episodes(double omega, double gamma, double zeta);

struct MeasureOptions {
  /// Replaces the episode count. Voids the accuracy guarantee; smoke tests only.
  std::optional<std::size_t> n_override;
  /// Worker threads for the episode fan-out. With more than one thread the
  /// policy and filter callables must be safe to call concurrently.
  std::size_t threads = 1;
};

struct MeasureSuccess {
  double q_tilde;
};
struct MeasureDiscover {
  StateId state;
};
using MeasureResult = std::variant<MeasureSuccess, MeasureDiscover>;

/// Truncated Monte-Carlo estimate of q^pi(s, a).
///
/// Runs n episodes of length H from (s, a) following `policy`. Returns
/// Discover at the first state (steps 1..H-1, checked before acting) that
/// fails `s_prime`; otherwise Success with the mean discounted truncated
/// return. Episode i draws from the stream keyed by (block, i), and
/// bookkeeping is committed in episode order, so serial and parallel runs
/// produce identical results, query counts and seen sets.
MeasureResult measure(Simulator& sim, StateId s, ActionId a, const PolicyFn& policy,
                      const StatePredicate& s_prime, double omega, double zeta,
                      const MeasureOptions& options = {});

}  // namespace capi
