#pragma once
#include <cstdint>
#include <vector>

#include "lamcoal/coalescent.hpp"
#include "lamcoal/genetree.hpp"
#include "lamcoal/rng.hpp"

namespace lamcoal {

struct ForwardEvent {
  enum class Kind { Start, Grow, Mutate, NewType };
  Kind kind;
  int type = -1;      // acting type in the previous state
  int amount = 0;     // Start: initial size; Grow: lineages added
  int position = -1;  // NewType: insertion index in the new state
};

struct History {
  std::vector<Genetree> states;  // states[0] is the root sample
  std::vector<ForwardEvent> events;  // events[k] leads from states[k] to states[k+1]
  int target_n = 1;
  bool complete = false;
  const Genetree& final_state() const { return states.back(); }
};

struct TimedHistory {
  History history;
  std::vector<double> holding;  // V_k, time spent in states[k] for k >= 1 (index 0 unused)
  double total_time() const;
};

History simulate_sample(const GreenTable& green, double r, Philox& rng);
History simulate_sample(int target_n, const LambdaModel& model, double r, std::uint64_t seed);

// Forward-chain log probability of the state sequence, including the terminal
// factor when the history is complete.
double forward_log_prob(const History& h, const GreenTable& green, double r);
double forward_log_prob(const History& h, const LambdaModel& model, double r);

// Number of insertion positions for a new offspring of type i of g that yield
// the same ordered state as inserting at pos.
int insertion_multiplicity(const Genetree& g, int i, int pos);

TimedHistory embed_times(const History& h, const RateTable& rates, double r, Philox& rng);
TimedHistory embed_times(const History& h, const LambdaModel& model, double r, std::uint64_t seed);

}  // namespace lamcoal
