#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qtune/random.hpp"

namespace qtune {

/// Discretized state: one bin per state feature, or the episode START symbol.
struct StateKey {
  static constexpr std::size_t kFeatures = 4;

  bool start = false;
  std::array<std::uint8_t, kFeatures> bins{};

  static StateKey start_key() { return StateKey{true, {}}; }

  bool operator==(const StateKey&) const = default;
  std::string to_string() const;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    std::size_t h = k.start ? 0x9e3779b9u : 0u;
    for (auto b : k.bins) h = h * 31 + b;
    return h;
  }
};

/// Tabular action-value function. Absent entries read as 0.
class QTable {
 public:
  explicit QTable(std::size_t action_count);

  std::size_t action_count() const noexcept { return action_count_; }

  double get(const StateKey& s, std::size_t action) const;
  /// Throws Error{Numeric} for non-finite values, Error{Range} for a bad action.
  void set(const StateKey& s, std::size_t action, double value);

  /// Row of values for a state (all zeros when the state was never written).
  std::vector<double> row(const StateKey& s) const;
  double max_value(const StateKey& s) const;
  /// Lowest index among the maximal entries of the row.
  std::size_t argmax(const StateKey& s) const;

  std::size_t state_count() const noexcept { return rows_.size(); }

  /// Every materialized row, ordered START first then by bins.
  std::vector<std::pair<StateKey, std::vector<double>>> sorted_rows() const;

  bool operator==(const QTable& other) const;

 private:
  std::size_t action_count_;
  std::unordered_map<StateKey, std::vector<double>, StateKeyHash> rows_;
};

/// How train() reads the final greedy action out of the Q-table.
enum class GreedyReadout {
  /// Row of the START state, which every episode visits first.
  Start,
  /// Mean over samples of the row of each sample's first featurized state.
  FirstStates,
};

struct LearnerConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon = 0.1;
  int max_steps_per_episode = 100;
  int num_episodes = 200;
  std::uint64_t seed = 1;
  GreedyReadout readout = GreedyReadout::FirstStates;

  /// Throws Error{Config} when a field is out of range.
  void validate() const;
};

struct Transition {
  StateKey state;
  std::size_t action = 0;
  double reward = 0.0;
  StateKey next_state;
  bool terminal = false;
};

struct StepOutcome {
  StateKey next_state;
  double reward = 0.0;
  bool terminal = false;
};

/// What the learner interacts with during one episode.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t action_count() const = 0;
  virtual StepOutcome step(std::size_t action) = 0;
};

struct EpisodeStats {
  std::size_t episode = 0;
  int steps = 0;
  double total_reward = 0.0;
  bool reached_terminal = false;
  std::size_t final_action = 0;

  bool operator==(const EpisodeStats&) const = default;
};

/// Epsilon-greedy: with probability epsilon a uniform action, otherwise the
/// greedy action with lowest-index tie-break. One uniform draw decides
/// exploration; a second picks the random action.
std::size_t select_action(const QTable& q, const StateKey& s, std::size_t action_count, double epsilon, Rng& rng);

/// One-step Q-learning backup. A terminal transition bootstraps from 0.
/// Returns the stored value.
double q_update(QTable& q, const Transition& t, const LearnerConfig& cfg);

/// Runs from START until a terminal reward or the step cap.
/// `first_state`, when non-null, receives the state reached by the first step.
EpisodeStats run_episode(Environment& env, QTable& q, const LearnerConfig& cfg, Rng& rng,
                         StateKey* first_state = nullptr);

struct TrainingReport {
  std::vector<EpisodeStats> curve;
  std::size_t greedy_action = 0;
  /// Mean over images of the greedy-readout rows; one entry per action.
  std::vector<double> greedy_values;
};

using EnvironmentFactory = std::function<std::unique_ptr<Environment>(std::size_t sample_index)>;

/// Runs cfg.num_episodes episodes, episode e on sample e mod sample_count,
/// sharing one Q-table, then reads out the greedy action (lowest index on
/// ties). Throws Error{Config} when sample_count is 0.
TrainingReport train(const EnvironmentFactory& make_env, std::size_t sample_count, QTable& q, const LearnerConfig& cfg);

}  // namespace qtune
