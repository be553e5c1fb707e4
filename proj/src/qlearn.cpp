#include "qtune/qlearn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qtune/error.hpp"

namespace qtune {

std::string StateKey::to_string() const {
  if (start) return "START";
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < bins.size(); ++i) os << (i ? "," : "") << int(bins[i]);
  os << ')';
  return os.str();
}

QTable::QTable(std::size_t action_count) : action_count_(action_count) {
  if (action_count == 0) fail(ErrorKind::Config, "QTable: action count must be positive");
}

double QTable::get(const StateKey& s, std::size_t action) const {
  if (action >= action_count_) fail(ErrorKind::Range, "QTable: action " + std::to_string(action) + " out of range");
  auto it = rows_.find(s);
  return it == rows_.end() ? 0.0 : it->second[action];
}

void QTable::set(const StateKey& s, std::size_t action, double value) {
  if (action >= action_count_) fail(ErrorKind::Range, "QTable: action " + std::to_string(action) + " out of range");
  if (!std::isfinite(value)) fail(ErrorKind::Numeric, "QTable: non-finite value for state " + s.to_string());
  auto [it, inserted] = rows_.try_emplace(s, action_count_, 0.0);
  it->second[action] = value;
}

std::vector<double> QTable::row(const StateKey& s) const {
  auto it = rows_.find(s);
  return it == rows_.end() ? std::vector<double>(action_count_, 0.0) : it->second;
}

double QTable::max_value(const StateKey& s) const {
  auto it = rows_.find(s);
  if (it == rows_.end()) return 0.0;
  return *std::max_element(it->second.begin(), it->second.end());
}

std::size_t QTable::argmax(const StateKey& s) const {
  auto it = rows_.find(s);
  if (it == rows_.end()) return 0;
  // max_element returns the first maximum.
  return static_cast<std::size_t>(std::max_element(it->second.begin(), it->second.end()) - it->second.begin());
}

std::vector<std::pair<StateKey, std::vector<double>>> QTable::sorted_rows() const {
  std::vector<std::pair<StateKey, std::vector<double>>> out(rows_.begin(), rows_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.start != b.first.start) return a.first.start;
    return a.first.bins < b.first.bins;
  });
  return out;
}

bool QTable::operator==(const QTable& other) const {
  return action_count_ == other.action_count_ && rows_ == other.rows_;
}

void LearnerConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorKind::Config, "learner: alpha must be in (0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail(ErrorKind::Config, "learner: gamma must be in [0,1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(ErrorKind::Config, "learner: epsilon must be in [0,1]");
  if (max_steps_per_episode < 1) fail(ErrorKind::Config, "learner: max_steps_per_episode must be >= 1");
  if (num_episodes < 0) fail(ErrorKind::Config, "learner: num_episodes must be >= 0");
}

std::size_t select_action(const QTable& q, const StateKey& s, std::size_t action_count, double epsilon, Rng& rng) {
  if (rng.uniform() < epsilon) return rng.index(action_count);
  return q.argmax(s);
}

double q_update(QTable& q, const Transition& t, const LearnerConfig& cfg) {
  const double current = q.get(t.state, t.action);
  const double bootstrap = t.terminal ? 0.0 : q.max_value(t.next_state);
  const double target = t.reward + cfg.gamma * bootstrap;
  // Same backup as current + alpha * (target - current); this form stores the
  // target exactly when alpha is 1.
  const double updated = (1.0 - cfg.alpha) * current + cfg.alpha * target;
  if (!std::isfinite(updated))
    fail(ErrorKind::Numeric, "q_update: non-finite value at state " + t.state.to_string());
  q.set(t.state, t.action, updated);
  return updated;
}

EpisodeStats run_episode(Environment& env, QTable& q, const LearnerConfig& cfg, Rng& rng, StateKey* first_state) {
  EpisodeStats stats;
  StateKey s = StateKey::start_key();
  const std::size_t n_actions = env.action_count();
  while (stats.steps < cfg.max_steps_per_episode) {
    const std::size_t a = select_action(q, s, n_actions, cfg.epsilon, rng);
    const StepOutcome out = env.step(a);
    q_update(q, Transition{s, a, out.reward, out.next_state, out.terminal}, cfg);
    if (stats.steps == 0 && first_state) *first_state = out.next_state;
    ++stats.steps;
    stats.total_reward += out.reward;
    stats.final_action = a;
    s = out.next_state;
    if (out.terminal) {
      stats.reached_terminal = true;
      break;
    }
  }
  return stats;
}

TrainingReport train(const EnvironmentFactory& make_env, std::size_t sample_count, QTable& q, const LearnerConfig& cfg) {
  cfg.validate();
  if (sample_count == 0) fail(ErrorKind::Config, "train: dataset is empty");

  Rng rng(cfg.seed);
  TrainingReport report;
  std::vector<std::optional<StateKey>> first_states(sample_count);
  std::vector<std::unique_ptr<Environment>> envs(sample_count);
  for (int e = 0; e < cfg.num_episodes; ++e) {
    const std::size_t i = static_cast<std::size_t>(e) % sample_count;
    if (!envs[i]) envs[i] = make_env(i);
    StateKey first;
    EpisodeStats stats = run_episode(*envs[i], q, cfg, rng, &first);
    stats.episode = static_cast<std::size_t>(e);
    if (!first_states[i]) first_states[i] = first;
    report.curve.push_back(stats);
  }

  report.greedy_values.assign(q.action_count(), 0.0);
  if (cfg.readout == GreedyReadout::Start) {
    report.greedy_values = q.row(StateKey::start_key());
  } else {
    std::size_t seen = 0;
    for (const auto& s : first_states) {
      if (!s) continue;
      const auto row = q.row(*s);
      for (std::size_t a = 0; a < row.size(); ++a) report.greedy_values[a] += row[a];
      ++seen;
    }
    if (seen)
      for (auto& v : report.greedy_values) v /= static_cast<double>(seen);
  }
  report.greedy_action = static_cast<std::size_t>(
      std::max_element(report.greedy_values.begin(), report.greedy_values.end()) - report.greedy_values.begin());
  return report;
}

}  // namespace qtune
