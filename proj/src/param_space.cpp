#include "qtune/param_space.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "qtune/error.hpp"

namespace qtune {

namespace {

std::string join_values(const std::vector<ParamValue>& values) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << values[i];
  }
  os << '}';
  return os.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

ActionSpace::ActionSpace(std::vector<OperatorSpec> operators) : operators_(std::move(operators)) {
  if (operators_.empty()) fail(ErrorKind::Config, "action space: no operators declared");

  std::set<std::string> op_names;
  for (std::size_t o = 0; o < operators_.size(); ++o) {
    const auto& op = operators_[o];
    if (op.name.empty()) fail(ErrorKind::Config, "action space: operator with empty name");
    if (!op_names.insert(op.name).second)
      fail(ErrorKind::Config, "action space: duplicate operator '" + op.name + "'");
    if (op.parameters.empty())
      fail(ErrorKind::Config, "action space: operator '" + op.name + "' declares no parameters");

    std::set<std::string> param_names;
    for (std::size_t p = 0; p < op.parameters.size(); ++p) {
      const auto& param = op.parameters[p];
      const std::string qualified = op.name + "." + param.name;
      if (param.name.empty())
        fail(ErrorKind::Config, "action space: operator '" + op.name + "' has a parameter with empty name");
      if (!param_names.insert(param.name).second)
        fail(ErrorKind::Config, "action space: duplicate parameter '" + qualified + "'");
      if (param.values.empty())
        fail(ErrorKind::Config, "action space: parameter '" + qualified + "' has an empty value range");
      std::set<ParamValue> seen(param.values.begin(), param.values.end());
      if (seen.size() != param.values.size())
        fail(ErrorKind::Config, "action space: parameter '" + qualified + "' has duplicate values");
      digits_.push_back({o, p, param.values.size(), 0});
    }
  }

  // Least significant digit is the last parameter of the last operator.
  std::size_t weight = 1;
  for (auto it = digits_.rbegin(); it != digits_.rend(); ++it) {
    it->weight = weight;
    if (weight > std::numeric_limits<std::size_t>::max() / it->radix)
      fail(ErrorKind::Config, "action space: cardinality overflows");
    weight *= it->radix;
  }
  count_ = weight;
}

Action ActionSpace::action(std::size_t index) const {
  if (index >= count_)
    fail(ErrorKind::Range,
         "action index " + std::to_string(index) + " out of range [0, " + std::to_string(count_) + ")");
  Action a;
  a.index = index;
  a.elementary.reserve(operators_.size());
  for (const auto& op : operators_) a.elementary.push_back({op.name, std::vector<ParamValue>(op.parameters.size())});
  for (const auto& d : digits_) {
    const std::size_t digit = (index / d.weight) % d.radix;
    a.elementary[d.op].assignment[d.param] = operators_[d.op].parameters[d.param].values[digit];
  }
  return a;
}

std::size_t ActionSpace::index_of(const std::vector<ElementaryAction>& elementary) const {
  if (elementary.size() != operators_.size())
    fail(ErrorKind::Range, "action has " + std::to_string(elementary.size()) + " operators, space has " +
                               std::to_string(operators_.size()));
  std::size_t index = 0;
  for (const auto& d : digits_) {
    const auto& op = operators_[d.op];
    const auto& ea = elementary[d.op];
    if (ea.op != op.name || ea.assignment.size() != op.parameters.size())
      fail(ErrorKind::Range, "elementary action does not match operator '" + op.name + "'");
    const auto& values = op.parameters[d.param].values;
    auto it = std::find(values.begin(), values.end(), ea.assignment[d.param]);
    if (it == values.end())
      fail(ErrorKind::Range, "value " + std::to_string(ea.assignment[d.param]) + " not in range of " + op.name +
                                 "." + op.parameters[d.param].name + " " + join_values(values));
    index += static_cast<std::size_t>(it - values.begin()) * d.weight;
  }
  return index;
}

const ActionSpace::Digit& ActionSpace::find_digit(std::string_view op, std::string_view param) const {
  for (const auto& d : digits_) {
    if (operators_[d.op].name == op && operators_[d.op].parameters[d.param].name == param) return d;
  }
  fail(ErrorKind::Config, "action space has no parameter '" + std::string(op) + "." + std::string(param) + "'");
}

bool ActionSpace::has_parameter(std::string_view op, std::string_view param) const noexcept {
  return std::any_of(digits_.begin(), digits_.end(), [&](const Digit& d) {
    return operators_[d.op].name == op && operators_[d.op].parameters[d.param].name == param;
  });
}

ParamValue ActionSpace::value(std::size_t index, std::string_view op, std::string_view param) const {
  if (index >= count_) fail(ErrorKind::Range, "action index " + std::to_string(index) + " out of range");
  const auto& d = find_digit(op, param);
  return operators_[d.op].parameters[d.param].values[(index / d.weight) % d.radix];
}

std::string ActionSpace::describe(std::size_t index) const {
  const Action a = action(index);
  std::ostringstream os;
  bool first = true;
  for (std::size_t o = 0; o < operators_.size(); ++o) {
    for (std::size_t p = 0; p < operators_[o].parameters.size(); ++p) {
      if (!first) os << ',';
      first = false;
      os << operators_[o].name << '.' << operators_[o].parameters[p].name << '=' << a.elementary[o].assignment[p];
    }
  }
  return os.str();
}

std::string ActionSpace::ranges() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < digits_.size(); ++i) {
    const auto& d = digits_[i];
    if (i) os << "; ";
    os << operators_[d.op].name << '.' << operators_[d.op].parameters[d.param].name << " in "
       << join_values(operators_[d.op].parameters[d.param].values);
  }
  return os.str();
}

std::size_t ActionSpace::parse(std::string_view text) const {
  const auto bad = [&](const std::string& why) -> void {
    fail(ErrorKind::Range, "invalid action '" + std::string(text) + "': " + why + "; legal ranges: " + ranges());
  };

  std::vector<std::ptrdiff_t> chosen(digits_.size(), -1);
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;

    const auto eq = item.find('=');
    if (eq == std::string_view::npos) bad("expected name=value");
    std::string_view key = trim(item.substr(0, eq));
    std::string_view val = trim(item.substr(eq + 1));

    std::string_view op_name;
    std::string_view param_name = key;
    if (auto dot = key.find('.'); dot != std::string_view::npos) {
      op_name = key.substr(0, dot);
      param_name = key.substr(dot + 1);
    }

    std::ptrdiff_t match = -1;
    for (std::size_t i = 0; i < digits_.size(); ++i) {
      const auto& d = digits_[i];
      if (operators_[d.op].parameters[d.param].name != param_name) continue;
      if (!op_name.empty() && operators_[d.op].name != op_name) continue;
      if (match >= 0) bad("parameter '" + std::string(key) + "' is ambiguous, qualify it with its operator");
      match = static_cast<std::ptrdiff_t>(i);
    }
    if (match < 0) bad("unknown parameter '" + std::string(key) + "'");

    ParamValue v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(std::string(val), &used);
      if (used != val.size()) bad("value '" + std::string(val) + "' is not an integer");
    } catch (const std::logic_error&) {
      bad("value '" + std::string(val) + "' is not an integer");
    }

    const auto& d = digits_[static_cast<std::size_t>(match)];
    const auto& values = operators_[d.op].parameters[d.param].values;
    auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) bad("value " + std::to_string(v) + " out of range for '" + std::string(key) + "'");
    if (chosen[static_cast<std::size_t>(match)] >= 0) bad("parameter '" + std::string(key) + "' assigned twice");
    chosen[static_cast<std::size_t>(match)] = it - values.begin();
  }

  std::size_t index = 0;
  for (std::size_t i = 0; i < digits_.size(); ++i) {
    const auto& d = digits_[i];
    if (chosen[i] < 0)
      bad("missing parameter '" + operators_[d.op].name + "." + operators_[d.op].parameters[d.param].name + "'");
    index += static_cast<std::size_t>(chosen[i]) * d.weight;
  }
  return index;
}

ActionSpace build_action_space(std::vector<OperatorSpec> operators) { return ActionSpace(std::move(operators)); }

Action action_from_index(const ActionSpace& space, std::size_t index) { return space.action(index); }

}  // namespace qtune
