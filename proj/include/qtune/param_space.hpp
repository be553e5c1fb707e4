#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qtune {

using ParamValue = std::int64_t;

/// One tunable parameter and its ordered, duplicate-free value range.
struct ParameterSpec {
  std::string name;
  std::vector<ParamValue> values;
};

/// A pipeline stage and the parameters the tuner may set on it.
struct OperatorSpec {
  std::string name;
  std::vector<ParameterSpec> parameters;
};

/// One value per parameter of a single operator, in parameter order.
struct ElementaryAction {
  std::string op;
  std::vector<ParamValue> assignment;

  bool operator==(const ElementaryAction&) const = default;
};

/// A full parameter assignment for the pipeline plus its flat index.
struct Action {
  std::vector<ElementaryAction> elementary;
  std::size_t index = 0;

  bool operator==(const Action&) const = default;
};

/// Cartesian product of every parameter range, indexed in mixed radix.
///
/// The first parameter of the first operator is the most significant digit,
/// so index 0 takes every parameter's first value and index count()-1 takes
/// every parameter's last value. Immutable after construction.
class ActionSpace {
 public:
  /// Throws Error{Config} when the list is empty, an operator declares no
  /// parameters, a range is empty or has duplicates, or names collide.
  explicit ActionSpace(std::vector<OperatorSpec> operators);

  std::size_t count() const noexcept { return count_; }
  const std::vector<OperatorSpec>& operators() const noexcept { return operators_; }

  /// Throws Error{Range} when index >= count().
  Action action(std::size_t index) const;

  /// Inverse of action(); throws Error{Range} when any value is not in its range.
  std::size_t index_of(const std::vector<ElementaryAction>& elementary) const;

  /// Value of `op.param` in the action at `index`.
  ParamValue value(std::size_t index, std::string_view op, std::string_view param) const;

  /// True if the space declares `op.param`.
  bool has_parameter(std::string_view op, std::string_view param) const noexcept;

  /// "GLCM.n=13,KMEANS.k=3"
  std::string describe(std::size_t index) const;

  /// Accepts "n=13,k=3" or qualified "GLCM.n=13,KMEANS.k=3". Every parameter
  /// must be assigned exactly once. Errors list the legal ranges.
  std::size_t parse(std::string_view text) const;

  /// Human-readable listing of every range, e.g. "GLCM.n in {9,11}; KMEANS.k in {1,2}".
  std::string ranges() const;

 private:
  struct Digit {
    std::size_t op;
    std::size_t param;
    std::size_t radix;
    std::size_t weight;
  };

  std::vector<OperatorSpec> operators_;
  std::vector<Digit> digits_;
  std::size_t count_ = 0;

  const Digit& find_digit(std::string_view op, std::string_view param) const;
};

/// Free-function form of ActionSpace construction.
ActionSpace build_action_space(std::vector<OperatorSpec> operators);

/// Free-function form of ActionSpace::action.
Action action_from_index(const ActionSpace& space, std::size_t index);

}  // namespace qtune
