#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "drglm/dataset.hpp"
#include "drglm/errors.hpp"

namespace drglm {

/// One multiplicand of an interaction term: a variable raised to a positive
/// integer power. Power > 1 only for numeric variables.
struct TermFactor {
  std::string var;
  int power = 1;

  bool operator==(const TermFactor&) const = default;
};

/// An expanded model term: the interaction (product) of its factors. A main
/// effect has a single factor.
using Term = std::vector<TermFactor>;

/// Parsed formula: response name plus a term-expression tree. Crossings (`*`)
/// are kept unexpanded until design construction.
class FormulaAst {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Node {
    enum class Kind { variable, power, interact, cross, sum };
    Kind kind;
    std::string var;  // variable, power
    int power = 1;    // power
    std::vector<NodePtr> children;
  };

  std::string response;
  NodePtr terms;

  /// Expands crossings and dedupes into the final ordered term list: within
  /// each top-level summand, main effects precede interactions, lower-order
  /// before higher-order; first occurrence wins.
  std::vector<Term> expand() const;

  /// All variable names referenced on the right-hand side.
  std::vector<std::string> variables() const;
};

FormulaAst parse(const std::string& text);

/// Per-variable schema captured at build time, so the same expansion can be
/// reapplied to compatible datasets.
struct VariableSchema {
  std::string name;
  ColumnKind kind;
  std::vector<std::string> levels;  // categorical only
};

/// An n-by-p numeric design matrix together with the bound mapping that
/// produced it. First column is always the intercept.
class DesignMatrix {
 public:
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const std::vector<std::string>& column_names() const { return names_; }
  Eigen::Index cols() const { return matrix_.cols(); }
  Eigen::Index rows() const { return matrix_.rows(); }
  const std::vector<Term>& terms() const { return terms_; }
  const std::string& response() const { return response_; }

  /// Applies the bound expansion to new data with an identical schema.
  Eigen::MatrixXd rebuild(const Dataset& ds) const;

  /// Index of the main-effect column for `var`, or -1 when absent.
  Eigen::Index column_index(const std::string& name) const;

  friend DesignMatrix build_design(const FormulaAst& ast, const Dataset& ds);

 private:
  Eigen::MatrixXd matrix_;
  std::vector<std::string> names_;
  std::vector<Term> terms_;
  std::vector<VariableSchema> schema_;
  std::string response_;
};

DesignMatrix build_design(const FormulaAst& ast, const Dataset& ds);

}  // namespace drglm
