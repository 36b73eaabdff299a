#include "drglm/formula.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace drglm {

namespace {

struct Token {
  enum class Kind { ident, integer, tilde, plus, star, colon, caret, lparen, rparen, end };
  Kind kind;
  std::string text;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::size_t off = pos_;
    if (pos_ >= s_.size()) return {Token::Kind::end, "", off};
    char c = s_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
              s_[pos_] == '.'))
        ++pos_;
      return {Token::Kind::ident, s_.substr(start, pos_ - start), off};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return {Token::Kind::integer, s_.substr(start, pos_ - start), off};
    }
    ++pos_;
    switch (c) {
      case '~': return {Token::Kind::tilde, "~", off};
      case '+': return {Token::Kind::plus, "+", off};
      case '*': return {Token::Kind::star, "*", off};
      case ':': return {Token::Kind::colon, ":", off};
      case '^': return {Token::Kind::caret, "^", off};
      case '(': return {Token::Kind::lparen, "(", off};
      case ')': return {Token::Kind::rparen, ")", off};
      case '-':
        throw FormulaError("unsupported construct '-' at offset " + std::to_string(off) +
                           " (intercept removal is not supported)");
      default:
        throw FormulaError("unexpected character '" + std::string(1, c) + "' at offset " +
                           std::to_string(off));
    }
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) { advance(); }

  FormulaAst parse_formula() {
    FormulaAst ast;
    if (tok_.kind != Token::Kind::ident)
      throw FormulaError("expected response name at offset " + std::to_string(tok_.offset));
    ast.response = tok_.text;
    advance();
    expect(Token::Kind::tilde, "~");
    ast.terms = parse_sum();
    if (tok_.kind != Token::Kind::end)
      throw FormulaError("trailing input at offset " + std::to_string(tok_.offset));
    return ast;
  }

 private:
  using Node = FormulaAst::Node;
  using NodePtr = FormulaAst::NodePtr;

  void advance() { tok_ = lex_.next(); }

  void expect(Token::Kind k, const std::string& what) {
    if (tok_.kind != k)
      throw FormulaError("expected '" + what + "' at offset " + std::to_string(tok_.offset));
    advance();
  }

  static NodePtr make(Node::Kind kind, std::vector<NodePtr> children) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->children = std::move(children);
    return n;
  }

  NodePtr parse_sum() {
    std::vector<NodePtr> parts{parse_prod()};
    while (tok_.kind == Token::Kind::plus) {
      advance();
      parts.push_back(parse_prod());
    }
    if (parts.size() == 1) return parts[0];
    return make(Node::Kind::sum, std::move(parts));
  }

  NodePtr parse_prod() {
    NodePtr left = parse_unit();
    while (tok_.kind == Token::Kind::star || tok_.kind == Token::Kind::colon) {
      bool cross = tok_.kind == Token::Kind::star;
      advance();
      NodePtr right = parse_unit();
      left = make(cross ? Node::Kind::cross : Node::Kind::interact, {left, right});
    }
    return left;
  }

  NodePtr parse_unit() {
    if (tok_.kind == Token::Kind::lparen) {
      advance();
      NodePtr inner = parse_sum();
      expect(Token::Kind::rparen, ")");
      return inner;
    }
    if (tok_.kind != Token::Kind::ident)
      throw FormulaError("expected variable or '(' at offset " + std::to_string(tok_.offset));
    std::string name = tok_.text;
    std::size_t off = tok_.offset;
    advance();
    if (name == "I" && tok_.kind == Token::Kind::lparen) {
      advance();
      if (tok_.kind != Token::Kind::ident)
        throw FormulaError("expected variable inside I() at offset " + std::to_string(tok_.offset));
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::power;
      n->var = tok_.text;
      advance();
      expect(Token::Kind::caret, "^");
      if (tok_.kind != Token::Kind::integer)
        throw FormulaError("expected integer exponent at offset " + std::to_string(tok_.offset));
      n->power = std::stoi(tok_.text);
      if (n->power < 1)
        throw FormulaError("power exponent must be a positive integer at offset " +
                           std::to_string(tok_.offset));
      advance();
      expect(Token::Kind::rparen, ")");
      return n;
    }
    if (tok_.kind == Token::Kind::lparen)
      throw FormulaError("unsupported function call '" + name + "(' at offset " +
                         std::to_string(off));
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::variable;
    n->var = name;
    return n;
  }

  Lexer lex_;
  Token tok_;
};

std::string term_key(const Term& t) {
  Term s = t;
  std::sort(s.begin(), s.end(), [](const TermFactor& a, const TermFactor& b) {
    return a.var != b.var ? a.var < b.var : a.power < b.power;
  });
  std::string key;
  for (const auto& f : s) key += f.var + "^" + std::to_string(f.power) + "|";
  return key;
}

// Merge duplicate factors within one interaction term (a:a collapses to a).
Term merge_factors(const Term& a, const Term& b) {
  Term out = a;
  for (const auto& f : b)
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  return out;
}

std::vector<Term> expand_node(const FormulaAst::NodePtr& node) {
  using Kind = FormulaAst::Node::Kind;
  switch (node->kind) {
    case Kind::variable:
      return {Term{{node->var, 1}}};
    case Kind::power:
      return {Term{{node->var, node->power}}};
    case Kind::sum: {
      std::vector<Term> out;
      for (const auto& c : node->children) {
        auto part = expand_node(c);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    case Kind::interact: {
      auto left = expand_node(node->children[0]);
      auto right = expand_node(node->children[1]);
      std::vector<Term> out;
      for (const auto& a : left)
        for (const auto& b : right) out.push_back(merge_factors(a, b));
      return out;
    }
    case Kind::cross: {
      auto left = expand_node(node->children[0]);
      auto right = expand_node(node->children[1]);
      std::vector<Term> out = left;
      out.insert(out.end(), right.begin(), right.end());
      for (const auto& a : left)
        for (const auto& b : right) out.push_back(merge_factors(a, b));
      return out;
    }
  }
  throw FormulaError("corrupt formula AST");
}

void collect_vars(const FormulaAst::NodePtr& node, std::vector<std::string>& out) {
  using Kind = FormulaAst::Node::Kind;
  if (node->kind == Kind::variable || node->kind == Kind::power) {
    if (std::find(out.begin(), out.end(), node->var) == out.end()) out.push_back(node->var);
    return;
  }
  for (const auto& c : node->children) collect_vars(c, out);
}

}  // namespace

FormulaAst parse(const std::string& text) {
  Parser p(text);
  FormulaAst ast = p.parse_formula();
  for (const auto& v : ast.variables())
    if (v == ast.response)
      throw FormulaError("response '" + ast.response + "' also appears among the terms");
  return ast;
}

std::vector<Term> FormulaAst::expand() const {
  // Top-level summands expand independently; within each summand, main effects
  // precede interactions and lower-order terms precede higher-order ones.
  std::vector<NodePtr> summands;
  if (terms->kind == Node::Kind::sum)
    summands = terms->children;
  else
    summands = {terms};

  std::vector<Term> out;
  std::set<std::string> seen;
  for (const auto& s : summands) {
    auto part = expand_node(s);
    std::stable_sort(part.begin(), part.end(),
                     [](const Term& a, const Term& b) { return a.size() < b.size(); });
    for (auto& t : part) {
      auto key = term_key(t);
      if (seen.insert(key).second) out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string> FormulaAst::variables() const {
  std::vector<std::string> out;
  collect_vars(terms, out);
  return out;
}

namespace {

struct FactorColumns {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
};

FactorColumns factor_columns(const TermFactor& f, const VariableSchema& schema,
                             const Column& col) {
  FactorColumns out;
  if (schema.kind == ColumnKind::numeric) {
    std::string name = f.power == 1
                           ? f.var
                           : "I(" + f.var + "^" + std::to_string(f.power) + ")";
    Eigen::VectorXd v = col.values;
    if (f.power > 1)
      v = col.values.array().pow(static_cast<double>(f.power)).matrix();
    out.names.push_back(name);
    out.cols.push_back(std::move(v));
  } else {
    if (f.power != 1)
      throw FormulaError("categorical variable '" + f.var + "' cannot appear inside I()");
    // Reference level = first in sorted order; one indicator per remaining level.
    const auto& levels = schema.levels;
    for (std::size_t l = 1; l < levels.size(); ++l) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(col.labels.size()));
      for (std::size_t i = 0; i < col.labels.size(); ++i) {
        if (std::find(levels.begin(), levels.end(), col.labels[i]) == levels.end())
          throw FormulaError("unseen level '" + col.labels[i] + "' in column " + f.var);
        v[static_cast<Eigen::Index>(i)] = col.labels[i] == levels[l] ? 1.0 : 0.0;
      }
      out.names.push_back(f.var + levels[l]);
      out.cols.push_back(std::move(v));
    }
  }
  return out;
}

// Expands one term into its design columns: tuple-wise products across the
// factor expansions, leftmost factor outermost.
void append_term_columns(const Term& term, const std::vector<VariableSchema>& schema,
                         const Dataset& ds, std::vector<std::string>& names,
                         std::vector<Eigen::VectorXd>& cols) {
  std::vector<FactorColumns> parts;
  for (const auto& f : term) {
    auto it = std::find_if(schema.begin(), schema.end(),
                           [&](const VariableSchema& s) { return s.name == f.var; });
    if (it == schema.end()) throw FormulaError("unknown variable: " + f.var);
    if (!ds.has(f.var)) throw FormulaError("unknown variable: " + f.var);
    const Column& c = ds.col(f.var);
    if (c.kind != it->kind)
      throw FormulaError("column " + f.var + " changed kind since design construction");
    parts.push_back(factor_columns(f, *it, c));
  }

  std::vector<std::size_t> idx(parts.size(), 0);
  while (true) {
    std::string name;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(ds.n_rows());
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k) name += ":";
      name += parts[k].names[idx[k]];
      v = v.cwiseProduct(parts[k].cols[idx[k]]);
    }
    names.push_back(name);
    cols.push_back(std::move(v));
    // odometer increment, rightmost fastest
    std::size_t k = parts.size();
    while (k > 0) {
      --k;
      if (++idx[k] < parts[k].names.size()) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (parts.empty()) return;
  }
}

Eigen::MatrixXd assemble(const std::vector<Term>& terms,
                         const std::vector<VariableSchema>& schema, const Dataset& ds,
                         std::vector<std::string>* names_out) {
  std::vector<std::string> names{"(Intercept)"};
  std::vector<Eigen::VectorXd> cols{Eigen::VectorXd::Ones(ds.n_rows())};
  for (const auto& t : terms) append_term_columns(t, schema, ds, names, cols);

  std::set<std::string> uniq(names.begin(), names.end());
  if (uniq.size() != names.size())
    throw FormulaError("duplicate design column names after expansion");

  Eigen::MatrixXd X(ds.n_rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) X.col(static_cast<Eigen::Index>(j)) = cols[j];
  if (names_out) *names_out = std::move(names);
  return X;
}

}  // namespace

DesignMatrix build_design(const FormulaAst& ast, const Dataset& ds) {
  DesignMatrix dm;
  dm.response_ = ast.response;
  dm.terms_ = ast.expand();
  for (const auto& v : ast.variables()) {
    if (!ds.has(v)) throw FormulaError("unknown variable: " + v);
    const Column& c = ds.col(v);
    VariableSchema s;
    s.name = v;
    s.kind = c.kind;
    s.levels = c.levels;
    dm.schema_.push_back(std::move(s));
  }
  dm.matrix_ = assemble(dm.terms_, dm.schema_, ds, &dm.names_);
  return dm;
}

Eigen::MatrixXd DesignMatrix::rebuild(const Dataset& ds) const {
  for (const auto& s : schema_) {
    if (!ds.has(s.name)) throw FormulaError("schema mismatch: missing column " + s.name);
    const Column& c = ds.col(s.name);
    if (c.kind != s.kind)
      throw FormulaError("schema mismatch: column " + s.name + " has different kind");
  }
  return assemble(terms_, schema_, ds, nullptr);
}

Eigen::Index DesignMatrix::column_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return -1;
  return static_cast<Eigen::Index>(it - names_.begin());
}

}  // namespace drglm
