#include "doctest.h"
#include "drglm/formula.hpp"

using namespace drglm;

namespace {

Dataset lowbwt_like(int n = 8) {
  Dataset ds;
  Eigen::VectorXd bwt(n), smoker(n), age(n), lwt(n);
  std::vector<std::string> race;
  const char* levels[3] = {"white", "black", "other"};
  for (int i = 0; i < n; ++i) {
    bwt[i] = 2500 + 10 * i;
    smoker[i] = i % 2;
    age[i] = 20 + i;
    lwt[i] = 100 + 3 * i;
    race.push_back(levels[i % 3]);
  }
  ds.add_numeric("bwt", bwt);
  ds.add_numeric("smoker", smoker);
  ds.add_numeric("age", age);
  ds.add_numeric("lwt", lwt);
  ds.add_categorical("race", race);
  return ds;
}

}  // namespace

TEST_CASE("crossing expansion order and dummy coding") {
  Dataset ds = lowbwt_like();
  auto ast = parse("bwt ~ smoker * (race + age + lwt) + I(age^2) + I(lwt^2)");
  DesignMatrix dm = build_design(ast, ds);
  // reference level of race is the first sorted level ("black")
  std::vector<std::string> expected = {
      "(Intercept)",  "smoker",       "raceother",   "racewhite",
      "age",          "lwt",          "smoker:raceother", "smoker:racewhite",
      "smoker:age",   "smoker:lwt",   "I(age^2)",    "I(lwt^2)"};
  CHECK(dm.column_names() == expected);
  CHECK(dm.cols() == 12);
  // indicator content: row 1 has race "black" (reference) -> both indicators 0
  CHECK(dm.matrix()(1, 2) == 0.0);
  CHECK(dm.matrix()(1, 3) == 0.0);
  // row 0 is "white"
  CHECK(dm.matrix()(0, 3) == 1.0);
  // interaction column = product of parents
  for (int i = 0; i < 8; ++i)
    CHECK(dm.matrix()(i, 8) == dm.matrix()(i, 1) * dm.matrix()(i, 4));
  // power column
  CHECK(dm.matrix()(2, 10) == doctest::Approx(22.0 * 22.0));
}

TEST_CASE("term dedupe and self interaction") {
  Dataset ds = lowbwt_like();
  auto t1 = parse("bwt ~ age + age").expand();
  CHECK(t1.size() == 1);
  auto t2 = parse("bwt ~ age:age").expand();
  REQUIRE(t2.size() == 1);
  CHECK(t2[0] == Term{{"age", 1}});
  // a*b already contains a and b; adding them again is a no-op
  auto t3 = parse("bwt ~ smoker*age + age + smoker").expand();
  CHECK(t3.size() == 3);
  // a:b and b:a are the same term
  auto t4 = parse("bwt ~ smoker:age + age:smoker").expand();
  CHECK(t4.size() == 1);
}

TEST_CASE("interaction binds tighter than sum") {
  auto terms = parse("y ~ a + b:c").expand();
  REQUIRE(terms.size() == 2);
  CHECK(terms[0] == Term{{"a", 1}});
  CHECK(terms[1] == Term{{"b", 1}, {"c", 1}});
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_WITH_AS(parse("y ~ a - b"), doctest::Contains("offset 6"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ "), FormulaError);
  CHECK_THROWS_AS(parse("~ a"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ a + + b"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ (a + b"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ I(a^0)"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ I(a^b)"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ log(a)"), FormulaError);
  CHECK_THROWS_AS(parse("y ~ y + a"), FormulaError);  // response among terms
}

TEST_CASE("categorical restrictions") {
  Dataset ds = lowbwt_like();
  CHECK_THROWS_AS(build_design(parse("bwt ~ I(race^2)"), ds), FormulaError);
  CHECK_THROWS_AS(build_design(parse("bwt ~ nosuch"), ds), FormulaError);
}

TEST_CASE("rebuild applies the bound schema to new data") {
  Dataset ds = lowbwt_like();
  DesignMatrix dm = build_design(parse("bwt ~ smoker + race"), ds);

  Dataset sub = ds.take_rows({0, 1, 2});
  Eigen::MatrixXd X = dm.rebuild(sub);
  CHECK(X.rows() == 3);
  CHECK(X.cols() == dm.cols());  // dummy columns follow the original levels

  Dataset alien;
  Eigen::VectorXd b(2), s(2);
  b << 1, 2;
  s << 0, 1;
  alien.add_numeric("bwt", b);
  alien.add_numeric("smoker", s);
  alien.add_categorical("race", {"white", "martian"});
  CHECK_THROWS_WITH_AS(dm.rebuild(alien), doctest::Contains("unseen level"), FormulaError);
}

TEST_CASE("column_index finds main effects only") {
  Dataset ds = lowbwt_like();
  DesignMatrix dm = build_design(parse("bwt ~ smoker * age"), ds);
  CHECK(dm.column_index("smoker") == 1);
  CHECK(dm.column_index("age") == 2);
  CHECK(dm.column_index("nosuch") == -1);
}

TEST_CASE("variables lists rhs names once") {
  auto vars = parse("y ~ a*b + I(a^2) + c").variables();
  CHECK(vars == std::vector<std::string>{"a", "b", "c"});
}
