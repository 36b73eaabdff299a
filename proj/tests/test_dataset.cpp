#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "drglm/dataset.hpp"

using namespace drglm;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = std::string("/tmp/drglm_test_") + name;
  std::ofstream f(path);
  f << text;
  return path;
}

}  // namespace

TEST_CASE("csv type inference and quoting") {
  auto path = write_temp("basic.csv",
                         "y,x,grp\n"
                         "1.5,0,\"a,1\"\n"
                         "2.25,1,b\n"
                         "-3e2,0,a\n");
  Dataset ds = read_csv(path);
  CHECK(ds.n_rows() == 3);
  CHECK(ds.col("y").kind == ColumnKind::numeric);
  CHECK(ds.col("y").values[2] == doctest::Approx(-300.0));
  CHECK(ds.col("grp").kind == ColumnKind::categorical);
  CHECK(ds.col("grp").labels[0] == "a,1");
  CHECK(ds.col("grp").levels == std::vector<std::string>{"a", "a,1", "b"});
}

TEST_CASE("schema hints override inference") {
  auto path = write_temp("hint.csv", "g\n1\n2\n1\n");
  Dataset ds = read_csv(path, {{"g", ColumnKind::categorical}});
  CHECK(ds.col("g").kind == ColumnKind::categorical);
  CHECK(ds.col("g").levels == std::vector<std::string>{"1", "2"});
  CHECK_THROWS_AS(read_csv(write_temp("badnum.csv", "g\n1\nx\n"),
                           {{"g", ColumnKind::numeric}}),
                  DataError);
}

TEST_CASE("csv structural errors") {
  CHECK_THROWS_AS(read_csv(write_temp("ragged.csv", "a,b\n1,2\n3\n")), DataError);
  CHECK_THROWS_AS(read_csv(write_temp("empty.csv", "")), DataError);
  CHECK_THROWS_AS(read_csv("/tmp/definitely_not_here_drglm.csv"), DataError);
}

TEST_CASE("csv round trip at full precision") {
  Dataset ds;
  Eigen::VectorXd v(2);
  v << 0.1, 1.0 / 3.0;
  ds.add_numeric("v", v);
  auto path = write_temp("round.csv", "");
  write_csv(ds, path);
  Dataset back = read_csv(path);
  CHECK(back.col("v").values[0] == v[0]);
  CHECK(back.col("v").values[1] == v[1]);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  Eigen::VectorXd v(2);
  v << 1, 2;
  ds.add_numeric("a", v);
  CHECK_THROWS_AS(ds.add_numeric("a", v), DataError);  // duplicate name
  Eigen::VectorXd w(3);
  w << 1, 2, 3;
  CHECK_THROWS_AS(ds.add_numeric("b", w), DataError);  // row mismatch
  Eigen::VectorXd bad(2);
  bad << 1, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ds.add_numeric("c", bad), DataError);
  CHECK_THROWS_AS(ds.col("missing"), DataError);
}

TEST_CASE("take_rows resamples with repetition") {
  Dataset ds;
  Eigen::VectorXd v(3);
  v << 10, 20, 30;
  ds.add_numeric("v", v);
  ds.add_categorical("g", {"a", "b", "a"});
  Dataset sub = ds.take_rows({2, 0, 2});
  CHECK(sub.n_rows() == 3);
  CHECK(sub.col("v").values[0] == 30);
  CHECK(sub.col("v").values[2] == 30);
  CHECK(sub.col("g").labels == std::vector<std::string>{"a", "a", "a"});
  // levels are recomputed on the subset; refits bind their own schema
  CHECK(sub.col("g").levels == std::vector<std::string>{"a"});
}

TEST_CASE("override_exposure requires a binary numeric column") {
  Dataset ds;
  Eigen::VectorXd x(3), z(3);
  x << 0, 1, 1;
  z << 0.5, 1, 2;
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  Dataset d1 = override_exposure(ds, "x", 1.0);
  CHECK(d1.col("x").values.isConstant(1.0));
  CHECK(d1.col("z").values[0] == 0.5);
  CHECK_THROWS_AS(override_exposure(ds, "z", 1.0), DataError);
}
