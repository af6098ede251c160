#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cmodlab/parser.hpp"
#include "cmodlab/poly.hpp"

using namespace cmodlab;

static VarTable tx_table() {
  VarTable v;
  v.names = {"t", "x"};
  v.lambda_count = 1;
  return v;
}

TEST_CASE("polynomial parsing: operators and coefficients") {
  VarTable v = tx_table();
  Poly f = parse_poly("x^2 - 3^2*x", v);
  CHECK(f.degree() == 2);
  CHECK(f.coefficient({0, 2}) == 1);
  CHECK(f.coefficient({0, 1}) == -9);
  CHECK(f.constant_term() == 0);

  // juxtaposition means multiplication
  CHECK(parse_poly("5x", v) == parse_poly("5*x", v));
  CHECK(parse_poly("2t x", v) == parse_poly("2*t*x", v));
  CHECK(parse_poly("3(t+x)", v) == parse_poly("3*t+3*x", v));

  // rational literals stay exact
  Poly g = parse_poly("9/2*t", v);
  CHECK(g.coefficient({1, 0}) == mpq_class(9, 2));

  // powers bind tighter than products
  CHECK(parse_poly("2x^3", v).coefficient({0, 3}) == 2);
  CHECK(parse_poly("(t-x)^2", v) == parse_poly("t^2 - 2t x + x^2", v));

  // unary minus and subtraction chains
  CHECK(parse_poly("-x + x", v).is_zero());
  CHECK(parse_poly("t - x - x", v).coefficient({0, 1}) == -2);
}

TEST_CASE("polynomial parsing: rejects unknown variables and trailing junk") {
  VarTable v = tx_table();
  CHECK_THROWS_AS(parse_poly("x + y", v), CmodError);
  CHECK_THROWS_AS(parse_poly("x2", v), CmodError);  // one identifier, not x*2
  CHECK_THROWS_AS(parse_poly("x +", v), CmodError);
  CHECK_THROWS_AS(parse_poly("(x", v), CmodError);
  try {
    parse_poly("q", v);
    CHECK(false);
  } catch (const CmodError& e) {
    CHECK(e.kind == ErrKind::Parse);
  }
}

TEST_CASE("polynomial algebra: substitute, truncate, linear data") {
  VarTable v = tx_table();
  Poly f = parse_poly("x^2 - 4x + 2t", v);
  CHECK(f.linear_coefficient(0) == 2);
  CHECK(f.linear_coefficient(1) == -4);
  Poly at_zero = f.substitute(1, Poly(2));
  CHECK(at_zero == parse_poly("2t", v));
  Poly shifted = f.substitute(0, parse_poly("x^2", v));
  CHECK(shifted == parse_poly("3x^2 - 4x", v));
  CHECK(parse_poly("x^3 + x + t^2", v).truncated(2) == parse_poly("x + t^2", v));
  CHECK(parse_poly("t*x", v).vars_below(2));
  CHECK_FALSE(parse_poly("t*x", v).vars_below(1));
  CHECK(parse_poly("t^3", v).vars_below(1));
}

TEST_CASE("input files: header lines and relations") {
  ParsedInput in = parse_input("p=3; lambda t; fiber x; rel x^2 - 3^2*x");
  CHECK(in.algebra.p == 3);
  CHECK(in.algebra.codim() == 1);
  CHECK(in.algebra.vars.fiber_count() == 1);
  CHECK(in.algebra.relations.size() == 1);
  CHECK(in.trunc == 8);

  ParsedInput tri = parse_input("p=5\nfiber x, y\nrel x^2-5x\nrel y^2-5y\nrel x*y\nflag cm\n");
  CHECK(tri.algebra.codim() == 0);
  CHECK(tri.algebra.vars.fiber_count() == 2);
  CHECK(tri.algebra.relations.size() == 3);
  CHECK(tri.algebra.has_flag("cm"));
  CHECK_FALSE(tri.algebra.has_flag("ci"));

  ParsedInput tr = parse_input("p=2; lambda t; trunc 5");
  CHECK(tr.trunc == 5);

  // comments and blank lines are ignored
  ParsedInput c = parse_input("# header\np=7  # the prime\n\nlambda t\n");
  CHECK(c.algebra.p == 7);
}

TEST_CASE("input files: malformed inputs raise ParseError") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_input(text);
      return ErrKind::Computation;  // not reached
    } catch (const CmodError& e) {
      return e.kind;
    }
  };
  CHECK(kind_of("lambda t") == ErrKind::Parse);             // missing p
  CHECK(kind_of("p=3; rel t; lambda t") == ErrKind::Parse); // vars after rel
  CHECK(kind_of("p=3; lambda t; bogus line") == ErrKind::Parse);
  CHECK(kind_of("p=x") == ErrKind::Parse);
  CHECK(kind_of("p=3; trunc 1") == ErrKind::Parse);
  CHECK(kind_of("p=4; fiber x; rel x^2-4x") == ErrKind::Parse);  // 4 not prime
}

TEST_CASE("input files: augmentation form is enforced") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_input(text);
      return ErrKind::Computation;
    } catch (const CmodError& e) {
      return e.kind;
    }
  };
  // unit linear coefficient on a fiber variable
  CHECK(kind_of("p=2; fiber x; rel x^2 - x") == ErrKind::BadAugmentationForm);
  // nonzero constant term
  CHECK(kind_of("p=2; fiber x; rel x^2 - 2x + 2") == ErrKind::BadAugmentationForm);
  // non-integral coefficient at p
  CHECK(kind_of("p=2; fiber x; rel x^2 - 1/2*x") == ErrKind::Parse);
  // a base variable may carry a unit linear coefficient (it becomes dependent)
  CHECK_NOTHROW(parse_input("p=2; lambda t; fiber s; rel t - 2^3*s - s^2"));
  // and 1/3 is fine at p=2
  CHECK_NOTHROW(parse_input("p=2; fiber x; rel x^2 - 1/3*2*x"));
}

TEST_CASE("input files: lambda-structure block assembly") {
  const char* text =
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\n"
      "basis 1, x\n"
      "mult x*x = [0, 8]\n";
  ParsedInput in = parse_input(text);
  REQUIRE(in.lambda.has_value());
  const LambdaStructure& L = *in.lambda;
  CHECK(L.rank == 2);
  CHECK(L.basis[0] == "1");
  CHECK(L.aug[0] == 1);
  CHECK(L.aug[1] == 0);
  // identity row filled automatically, embed defaulted to the basis slot of x
  CHECK(L.mult[0][1] == lvec_unit(L, 1));
  CHECK(L.embed[0] == lvec_unit(L, 1));
  CHECK(L.mult[1][1][1].constant_term() == 8);

  // missing mult entry is an error
  CHECK_THROWS_AS(parse_input("p=2; lambda t; fiber x; rel x^2-2x\n[lambda-structure]\nbasis 1, x\n"), CmodError);
  // wrong vector length is an error
  CHECK_THROWS_AS(parse_input("p=2; lambda t; fiber x; rel x^2-2x\n[lambda-structure]\nbasis 1, x\nmult x*x = [0]\n"),
                  CmodError);
}

TEST_CASE("input files: module blocks resolve against the structure") {
  const char* text =
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\n"
      "basis 1, x\n"
      "mult x*x = [0, 8]\n"
      "[module M]\n"
      "act x = [[0, 0]; [1, 8]]\n";
  ParsedInput in = parse_input(text);
  REQUIRE(in.modules.size() == 1);
  LambdaModule m = resolve_module(in.modules[0], *in.lambda);
  CHECK(m.name == "M");
  CHECK(m.rank == 2);
  CHECK(m.act.size() == 2);
  CHECK(m.act[0][0][0] == Poly::one(2));  // identity filled in
  CHECK(m.act[1][1][0] == Poly::one(2));
  CHECK(m.act[1][1][1].constant_term() == 8);
}
