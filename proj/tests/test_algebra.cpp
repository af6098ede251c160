#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cmodlab/parser.hpp"

using namespace cmodlab;

static AugmentedAlgebra alg(const std::string& text) { return parse_input(text).algebra; }

TEST_CASE("linear-part matrices") {
  // power-series base alone: no relations, one column
  AugmentedAlgebra base = alg("p=3; lambda t");
  OMatrix m0 = linear_part_matrix(base);
  CHECK(m0.rows() == 0);
  CHECK(m0.cols() == 1);

  // x^2 - p^m x: the t column is zero, the x entry is -p^m
  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  OMatrix m1 = linear_part_matrix(a);
  CHECK(m1.rows() == 1);
  CHECK(m1.cols() == 2);
  CHECK(m1.at(0, 0).is_zero());
  CHECK(m1.at(0, 1).value() == -8);

  AugmentedAlgebra tri = alg("p=5; fiber x, y; rel x^2-5x; rel y^2-5y; rel x*y");
  OMatrix m2 = linear_part_matrix(tri);
  CHECK(m2.rows() == 3);
  CHECK(m2.at(0, 0).value() == -5);
  CHECK(m2.at(1, 1).value() == -5);
  CHECK(m2.at(2, 0).is_zero());
  CHECK(m2.at(2, 1).is_zero());
}

TEST_CASE("cotangent modules and torsion lengths") {
  // Lambda_2 itself: free of rank 2, no torsion
  CotangentData c0 = cotangent(alg("p=3; lambda t1, t2"));
  CHECK(c0.module.free_rank == 2);
  CHECK(c0.module.torsion_length() == 0);

  // O[[t]][x]/(x^2 - p^m x): O + O/p^m
  CotangentData c1 = cotangent(alg("p=3; lambda t; fiber x; rel x^2 - 3^2*x"));
  CHECK(c1.module.free_rank == 1);
  CHECK(c1.module.torsion_exponents == std::vector<long>{2});
  CHECK(c1.module.torsion_length() == 2);

  // triple fiber product: (O/p)^2
  CotangentData c2 = cotangent(alg("p=5; fiber x, y; rel x^2-5x; rel y^2-5y; rel x*y"));
  CHECK(c2.module.free_rank == 0);
  CHECK(c2.module.torsion_exponents == std::vector<long>{1, 1});
  CHECK(c2.module.torsion_length() == 2);

  // a base variable cut out by a relation: t - p^k s - s^2 leaves rank 1, no torsion
  CotangentData c3 = cotangent(alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2"));
  CHECK(c3.module.free_rank == 1);
  CHECK(c3.module.torsion_length() == 0);
}

TEST_CASE("order ideals of augmentation-kernel elements") {
  AugmentedAlgebra base = alg("p=3; lambda t");
  CHECK(order_of(base, parse_poly("t", base.vars)) == 0);
  CHECK(order_of(base, parse_poly("3^2*t", base.vars)) == 2);
  CHECK(order_of(base, parse_poly("t^2 + 3t", base.vars)) == 1);

  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  CHECK(order_of(a, parse_poly("t", a.vars)) == 0);
  CHECK(order_of(a, parse_poly("2t", a.vars)) == 1);
  // x is torsion in p/p^2, so its order ideal is zero
  CHECK_THROWS_AS(order_of(a, parse_poly("x", a.vars)), CmodError);
  try {
    order_of(a, parse_poly("x", a.vars));
  } catch (const CmodError& e) {
    CHECK(e.kind == ErrKind::TorsionResidue);
  }

  // after eliminating t = p^k s + s^2 the residue of t has order k
  AugmentedAlgebra b = alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2");
  CHECK(order_of(b, parse_poly("t", b.vars)) == 3);
  CHECK(order_of(b, parse_poly("s", b.vars)) == 0);

  // not in the augmentation kernel
  CHECK_THROWS_AS(order_of(base, parse_poly("t + 1", base.vars)), CmodError);
}

TEST_CASE("regularity certificates") {
  CHECK(regular_certificate(alg("p=3; lambda t1, t2")).has_value());
  CHECK(regular_certificate(alg("p=3; lambda t1, t2"))->empty());

  auto cert = regular_certificate(alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2"));
  REQUIRE(cert.has_value());
  CHECK(*cert == std::vector<long>{0});

  CHECK_FALSE(regular_certificate(alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x")).has_value());
  CHECK_FALSE(regular_certificate(alg("p=5; fiber x, y; rel x^2-5x; rel y^2-5y; rel x*y")).has_value());
}

TEST_CASE("deriving a structure table from the presentation") {
  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  LambdaStructure L = derive_lambda_structure(a, 8);
  CHECK(L.rank == 2);
  CHECK(L.basis == std::vector<std::string>{"1", "x"});
  CHECK(L.mult[1][1][0].is_zero());
  CHECK(L.mult[1][1][1].constant_term() == 8);
  CHECK(consistency_check(a, L).pass);

  // triple fiber product: basis {1, x, y}
  AugmentedAlgebra tri = alg("p=5; fiber x, y; rel x^2-5x; rel y^2-5y; rel x*y");
  LambdaStructure Lt = derive_lambda_structure(tri, 8);
  CHECK(Lt.rank == 3);
  CHECK(consistency_check(tri, Lt).pass);
  CHECK(lvec_is_zero(Lt.mult[1][2]));  // x*y = 0

  // base variable eliminated: t - p^k s - s^2 gives s^2 = t - p^k s
  AugmentedAlgebra b = alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2");
  LambdaStructure Lb = derive_lambda_structure(b, 8);
  CHECK(Lb.rank == 2);
  CHECK(consistency_check(b, Lb).pass);
  CHECK(Lb.mult[1][1][0] == Poly::var(2, 0));                 // coefficient t on 1
  CHECK(Lb.mult[1][1][1] == Poly::constant(2, -8));           // coefficient -p^k on s

  // pure relation in the base variables cannot be oriented
  CHECK_THROWS_AS(derive_lambda_structure(alg("p=2; lambda t; fiber x; rel 2t; rel x^2-2x"), 8), CmodError);
}

TEST_CASE("structure tables: consistency failures carry witnesses") {
  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  ParsedInput in = parse_input(
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\nbasis 1, x\nmult x*x = [0, 16]\n");
  ConsistencyReport r = consistency_check(a, *in.lambda);
  CHECK_FALSE(r.pass);
  CHECK(r.witness.find("does not vanish") != std::string::npos);

  // extra unsatisfied relation
  AugmentedAlgebra a2 = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x; rel x^2 - 2^2*x");
  ParsedInput in2 = parse_input(
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\nbasis 1, x\nmult x*x = [0, 8]\n");
  CHECK_FALSE(consistency_check(a2, *in2.lambda).pass);

  // non-associative table is rejected before relation checks:
  // with x*y = 2 we get (x*x)*y = 4 but x*(x*y) = 2x
  ParsedInput in3 = parse_input(
      "p=2; lambda t; fiber x, y; rel x^2-2x; rel y^2-2y; rel x*y\n"
      "[lambda-structure]\nbasis 1, x, y\nmult x*x = [0,2,0]\nmult y*y = [0,0,2]\nmult x*y = [2,0,0]\n");
  ConsistencyReport r3 = check_lambda_table(*in3.lambda);
  CHECK_FALSE(r3.pass);
  CHECK(r3.witness.find("associative") != std::string::npos);
}

TEST_CASE("fiber algebras at t = 0") {
  // Lambda_1 itself
  ParsedInput in0 = parse_input("p=3; lambda t\n[lambda-structure]\nbasis 1\n");
  FiberAlgebra f0 = fiber_algebra(*in0.lambda);
  CHECK(f0.rank == 1);
  CHECK(f0.aug[0].value() == 1);

  // structure constants independent of t: A_0 = O[x]/(x^2 - p^m x)
  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  FiberAlgebra f1 = fiber_algebra(derive_lambda_structure(a, 8));
  CHECK(f1.rank == 2);
  CHECK(f1.mult_op[1].at(1, 0).value() == 1);  // x * 1 = x
  CHECK(f1.mult_op[1].at(1, 1).value() == 8);  // x * x = 8x
  CHECK(f1.mult_op[1].at(0, 1).is_zero());

  // substitute t=0 in s^2 = t - p^k s: A_0 = O[s]/(s^2 + p^k s)
  AugmentedAlgebra b = alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2");
  FiberAlgebra f2 = fiber_algebra(derive_lambda_structure(b, 8));
  CHECK(f2.rank == 2);
  CHECK(f2.mult_op[1].at(0, 1).is_zero());      // s*s has no constant coordinate at t=0
  CHECK(f2.mult_op[1].at(1, 1).value() == -8);  // s*s = -p^k s
}

TEST_CASE("fiber modules validate against the table") {
  ParsedInput in = parse_input(
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\nbasis 1, x\nmult x*x = [0, 8]\n"
      "[module M]\nact x = [[0, 0]; [1, 8]]\n");
  LambdaModule m = resolve_module(in.modules[0], *in.lambda);
  FiberModule fm = fiber_module(*in.lambda, m);
  CHECK(fm.rank == 2);
  CHECK(fm.act[0] == OMatrix::identity(2, 2));

  // an action that breaks the multiplication table is rejected
  ParsedInput bad = parse_input(
      "p=2; lambda t; fiber x; rel x^2 - 2^3*x\n"
      "[lambda-structure]\nbasis 1, x\nmult x*x = [0, 8]\n"
      "[module M]\nact x = [[0, 0]; [1, 4]]\n");
  CHECK_THROWS_AS(fiber_module(*bad.lambda, resolve_module(bad.modules[0], *bad.lambda)), CmodError);
}

TEST_CASE("category membership") {
  // Lambda_c is a member with codimension c
  AugmentedAlgebra l2 = alg("p=3; lambda t1, t2");
  CHECK(membership_check(l2, nullptr) == 2);

  // member with torsion cotangent part
  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  FiberAlgebra f = fiber_algebra(derive_lambda_structure(a, 8));
  CHECK(membership_check(a, &f) == 1);
  CHECK(membership_check(a, nullptr) == 1);  // fraction-field fallback agrees

  // codimension-zero member
  AugmentedAlgebra c0 = alg("p=5; fiber x; rel x^2 - 5x");
  CHECK(membership_check(c0, nullptr) == 0);

  // nilpotents at lambda survive localization: O[x]/(x^2) is not a member
  AugmentedAlgebra nil = alg("p=5; fiber x; rel x^2");
  CHECK_THROWS_AS(membership_check(nil, nullptr), CmodError);
  try {
    membership_check(nil, nullptr);
  } catch (const CmodError& e) {
    CHECK(e.kind == ErrKind::NotInCategory);
  }

  // fiber with O-torsion still passes through the fraction-field path
  AugmentedAlgebra j = alg("p=2; lambda t; fiber x, y; rel x^2 - 2^2*x; rel y^2; rel x*y; rel 2y");
  CHECK(membership_check(j, nullptr) == 1);

  // dependent base residues: t1 - t2 (both orders 0, residues parallel)
  AugmentedAlgebra dep = alg("p=3; lambda t1, t2; fiber s; rel t1 - t2 - s^2");
  CHECK_THROWS_AS(membership_check(dep, nullptr), CmodError);
}

TEST_CASE("base-residue wedge data") {
  // O[[s]] with t = p^k s + s^2: coker length k
  AugmentedAlgebra b = alg("p=2; lambda t; fiber s; rel t - 2^3*s - s^2");
  WedgeData w = wedge_iota_star(b, cotangent(b));
  CHECK(w.matrix.rows() == 1);
  CHECK(w.matrix.cols() == 1);
  CHECK(w.coker_length == 3);

  // Lambda_c: identity, length 0
  AugmentedAlgebra l2 = alg("p=3; lambda t1, t2");
  CHECK(wedge_iota_star(l2, cotangent(l2)).coker_length == 0);

  AugmentedAlgebra a = alg("p=2; lambda t; fiber x; rel x^2 - 2^3*x");
  CHECK(wedge_iota_star(a, cotangent(a)).coker_length == 0);
}
