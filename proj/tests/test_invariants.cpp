#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cmodlab/invariants.hpp"
#include "cmodlab/parser.hpp"

using namespace cmodlab;

namespace {

MemberContext ctx_from(const std::string& text, const std::string& module_name = "") {
  ParsedInput in = parse_input(text);
  REQUIRE(in.lambda.has_value());
  LambdaModule m = regular_module(*in.lambda);
  if (!module_name.empty()) {
    bool found = false;
    for (const auto& raw : in.modules)
      if (raw.name == module_name) {
        m = resolve_module(raw, *in.lambda);
        found = true;
      }
    REQUIRE(found);
  }
  return make_context(in.algebra, *in.lambda, m);
}

Poly P(const VarTable& v, const std::string& text) { return PolyParser(text, v).parse(); }

void check_eta_bounds(const InvariantReport& r) {
  if (!r.eta_valuation) {
    CHECK(r.psi_length == 0);
    CHECK(r.rank_lambda == 0);
    return;
  }
  CHECK(*r.eta_valuation <= r.psi_length);
  CHECK(r.psi_length <= r.rank_lambda * *r.eta_valuation);
  if (r.rank_lambda == 1) CHECK(r.psi_length == *r.eta_valuation);
}

const char* kBase = R"(
p = 5
lambda t
[lambda-structure]
basis 1
)";

const char* kHyper = R"(
p = 3
lambda t
fiber x
rel x^2 - 9x
flag gorenstein
flag ci
[lambda-structure]
basis 1 x
mult x*x = [0, 9]
[module P]
act x = [[0,0];[3,9]]
[module D]
act x = [[0,0,0,0];[1,9,0,0];[0,0,0,0];[0,0,1,9]]
[module I]
act x = [[0,0];[t,9]]
)";

const char* kSeries = R"(
p = 2
lambda t
fiber s
rel t - 8s - s^2
flag gorenstein
flag ci
[lambda-structure]
basis 1 s
mult s*s = [t, -8]
)";

const char* kTriple = R"(
p = 3
fiber x y
rel x^2 - 3x
rel y^2 - 3y
rel x y
flag gorenstein
[lambda-structure]
basis 1 x y
mult x*x = [0,3,0]
mult y*y = [0,0,3]
mult x*y = [0,0,0]
[module M]
act x = [[3,0];[0,0]]
act y = [[0,0];[0,3]]
)";

const char* kCi2 = R"(
p = 3
lambda t1 t2
fiber x
rel x^2 - 3x - 3t1 x - 3t2 x
flag ci
[lambda-structure]
basis 1 x
mult x*x = [0, 3 + 3t1 + 3t2]
)";

}  // namespace

TEST_CASE("power series base Lambda_1") {
  MemberContext ctx = ctx_from(kBase);
  InvariantReport r = congruence_module(ctx);
  CHECK(r.codim == 1);
  CHECK(r.path == Path::LambdaDescent);
  CHECK(r.phi_length == 0);
  CHECK(r.psi_length == 0);
  CHECK(r.eta_valuation == 0);
  CHECK(r.rank_lambda == 1);
  CHECK(r.defect == 0);
  CHECK(r.coker_length == 0);
  check_eta_bounds(r);
}

TEST_CASE("hypersurface x^2 - p^2 x over the base") {
  MemberContext ctx = ctx_from(kHyper);
  InvariantReport r = congruence_module(ctx);
  CHECK(r.path == Path::LambdaDescent);
  CHECK(r.codim == 1);
  CHECK(r.phi_length == 2);
  CHECK(r.psi_length == 2);
  CHECK(r.eta_valuation == 2);
  CHECK(r.rank_lambda == 1);
  CHECK(r.defect == 0);
  CHECK(r.coker_length == 0);
  REQUIRE(r.fiber.has_value());
  CHECK(r.fiber->psi == FgOModule{0, {2}});
  CHECK(r.fiber->psi_length == 2);
  CHECK(r.fiber->eta_valuation == 2);
  CHECK(r.fiber->mu == 1);
  CHECK(r.fiber->nu == 1);
  CHECK(r.fiber->phi_length == 2);
  CHECK(defect_identity(r) == 0);
  check_eta_bounds(r);
}

TEST_CASE("base-embedded deformation parameter: descent is nontrivial") {
  MemberContext ctx = ctx_from(kSeries);
  InvariantReport r = congruence_module(ctx);
  CHECK(r.path == Path::LambdaDescent);
  CHECK(r.coker_length == 3);
  CHECK(r.phi_length == 0);
  CHECK(r.psi_length == 0);
  CHECK(r.eta_valuation == 0);
  CHECK(r.rank_lambda == 1);
  CHECK(r.defect == 0);
  REQUIRE(r.fiber.has_value());
  CHECK(r.fiber->psi_length == 3);
  CHECK(r.fiber->eta_valuation == 3);
  CHECK(r.fiber->phi_length == 3);
  check_eta_bounds(r);
}

TEST_CASE("fiber product of two branches at codimension zero") {
  MemberContext ctx = ctx_from(kTriple);
  InvariantReport r = congruence_module(ctx);
  CHECK(r.path == Path::C0Direct);
  CHECK(r.codim == 0);
  CHECK(r.phi_length == 2);
  CHECK(r.psi_length == 1);
  CHECK(r.eta_valuation == 1);
  CHECK(r.rank_lambda == 1);
  CHECK(r.defect == 1);
  REQUIRE(r.fiber.has_value());
  CHECK(r.fiber->mu == 1);
  CHECK(r.fiber->nu == 1);
  CHECK(r.fiber->phi_length == 2);
  check_eta_bounds(r);

  // same numbers through the direct fiber entry point
  InvariantReport d = c0_invariants(ctx.f, ctx.m0);
  CHECK(d.phi_length == r.phi_length);
  CHECK(d.psi_length == r.psi_length);
  CHECK(d.eta_valuation == r.eta_valuation);
  CHECK(d.rank_lambda == r.rank_lambda);
  CHECK(d.defect == r.defect);
}

TEST_CASE("maximal ideal of the fiber product: rank zero, eta ideal zero") {
  MemberContext ctx = ctx_from(kTriple, "M");
  InvariantReport r = congruence_module(ctx);
  CHECK(r.psi_length == 0);
  CHECK_FALSE(r.eta_valuation.has_value());
  CHECK(r.rank_lambda == 0);
  CHECK(r.defect == 0);
  check_eta_bounds(r);

  FreenessVerdict fv = freeness_check(ctx);
  CHECK(fv.certified);
  CHECK(fv.mu == 0);

  DefectDecomposition dd = defect_decomposition(ctx);
  CHECK(dd.delta_a == 1);
  CHECK(dd.delta_m == 0);
  CHECK(dd.ker_a_length == 0);
}

TEST_CASE("non-free ideal (p, x): positive kernel in the decomposition") {
  MemberContext ctx = ctx_from(kHyper, "P");
  InvariantReport r = congruence_module(ctx);
  CHECK(r.psi_length == 1);
  CHECK(r.eta_valuation == 1);
  CHECK(r.rank_lambda == 1);
  CHECK(r.phi_length == 2);
  CHECK(r.defect == 1);
  check_eta_bounds(r);

  DefectDecomposition dd = defect_decomposition(ctx);
  CHECK(dd.delta_a == 0);
  CHECK(dd.delta_m == 1);
  CHECK(dd.ker_a_length == 1);

  FreenessVerdict fv = freeness_check(ctx);
  CHECK_FALSE(fv.certified);
}

TEST_CASE("free rank-two module certifies") {
  MemberContext ctx = ctx_from(kHyper, "D");
  InvariantReport r = congruence_module(ctx);
  CHECK(r.psi_length == 4);
  CHECK(r.eta_valuation == 2);
  CHECK(r.rank_lambda == 2);
  CHECK(r.defect == 0);
  check_eta_bounds(r);

  FreenessVerdict fv = freeness_check(ctx);
  CHECK(fv.certified);
  CHECK(fv.mu == 2);

  DefectDecomposition dd = defect_decomposition(ctx);
  CHECK(dd.ker_a_length == 0);
  CHECK(dd.delta_m == 0);
}

TEST_CASE("augmentation ideal as a module") {
  MemberContext ctx = ctx_from(kHyper, "I");
  InvariantReport r = congruence_module(ctx);
  CHECK(r.psi_length == 0);
  CHECK(r.eta_valuation == 0);
  CHECK(r.rank_lambda == 1);
  CHECK(r.defect == 2);
  check_eta_bounds(r);
}

TEST_CASE("non-member dual numbers: every membership signal trips") {
  AugmentedAlgebra a;
  a.p = 3;
  a.vars.names = {"x"};
  a.vars.lambda_count = 0;
  a.relations.push_back(P(a.vars, "x^2"));
  validate_algebra(a);
  CHECK_THROWS_AS(membership_check(a, nullptr), CmodError);

  LambdaStructure L = derive_lambda_structure(a, 8);
  FiberAlgebra f = fiber_algebra(L);
  FiberModule m0 = fiber_module(L, regular_module(L));
  C0Core core = c0_core(f.p, m0.rank, shifted_basis_ops(f, m0));
  CHECK_FALSE(core.injective);
  CHECK(core.psi.free_rank == 1);
  CHECK(core.mu == 1);
  CHECK(core.rank_lambda == 2);
  CHECK_THROWS_AS(assert_member_core(core), CmodError);
}

TEST_CASE("koszul path: certified members get provable zeros") {
  const char* two_params = R"(
p = 2
lambda t1 t2
fiber s1 s2
rel t1 - 4s1 - s1^2
rel t2 - 2s2 - s2^2
flag ci
[lambda-structure]
basis 1 s1 s2 s1s2
mult s1*s1 = [t1, -4, 0, 0]
mult s2*s2 = [t2, 0, -2, 0]
mult s1*s2 = [0, 0, 0, 1]
mult s1*s1s2 = [0, 0, t1, -4]
mult s2*s1s2 = [0, t2, 0, -2]
mult s1s2*s1s2 = [t1 t2, -4t2, -2t1, 8]
)";
  for (const char* text : {kBase, kSeries, two_params}) {
    MemberContext ctx = ctx_from(text);
    InvariantReport k = koszul_regular_report(ctx);
    CHECK(k.path == Path::KoszulRegular);
    CHECK(k.phi_length == 0);
    CHECK(k.psi_length == 0);
    CHECK(k.eta_valuation == 0);
    CHECK(k.defect == 0);

    InvariantReport d = congruence_module(ctx);
    CHECK(d.phi_length == k.phi_length);
    CHECK(d.psi_length == k.psi_length);
    CHECK(d.eta_valuation == k.eta_valuation);
    CHECK(d.rank_lambda == k.rank_lambda);
    CHECK(d.defect == k.defect);
  }
}

TEST_CASE("koszul cohomology of O: binomial ranks") {
  ParsedInput base = parse_input(kBase);
  // Lambda_1: sequence (t) of length 1
  CHECK(koszul_ext(base.algebra, nullptr, nullptr, 0) == FgOModule::free(1));
  CHECK(koszul_ext(base.algebra, nullptr, nullptr, 1) == FgOModule::free(1));
  CHECK(koszul_ext(base.algebra, nullptr, nullptr, 2) == FgOModule{0, {}});

  AugmentedAlgebra l2;
  l2.p = 5;
  l2.vars.names = {"t1", "t2"};
  l2.vars.lambda_count = 2;
  validate_algebra(l2);
  CHECK(koszul_ext(l2, nullptr, nullptr, 0) == FgOModule::free(1));
  CHECK(koszul_ext(l2, nullptr, nullptr, 1) == FgOModule::free(2));
  CHECK(koszul_ext(l2, nullptr, nullptr, 2) == FgOModule::free(1));

  MemberContext series = ctx_from(kSeries);
  CHECK(koszul_ext(series.a, &series.f, &series.m0, 0) == FgOModule{0, {}});
  CHECK(koszul_ext(series.a, &series.f, &series.m0, 1) == FgOModule::free(1));
  CHECK(koszul_ext(series.a, &series.f, &series.m0, 2) == FgOModule{0, {}});

  MemberContext hyper = ctx_from(kHyper);
  CHECK_THROWS_AS(koszul_ext(hyper.a, &hyper.f, &hyper.m0, 1), CmodError);
  CHECK_THROWS_AS(koszul_regular_report(hyper), CmodError);
}

TEST_CASE("deform: unit-coefficient base parameter is transparent") {
  MemberContext ctx = ctx_from(kCi2);
  DeformResult d = deform(ctx, {P(ctx.a.vars, "t1")});
  CHECK(d.step.sum_ord == 0);
  CHECK(d.before.psi_length == 1);
  CHECK(d.after.psi_length == 1);
  CHECK(d.after.phi_length == 1);
  CHECK(d.after.defect == d.before.defect);
  CHECK(d.quotient.codim() == 1);
  CHECK(d.quotient_lambda.has_value());
}

TEST_CASE("deform: base parameter folded into a fiber variable") {
  MemberContext ctx = ctx_from(kHyper);
  DeformResult d = deform(ctx, {P(ctx.a.vars, "t - 3x")});
  CHECK(d.step.orders == std::vector<long>{0});
  CHECK(d.before.psi_length == 2);
  CHECK(d.after.psi_length == 2);
  CHECK(d.after.phi_length == 2);
  CHECK(d.after.rank_lambda == 1);
  CHECK(d.after.defect == 0);
  CHECK(d.quotient.codim() == 0);
  CHECK(d.quotient.vars.total() == 1);
  CHECK(d.quotient_lambda.has_value());
}

TEST_CASE("deform: p^k t quotient leaves the category with derived lengths") {
  MemberContext ctx = ctx_from(kSeries);
  DeformResult d = deform(ctx, {P(ctx.a.vars, "4t")});
  CHECK(d.step.sum_ord == 5);  // ord(4t) = 2 + ord(t) = 2 + 3
  CHECK(d.before.psi_length == 0);
  CHECK(d.before.phi_length == 0);
  CHECK(d.after.psi_length == 5);
  CHECK(d.after.phi_length == 5);
  CHECK(d.after.eta_valuation == 5);
  CHECK(d.after.defect == 0);
  CHECK(d.after.path == Path::C0Direct);
  CHECK_FALSE(d.after.fiber.has_value());
  CHECK_FALSE(d.quotient_lambda.has_value());
  CHECK(d.quotient.codim() == 0);
  CHECK(d.quotient.relations.size() == 2);
}

TEST_CASE("deform: composite sequence ending in a p^k t quotient") {
  MemberContext ctx = ctx_from(kCi2);
  DeformResult d = deform(ctx, {P(ctx.a.vars, "t1 - 3x"), P(ctx.a.vars, "9t2")});
  CHECK(d.step.orders == std::vector<long>{0, 2});
  CHECK(d.before.psi_length == 1);
  CHECK(d.before.phi_length == 1);
  CHECK(d.after.psi_length == 3);
  CHECK(d.after.phi_length == 3);
  CHECK(d.after.eta_valuation == 3);
  CHECK(d.after.defect == 0);
  CHECK(d.after.rank_lambda == 1);
  CHECK_FALSE(d.quotient_lambda.has_value());
}

TEST_CASE("deform rejections") {
  MemberContext hyper = ctx_from(kHyper);
  MemberContext ci2 = ctx_from(kCi2);
  MemberContext triple = ctx_from(kTriple);
  const VarTable &vh = hyper.a.vars, &vc = ci2.a.vars, &vt = triple.a.vars;

  auto kind_of = [](auto&& fn) -> std::optional<ErrKind> {
    try {
      fn();
    } catch (const CmodError& e) {
      return e.kind;
    }
    return std::nullopt;
  };

  // quadratic element
  CHECK(kind_of([&] { deform(hyper, {P(vh, "t^2")}); }) == ErrKind::NotRegularElement);
  // fiber variable
  CHECK(kind_of([&] { deform(hyper, {P(vh, "x")}); }) == ErrKind::NotRegularElement);
  // unit coefficient on the fiber variable
  CHECK(kind_of([&] { deform(hyper, {P(vh, "t - x")}); }) == ErrKind::NotRegularElement);
  // p^k t away from codimension one
  CHECK(kind_of([&] { deform(ci2, {P(vc, "3t1")}); }) == ErrKind::NotRegularElement);
  // more elements than the codimension
  CHECK(kind_of([&] { deform(hyper, {P(vh, "t"), P(vh, "3t")}); }) == ErrKind::DependentResidues);
  // dependent residues
  CHECK(kind_of([&] { deform(ci2, {P(vc, "t1"), P(vc, "2t1")}); }) == ErrKind::DependentResidues);
  // nothing to quotient at codimension zero
  CHECK(kind_of([&] { deform(triple, {P(vt, "x")}); }) == ErrKind::DependentResidues);
  // t - p^k x with a module other than A
  MemberContext pmod = ctx_from(kHyper, "P");
  CHECK(kind_of([&] { deform(pmod, {P(pmod.a.vars, "t - 3x")}); }) == ErrKind::Computation);
}

TEST_CASE("iso criteria: hypothesis gating and length comparison") {
  MemberContext a = ctx_from(kHyper);
  const char* hyper_t = R"(
p = 3
lambda t
fiber x
rel x^2 - 9x - 3t x
flag gorenstein
flag ci
[lambda-structure]
basis 1 x
mult x*x = [0, 9 + 3t]
)";
  MemberContext b = ctx_from(hyper_t);
  CHECK_THROWS_AS(iso_criteria_check(a, b, std::nullopt), CmodError);

  IsoVerdict g = iso_criteria_check(a, b, IsoHypothesis::GorensteinPsi);
  CHECK(g.certified);
  IsoVerdict c = iso_criteria_check(a, b, IsoHypothesis::CiPhi);
  CHECK(c.certified);

  MemberContext small = ctx_from(R"(
p = 3
lambda t
fiber x
rel x^2 - 3x
flag gorenstein
[lambda-structure]
basis 1 x
mult x*x = [0, 3]
)");
  IsoVerdict ne = iso_criteria_check(a, small, IsoHypothesis::GorensteinPsi);
  CHECK_FALSE(ne.certified);
  // ci flag missing on one side
  CHECK_THROWS_AS(iso_criteria_check(a, small, IsoHypothesis::CiPhi), CmodError);
  // codimension mismatch
  MemberContext triple = ctx_from(kTriple);
  CHECK_THROWS_AS(iso_criteria_check(a, triple, IsoHypothesis::GorensteinPsi), CmodError);
}

TEST_CASE("invariance under a surjection with nilpotent junk") {
  MemberContext target = ctx_from(kHyper);
  SurjectionToMember s;
  s.source.p = 3;
  s.source.vars.names = {"t", "x", "y"};
  s.source.vars.lambda_count = 1;
  const VarTable& sv = s.source.vars;
  s.source.relations = {P(sv, "x^2 - 9x"), P(sv, "y^2"), P(sv, "x y"), P(sv, "3y")};
  validate_algebra(s.source);

  OMatrix ax(3, 2, 2);
  ax.at(1, 0) = DvrScalar::one(3);
  ax.at(1, 1) = DvrScalar::from_int(3, 9);
  OMatrix ay(3, 2, 2);
  s.source_var_actions = {ax, ay};

  InvarianceVerdict v = invariance_check(s, target);
  CHECK(v.equal);
  CHECK(v.via_source.psi_length == 2);
  CHECK(v.via_target.psi_length == 2);
  CHECK(v.via_source.phi_length == 3);  // the extra variable shows up only here
  CHECK(v.via_target.phi_length == 2);
  CHECK(v.psi0_source == v.psi0_target);
  CHECK_FALSE(v.via_source.fiber.has_value());
}

TEST_CASE("invariance for the augmentation-ideal module") {
  MemberContext target = ctx_from(kHyper, "I");
  SurjectionToMember s;
  s.source.p = 3;
  s.source.vars.names = {"t", "x", "y"};
  s.source.vars.lambda_count = 1;
  const VarTable& sv = s.source.vars;
  s.source.relations = {P(sv, "x^2 - 9x"), P(sv, "y^2"), P(sv, "x y"), P(sv, "3y")};
  validate_algebra(s.source);

  OMatrix ax(3, 2, 2);
  ax.at(1, 1) = DvrScalar::from_int(3, 9);  // t-entry of x*t dies at t = 0
  OMatrix ay(3, 2, 2);
  s.source_var_actions = {ax, ay};

  InvarianceVerdict v = invariance_check(s, target);
  CHECK(v.equal);
  CHECK(v.via_target.psi_length == 0);
  CHECK(v.via_source.psi_length == 0);
}

TEST_CASE("fiber cotangent from the structure table") {
  MemberContext hyper = ctx_from(kHyper);
  CHECK(fiber_cotangent(hyper.f) == FgOModule{0, {2}});
  MemberContext series = ctx_from(kSeries);
  CHECK(fiber_cotangent(series.f) == FgOModule{0, {3}});
  MemberContext triple = ctx_from(kTriple);
  CHECK(fiber_cotangent(triple.f) == FgOModule{0, {1, 1}});
}
