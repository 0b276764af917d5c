#include "helpers.hpp"
#include "mmtrace/experiments.hpp"
#include "mmtrace/regularity.hpp"

using namespace mmtrace;

namespace {

Instance segment_in_cube(double h) {
  GeneratorSpec g;
  g.kind = "grid3d";
  g.h = h;
  g.check_adr = false;
  g.pieces.push_back({"segment", "segment", 2.0, {0.5, 0.5, 0.0}, {0.5, 0.5, 1.0}, {}, 0.0});
  return generate(g);
}

SubsetPiece whole(const Space& sp) {
  const auto ids = testutil::all_ids(sp);
  std::vector<double> w(sp.weights().begin(), sp.weights().end());
  return make_piece(sp, "X", ids, 0.0, w);
}

}  // namespace

TEST_CASE("check_adr") {
  SUBCASE("segment in the cube") {
    const auto inst = segment_in_cube(1.0 / 32);
    const auto rep = check_adr(inst.space, inst.s.piece(0), default_r_grid(inst.space));
    MESSAGE("kappa1 " << rep.kappa1 << ", kappa2 " << rep.kappa2 << ", ratio " << rep.kappa2 / rep.kappa1);
    CHECK(rep.ok);
    CHECK(rep.kappa1 > 0.0);
    CHECK(rep.kappa1 <= rep.kappa2);
    CHECK(rep.kappa2 / rep.kappa1 <= 16.0);
  }
  SUBCASE("whole space at theta 0") {
    const auto sp = testutil::grid(2, 1.0 / 16);
    const auto rep = check_adr(sp, whole(sp), default_r_grid(sp));
    CHECK(rep.ok);
    CHECK(rep.kappa1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.kappa2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("two distant clusters") {
    // Tiny clusters at both ends of a line tested at theta = 0 although they
    // have codimension 1: the piece mass stays flat while mu(B_r) grows.
    const auto sp = testutil::line(129, 1.0 / 128);
    std::vector<PointId> ids{0, 1, 127, 128};
    const auto piece = make_piece(sp, "ends", ids, 0.0, std::vector<double>(4, 1.0 / 128));
    const auto rep = check_adr(sp, piece, default_r_grid(sp));
    const auto seg = make_piece(sp, "all", testutil::all_ids(sp), 0.0, std::vector<double>(129, 1.0 / 129));
    const auto ref = check_adr(sp, seg, default_r_grid(sp));
    MESSAGE("cluster spread " << rep.kappa2 / rep.kappa1 << " vs line " << ref.kappa2 / ref.kappa1);
    CHECK(rep.kappa2 / rep.kappa1 > 4.0 * ref.kappa2 / ref.kappa1);
  }
  const auto sp = testutil::grid(2, 1.0 / 8);
  CHECK_KIND(check_adr(sp, whole(sp), std::vector<double>{}), InvalidGrid);
}

TEST_CASE("check_lcr") {
  const auto inst = segment_in_cube(1.0 / 16);
  const auto grid = default_r_grid(inst.space);
  const auto& seg = inst.s.piece(0);
  const auto adr = check_adr(inst.space, seg, grid);
  const auto lcr = check_lcr(inst.space, seg.ids, 2.0, grid);
  MESSAGE("lambda " << lcr.lambda << ", kappa1 " << adr.kappa1);
  CHECK(lcr.lambda > 0.0);

  SUBCASE("union of a theta 1 and a theta 2 piece at theta 2") {
    auto spec = simple_case_spec(1.0 / 8);
    spec.check_adr = false;
    const auto s = generate(spec);
    const auto g = default_r_grid(s.space);
    const double l_union = check_lcr(s.space, s.s.union_ids(), 2.0, g).lambda;
    const double l_face = check_lcr(s.space, s.s.piece(0).ids, 2.0, g).lambda;
    const double l_seg = check_lcr(s.space, s.s.piece(1).ids, 2.0, g).lambda;
    MESSAGE("lambda union " << l_union << ", face " << l_face << ", segment " << l_seg);
    CHECK(l_union > 0.0);
  }
  SUBCASE("single point at theta 0") {
    const auto sp = testutil::line(17, 1.0 / 16);
    CHECK(check_lcr(sp, std::vector<PointId>{8}, 0.0, default_r_grid(sp)).lambda > 0.0);
  }
  CHECK_KIND(check_lcr(inst.space, seg.ids, 2.0, std::vector<double>{}), InvalidGrid);
}

TEST_CASE("porosity_scan") {
  SUBCASE("whole space is never porous") {
    const auto sp = testutil::grid(2, 1.0 / 16);
    for (double sigma : {0.01, 0.25, 1.0})
      CHECK_FALSE(porosity_scan(sp, testutil::all_ids(sp), sigma, default_r_grid(sp)).is_porous);
  }
  SUBCASE("segment in the cube at sigma 1/4") {
    const auto inst = segment_in_cube(1.0 / 16);
    std::vector<double> grid;
    for (double r : default_r_grid(inst.space))
      if (r <= 0.25) grid.push_back(r);
    CHECK(porosity_scan(inst.space, inst.s.piece(0).ids, 0.25, grid).is_porous);
  }
  SUBCASE("two parallel segments 0.1 apart") {
    GeneratorSpec g;
    g.kind = "grid2d";
    g.h = 1.0 / 80;
    g.check_adr = false;
    g.pieces.push_back({"a", "segment", 1.0, {0.45, 0.0}, {0.45, 1.0}, {}, 0.0});
    const auto a = generate(g);
    std::vector<PointId> both = a.s.piece(0).ids;
    for (auto id : a.s.piece(0).ids) both.push_back(id + 8);  // x = 0.55
    CHECK(porosity_scan(a.space, both, 0.25, std::vector<double>{0.05}).is_porous);
  }
  SUBCASE("monotone in sigma") {
    auto spec = simple_case_spec(1.0 / 8);
    spec.check_adr = false;
    const auto inst = generate(spec);
    const auto grid = default_r_grid(inst.space);
    const auto lo = porosity_scan(inst.space, inst.s.union_ids(), 0.2, grid);
    const auto hi = porosity_scan(inst.space, inst.s.union_ids(), 0.6, grid);
    for (std::size_t r = 0; r < grid.size(); ++r)
      for (std::size_t a = 0; a < lo.subset.size(); ++a)
        if (hi.porous_points_per_scale[r][a]) CHECK(lo.porous_points_per_scale[r][a]);
  }
  const auto sp = testutil::grid(2, 1.0 / 8);
  CHECK_KIND(porosity_scan(sp, std::vector<PointId>{0}, 0.0, default_r_grid(sp)), InvalidParameter);
  CHECK_KIND(porosity_scan(sp, std::vector<PointId>{0}, 1.5, default_r_grid(sp)), InvalidParameter);
}

TEST_CASE("compose_piecewise") {
  const auto sp = testutil::grid(2, 1.0 / 8);
  auto piece = [&](std::vector<PointId> ids, double th) {
    return make_piece(sp, "p", ids, th, std::vector<double>(ids.size(), 0.1));
  };
  SUBCASE("theta(S) is the last codimension") {
    const auto s = compose_piecewise(sp, {piece({0, 1, 2}, 1.0), piece({40, 41}, 2.0)});
    CHECK(s.theta_S() == 2.0);
    CHECK(s.N() == 2);
    CHECK(s.union_ids() == std::vector<PointId>{0, 1, 2, 40, 41});
    CHECK_KIND(s.check_trace_exponent(2.0), ParameterError);
    s.check_trace_exponent(2.5);
  }
  SUBCASE("single piece") {
    const auto s = compose_piecewise(sp, {piece({5, 6}, 0.5)});
    CHECK(s.theta_S() == 0.5);
  }
  SUBCASE("nested pieces") {
    const auto s = compose_piecewise(sp, {piece({0, 1, 2, 3}, 0.0), piece({1, 2}, 1.0)});
    CHECK(s.union_ids() == std::vector<PointId>{0, 1, 2, 3});
  }
  CHECK_KIND(compose_piecewise(sp, {piece({0}, 1.0), piece({3}, 1.0)}), InvalidParameter);
  CHECK_KIND(compose_piecewise(sp, {piece({0}, 2.0), piece({3}, 1.0)}), InvalidParameter);
  CHECK_KIND(make_piece(sp, "bad", {0, 1}, 1.0, {0.1, 0.0}), InvalidParameter);
}

TEST_CASE("porosity_product_sigma") {
  CHECK(porosity_product_sigma(std::vector<double>{0.75, 0.75}) == doctest::Approx(0.25));
  CHECK(porosity_product_sigma(std::vector<double>{0.3}) == doctest::Approx(0.2));
  CHECK(porosity_product_sigma(std::vector<double>{0.75, 0.75, 0.75}) == doctest::Approx(0.125));
  CHECK_KIND(porosity_product_sigma(std::vector<double>{}), InvalidParameter);
}

TEST_CASE("simple-case soundness: ADR pieces and porosity at the product sigma") {
  const auto inst = generate(simple_case_spec(1.0 / 16));
  REQUIRE(inst.adr.size() == 2);
  for (const auto& a : inst.adr) CHECK(a.ok);
  const auto grid = default_r_grid(inst.space);
  std::vector<double> sig;
  for (const auto& p : inst.s.pieces()) sig.push_back(porosity_sigma_estimate(inst.space, p.ids, grid));
  MESSAGE("per-piece sigma " << sig[0] << ", " << sig[1]);
  REQUIRE(sig[0] > 0.0);
  REQUIRE(sig[1] > 0.0);
  CHECK(porosity_scan(inst.space, inst.s.union_ids(), porosity_product_sigma(sig), grid).is_porous);
}
