#include <cmath>
#include <random>

#include "../oracle.hpp"
#include "helpers.hpp"
#include "mmtrace/experiments.hpp"
#include "mmtrace/functionals.hpp"

using namespace mmtrace;

namespace {

constexpr double kP = 2.5;

Instance simple(double h) {
  auto spec = simple_case_spec(h);
  spec.check_adr = false;
  return generate(spec);
}

Instance difficult(double h) {
  auto spec = difficult_case_spec(h);
  spec.check_adr = false;
  return generate(spec);
}

std::vector<double> sample(const Instance& inst, const char* fam, std::uint64_t seed = 0) {
  return restrict_to_s(inst.s, sample_on_space(inst.space, FunctionSpec::parse(fam), seed));
}

std::vector<double> affine(std::vector<double> f, double a, double b) {
  for (auto& v : f) v = a * v + b;
  return f;
}

}  // namespace

TEST_CASE("besov_norm and besov_norm_alt") {
  const auto inst = simple(1.0 / 8);
  const auto& seg = inst.s.piece(1);
  const double s = 1.0 - seg.theta / kP;
  const std::vector<double> c(seg.ids.size(), -3.0);
  double mass = 0.0;
  for (double w : seg.weights) mass += w;

  for (auto* fn : {&besov_norm, &besov_norm_alt}) {
    const auto r = (*fn)(inst.space, seg, c, s, kP, {});
    CHECK(r.part("seminorm") == 0.0);
    CHECK(r.value == doctest::Approx(3.0 * std::pow(mass, 1.0 / kP)).epsilon(1e-14));
    const auto f = inst.s.restrict_to_piece(sample(inst, "random", 2), 1);
    const auto a = (*fn)(inst.space, seg, f, s, kP, {});
    const auto b = (*fn)(inst.space, seg, affine(f, -2.0, 0.0), s, kP, {});
    CHECK(b.part("seminorm") == doctest::Approx(2.0 * a.part("seminorm")).epsilon(1e-12));
    CHECK(b.part("lp") == doctest::Approx(2.0 * a.part("lp")).epsilon(1e-12));
    const auto t = (*fn)(inst.space, seg, affine(f, 1.0, 5.0), s, kP, {});
    CHECK(t.part("seminorm") == doctest::Approx(a.part("seminorm")).epsilon(1e-10));
    CHECK_KIND((*fn)(inst.space, seg, f, 1.0, kP, {}), ParameterError);
    CHECK_KIND((*fn)(inst.space, seg, f, 0.0, kP, {}), ParameterError);
  }

  SUBCASE("two-point piece, alternative form by hand") {
    const auto sp = Space::from_coords(1, {0.0, 0.3, 0.9}, {1, 1, 1}, 0.125);
    const auto piece = make_piece(sp, "two", {0, 1}, 0.5, {1.0, 1.0});
    const std::vector<double> f{0.0, 1.0};
    // k = 1, 2: radius 1/2 and 1/4; the two points (0.3 apart) see each other only at k = 1.
    // Inner term at k = 1 is (0 + 1) / 2 at each point, zero at k = 2, 3.
    const double semi = std::exp2(1 * 0.4 * kP) * (0.5 + 0.5);
    const auto r = besov_norm_alt(sp, piece, f, 0.4, kP, {});
    CHECK(r.part("seminorm") == doctest::Approx(std::pow(semi, 1.0 / kP)).epsilon(1e-14));
    CHECK(r.params.at("k_max") == 3);
  }

  SUBCASE("Lipschitz sample on the segment is resolution-stable") {
    std::vector<double> v;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
      const auto in = simple(h);
      const auto f = in.s.restrict_to_piece(sample(in, "linear"), 1);
      v.push_back(besov_norm(in.space, in.s.piece(1), f, s, kP, {}).value);
    }
    MESSAGE("besov(linear) " << v[0] << ", " << v[1] << ", " << v[2]);
    CHECK(*std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end()) < 1.25);
  }
}

TEST_CASE("averaging") {
  const auto inst = simple(1.0 / 16);
  const auto& seg = inst.s.piece(1);
  const std::vector<double> c(seg.ids.size(), 1.5);
  for (double v : averaging_single(inst.space, seg, c, 3)) CHECK(v == doctest::Approx(1.5));

  const auto f = inst.s.restrict_to_piece(sample(inst, "random", 1), 1);
  double mean = 0.0, mass = 0.0;
  for (std::size_t a = 0; a < f.size(); ++a) {
    mean += f[a] * seg.weights[a];
    mass += seg.weights[a];
  }
  for (double v : averaging_single(inst.space, seg, f, 0)) CHECK(v == doctest::Approx(mean / mass).epsilon(1e-12));

  // Linear f on the segment: the ball mean at an interior point is f(x) (symmetric cells).
  std::vector<double> lin(seg.ids.size());
  for (std::size_t a = 0; a < lin.size(); ++a) lin[a] = inst.space.coords(seg.ids[a])[2];
  const auto avg = averaging_single(inst.space, seg, lin, 3);
  for (std::size_t a = 0; a < lin.size(); ++a) {
    const double z = lin[a];
    if (z > 0.125 && z < 0.875) CHECK(avg[a] == doctest::Approx(z).epsilon(1e-12));
  }
  CHECK_KIND(averaging_single(inst.space, seg, f, 10), ResolutionError);
}

TEST_CASE("averaging_double") {
  const auto inst = simple(1.0 / 8);
  const auto& S = inst.s;
  const auto f = sample(inst, "random", 3);
  const auto f0 = S.restrict_to_piece(f, 0), f1 = S.restrict_to_piece(f, 1);
  const PointId y = S.piece(0).ids[40];
  const PointId far = S.piece(1).ids.back();
  CHECK_KIND(averaging_double(inst.space, S.piece(0), f0, S.piece(1), f1, 3, y, far), InvalidPair);
  CHECK_KIND(averaging_double(inst.space, S.piece(0), f0, S.piece(1), f1, 1, far, y), InvalidPair);

  const std::vector<double> c0(f0.size(), 2.0), c1(f1.size(), 2.0);
  const PointId z0 = S.piece(1).ids[0];
  const PointId y0 = z0;  // the segment starts on the face
  CHECK(averaging_double(inst.space, S.piece(0), c0, S.piece(1), c1, 1, y0, z0) == 0.0);

  SUBCASE("i = j, y = z on two points is the oscillation") {
    const auto sp = Space::from_coords(1, {0.0, 0.1}, {1, 1}, 0.125);
    const auto p = make_piece(sp, "p", {0, 1}, 0.5, {1.0, 1.0});
    const std::vector<double> g{0.0, 1.0};
    CHECK(averaging_double(sp, p, g, p, g, 1, 0, 0) == doctest::Approx(0.5));
  }

  SUBCASE("triangle inequality |A^i f(y) - A^j f(z)| <= A^{ij} f(y, z)") {
    std::mt19937_64 rng(12);
    const int K = resolve_k_max(inst.space, {});
    int tested = 0;
    while (tested < 100) {
      const auto ff = sample(inst, "random", rng());
      const auto g0 = S.restrict_to_piece(ff, 0), g1 = S.restrict_to_piece(ff, 1);
      const int k = std::uniform_int_distribution<int>(1, K)(rng);
      const auto a = S.piece(0).ids[std::uniform_int_distribution<std::size_t>(0, g0.size() - 1)(rng)];
      const auto b = S.piece(1).ids[std::uniform_int_distribution<std::size_t>(0, g1.size() - 1)(rng)];
      if (!within(inst.space.distance(a, b), dyadic(k))) continue;
      const auto A0 = averaging_single(inst.space, S.piece(0), g0, k);
      const auto A1 = averaging_single(inst.space, S.piece(1), g1, k);
      const auto ia = *S.piece_index(0).local_of(a), ib = *S.piece_index(1).local_of(b);
      CHECK(std::abs(A0[ia] - A1[ib]) <= averaging_double(inst.space, S.piece(0), g0, S.piece(1), g1, k, a, b) + 1e-14);
      ++tested;
    }
  }
}

TEST_CASE("weight_w") {
  const auto inst = simple(1.0 / 16);
  const auto& sp = inst.space;
  CHECK(weight_w(sp, 2, 7, 7) == doctest::Approx(1.0 / mu_ball(sp, Ball::at(7, 0.25))).epsilon(1e-12));
  CHECK(weight_w(sp, 2, 7, 7, WeightKind::arithmetic) == doctest::Approx(weight_w(sp, 2, 7, 7)).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<PointId> pick(0, sp.size() - 1);
  const double c = 2.0;
  double worst = 1.0, worst_alt = 1.0;
  for (int t = 0; t < 300; ++t) {
    const int k = 1 + t % 3;
    const PointId y = pick(rng), z = pick(rng);
    if (sp.distance(y, z) > dyadic(k)) continue;
    const double g = weight_w(sp, k, y, z), a = weight_w(sp, k, y, z, WeightKind::arithmetic);
    CHECK(a >= g * (1 - 1e-12));  // AM-GM
    worst_alt = std::max(worst_alt, a / g);
    const auto ny = ball_members(sp, Ball::at(y, c * dyadic(k)));
    const auto nz = ball_members(sp, Ball::at(z, c * dyadic(k)));
    const PointId y2 = ny[rng() % ny.size()], z2 = nz[rng() % nz.size()];
    const double r = weight_w(sp, k, y2, z2) / g;
    worst = std::max({worst, r, 1.0 / r});
  }
  MESSAGE("stability of w over cB x cB: " << worst << "; arithmetic/geometric: " << worst_alt);
  CHECK(worst <= 64.0);
  CHECK(worst_alt <= 8.0);
  CHECK_KIND(weight_w(sp, 10, 0, 0), ResolutionError);
}

TEST_CASE("gluing") {
  const auto inst = simple(1.0 / 8);
  const auto& S = inst.s;
  const std::size_t n = S.union_ids().size();
  const GluingCache cache(S, resolve_k_max(inst.space, {}));
  for (int l = 1; l <= 3; ++l)
    CHECK(gluing(inst.space, S, std::vector<double>(n, 4.0), kP, l, {}, WeightKind::geometric, &cache).value == 0.0);

  const auto f = sample(inst, "hoelder:0.3");
  for (int l = 1; l <= 3; ++l) {
    const auto a = gluing(inst.space, S, f, kP, l, {}, WeightKind::geometric, &cache);
    const auto b = gluing(inst.space, S, affine(f, -3.0, 7.0), kP, l, {}, WeightKind::geometric, &cache);
    CHECK(b.value == doctest::Approx(3.0 * a.value).epsilon(1e-12));
    CHECK(gluing(inst.space, S, f, kP, l).value == doctest::Approx(a.value).epsilon(1e-15));
  }
  CHECK(gluing(inst.space, S, f, kP, 2).value <= gluing(inst.space, S, f, kP, 3).value);

  SUBCASE("single piece") {
    GeneratorSpec g;
    g.kind = "grid2d";
    g.h = 1.0 / 8;
    g.check_adr = false;
    g.pieces.push_back({"seg", "segment", 1.0, {0.0, 0.5}, {1.0, 0.5}, {}, 0.0});
    const auto one = generate(g);
    const auto r = gluing(one.space, one.s, std::vector<double>(one.s.union_ids().size(), 1.0), kP, 1);
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.notes.empty());
  }

  SUBCASE("cached pair lists shrink with k") {
    const auto in = simple(1.0 / 16);
    const GluingCache gc(in.s, resolve_k_max(in.space, {}));
    const auto& blocks = gc.blocks();
    for (std::size_t a = 1; a < blocks.size(); ++a) {
      if (blocks[a].i != blocks[a - 1].i || blocks[a].j != blocks[a - 1].j) continue;
      const auto& p = blocks[a].pairs;
      const auto& q = blocks[a - 1].pairs;
      CHECK(std::includes(q.begin(), q.end(), p.begin(), p.end()));
      CHECK(std::includes(blocks[a - 1].s_ij.begin(), blocks[a - 1].s_ij.end(), blocks[a].s_ij.begin(),
                          blocks[a].s_ij.end()));
    }
  }
  CHECK_KIND(gluing(inst.space, S, f, kP, 4), InvalidParameter);
}

TEST_CASE("oracle equivalence on tiny instances") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int t = 0; t < 6; ++t) {
    auto tiny = oracle::tiny_instance(rng, 12, 4, 5, 0.5, 1.5);
    const auto& sp = tiny.space;
    const auto& S = tiny.s;
    const int K = resolve_k_max(sp, {});
    std::vector<double> f(S.union_ids().size());
    for (auto& v : f) v = U(rng);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto fi = oracle::on_piece(S, f, i);
      CHECK(oracle::close(besov_norm(sp, S.piece(i), fi, 0.3, kP).value, oracle::besov(sp, S.piece(i), fi, 0.3, kP, K, false)));
      CHECK(oracle::close(besov_norm_alt(sp, S.piece(i), fi, 0.3, kP).value, oracle::besov(sp, S.piece(i), fi, 0.3, kP, K, true)));
    }
    for (int l = 1; l <= 3; ++l) CHECK(oracle::close(gluing(sp, S, f, kP, l).value, oracle::gluing(sp, S, f, kP, l, K)));
    const auto seq = build_measure_sequence(S, 1.5, K);
    CHECK(oracle::close(bn_functional(seq, S, f, kP, 0.01).value, oracle::bn(sp, S, f, 1.5, kP, 0.01, K)));
    CHECK(oracle::close(bn_functional(seq, S, f, kP, 0.3).value, oracle::bn(sp, S, f, 1.5, kP, 0.3, K)));
    for (PointId x = 0; x < sp.size(); ++x)
      for (int k = 0; k <= K; ++k)
        CHECK(oracle::close(tilde_e(seq, f, k, x, dyadic(k)), oracle::tilde_e(sp, S, f, 1.5, k, x, dyadic(k))));
  }
}

TEST_CASE("tilde_e and the Calderon maximal function") {
  const auto inst = difficult(1.0 / 16);
  const auto& S = inst.s;
  const auto seq = build_measure_sequence(S, 1.0, resolve_k_max(inst.space, {}));
  const std::size_t n = S.union_ids().size();
  for (double v : calderon_maximal(seq, std::vector<double>(n, 2.0), testutil::all_ids(inst.space))) CHECK(v == 0.0);

  const auto f = sample(inst, "random", 5);
  // (1, 0) lies 1/2 from S; tilde-E vanishes for r below that and not above.
  const PointId corner = 16;
  CHECK(tilde_e(seq, f, 3, corner, 0.125) == 0.0);
  CHECK(tilde_e(seq, f, 1, corner, 0.5) > 0.0);
  CHECK(!oracle::meets(inst.space, S.union_ids(), corner, 0.25));

  // Lipschitz f: f^sharp <= 2 * Lip(f) (E over B_{2r} is at most 2r Lip).
  const auto lin = sample(inst, "linear");
  const double lip = std::sqrt(1.0 + 0.25);
  for (double v : calderon_maximal(seq, lin, S.union_ids())) CHECK(v <= 2.0 * lip * (1 + 1e-12));
}

TEST_CASE("bn_functional") {
  const auto inst = simple(1.0 / 8);
  const auto& S = inst.s;
  const auto seq = build_measure_sequence(S, 2.0, resolve_k_max(inst.space, {}));
  const std::size_t n = S.union_ids().size();
  const auto c = bn_functional(seq, S, std::vector<double>(n, 1.0), kP, 0.01, 6.0);
  CHECK(c.part("sharp") == 0.0);
  CHECK(c.part("scale_sum") == 0.0);
  CHECK(c.value == c.part("lp"));
  // theta_1 = 1 > 0: the mu(S) = 0 regime is flagged.
  bool flagged = false;
  for (const auto& note : c.notes) flagged = flagged || note.find("mu(S) = 0") != std::string::npos;
  CHECK(flagged);
  CHECK(c.notes.size() == 1);
  const auto off = bn_functional(seq, S, std::vector<double>(n, 1.0), kP, 0.5, 6.0);
  CHECK(off.notes.size() == 2);

  const auto f = sample(inst, "random", 8);
  const auto a = bn_functional(seq, S, f, kP, 0.01);
  const auto b = bn_functional(seq, S, affine(f, 2.0, -1.0), kP, 0.01);
  CHECK(b.part("sharp") == doctest::Approx(2.0 * a.part("sharp")).epsilon(1e-12));
  CHECK(b.part("scale_sum") == doctest::Approx(2.0 * a.part("scale_sum")).epsilon(1e-12));
}

TEST_CASE("nice families and bsn") {
  const auto inst = difficult(1.0 / 8);
  const auto& sp = inst.space;
  const auto& S = inst.s;
  const int K = resolve_k_max(sp, {});
  const auto seq = build_measure_sequence(S, 1.0, K);
  const auto f = sample(inst, "random", 21);
  const double c = 6.0;

  SUBCASE("validation") {
    NiceFamily fam{{Ball::at(40, 0.25)}, c};
    CHECK(validate_family(sp, S.union_ids(), fam).ok());
    CHECK_KIND(validate_family(sp, S.union_ids(), NiceFamily{{}, 0.5}), InvalidParameter);
    NiceFamily overlap{{Ball::at(40, 0.25), Ball::at(41, 0.25)}, c};
    CHECK_FALSE(validate_family(sp, S.union_ids(), overlap).f1);
    CHECK_KIND(bsn_functional(seq, f, kP, c, overlap), InvalidFamily);
    NiceFamily big{{Ball::at(40, 2.0)}, c};
    CHECK_FALSE(validate_family(sp, S.union_ids(), big).f2);
    // Whitney: a ball centered on S meets S.
    NiceFamily w{{Ball::at(S.union_ids()[0], 0.125)}, c, FamilyKind::whitney};
    CHECK_FALSE(validate_family(sp, S.union_ids(), w).f4);
    NiceFamily far{{Ball::at(80, 0.125)}, 1.0};  // (1, 1): 1/2 from S, cB of radius 1/8 misses it
    CHECK_FALSE(validate_family(sp, S.union_ids(), far).f3);
  }

  SUBCASE("empty and singleton families") {
    const auto e = bsn_functional(seq, f, kP, c, NiceFamily{{}, c});
    CHECK(e.part("family_sum") == 0.0);
    CHECK(e.value == e.part("lp"));
    const auto one = bsn_functional(seq, f, kP, c, NiceFamily{{Ball::at(30, 0.25)}, c});
    CHECK(oracle::close(one.value, oracle::bsn(sp, S, f, 1.0, kP, c, {{30, 0.25}})));
    CHECK(oracle::close(bsn_term(seq, f, kP, c, Ball::at(30, 0.25)),
                        std::pow(oracle::bsn(sp, S, f, 1.0, kP, c, {{30, 0.25}}) - one.part("lp"), kP), 1e-10));
  }

  SUBCASE("budget 0 returns an empty family") {
    const auto r = enumerate_or_search_nice_family(seq, f, kP, c, SearchOptions{0});
    CHECK(r.family.balls.empty());
    CHECK(r.objective == 0.0);
  }

  SUBCASE("searched families are valid and beat any single candidate") {
    FamilySearchResult found;
    const auto r = bsn_functional(seq, f, kP, c, SearchOptions{20000}, &found);
    CHECK(validate_family(sp, S.union_ids(), found.family).ok());
    double sum = 0.0;
    for (const auto& b : found.family.balls) sum += bsn_term(seq, f, kP, c, b);
    CHECK(found.objective == doctest::Approx(sum).epsilon(1e-12));
    for (int k = 0; k <= K; ++k)
      for (auto z : separated_net(sp, testutil::all_ids(sp), k).points)
        CHECK(bsn_term(seq, f, kP, c, Ball::at(z, dyadic(k))) <= found.objective * (1 + 1e-12));
    CHECK(r.value >= r.part("lp"));
    SearchOptions wh{20000};
    wh.kind = FamilyKind::whitney;
    const auto w = enumerate_or_search_nice_family(seq, f, kP, c, wh);
    CHECK(validate_family(sp, S.union_ids(), w.family).ok());
  }

  SUBCASE("local search reaches the exact optimum on small pools") {
    // One piece of 3 points on a coarse line: at most 8 candidates.
    const auto line = testutil::line(5, 0.25, 0.5);
    const auto piece = make_piece(line, "p", {0, 1, 2}, 0.0, {0.2, 0.2, 0.2});
    const auto Sl = compose_piecewise(line, {piece});
    const auto sq = build_measure_sequence(Sl, 0.0, 1);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      const std::vector<double> g{U(rng), U(rng), U(rng)};
      SearchOptions ex;
      const auto exact = enumerate_or_search_nice_family(sq, g, kP, 1.0, ex);
      REQUIRE(exact.candidates <= kExactFamilyLimit);
      CHECK(exact.exact);
      ex.allow_exact = false;
      const auto heur = enumerate_or_search_nice_family(sq, g, kP, 1.0, ex);
      CHECK(heur.objective == doctest::Approx(exact.objective).epsilon(1e-12));
    }
  }

  SUBCASE("large-radius families are bounded by the L_p norm") {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    double lp = 0.0;
    for (std::size_t u = 0; u < f.size(); ++u) lp += std::pow(std::abs(f[u]), kP) * seq.weights(0)[u];
    for (int t = 0; t < 50; ++t) {
      NiceFamily fam{{}, c};
      std::vector<char> used(sp.size(), 0);
      for (int tries = 0; tries < 6; ++tries) {
        const PointId z = rng() % sp.size();
        const double r = dyadic(static_cast<int>(rng() % 2));  // 1 or 1/2
        const auto m = ball_members(sp, Ball::at(z, r));
        bool clash = false;
        for (auto q : m) clash = clash || used[q];
        if (clash) continue;
        for (auto q : m) used[q] = 1;
        fam.balls.push_back(Ball::at(z, r));
      }
      double sum = 0.0;
      for (const auto& b : fam.balls) sum += bsn_term(seq, f, kP, c, b);
      worst = std::max(worst, sum / lp);
    }
    MESSAGE("max family sum / ||f||^p for r >= 1/2: " << worst);
    CHECK(worst < 100.0);
  }

  CHECK_KIND(bsn_term(seq, f, kP, c, Ball::at(3, dyadic(K + 1))), ResolutionError);
}

TEST_CASE("sharp_mu_s1") {
  const auto inst = difficult(1.0 / 8);
  const auto& S = inst.s;
  const auto f = sample(inst, "random", 2);
  const auto got = sharp_mu_s1(inst.space, S, f);
  const auto want = oracle::sharp_mu_s1(inst.space, S, f, resolve_k_max(inst.space, {}));
  REQUIRE(got.size() == want.size());
  for (std::size_t u = 0; u < got.size(); ++u) CHECK(oracle::close(got[u], want[u]));
  for (double v : sharp_mu_s1(inst.space, S, std::vector<double>(f.size(), 3.0))) CHECK(v == 0.0);

  // The grid reaches r = 2: a point whose largest-scale deviation only shows at r in (1, 2].
  const auto sp = Space::from_coords(1, {0.0, 1.5, 3.0}, {1, 1, 1}, 0.5);
  const auto Sl = compose_piecewise(sp, {make_piece(sp, "a", {0, 1}, 0.0, {1, 1}), make_piece(sp, "b", {2}, 0.5, {1})});
  const auto s3 = sharp_mu_s1(sp, Sl, std::vector<double>{0.0, 1.0, 5.0});
  CHECK(s3[0] == doctest::Approx(0.5));

  const auto simple_inst = simple(1.0 / 8);
  CHECK_KIND(sharp_mu_s1(simple_inst.space, simple_inst.s, sample(simple_inst, "linear")), ParameterError);
}

TEST_CASE("combinatorial_expand") {
  const auto inst = difficult(1.0 / 16);
  const auto& sp = inst.space;
  const auto& S = inst.s;
  SUBCASE("both pieces close: ibar = 1") {
    const PointId x = 8 + 17 * 8;  // (1/2, 1/2): on both pieces
    const auto e = combinatorial_expand(sp, S, x, 3, 1.0);
    CHECK(e.i_bar == 1);
    CHECK(e.index_set == std::vector<std::size_t>{0, 1});
    CHECK(validate_expansion(sp, S, x, 3, 1.0, e));
  }
  SUBCASE("second piece just outside cB: ibar = 2") {
    const PointId x = 4 + 17 * 8;  // (1/4, 1/2): 1/4 from the segment
    const auto e = combinatorial_expand(sp, S, x, 3, 1.5);  // cB radius 3/16
    CHECK(e.i_bar == 2);
    CHECK(e.index_set == std::vector<std::size_t>{0, 1});
    CHECK(validate_expansion(sp, S, x, 3, 1.5, e));
  }
  SUBCASE("only the segment in view") {
    const PointId x = 16 + 17 * 8;  // (1, 1/2): the segment end, 1/2 from the region
    const auto e = combinatorial_expand(sp, S, x, 4, 1.0);
    CHECK(e.index_set == std::vector<std::size_t>{1});
    CHECK(e.i_bar == 1);
    CHECK(validate_expansion(sp, S, x, 4, 1.0, e));
    Expansion broken = e;
    broken.i_bar = 7;
    CHECK_FALSE(validate_expansion(sp, S, x, 4, 1.0, broken));
  }
  CHECK_KIND(combinatorial_expand(sp, S, 0, 2, 0.5), InvalidParameter);
  CHECK_KIND(combinatorial_expand(sp, S, 16 + 17 * 16, 4, 1.0), InvalidParameter);  // (1, 1): cB misses S
}

TEST_CASE("trace_norm_simple") {
  const auto inst = simple(1.0 / 8);
  const auto& S = inst.s;
  const std::size_t n = S.union_ids().size();
  const auto c = trace_norm_simple(inst.space, S, std::vector<double>(n, 2.0), kP, 1);
  double lp_sum = 0.0;
  for (std::size_t i = 0; i < S.N(); ++i) {
    double m = 0.0;
    for (double w : S.piece(i).weights) m += w;
    lp_sum += 2.0 * std::pow(m, 1.0 / kP);
  }
  CHECK(c.value == doctest::Approx(lp_sum).epsilon(1e-13));
  CHECK(c.part("gl") == 0.0);

  const auto f = sample(inst, "hoelder:0.6");
  const auto t2 = trace_norm_simple(inst.space, S, f, kP, 2);
  const auto t3 = trace_norm_simple(inst.space, S, f, kP, 3);
  CHECK(t2.value <= t3.value);
  const auto t1 = trace_norm_simple(inst.space, S, f, kP, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < S.N(); ++i) {
    const double b = besov_norm(inst.space, S.piece(i), S.restrict_to_piece(f, i), 1.0 - S.piece(i).theta / kP, kP).value;
    CHECK(t1.part("besov_" + S.piece(i).name) == b);
    sum += b;
  }
  CHECK(t1.value == doctest::Approx(sum + gluing(inst.space, S, f, kP, 1).value).epsilon(1e-14));

  SUBCASE("tiny instance vs oracle") {
    std::mt19937_64 rng(19);
    auto tiny = oracle::tiny_instance(rng, 12, 5, 4, 0.5, 1.0);
    const int K = resolve_k_max(tiny.space, {});
    std::vector<double> g(tiny.s.union_ids().size());
    for (auto& v : g) v = std::uniform_real_distribution<double>(0, 1)(rng);
    double want = oracle::gluing(tiny.space, tiny.s, g, kP, 3, K);
    for (std::size_t i = 0; i < 2; ++i)
      want += oracle::besov(tiny.space, tiny.s.piece(i), oracle::on_piece(tiny.s, g, i), 1.0 - tiny.s.piece(i).theta / kP,
                            kP, K, false);
    CHECK(oracle::close(trace_norm_simple(tiny.space, tiny.s, g, kP, 3).value, want));
  }

  const auto d = difficult(1.0 / 8);
  CHECK_KIND(trace_norm_simple(d.space, d.s, sample(d, "linear"), kP, 1), ParameterError);
  CHECK_KIND(trace_norm_simple(inst.space, S, f, kP, 4), InvalidParameter);
}

TEST_CASE("trace_norm_difficult") {
  const auto inst = difficult(1.0 / 16);
  const auto& S = inst.s;
  const std::size_t n = S.union_ids().size();
  const auto c = trace_norm_difficult(inst.space, S, std::vector<double>(n, 2.0), kP);
  CHECK(c.part("sharp_s1") == 0.0);
  CHECK(c.part("gl3") == 0.0);
  CHECK(c.part("lp_s1") > 0.0);
  // The S^2 Besov part keeps its own L_p term for constants.
  double m2 = 0.0;
  for (double w : S.piece(1).weights) m2 += w;
  CHECK(c.part("besov_s2") == doctest::Approx(2.0 * std::pow(m2, 1.0 / kP)).epsilon(1e-13));

  const auto f = sample(inst, "random", 1);
  const auto t = trace_norm_difficult(inst.space, S, f, kP);
  CHECK(t.value == t.part("lp_s1") + t.part("sharp_s1") + t.part("besov_s2") + t.part("gl3"));
  CHECK(t.part("gl3") == gluing(inst.space, S, f, kP, 3).value);

  const auto s = simple(1.0 / 8);
  CHECK_KIND(trace_norm_difficult(s.space, s.s, sample(s, "linear"), kP), ParameterError);
}

TEST_CASE("translation invariance of seminorm parts") {
  const auto inst = difficult(1.0 / 8);
  const auto& S = inst.s;
  const auto seq = build_measure_sequence(S, 1.0, resolve_k_max(inst.space, {}));
  const auto f = sample(inst, "random", 9);
  const auto g = affine(f, 1.0, 10.0);
  const auto a = calderon_maximal(seq, f, S.union_ids());
  const auto b = calderon_maximal(seq, g, S.union_ids());
  for (std::size_t u = 0; u < a.size(); ++u) CHECK(b[u] == doctest::Approx(a[u]).epsilon(1e-9));
  for (int l = 1; l <= 3; ++l)
    CHECK(gluing(inst.space, S, g, kP, l).value == doctest::Approx(gluing(inst.space, S, f, kP, l).value).epsilon(1e-9));
  const NiceFamily fam{{Ball::at(30, 0.25), Ball::at(70, 0.125)}, 6.0};
  CHECK(bsn_functional(seq, g, kP, 6.0, fam).part("family_sum") ==
        doctest::Approx(bsn_functional(seq, f, kP, 6.0, fam).part("family_sum")).epsilon(1e-9));
}
