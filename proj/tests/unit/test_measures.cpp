#include <cmath>

#include "../oracle.hpp"
#include "helpers.hpp"
#include "mmtrace/experiments.hpp"
#include "mmtrace/measures.hpp"

using namespace mmtrace;

namespace {

Instance simple(double h) {
  auto spec = simple_case_spec(h);
  spec.check_adr = false;
  return generate(spec);
}

}  // namespace

TEST_CASE("build_measure_sequence") {
  const auto inst = simple(1.0 / 8);
  const auto& S = inst.s;
  const int K = resolve_k_max(inst.space, {});
  const auto seq = build_measure_sequence(S, 2.0, K);
  REQUIRE(seq.k_max == K);

  for (int k = 0; k <= K; ++k) {
    const auto ref = oracle::m_k(S, 2.0, k);
    for (std::size_t u = 0; u < ref.size(); ++u) CHECK(seq.weights(k)[u] == doctest::Approx(ref[u]).epsilon(1e-15));
  }
  // Points only on the face (theta 1): m_k = 2^k h^1.
  const auto& face = S.piece(0);
  const auto& seg = S.piece(1);
  for (std::size_t a = 0; a < face.ids.size(); ++a) {
    if (std::binary_search(seg.ids.begin(), seg.ids.end(), face.ids[a])) continue;
    const auto u = S.piece_to_union(0)[a];
    CHECK(seq.weights(3)[u] == doctest::Approx(8.0 * face.weights[a]));
    CHECK(seq.weights(0)[u] == face.weights[a]);
  }
  // Mass monotone in k on the lower piece, constant on the top one.
  for (int k = 0; k < K; ++k) {
    double face_k = 0, face_k1 = 0;
    for (std::size_t u = 0; u < S.union_ids().size(); ++u) {
      if (std::binary_search(seg.ids.begin(), seg.ids.end(), S.union_ids()[u])) continue;
      face_k += seq.weights(k)[u];
      face_k1 += seq.weights(k + 1)[u];
    }
    CHECK(face_k1 > face_k);
    for (std::size_t a = 0; a < seg.ids.size(); ++a) {
      if (std::binary_search(face.ids.begin(), face.ids.end(), seg.ids[a])) continue;
      const auto u = S.piece_to_union(1)[a];
      CHECK(seq.weights(k + 1)[u] == seq.weights(k)[u]);
    }
  }

  CHECK_KIND(build_measure_sequence(S, 1.5, K), ParameterError);
  CHECK_KIND(build_measure_sequence(S, 2.0, K, 2.0), ParameterError);
  CHECK_KIND(build_measure_sequence(S, 2.0, K + 1), ResolutionError);
}

TEST_CASE("single piece at its own theta: m_k = m_0") {
  GeneratorSpec g;
  g.kind = "grid2d";
  g.h = 1.0 / 16;
  g.check_adr = false;
  g.pieces.push_back({"seg", "segment", 1.0, {0.0, 0.5}, {1.0, 0.5}, {}, 0.0});
  const auto inst = generate(g);
  const auto seq = build_measure_sequence(inst.s, 1.0, 4);
  for (int k = 1; k <= 4; ++k) CHECK(seq.weights(k) == seq.weights(0));

  const auto cert = verify_regular_sequence(seq, std::vector<double>{2.0, 4.0}, default_test_sets(inst.s));
  MESSAGE("C1 " << cert.C1 << ", C2 " << cert.C2 << ", C3 " << cert.C3);
  CHECK(cert.m1);
  CHECK(cert.m2);
  CHECK(cert.m3);
  CHECK(cert.m4);
  CHECK(cert.m5);
}

TEST_CASE("verify_regular_sequence on the two-piece construction") {
  const auto inst = simple(1.0 / 8);
  const int K = resolve_k_max(inst.space, {});
  const auto seq = build_measure_sequence(inst.s, 2.0, K);
  const auto cert = verify_regular_sequence(seq, std::vector<double>{2.0, 4.0}, default_test_sets(inst.s));
  CHECK(cert.m1);
  CHECK(cert.m4);
  CHECK(cert.C3 == 1.0);
  CHECK(cert.C1 > 0.0);
  CHECK(cert.C2 > 0.0);
  for (double r : cert.m5_ratios) CHECK(r > 0.01);
  REQUIRE(cert.doubling_at_scale.size() == 2);
  CHECK(cert.doubling_at_scale[0] <= cert.doubling_at_scale[1]);

  // The closed-form density ratio w_k / w_{k+j} on the face is 2^{-j}.
  const auto& face0 = inst.s.piece_to_union(0)[0];
  CHECK(seq.density_per_k[1][face0] / seq.density_per_k[3][face0] == doctest::Approx(0.25));

  SUBCASE("a zeroed weight breaks M1") {
    auto w = seq.weights_per_k;
    w[2][0] = 0.0;
    const auto bad = measure_sequence_from_weights(inst.s, 2.0, w);
    CHECK_FALSE(verify_regular_sequence(bad, std::vector<double>{2.0}, default_test_sets(inst.s)).m1);
  }
}

TEST_CASE("measure_comparison_check") {
  // The upper ratio should stay bounded as the mesh is refined.
  std::vector<double> uppers;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const auto inst = simple(h);
    const auto seq = build_measure_sequence(inst.s, 2.0, resolve_k_max(inst.space, {}));
    const auto rep = measure_comparison_check(seq, inst.s, 2.0);
    MESSAGE("h = " << h << ": max upper ratio " << rep.max_upper_ratio << " over " << rep.pairs << " pairs");
    CHECK(rep.pairs > 0);
    CHECK(rep.min_lower_ratio >= 1.0 - 1e-12);
    CHECK(std::isfinite(rep.max_upper_ratio));
    uppers.push_back(rep.max_upper_ratio);
  }
  CHECK(uppers[1] <= 2.0 * uppers[0]);
}

TEST_CASE("lp_tail_check") {
  const auto inst = simple(1.0 / 8);
  const auto seq = build_measure_sequence(inst.s, 2.0, resolve_k_max(inst.space, {}));
  const std::size_t n = inst.s.union_ids().size();
  CHECK(lp_tail_check(seq, std::vector<double>(n, 0.0), 2.5, 2) == 0.0);
  CHECK(lp_tail_check(seq, std::vector<double>(n, 1.0), 2.5, 2) == 0.0);
  std::vector<double> ratios;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const auto in = simple(h);
    const auto sq = build_measure_sequence(in.s, 2.0, resolve_k_max(in.space, {}));
    const auto f = restrict_to_s(in.s, sample_on_space(in.space, FunctionSpec::parse("random"), 4));
    ratios.push_back(lp_tail_check(sq, f, 2.5, 2));
    CHECK(std::isfinite(ratios.back()));
    CHECK(ratios.back() > 0.0);
  }
  MESSAGE("L = 2 tail ratio " << ratios[0] << ", " << ratios[1]);
  CHECK(ratios[1] / ratios[0] < 2.0);
  CHECK(ratios[0] / ratios[1] < 2.0);
  CHECK_KIND(lp_tail_check(seq, std::vector<double>(n, 1.0), 2.5, seq.k_max + 1), InvalidParameter);
}
