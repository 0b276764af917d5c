#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mmtrace/measures.hpp"
#include "mmtrace/regularity.hpp"

namespace mmtrace {

/// Functions on S are value vectors indexed by union-local indices of the
/// PiecewiseSet (positions in union_ids()). Functions on one piece are
/// indexed by piece-local indices.

struct FunctionalReport {
  std::string name;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> parts;  // insertion order kept
  std::map<std::string, double> params;
  double truncation_tail = 0.0;  // last scale term of the truncated sum (p-th power)
  std::vector<std::string> notes;

  double part(const std::string& key) const;
};

nlohmann::json to_json(const FunctionalReport& r);

/// Scale sums run over k = 1..k_max; nullopt means space.max_scale().
struct ScaleOptions {
  std::optional<int> k_max;
};

int resolve_k_max(const Space& space, const ScaleOptions& opt);

// ---------------------------------------------------------------- Besov

/// ||f||_{L_p(h)} + (sum_k 2^{ksp} sum_x E_h(f, B_k(x) cap S^i)^p h_x)^{1/p}.
FunctionalReport besov_norm(const Space& space, const SubsetPiece& piece, std::span<const double> f, double s,
                            double p, ScaleOptions opt = {});

/// Same with the inner term avg_{B_k(x) cap S^i} |f(x) - f(y)|^p.
FunctionalReport besov_norm_alt(const Space& space, const SubsetPiece& piece, std::span<const double> f, double s,
                                double p, ScaleOptions opt = {});

// ---------------------------------------------------------------- averaging, weights

/// A^i_k(f)(x) for every point x of the piece.
std::vector<double> averaging_single(const Space& space, const SubsetPiece& piece, std::span<const double> f, int k);

/// A^{i,j}_k(f)(y, z); InvalidPair unless d(y, z) <= 2^{-k}.
double averaging_double(const Space& space, const SubsetPiece& piece_i, std::span<const double> f_i,
                        const SubsetPiece& piece_j, std::span<const double> f_j, int k, PointId y, PointId z);

enum class WeightKind { geometric, arithmetic };

/// geometric: 1 / sqrt(mu(B_k(y)) mu(B_k(z))); arithmetic: (1/mu(B_k(y)) + 1/mu(B_k(z))) / 2.
double weight_w(const Space& space, int k, PointId y, PointId z, WeightKind kind = WeightKind::geometric);

// ---------------------------------------------------------------- gluing

/// Pair lists Sigma^{i,j}_k and the sets S^{i,j}_k, for i < j and k = 1..k_max.
class GluingCache {
 public:
  struct Block {
    std::size_t i = 0, j = 0;
    int k = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // piece-local (y in S^i, z in S^j)
    std::vector<std::uint32_t> s_ij;                            // S^{i,j}_k, piece-local in S^i
    std::vector<std::uint32_t> s_ji;                            // S^{j,i}_k, piece-local in S^j
  };

  GluingCache(const PiecewiseSet& s, int k_max);
  int k_max() const { return k_max_; }
  const std::vector<Block>& blocks() const { return blocks_; }

 private:
  int k_max_ = 0;
  std::vector<Block> blocks_;
};

/// GL^(which) with the geometric weight unless `kind` says otherwise.
/// The ordered sum over i != j is evaluated as twice the sum over i < j.
FunctionalReport gluing(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p, int which,
                        ScaleOptions opt = {}, WeightKind kind = WeightKind::geometric,
                        const GluingCache* cache = nullptr);

// ---------------------------------------------------------------- maximal functions, BN

/// Tilde-E_{m_k}(f, B_r(x)): E over B_{2r}(x) when B_r(x) meets S, else 0.
double tilde_e(const MeasureSequence& seq, std::span<const double> f, int k, PointId x, double r);

/// f^sharp(x) = max over dyadic r in [2^{-k_max}, 1] of tilde-E_{m_{k(r)}}(f, B_r(x)) / r.
std::vector<double> calderon_maximal(const MeasureSequence& seq, std::span<const double> f,
                                     std::span<const PointId> points);

/// ||f||_{L_p(m_0)} + ||f^sharp||_{L_p(S, mu)} + scale sum over the porous parts S_{2^{-k}}(sigma).
/// Passing c checks sigma < eps^2 / (4c) and adds a note when it fails.
FunctionalReport bn_functional(const MeasureSequence& seq, const PiecewiseSet& s, std::span<const double> f, double p,
                               double sigma, std::optional<double> c = std::nullopt);

// ---------------------------------------------------------------- nice families, BSN

enum class FamilyKind { nice, whitney };

struct NiceFamily {
  std::vector<Ball> balls;  // centered on point ids
  double c = 1.0;
  FamilyKind kind = FamilyKind::nice;
};

struct FamilyCheck {
  bool f1 = true, f2 = true, f3 = true, f4 = true;
  bool ok() const { return f1 && f2 && f3 && f4; }
};

/// F1 checks disjointness of the balls as point sets of the space.
FamilyCheck validate_family(const Space& space, std::span<const PointId> s_ids, const NiceFamily& family);

struct SearchOptions {
  std::size_t budget = 200000;  // candidate evaluations in the swap phase; 0 returns an empty family
  bool allow_exact = true;      // exhaustive search when at most kExactFamilyLimit candidates
  FamilyKind kind = FamilyKind::nice;
};

inline constexpr std::size_t kExactFamilyLimit = 8;

struct FamilySearchResult {
  NiceFamily family;
  double objective = 0.0;  // sum of terms (p-th power)
  std::size_t candidates = 0;
  bool exact = false;
  std::vector<double> trace;  // objective after greedy, then after each improving swap
};

/// Candidates B_{2^{-k}}(z), z in a maximal 2^{-k}-net of the space, k = 0..k_max.
/// Greedy by term, then 1-for-many swaps, with disjointness on point sets.
FamilySearchResult enumerate_or_search_nice_family(const MeasureSequence& seq, std::span<const double> f, double p,
                                                   double c, SearchOptions opt = {});

/// mu(B) / r^p * tilde-E_{m_{k(r)}}(f, cB)^p.
double bsn_term(const MeasureSequence& seq, std::span<const double> f, double p, double c, const Ball& ball);

/// ||f||_{L_p(m_0)} + (sum of terms)^{1/p} for a supplied family (validated) or a searched one.
FunctionalReport bsn_functional(const MeasureSequence& seq, std::span<const double> f, double p, double c,
                                const NiceFamily& family);
FunctionalReport bsn_functional(const MeasureSequence& seq, std::span<const double> f, double p, double c,
                                SearchOptions opt = {}, FamilySearchResult* search_out = nullptr);

// ---------------------------------------------------------------- difficult-case pieces

/// max over dyadic r in [2^{-k_max}, 2] of E_{mu|S^1}(f, B_r(x)) for every x in S (union order).
std::vector<double> sharp_mu_s1(const Space& space, const PiecewiseSet& s, std::span<const double> f,
                                ScaleOptions opt = {});

struct Expansion {
  std::vector<std::size_t> index_set;  // the pieces I, 0-based
  int i_bar = 1;
  std::vector<PointId> witnesses;      // one per entry of index_set
};

/// Grows cB_k(x) by unit steps of 2^{-k} until the enlarged ball meets no
/// piece outside the current index set.
Expansion combinatorial_expand(const Space& space, const PiecewiseSet& s, PointId center, int k, double c);

/// Witness containment and emptiness conditions of an expansion.
bool validate_expansion(const Space& space, const PiecewiseSet& s, PointId center, int k, double c,
                        const Expansion& e);

// ---------------------------------------------------------------- assembled trace norms

FunctionalReport trace_norm_simple(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p,
                                   int l, ScaleOptions opt = {}, const GluingCache* cache = nullptr);

FunctionalReport trace_norm_difficult(const Space& space, const PiecewiseSet& s, std::span<const double> f, double p,
                                      ScaleOptions opt = {}, const GluingCache* cache = nullptr);

}  // namespace mmtrace
