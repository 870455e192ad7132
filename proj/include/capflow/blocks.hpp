#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capflow/capacitary.hpp"
#include "capflow/families.hpp"
#include "capflow/measure.hpp"
#include "capflow/weights.hpp"

namespace capflow {

/// B blocks are normalized by C(E)^{1/q'}, script-B blocks by C(E)^{1/p'}.
enum class BlockType { b, script_b };

const char* to_string(BlockType t);

constexpr double kBlockTolerance = 1e-12;

struct Block {
  Field b;
  SetMask support;
  LorentzExponents exponents;
  BlockType type = BlockType::b;
  double capacity = 0.0;
  double normalization = 0.0;
};

/// Capacity exponent of a block type at the given exponents.
double block_capacity_power(BlockType type, const LorentzExponents& e);

/// Throws unless b vanishes off E and the normalization is at most 1 + 1e-12.
Block validate_block(const Field& b, const SetMask& support, const LorentzExponents& e, BlockType type,
                     const CapacityOracle& oracle);

struct BlockTerm {
  double lambda = 0.0;
  Block block;
  int level = 0;    // dyadic weight level k (constructive route)
  int annulus = 0;  // annulus index l (constructive route)
};

struct BlockDecomposition {
  std::vector<BlockTerm> terms;
  double lambda_sum = 0.0;
  double residual = 0.0;             // sup |f - sum lambda_k b_k|
  std::size_t uncovered_cells = 0;   // residual support left by the dictionary
  std::string route;
};

/// Dyadic weight levels E_k = {2^{k-1} < w <= 2^k} crossed with annuli
/// D_l = {l - 1 <= |x| < l} about the grid origin (a single annulus on
/// finite models); lambda_{k,l} = ||f chi||_{L^{p,q}} C(E_k cap D_l)^{1/q'}.
BlockDecomposition block_norm_upper_constructive(const Field& f, const LorentzExponents& e, const Weight& w,
                                                 const CapacityOracle& oracle);

/// Peels f over dictionary sets, largest ||r chi_K||_{L^{p,q}} first, one
/// tight block per peel. With a weight, returns the better of this and the
/// constructive route.
BlockDecomposition block_norm_upper_greedy(const Field& f, const LorentzExponents& e, const TestSetFamily& dictionary,
                                           const CapacityOracle& oracle, const Weight* w = nullptr);

/// Moves a decomposition of f onto g with |g| <= |f|: b_k -> g f^{-1} chi_{f != 0} b_k.
BlockDecomposition transport(const BlockDecomposition& d, const Field& f, const Field& g,
                             const CapacityOracle& oracle);

/// Rebuilds sum lambda_k b_k.
Field reconstruct(const BlockDecomposition& d, const SpacePtr& space);

struct PairingSample {
  Field f;
  Field g;
  double lambda_sum = 0.0;   // block-norm upper bound of g
  double m_estimate = 0.0;   // M-type estimate of f
};

struct PairingReport {
  std::vector<double> ratios;  // int |fg| / (m_estimate * lambda_sum)
  double max_ratio = 0.0;
  std::size_t skipped = 0;     // zero denominators
};

PairingReport pairing_inequality_suite(const std::vector<PairingSample>& corpus);

/// Signed masses per atom, not weighted by the atom measure.
struct AtomicMeasure {
  std::vector<double> masses;
  double total_variation(const SetMask& set) const;
};

/// sup_K |mu|(K) / C(K) over the family.
NormEstimate trace_norm(const AtomicMeasure& mu, const TestSetFamily& family, const CapacityOracle& oracle);

/// inf{a > 0 : |mu|(E) <= a C(E) for every E}, by bisection on a over all
/// nonempty subsets (at most 20 atoms).
double trace_norm_inf_form(const AtomicMeasure& mu, const CapacityOracle& oracle);

struct KotheSpace {
  enum Kind { lorentz, multiplier } kind = lorentz;
  LorentzExponents exponents{2.0, 2.0};
};

constexpr std::size_t kKotheMaxAtoms = 6;
constexpr int kKotheStarts = 256;

/// Lower bound for sup{ int |f g| : ||g||_X <= 1 } by multi-start local
/// search over nonnegative g plus the aligned candidate |f|^{p-1}. The
/// multiplier space uses every subset as its family.
NormEstimate kothe_dual_norm_bruteforce(const Field& f, const KotheSpace& space, const CapacityOracle* oracle,
                                        std::uint64_t seed = kDefaultSeed);

}  // namespace capflow
