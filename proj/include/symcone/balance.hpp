#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symcone/autos.hpp"
#include "symcone/lattice.hpp"

namespace symcone {

enum class BalanceCase { Concentrated, IntegralCollapse, AlreadyBalanced, CapExceeded };

/// Outcome of a reduction/concentration run: an equivalent class, the move
/// word that realizes it, and the bounds that were actually achieved.
struct BalanceReport {
    ClassVector output;
    Certificate cert;
    BalanceCase tag = BalanceCase::AlreadyBalanced;
    std::vector<std::pair<std::string, Scalar>> bounds;
    bool ok = true;
    std::string note;
};

struct BalanceContext {
    ManifoldDescriptor descriptor;
    BlockForm form;
    long field_d = 0;
    long stage_cap = 512;

    static BalanceContext make(const ManifoldDescriptor& m, long field_d);
};

/// Euclidean-style reduction on two H blocks (h1, h2), k halving stages.
/// Not-a-multiple-of-integral inputs satisfy |b~1| <= |b1|/2^(k-1) plus the
/// two-pair case split; integral multiples defer to integral_concentrate.
BalanceReport reduce_2h(const BalanceContext& ctx, const ClassVector& alpha, int h1, int h2,
                        int k, bool sign_relevant = true);

/// Concentrates a scalar multiple of an integral class supported on the given
/// E8 blocks and >= 2 H blocks into the single H block `target_h`, preserving
/// square and divisibility; identity on the fiber block.
BalanceReport integral_concentrate(const BalanceContext& ctx, const ClassVector& alpha,
                                   const std::vector<int>& e8_blocks,
                                   const std::vector<int>& h_blocks, int target_h);

/// Volume concentration on E8 + 2H + (F,Gamma): either every H pair and E8
/// entry is eps-small with the dichotomy's sign pattern, or the class
/// collapses to a1 A1 + b1 B1 + cF + gGamma. Requires pairing with F nonzero.
BalanceReport concentrate(const BalanceContext& ctx, const ClassVector& alpha, int e8_block,
                          int h1, int h2, const Scalar& eps);

/// Balancing for EllipticPos descriptors with (n,g) not in {(1,0),(2,0)}:
/// the rim pair of the split becomes eps-small (or exactly dead) and every
/// E8 coefficient is below eps; blow-up slots untouched.
BalanceReport balance_class(const BalanceContext& ctx, const ClassVector& alpha, int split,
                            const Scalar& eps);

/// The E(2) balancing pipeline in (F, W=Gamma+F) coordinates; outcome is the
/// four-part conclusion (positive fiber pairing, balanced small rim, small E8,
/// and either 0 < g < eps or a multiple of an integral class on (F,W)).
BalanceReport balance_e2(const BalanceContext& ctx, const ClassVector& alpha, const Scalar& eps);

/// T4: shrink the fiber volume below eps with maps I/II/III only; requires
/// (a1, b2) not a multiple of an integral class.
BalanceReport concentrate_t4(const BalanceContext& ctx, const ClassVector& alpha,
                             const Scalar& eps);

/// Kodaira-Thurston: shrink the fiber volume below eps with phi1/phi2,
/// final sign matching the input; requires g/a1 irrational.
BalanceReport concentrate_kt(const BalanceContext& ctx, const ClassVector& alpha,
                             const Scalar& eps);

/// Both rim pairs have positive product or vanish, and the square stays
/// positive after removing the rim volume.
bool is_balanced(const BlockForm& f, const ClassVector& alpha, int split);

/// Splits alpha minus its rim part into two side classes with positive
/// squares; c1 is the smallest-magnitude rational fiber weight with
/// denominator at most den_cap.
struct SumSplit {
    ClassVector side_x, side_y;
    Scalar c1;
};
std::optional<SumSplit> sum_split(const BalanceContext& ctx, const ClassVector& alpha, int split,
                                  long den_cap = 64);

/// H-block indices of the rim pair designated by a split position (1-based
/// position between the E(m) summands).
std::pair<int, int> rim_blocks_of_split(const ManifoldDescriptor& m, int split);

}  // namespace symcone
