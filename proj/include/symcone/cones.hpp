#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symcone/autos.hpp"
#include "symcone/balance.hpp"
#include "symcone/lattice.hpp"

namespace symcone {

enum class Decision { Member, NonMember, Undecided };
enum class ConeKind { Positive, RelativePositive, RelativeSymplectic, FullSymplectic };
enum class ViolatedCond { None, Square, FiberPairing, ExceptionalIndex, ReducedForm, OutOfScope };

struct ConeVerdict {
    Decision decision = Decision::Undecided;
    ConeKind kind = ConeKind::Positive;
    std::optional<Certificate> witness;
    ViolatedCond violated = ViolatedCond::None;
    int violated_index = -1;
    std::string note;

    std::string str() const;
};

ConeVerdict in_positive_cone(const BlockForm& f, const ClassVector& alpha);
ConeVerdict in_relative_positive_cone(const BlockForm& f, const ClassVector& alpha,
                                      const ClassVector& a);

/// Membership in the relative symplectic cone C^F_{M,K}.
ConeVerdict relative_cone_member(const ManifoldDescriptor& m, const BlockForm& f,
                                 const ClassVector& alpha, const CanonicalClass& k,
                                 long iteration_cap = 10000);

/// Membership in the full symplectic cone.
ConeVerdict full_cone_member(const ManifoldDescriptor& m, const BlockForm& f,
                             const ClassVector& alpha, long iteration_cap = 10000);

// ---------------------------------------------------------------------------
// E(1) reduced classes in a K-standard basis
// ---------------------------------------------------------------------------

/// (a; b_1..b_N) with pairing a^2 - sum b_i^2; N = 9 for E(1) itself.
struct E1Reduction {
    std::vector<Scalar> reduced;  // terminal vector
    Certificate cert;             // E1Standard basis
    ConeVerdict verdict;
};

/// Sort the b_i descending (reflections on E_i - E_j) and fire the Cremona
/// reflection on H - E1 - E2 - E3 while a < b1 + b2 + b3. Membership:
/// terminal reduced with every b_i > 0. Requires square > 0.
E1Reduction reduce_e1(const std::vector<Scalar>& v, long iteration_cap = 10000);

/// True iff sorted-descending with b_i > 0 and a >= b1 + b2 + b3.
bool e1_is_reduced_member(const std::vector<Scalar>& v);

/// Eq-style base change from the split form (k_0..k_7, g, c) on E8 + (F,E)
/// to the K-standard form (a; b_1..b_9).
std::vector<Scalar> base_change_split_to_standard(const std::array<Scalar, 8>& k, const Scalar& g,
                                                  const Scalar& c);

/// Standard vector of a class on an E(1)+l form for a given canonical class.
std::vector<Scalar> e1_standard_vector(const BlockForm& f, const ClassVector& alpha,
                                       const CanonicalClass& k);

// ---------------------------------------------------------------------------
// Special families
// ---------------------------------------------------------------------------

/// S^2 x T^2 with l blow-ups: beta = aF + b Gamma_{S2} - sum e_i E_i is a
/// member iff beta^2 > 0, beta.F > 0, beta.E_i > 0 and beta.(Gamma - E_i) > 0.
ConeVerdict s2t2_cone_member(long l, const Scalar& a, const Scalar& b,
                             const std::vector<Scalar>& e);

/// Full-cone membership for T4 + l, KT + l and E(2) + l with an explicit
/// fiber-swap witness when the pairing with F vanishes.
ConeVerdict kt_t4_full_member(const ManifoldDescriptor& m, const BlockForm& f,
                              const ClassVector& alpha);

}  // namespace symcone
