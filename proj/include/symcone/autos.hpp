#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "symcone/lattice.hpp"

namespace symcone {

// ---------------------------------------------------------------------------
// Generator moves
// ---------------------------------------------------------------------------

enum class MoveKind {
    ReflectMinus2,   // reflection B -> B + (B.S)S on an integral square -2 class
    HReflect,        // swap (a,b) on one H block (reflection on B-A)
    QMap,            // -id on two H blocks
    QMapSingle,      // -id on one H block; spinor norm -1, composition helper
    Interchange,     // (p,q) block pair: p <- -q, q <- p
    Shear2H,         // (a1,b1,a2,b2) -> (a1, b1+i*b2, a2-i*a1, b2)
    HFiber,          // (c,g,a,b) -> (c-i*a, g, a, b+i*g)
    E8HAuto,         // k -> k+2br, a compensated; acts on one E8 + one H block
    E8HReflectCase,  // the catalog of reflections on +-D_i + A
    E2BaseChange,    // (F,W)+(A,B) shear on E(2); changes the fiber
    GammaReflect,    // reflection on Gamma; E(2) only
    T4MapI,
    T4MapII,
    T4MapIII,        // fiber -> F - A*A2
    T4MapIV,         // fiber -> F + A*A1
    KTPhi0,          // (c,g,a1,a2) -> (-a2,-a1,-g,-c); swaps the two fibrations
    KTPhi1,          // fiber -> F + N*A2
    KTPhi2,
    E1Swap,          // K-standard basis: swap b_i, b_j (reflection on E_i - E_j)
    E1Cremona,       // K-standard basis: reflection on H - E1 - E2 - E3
};

enum class E8Case { C1a, C1b, C1c1, C1c2, C2a, C2b, C2c1, C2c2, C3a, C3b, C3c1, C3c2 };

struct Move {
    MoveKind kind;
    int b1 = -1, b2 = -1;  // H-block indices (or e8 index in b1 for E8 moves, e1 indices)
    mpz_class i = 0;       // integer parameter (i, N, A, Q)
    std::array<mpz_class, 8> r{};  // E8HAuto only
    E8Case e8case = E8Case::C1a;   // E8HReflectCase only
    int case_index = 0;            // E8HReflectCase only
    ClassVector refl;              // ReflectMinus2 support

    static Move reflect(ClassVector s);
    static Move h_reflect(int h);
    static Move q_map(int h1, int h2);
    static Move q_map_single(int h);
    static Move interchange(int h1, int h2);
    static Move shear_2h(int h1, int h2, mpz_class i);
    static Move h_fiber(int h, mpz_class i);
    static Move e8h_auto(int e8, int h, std::array<mpz_class, 8> r);
    static Move e8h_case(int e8, int h, E8Case c, int i);
    static Move e2_base_change(int h, mpz_class i);
    static Move gamma_reflect();
    static Move t4_map(int which, mpz_class param);  // 1..4
    static Move kt_phi0();
    static Move kt_phi1(mpz_class n);
    static Move kt_phi2(mpz_class q);
    static Move e1_swap(int i, int j);
    static Move e1_cremona();

    std::string str() const;
    static Move parse(const std::string& line, const BlockForm* f);
};

bool move_changes_fiber(const Move& mv);

struct apply_error : std::runtime_error {
    explicit apply_error(const std::string& m) : std::runtime_error(m) {}
};

/// Exact action of the move; throws apply_error on illegal moves.
ClassVector apply_move(const BlockForm& f, const Move& mv, const ClassVector& x);
/// Action of the inverse automorphism.
ClassVector apply_move_inverse(const BlockForm& f, const Move& mv, const ClassVector& x);

struct ApplyResult {
    ClassVector image;
    ClassVector fiber_image;  // the fiber class transported by this single move
};
/// Image of the class plus the image of the fiber class under the move's
/// fibration transport (the inverse map applied to F; fiber-preserving moves
/// return F itself).
ApplyResult apply(const BlockForm& f, const Move& mv, const ClassVector& x);

/// The E8(+H) action k_i -> k_i + 2b r_i with the compensating a-update that
/// preserves the form; returns (k', a').
std::pair<std::array<Scalar, 8>, Scalar> e8h_action(const std::array<Scalar, 8>& k,
                                                    const Scalar& a, const Scalar& b,
                                                    const std::array<mpz_class, 8>& r);

// ---------------------------------------------------------------------------
// Spinor norm
// ---------------------------------------------------------------------------

/// Orthogonal basis of a maximal positive definite subspace: one positive
/// vector per H/Fiber block (blocks are mutually orthogonal).
std::vector<ClassVector> positive_subspace_basis(const BlockForm& f);

/// Sign of the determinant of the induced map on the maximal positive
/// definite subspace; +1 preserves orientation. Computed exactly.
int spinor_norm(const BlockForm& f, const std::vector<Move>& word);
int spinor_norm(const BlockForm& f, const Move& mv);

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

enum class CertBasis { Block, E1Standard };

/// A replayable word of moves witnessing the equivalence of two classes.
struct Certificate {
    std::string descriptor;  // manifold text; rebuilds the form for replay
    long field_d = 0;        // 0 = rational session
    CertBasis basis = CertBasis::Block;
    uint64_t manifest_hash = 0;  // 0 = not bound to a manifest
    ClassVector input;
    ClassVector output;
    std::vector<Move> moves;
    /// (move index, cumulative fiber image after that move), recorded at each
    /// fiber-changing move.
    std::vector<std::pair<int, ClassVector>> fiber_track;

    std::string serialize() const;
    static Certificate deserialize(const std::string& text);
};

/// Cumulative fiber image after the first `count` moves of the word: the
/// original fiber F pulled back through the composite (inverse maps applied
/// in reverse order).
ClassVector cumulative_fiber(const BlockForm& f, const std::vector<Move>& word, size_t count);

/// Builds a certificate by replaying `word` on `input`, recording fiber images.
Certificate make_certificate(const BlockForm& f, const std::string& descriptor, long field_d,
                             const ClassVector& input, const std::vector<Move>& word);

/// True iff sequential replay reproduces the claimed output and fiber images.
bool verify_certificate(const BlockForm& f, const Certificate& cert, std::string* why = nullptr);

// E(1) K-standard basis support: vectors (a; b_1..b_N) with the
// <1> + N<-1> pairing.
Scalar e1_pair(const std::vector<Scalar>& x, const std::vector<Scalar>& y);
std::vector<Scalar> apply_e1_move(const Move& mv, const std::vector<Scalar>& x);
bool verify_e1_certificate(const Certificate& cert, std::string* why = nullptr);

uint64_t fnv1a64(const std::string& text);

/// Radical part shared by the entries (0 when all entries are rational).
long field_of(const ClassVector& v);

}  // namespace symcone
