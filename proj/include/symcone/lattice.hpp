#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "symcone/scalar.hpp"

namespace symcone {

// ---------------------------------------------------------------------------
// Manifold descriptors
// ---------------------------------------------------------------------------

enum class ManifoldKind { EllipticPos, Torus4, KodairaThurston, TorusBundleSum };

enum class BundlePiece { T4, KT, BPlusOne };

struct BundleComponent {
    BundlePiece piece;
    long lambda = 0;  // KT only, nonzero

    bool operator==(const BundleComponent&) const = default;
};

/// Which smooth elliptic surface (without multiple fibers) the lattice models.
struct ManifoldDescriptor {
    ManifoldKind kind;
    long n = 1;       // EllipticPos
    long genus = 0;   // EllipticPos
    long lambda = 1;  // KodairaThurston, nonzero
    std::vector<BundleComponent> components;
    long blowups = 0;

    static ManifoldDescriptor elliptic(long n, long g, long l = 0);
    static ManifoldDescriptor torus4(long l = 0);
    static ManifoldDescriptor kodaira_thurston(long lambda, long l = 0);
    static ManifoldDescriptor bundle_sum(std::vector<BundleComponent> cs, long l = 0);

    bool is_e1() const { return kind == ManifoldKind::EllipticPos && n == 1 && genus == 0; }
    bool is_e2() const { return kind == ManifoldKind::EllipticPos && n == 2 && genus == 0; }

    std::string str() const;
    static ManifoldDescriptor parse(const std::string& text);

    bool operator==(const ManifoldDescriptor&) const = default;
};

// ---------------------------------------------------------------------------
// Blocked intersection form
// ---------------------------------------------------------------------------

enum class BlockKind { E8, H, Fiber, MinusOne };
enum class HTag { RimPair, TorusPair, Generic };

struct Block {
    BlockKind kind;
    int offset;        // first slot index
    long gamma_sq = 0; // Fiber only
    HTag tag = HTag::Generic;

    int size() const {
        switch (kind) {
            case BlockKind::E8: return 8;
            case BlockKind::H: return 2;
            case BlockKind::Fiber: return 2;
            case BlockKind::MinusOne: return 1;
        }
        return 0;
    }
};

/// The intersection lattice as an ordered list of orthogonal blocks.
/// Slot order is fixed: E8 blocks, then H blocks, then the fiber block
/// (F, Gamma), then one <-1> slot per blow-up.
struct BlockForm {
    std::vector<Block> blocks;
    int slots = 0;
    int e8_count = 0, h_count = 0, blowup_count = 0;
    int fiber_block_index = -1;  // index into blocks, -1 if absent

    const Block& e8(int i) const { return blocks.at(i); }
    const Block& h(int i) const { return blocks.at(e8_count + i); }
    const Block& fiber() const { return blocks.at(fiber_block_index); }

    int e8_slot(int block, int i) const { return e8(block).offset + i; }
    int h_a_slot(int block) const { return h(block).offset; }
    int h_b_slot(int block) const { return h(block).offset + 1; }
    int fiber_c_slot() const { return fiber().offset; }
    int fiber_g_slot() const { return fiber().offset + 1; }
    int blowup_slot(int i) const { return slots - blowup_count + i; }

    long gamma_sq() const { return fiber().gamma_sq; }

    /// Name of a slot, e.g. "e8[0].k3", "h[1].a", "F", "Gamma", "E[2]".
    std::string slot_name(int slot) const;
    /// Inverse of slot_name; throws on unknown names.
    int slot_index(const std::string& name) const;
};

using ClassVector = std::vector<Scalar>;

/// The E8 Gram matrix (negative definite, as displayed with the D_i basis).
extern const std::array<std::array<int, 8>, 8> kE8Gram;

BlockForm build_form(const ManifoldDescriptor& m);

ClassVector zero_class(const BlockForm& f);
ClassVector basis_class(const BlockForm& f, int slot);
ClassVector fiber_class(const BlockForm& f);

Scalar pair(const BlockForm& f, const ClassVector& x, const ClassVector& y);
Scalar square(const BlockForm& f, const ClassVector& x);

bool is_integral(const ClassVector& x);

/// alpha = omega * v with v primitive integral (first nonzero entry positive);
/// nullopt if the entries have no common scalar factor over an integral class.
struct IntegralFactor {
    Scalar omega;
    std::vector<mpz_class> vec;
};
std::optional<IntegralFactor> integral_multiple(const ClassVector& x);

/// Kodaira dimension indicator: -1 encodes -infinity.
enum class Kodaira { MinusInfinity, Zero, One };
Kodaira kodaira_dimension(const ManifoldDescriptor& m);

int betti_plus(const BlockForm& f);
int betti_plus(const ManifoldDescriptor& m);

/// K = m*F - sum_i delta_i E_i with delta_i in {+-1}.
struct CanonicalClass {
    long fiber_multiple;          // 2g-2+n for EllipticPos, 0 for chi=0 bundles
    std::vector<int> deltas;      // one sign per blow-up

    ClassVector to_class(const BlockForm& f) const;
    std::string str() const;
};

/// The admissible set 𝒦_F: all 2^l sign sweeps over the blow-up classes.
std::vector<CanonicalClass> canonical_classes(const ManifoldDescriptor& m);

}  // namespace symcone
