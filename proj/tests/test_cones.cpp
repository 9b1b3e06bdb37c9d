#include "doctest.h"

#include <random>

#include "symcone/cones.hpp"

using namespace symcone;

namespace {

Scalar q(long n, long d = 1) { return Scalar(mpq_class(n, d)); }

ClassVector cls(const BlockForm& f, std::initializer_list<std::pair<const char*, long>> slots) {
    ClassVector v = zero_class(f);
    for (const auto& [name, val] : slots) v[f.slot_index(name)] = q(val);
    return v;
}

}  // namespace

TEST_CASE("positive and relative positive cones") {
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 0, 0);
    BlockForm f = build_form(m);
    // F has square zero
    CHECK(in_positive_cone(f, fiber_class(f)).decision == Decision::NonMember);
    CHECK(in_positive_cone(f, fiber_class(f)).violated == ViolatedCond::Square);
    // F + Gamma on E(2): square = 2 - 2 = 0
    ClassVector fg = cls(f, {{"F", 1}, {"Gamma", 1}});
    CHECK(square(f, fg) == q(0));
    CHECK(in_positive_cone(f, fg).decision == Decision::NonMember);
    // 2F + Gamma: square 2, pairing with F is 1
    ClassVector v = cls(f, {{"F", 2}, {"Gamma", 1}});
    CHECK(in_positive_cone(f, v).decision == Decision::Member);
    CHECK(in_relative_positive_cone(f, v, fiber_class(f)).decision == Decision::Member);
    CHECK(in_relative_positive_cone(f, fg, fiber_class(f)).decision == Decision::NonMember);
    // the A = 0 convention reduces to the positive cone
    CHECK(in_relative_positive_cone(f, v, zero_class(f)).decision == Decision::Member);
}

TEST_CASE("relative symplectic cone for kappa >= 0") {
    SUBCASE("E(2,1) minimal") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 0);
        BlockForm f = build_form(m);
        CanonicalClass k = canonical_classes(m)[0];
        ClassVector v = cls(f, {{"F", 2}, {"Gamma", 1}});
        CHECK(square(f, v) == q(2));
        CHECK(relative_cone_member(m, f, v, k).decision == Decision::Member);
        ClassVector w = cls(f, {{"Gamma", 1}});  // square -2
        CHECK(relative_cone_member(m, f, w, k).decision == Decision::NonMember);
        CHECK(relative_cone_member(m, f, w, k).violated == ViolatedCond::Square);
        // positive square but negative fiber pairing
        ClassVector u = cls(f, {{"F", -2}, {"Gamma", -1}});
        REQUIRE(square(f, u) == q(2));
        auto verdict = relative_cone_member(m, f, u, k);
        CHECK(verdict.decision == Decision::NonMember);
        CHECK(verdict.violated == ViolatedCond::FiberPairing);
    }
    SUBCASE("E(2,1)+1 with a vanishing exceptional pairing") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 1);
        BlockForm f = build_form(m);
        CanonicalClass k;
        k.fiber_multiple = 2;
        k.deltas = {1};
        ClassVector v = cls(f, {{"F", 2}, {"Gamma", 1}});  // e1 = 0
        auto verdict = relative_cone_member(m, f, v, k);
        CHECK(verdict.decision == Decision::NonMember);
        CHECK(verdict.violated == ViolatedCond::ExceptionalIndex);
        CHECK(verdict.violated_index == 1);
        // delta e > 0 makes it a member
        ClassVector w = cls(f, {{"F", 3}, {"Gamma", 1}, {"E[1]", 1}});
        CHECK(square(f, w) == q(2 * 3 - 2 - 1));
        CHECK(relative_cone_member(m, f, w, k).decision == Decision::Member);
        // the opposite canonical sign flips the verdict
        CanonicalClass k2;
        k2.fiber_multiple = 2;
        k2.deltas = {-1};
        CHECK(relative_cone_member(m, f, w, k2).decision == Decision::NonMember);
    }
    SUBCASE("canonical class mismatch is an error") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 1);
        BlockForm f = build_form(m);
        CanonicalClass bad;
        bad.fiber_multiple = 1;  // wrong multiple
        bad.deltas = {1};
        CHECK_THROWS_AS(relative_cone_member(m, f, zero_class(f), bad), std::invalid_argument);
    }
}

TEST_CASE("base change to the K-standard basis") {
    std::array<Scalar, 8> k{};
    auto v = base_change_split_to_standard(k, q(0), q(1));
    CHECK(v[0] == q(3));
    for (int i = 1; i <= 9; ++i) CHECK(v[i] == q(1));
    // b9 = c - g vanishes when g = c
    v = base_change_split_to_standard(k, q(2), q(2));
    CHECK(v[9] == q(0));
    for (int i = 1; i <= 8; ++i) CHECK(v[i] == q(2));
    // the base change is an isometry onto <1> + 9<-1>
    std::mt19937 rng(3);
    std::uniform_int_distribution<long> c(-6, 6);
    BlockForm f1 = build_form(ManifoldDescriptor::elliptic(1, 0, 0));
    for (int t = 0; t < 200; ++t) {
        std::array<Scalar, 8> kk;
        ClassVector alpha = zero_class(f1);
        for (int i = 0; i < 8; ++i) {
            kk[i] = q(c(rng), 1 + std::abs(c(rng)));
            alpha[f1.e8_slot(0, i)] = kk[i];
        }
        Scalar g = q(c(rng)), cc = q(c(rng));
        alpha[f1.fiber_g_slot()] = g;
        alpha[f1.fiber_c_slot()] = cc;
        auto std_vec = base_change_split_to_standard(kk, g, cc);
        CHECK(e1_pair(std_vec, std_vec) == square(f1, alpha));
    }
}

TEST_CASE("reduce_e1") {
    SUBCASE("already reduced member") {
        std::vector<Scalar> v = {q(3), q(1), q(1), q(1), q(1), q(1), q(1), q(1), q(1), q(1)};
        E1Reduction red = reduce_e1(v);
        CHECK(red.verdict.decision == Decision::Member);
        CHECK(red.cert.moves.empty());
        CHECK(red.reduced == v);
    }
    SUBCASE("permutation invariance") {
        std::vector<Scalar> v = {q(4), q(1), q(2), q(1), q(1), q(1), q(1), q(1), q(1), q(1)};
        std::vector<Scalar> w = v;
        std::swap(w[1], w[5]);
        std::swap(w[2], w[9]);
        E1Reduction a = reduce_e1(v), b = reduce_e1(w);
        CHECK(a.verdict.decision == b.verdict.decision);
        CHECK(a.reduced == b.reduced);
        std::string why;
        CHECK(verify_e1_certificate(b.cert, &why));
    }
    SUBCASE("a vanishing coefficient rejects") {
        // square = 16 - 4 - 9 = 3 > 0, but reduction exposes nonpositive b's
        std::vector<Scalar> v = {q(4), q(2), q(3), q(0), q(0), q(0), q(0), q(0), q(0), q(0)};
        E1Reduction red = reduce_e1(v);
        CHECK(red.verdict.decision == Decision::NonMember);
        CHECK(red.verdict.violated == ViolatedCond::ReducedForm);
    }
    SUBCASE("cremona descent reaches a terminal form") {
        // 2H - E1: square 4 - 1 = 3
        std::vector<Scalar> v = {q(2), q(1), q(0), q(0), q(0), q(0), q(0), q(0), q(0), q(0)};
        E1Reduction red = reduce_e1(v);
        CHECK(red.verdict.decision == Decision::NonMember);
        std::string why;
        CHECK(verify_e1_certificate(red.cert, &why));
        CHECK(e1_pair(red.reduced, red.reduced) == q(3));
    }
    SUBCASE("negative square is rejected") {
        std::vector<Scalar> v = {q(1), q(1), q(1), q(1), q(0), q(0), q(0), q(0), q(0), q(0)};
        CHECK_THROWS_AS(reduce_e1(v), std::invalid_argument);
    }
    SUBCASE("the boundary fiber class is reduced and member-shaped") {
        std::vector<Scalar> v = {q(3), q(1), q(1), q(1), q(1), q(1), q(1), q(1), q(1), q(1)};
        CHECK(e1_pair(v, v) == q(0));
        E1Reduction red = reduce_e1(v);
        CHECK(red.verdict.decision == Decision::Member);
    }
}

TEST_CASE("relative cone on E(1) goes through the reduced form") {
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(1, 0, 0);
    BlockForm f = build_form(m);
    CanonicalClass k = canonical_classes(m)[0];
    REQUIRE(k.fiber_multiple == -1);
    ClassVector v = cls(f, {{"F", 4}, {"Gamma", 1}});
    CHECK(square(f, v) == q(2 * 4 - 1));
    auto verdict = relative_cone_member(m, f, v, k);
    CHECK(verdict.decision == Decision::Member);
    // alpha = F fails the square precondition inside the cone test
    CHECK(relative_cone_member(m, f, fiber_class(f), k).decision == Decision::NonMember);
}

TEST_CASE("full cone case split") {
    SUBCASE("E(2) minimal: membership is positivity of the square") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 0, 0);
        BlockForm f = build_form(m);
        std::mt19937 rng(9);
        std::uniform_int_distribution<long> c(-5, 5);
        for (int t = 0; t < 300; ++t) {
            ClassVector v(f.slots);
            for (auto& x : v) x = q(c(rng), 1 + std::abs(c(rng)));
            bool pos = square(f, v) > q(0);
            auto verdict = full_cone_member(m, f, v);
            CHECK((verdict.decision == Decision::Member) == pos);
        }
        // pair(alpha, F) = 0 instances are members when the square is positive
        ClassVector v = cls(f, {{"h[0].a", 1}, {"h[0].b", 1}});
        CHECK(pair(f, v, fiber_class(f)) == q(0));
        CHECK(full_cone_member(m, f, v).decision == Decision::Member);
    }
    SUBCASE("E(2,1) minimal requires a nonzero fiber pairing") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 0);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[2].a", 1}, {"h[2].b", 1}});
        REQUIRE(square(f, v) > q(0));
        REQUIRE(pair(f, v, fiber_class(f)) == q(0));
        auto verdict = full_cone_member(m, f, v);
        CHECK(verdict.decision == Decision::NonMember);
        CHECK(verdict.violated == ViolatedCond::FiberPairing);
        ClassVector w = cls(f, {{"F", -2}, {"Gamma", -1}});
        REQUIRE(square(f, w) == q(2));
        CHECK(full_cone_member(m, f, w).decision == Decision::Member);  // pairing -1 != 0
    }
    SUBCASE("E(2)+2 drops the fiber condition but not the exceptional ones") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 0, 2);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[0].a", 3}, {"h[0].b", 3}, {"E[1]", 1}, {"E[2]", -1}});
        REQUIRE(pair(f, v, fiber_class(f)) == q(0));
        REQUIRE(square(f, v) > q(0));
        CHECK(full_cone_member(m, f, v).decision == Decision::Member);
        ClassVector w = cls(f, {{"h[0].a", 3}, {"h[0].b", 3}, {"E[1]", 1}});
        auto verdict = full_cone_member(m, f, w);
        CHECK(verdict.decision == Decision::NonMember);
        CHECK(verdict.violated == ViolatedCond::ExceptionalIndex);
        CHECK(verdict.violated_index == 2);
    }
    SUBCASE("T4 membership for positive square") {
        ManifoldDescriptor m = ManifoldDescriptor::torus4(0);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[1].a", 1}, {"h[1].b", 1}});  // (b1, b2) pair only
        REQUIRE(square(f, v) > q(0));
        CHECK(full_cone_member(m, f, v).decision == Decision::Member);
    }
    SUBCASE("torus-bundle sums with a B1 piece are flagged") {
        ManifoldDescriptor m = ManifoldDescriptor::parse("MB[T4,B1]");
        BlockForm f = build_form(m);
        auto verdict = full_cone_member(m, f, zero_class(f));
        CHECK(verdict.decision == Decision::Undecided);
        CHECK(verdict.violated == ViolatedCond::OutOfScope);
    }
}

TEST_CASE("full cone for E(1): reduced-form route with sign sweep") {
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(1, 0, 0);
    BlockForm f = build_form(m);
    ClassVector v = cls(f, {{"F", 4}, {"Gamma", 1}});
    CHECK(full_cone_member(m, f, v).decision == Decision::Member);
    // -alpha is a member too (global flip spans the canonical sweep)
    ClassVector neg = v;
    for (auto& x : neg) x = -x;
    CHECK(full_cone_member(m, f, neg).decision == Decision::Member);
    // F + Gamma has square 1 but standard form (4; 1,...,1, 0): b9 = 0
    ClassVector w = cls(f, {{"F", 1}, {"Gamma", 1}});
    CHECK(square(f, w) == q(1));
    auto verdict = full_cone_member(m, f, w);
    CHECK(verdict.decision == Decision::NonMember);
    CHECK(verdict.violated == ViolatedCond::ReducedForm);
}

TEST_CASE("s2 x t2 criterion") {
    // l = 0, (a,b) = (1,1): square 2 > 0, beta.F = 1
    CHECK(s2t2_cone_member(0, q(1), q(1), {}).decision == Decision::Member);
    // beta.F = 0 rejects
    auto verdict = s2t2_cone_member(0, q(1), q(0), {});
    CHECK(verdict.decision == Decision::NonMember);
    // e_j = a boundary: beta.(Gamma - E_j) = 0
    verdict = s2t2_cone_member(1, q(2), q(3), {q(2)});
    CHECK(verdict.decision == Decision::NonMember);
    CHECK(verdict.violated == ViolatedCond::ExceptionalIndex);
    CHECK(s2t2_cone_member(1, q(3), q(2), {q(1)}).decision == Decision::Member);
    CHECK(s2t2_cone_member(1, q(3), q(2), {q(-1)}).decision == Decision::NonMember);
}

TEST_CASE("kt/t4/e2 full membership with fiber-swap witnesses") {
    SUBCASE("E(2) with vanishing fiber pairing") {
        ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 0, 0);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[0].a", 2}, {"h[0].b", 3}});
        REQUIRE(pair(f, v, fiber_class(f)) == q(0));
        auto verdict = kt_t4_full_member(m, f, v);
        CHECK(verdict.decision == Decision::Member);
        REQUIRE(verdict.witness);
        ClassVector img = v;
        for (const auto& mv : verdict.witness->moves) img = apply_move(f, mv, img);
        CHECK(!pair(f, img, fiber_class(f)).is_zero());
        CHECK(verify_certificate(f, *verdict.witness));
    }
    SUBCASE("KT: any positive square class is a member") {
        ManifoldDescriptor m = ManifoldDescriptor::kodaira_thurston(1, 0);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[0].a", 1}, {"h[0].b", 1}});
        REQUIRE(square(f, v) > q(0));
        REQUIRE(pair(f, v, fiber_class(f)) == q(0));
        auto verdict = kt_t4_full_member(m, f, v);
        CHECK(verdict.decision == Decision::Member);
        REQUIRE(verdict.witness);
        CHECK(verdict.witness->moves.size() == 1);
        CHECK(verdict.witness->moves[0].kind == MoveKind::KTPhi0);
    }
    SUBCASE("T4 supported on the second pair only") {
        ManifoldDescriptor m = ManifoldDescriptor::torus4(0);
        BlockForm f = build_form(m);
        ClassVector v = cls(f, {{"h[1].a", 1}, {"h[1].b", 1}});  // (b1, b2)
        auto verdict = kt_t4_full_member(m, f, v);
        CHECK(verdict.decision == Decision::Member);
        REQUIRE(verdict.witness);
        ClassVector img = v;
        for (const auto& mv : verdict.witness->moves) img = apply_move(f, mv, img);
        CHECK(!pair(f, img, fiber_class(f)).is_zero());
    }
    SUBCASE("square fails first") {
        ManifoldDescriptor m = ManifoldDescriptor::torus4(0);
        BlockForm f = build_form(m);
        auto verdict = kt_t4_full_member(m, f, zero_class(f));
        CHECK(verdict.decision == Decision::NonMember);
        CHECK(verdict.violated == ViolatedCond::Square);
    }
}

TEST_CASE("kappa = 1 relative agreement with the explicit predicate") {
    std::mt19937 rng(77);
    std::uniform_int_distribution<long> c(-4, 4);
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 2);
    BlockForm f = build_form(m);
    CanonicalClass k;
    k.fiber_multiple = 2;
    k.deltas = {1, -1};
    for (int t = 0; t < 200; ++t) {
        ClassVector v(f.slots);
        for (auto& x : v) x = q(c(rng), 1 + std::abs(c(rng)));
        bool predicate = square(f, v) > q(0) && pair(f, v, fiber_class(f)) > q(0) &&
                         (q(k.deltas[0]) * v[f.blowup_slot(0)]) > q(0) &&
                         (q(k.deltas[1]) * v[f.blowup_slot(1)]) > q(0);
        CHECK((relative_cone_member(m, f, v, k).decision == Decision::Member) == predicate);
    }
}

TEST_CASE("light cone consequence for b+ = 1 forms") {
    // on an E(1) form, pairing zero with F forces a nonpositive square
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(1, 0, 0);
    BlockForm f = build_form(m);
    std::mt19937 rng(90);
    std::uniform_int_distribution<long> c(-6, 6);
    for (int t = 0; t < 500; ++t) {
        ClassVector v(f.slots);
        for (auto& x : v) x = q(c(rng), 1 + std::abs(c(rng)));
        v[f.fiber_g_slot()] = q(0);  // forces pairing with F to vanish
        CHECK(!(square(f, v) > q(0)));
    }
}
