#include "doctest.h"

#include <random>

#include "symcone/lattice.hpp"

using namespace symcone;

namespace {

ClassVector rnd_class(const BlockForm& f, std::mt19937& rng, long d = 0) {
    std::uniform_int_distribution<long> c(-8, 8);
    std::uniform_int_distribution<long> den(1, 3);
    ClassVector v(f.slots);
    for (auto& x : v) {
        mpq_class a(c(rng), den(rng));
        a.canonicalize();
        if (d != 0) {
            mpq_class b(c(rng), den(rng));
            b.canonicalize();
            x = Scalar(a, b, d);
        } else {
            x = Scalar(a);
        }
    }
    return v;
}

}  // namespace

TEST_CASE("descriptor text round trip") {
    for (const char* t : {"E(1,0)", "E(2,0)", "E(2,1)+2bu", "T4", "T4+3bu", "KT(-2)+1bu",
                          "MB[T4,KT(1),B1]+2bu", "MB[KT(2),KT(-1)]"}) {
        ManifoldDescriptor m = ManifoldDescriptor::parse(t);
        CHECK(ManifoldDescriptor::parse(m.str()) == m);
        CHECK(m.str() == t);
    }
    CHECK_THROWS(ManifoldDescriptor::parse("E(0,0)"));
    CHECK_THROWS(ManifoldDescriptor::parse("KT(0)"));
    CHECK_THROWS(ManifoldDescriptor::parse("E(2,1)+bu"));
    CHECK_THROWS(ManifoldDescriptor::parse("Q3"));
}

TEST_CASE("build_form block counts") {
    // E(1): one E8 plus the (F,Gamma|-1) block
    BlockForm f1 = build_form(ManifoldDescriptor::elliptic(1, 0, 0));
    CHECK(f1.e8_count == 1);
    CHECK(f1.h_count == 0);
    CHECK(f1.gamma_sq() == -1);
    CHECK(f1.slots == 10);

    BlockForm f2 = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    CHECK(f2.e8_count == 2);
    CHECK(f2.h_count == 2);
    CHECK(f2.gamma_sq() == -2);

    BlockForm ft = build_form(ManifoldDescriptor::torus4(0));
    CHECK(ft.e8_count == 0);
    CHECK(ft.h_count == 2);
    CHECK(ft.gamma_sq() == 0);
    CHECK(betti_plus(ft) == 3);

    BlockForm fk = build_form(ManifoldDescriptor::kodaira_thurston(1, 0));
    CHECK(fk.h_count == 1);
    CHECK(betti_plus(fk) == 2);

    // E(n,g): n E8, 2(n-1)+2g H, fiber with Gamma^2 = -n, l blow-ups
    BlockForm f32 = build_form(ManifoldDescriptor::elliptic(3, 2, 4));
    CHECK(f32.e8_count == 3);
    CHECK(f32.h_count == 8);
    CHECK(f32.gamma_sq() == -3);
    CHECK(f32.blowup_count == 4);
    CHECK(f32.slots == 3 * 8 + 8 * 2 + 2 + 4);
}

TEST_CASE("pairing on the named generators") {
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    CHECK(pair(f, fiber_class(f), basis_class(f, f.fiber_g_slot())) == Scalar(1));  // F . Gamma
    CHECK(square(f, fiber_class(f)) == Scalar(0));                                  // F^2 = 0
    CHECK(square(f, basis_class(f, f.fiber_g_slot())) == Scalar(-2));               // Gamma^2
    CHECK(square(f, basis_class(f, f.e8_slot(0, 0))) == Scalar(-2));                // D_0^2
    CHECK(pair(f, zero_class(f), basis_class(f, 3)) == Scalar(0));

    // H pair (e,d) = (3,2) squares to 12
    ClassVector h = zero_class(f);
    h[f.h_a_slot(0)] = Scalar(3);
    h[f.h_b_slot(0)] = Scalar(2);
    CHECK(square(f, h) == Scalar(12));

    // c F + g Gamma on E(n, .) squares to 2cg - n g^2
    for (long n : {1L, 2L, 3L}) {
        BlockForm fn = build_form(ManifoldDescriptor::elliptic(n, 0, 0));
        ClassVector v = zero_class(fn);
        v[fn.fiber_c_slot()] = Scalar(5);
        v[fn.fiber_g_slot()] = Scalar(3);
        CHECK(square(fn, v) == Scalar(2 * 5 * 3 - n * 9));
    }
}

TEST_CASE("pair is symmetric and bilinear") {
    std::mt19937 rng(11);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 2));
    for (int i = 0; i < 60; ++i) {
        ClassVector x = rnd_class(f, rng, 2), y = rnd_class(f, rng, 2), z = rnd_class(f, rng, 2);
        CHECK(pair(f, x, y) == pair(f, y, x));
        ClassVector sum(f.slots);
        for (int s = 0; s < f.slots; ++s) sum[s] = y[s] + z[s];
        CHECK(pair(f, x, sum) == pair(f, x, y) + pair(f, x, z));
        Scalar lam = Scalar(mpq_class(3, 2));
        ClassVector scaled(f.slots);
        for (int s = 0; s < f.slots; ++s) scaled[s] = lam * x[s];
        CHECK(pair(f, scaled, y) == lam * pair(f, x, y));
    }
}

TEST_CASE("signature: positive plus negative eigenvalues fill the form") {
    for (const char* t : {"E(1,0)", "E(2,0)", "E(2,1)+2bu", "E(3,2)+1bu", "T4", "KT(1)"}) {
        ManifoldDescriptor m = ManifoldDescriptor::parse(t);
        BlockForm f = build_form(m);
        int pos = betti_plus(f);
        int neg = 0;
        for (const auto& b : f.blocks) {
            switch (b.kind) {
                case BlockKind::E8: neg += 8; break;
                case BlockKind::H: neg += 1; break;
                case BlockKind::Fiber: neg += 1; break;
                case BlockKind::MinusOne: neg += 1; break;
            }
        }
        CHECK(pos + neg == f.slots);
    }
}

TEST_CASE("kodaira dimension and b+ table") {
    CHECK(kodaira_dimension(ManifoldDescriptor::elliptic(1, 0, 3)) == Kodaira::MinusInfinity);
    CHECK(kodaira_dimension(ManifoldDescriptor::elliptic(2, 0, 5)) == Kodaira::Zero);
    CHECK(kodaira_dimension(ManifoldDescriptor::elliptic(2, 1, 0)) == Kodaira::One);
    CHECK(kodaira_dimension(ManifoldDescriptor::torus4(2)) == Kodaira::Zero);
    CHECK(kodaira_dimension(ManifoldDescriptor::kodaira_thurston(3, 0)) == Kodaira::Zero);

    CHECK(betti_plus(ManifoldDescriptor::elliptic(1, 0, 0)) == 1);
    CHECK(betti_plus(ManifoldDescriptor::elliptic(2, 0, 0)) == 3);
    CHECK(betti_plus(ManifoldDescriptor::elliptic(2, 1, 0)) == 5);
    CHECK(betti_plus(ManifoldDescriptor::torus4(0)) == 3);
    CHECK(betti_plus(ManifoldDescriptor::kodaira_thurston(1, 0)) == 2);
    // T^2 x Sigma_g as a g-fold sum of T4 pieces has b+ = 2g+1
    std::vector<BundleComponent> cs(3, BundleComponent{BundlePiece::T4, 0});
    CHECK(betti_plus(ManifoldDescriptor::bundle_sum(cs, 0)) == 7);
}

TEST_CASE("canonical classes") {
    auto ks = canonical_classes(ManifoldDescriptor::elliptic(2, 1, 0));
    REQUIRE(ks.size() == 1);
    CHECK(ks[0].fiber_multiple == 2);  // K = 2F

    ks = canonical_classes(ManifoldDescriptor::elliptic(2, 0, 0));
    REQUIRE(ks.size() == 1);
    CHECK(ks[0].fiber_multiple == 0);

    ks = canonical_classes(ManifoldDescriptor::elliptic(3, 0, 2));
    CHECK(ks.size() == 4);  // F +- E1 +- E2
    for (const auto& k : ks) CHECK(k.fiber_multiple == 1);

    ks = canonical_classes(ManifoldDescriptor::elliptic(1, 0, 1));
    CHECK(ks.size() == 2);
    CHECK(ks[0].fiber_multiple == -1);  // the E(1) convention K = -F
}

TEST_CASE("canonical class pairings: K.F = 0 and delta_i = K.E_i") {
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(3, 1, 2);
    BlockForm f = build_form(m);
    for (const auto& k : canonical_classes(m)) {
        ClassVector kc = k.to_class(f);
        CHECK(pair(f, kc, fiber_class(f)) == Scalar(0));
        for (int i = 0; i < 2; ++i) {
            // delta_i is defined as K.E_i, and -delta_i E_i pairs to -1 with K
            CHECK(pair(f, kc, basis_class(f, f.blowup_slot(i))) == Scalar(k.deltas[i]));
            ClassVector exc = zero_class(f);
            exc[f.blowup_slot(i)] = Scalar(-k.deltas[i]);
            CHECK(pair(f, kc, exc) == Scalar(-1));
        }
    }
}

TEST_CASE("kappa = 1 sign equivalence at the lattice level") {
    // sign(alpha . K_min) = sign(m) * sign(alpha . F) with K_min = m F
    std::mt19937 rng(23);
    ManifoldDescriptor m = ManifoldDescriptor::elliptic(2, 1, 0);
    BlockForm f = build_form(m);
    long mult = 2 * m.genus - 2 + m.n;
    REQUIRE(mult > 0);
    ClassVector kmin = zero_class(f);
    kmin[f.fiber_c_slot()] = Scalar(mult);
    for (int i = 0; i < 100; ++i) {
        ClassVector a = rnd_class(f, rng, 2);
        CHECK(pair(f, a, kmin).sign() == pair(f, a, fiber_class(f)).sign());
    }
}

TEST_CASE("integral multiple detection") {
    ClassVector v = {Scalar(4), Scalar(6), Scalar(0)};
    auto fac = integral_multiple(v);
    REQUIRE(fac);
    CHECK(fac->omega == Scalar(2));
    CHECK(fac->vec == std::vector<mpz_class>{2, 3, 0});

    Scalar r2 = Scalar::sqrt_d(2);
    ClassVector w = {r2 * Scalar(2), r2 * Scalar(3)};
    fac = integral_multiple(w);
    REQUIRE(fac);
    CHECK(fac->omega == r2);

    ClassVector bad = {Scalar(1), r2};
    CHECK_FALSE(integral_multiple(bad));

    ClassVector mixed = {Scalar(mpq_class(1, 2)), Scalar(mpq_class(1, 3))};
    fac = integral_multiple(mixed);
    REQUIRE(fac);
    CHECK(fac->vec == std::vector<mpz_class>{3, 2});
    CHECK(fac->omega == Scalar(mpq_class(1, 6)));
}

TEST_CASE("slot names round trip") {
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 2));
    for (int s = 0; s < f.slots; ++s) CHECK(f.slot_index(f.slot_name(s)) == s);
    CHECK(f.slot_name(f.fiber_c_slot()) == "F");
    CHECK(f.slot_name(f.fiber_g_slot()) == "Gamma");
    CHECK_THROWS(f.slot_index("nope"));
}
