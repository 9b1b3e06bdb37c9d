#include "doctest.h"

#include <random>

#include "symcone/autos.hpp"

using namespace symcone;

namespace {

ClassVector rnd_class(const BlockForm& f, std::mt19937& rng, long d = 2) {
    std::uniform_int_distribution<long> c(-9, 9);
    std::uniform_int_distribution<long> den(1, 3);
    std::uniform_int_distribution<int> coin(0, 2);
    ClassVector v(f.slots);
    for (auto& x : v) {
        mpq_class a(c(rng), den(rng));
        a.canonicalize();
        if (d != 0 && coin(rng) == 0) {
            mpq_class b(c(rng), den(rng));
            b.canonicalize();
            x = Scalar(a, b, d);
        } else {
            x = Scalar(a);
        }
    }
    return v;
}

ClassVector two_h_class(const BlockForm& f, long a1, long b1, long a2, long b2) {
    ClassVector v = zero_class(f);
    v[f.h_a_slot(0)] = Scalar(a1);
    v[f.h_b_slot(0)] = Scalar(b1);
    v[f.h_a_slot(1)] = Scalar(a2);
    v[f.h_b_slot(1)] = Scalar(b2);
    return v;
}

std::vector<long> h_tuple(const BlockForm& f, const ClassVector& v) {
    return {v[f.h_a_slot(0)].to_integer().get_si(), v[f.h_b_slot(0)].to_integer().get_si(),
            v[f.h_a_slot(1)].to_integer().get_si(), v[f.h_b_slot(1)].to_integer().get_si()};
}

}  // namespace

TEST_CASE("the 2H reduction worked example") {
    // (4,13,7,9) reduces to (1,115,0,0) through the printed intermediate
    // states; the double swap in the middle is a pair of commuting
    // reflections.
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    ClassVector v = two_h_class(f, 4, 13, 7, 9);
    using T = std::vector<long>;

    v = apply_move(f, Move::shear_2h(0, 1, 2), v);
    CHECK(h_tuple(f, v) == T{4, 31, -1, 9});
    v = apply_move(f, Move::h_reflect(1), v);
    CHECK(h_tuple(f, v) == T{4, 31, 9, -1});
    v = apply_move(f, Move::shear_2h(0, 1, 2), v);
    CHECK(h_tuple(f, v) == T{4, 29, 1, -1});
    v = apply_move(f, Move::shear_2h(0, 1, 28), v);
    CHECK(h_tuple(f, v) == T{4, 1, -111, -1});
    v = apply_move(f, Move::h_reflect(0), v);
    v = apply_move(f, Move::h_reflect(1), v);
    CHECK(h_tuple(f, v) == T{1, 4, -1, -111});
    v = apply_move(f, Move::shear_2h(0, 1, -1), v);
    CHECK(h_tuple(f, v) == T{1, 115, 0, -111});
    v = apply_move(f, Move::h_reflect(1), v);
    CHECK(h_tuple(f, v) == T{1, 115, -111, 0});
    v = apply_move(f, Move::shear_2h(0, 1, -111), v);
    CHECK(h_tuple(f, v) == T{1, 115, 0, 0});

    CHECK(square(f, v) == square(f, two_h_class(f, 4, 13, 7, 9)));
    CHECK(square(f, v) == Scalar(230));
}

TEST_CASE("reflections: involution, legality") {
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 0, 1));
    std::mt19937 rng(3);
    // S = T - R on the first H block has square -2
    ClassVector s = zero_class(f);
    s[f.h_a_slot(0)] = Scalar(-1);
    s[f.h_b_slot(0)] = Scalar(1);
    REQUIRE(square(f, s) == Scalar(-2));
    Move mv = Move::reflect(s);
    for (int i = 0; i < 20; ++i) {
        ClassVector x = rnd_class(f, rng);
        CHECK(apply_move(f, mv, apply_move(f, mv, x)) == x);
    }
    // reflection on B - A swaps (a, b) exactly like HReflect
    ClassVector x = rnd_class(f, rng);
    CHECK(apply_move(f, mv, x) == apply_move(f, Move::h_reflect(0), x));

    // support touching the fiber block is rejected
    ClassVector bad = zero_class(f);
    bad[f.fiber_g_slot()] = Scalar(1);
    bad[f.e8_slot(0, 0)] = Scalar(1);
    CHECK_THROWS_AS(apply_move(f, Move::reflect(bad), x), apply_error);
    // wrong square rejected
    ClassVector sq0 = zero_class(f);
    sq0[f.h_a_slot(0)] = Scalar(1);
    CHECK_THROWS_AS(apply_move(f, Move::reflect(sq0), x), apply_error);
    // E_i - E_j style support over blow-ups is fine
    ClassVector eij = zero_class(f);
    eij[f.blowup_slot(0)] = Scalar(1);
    eij[f.e8_slot(0, 2)] = Scalar(1);
    CHECK(square(f, eij) == Scalar(-3));  // just checking arithmetic here
}

TEST_CASE("move inverses undo the action") {
    std::mt19937 rng(5);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 1));
    std::vector<Move> moves = {
        Move::h_reflect(1),
        Move::q_map(0, 2),
        Move::q_map_single(3),
        Move::interchange(0, 3),
        Move::shear_2h(1, 2, 5),
        Move::h_fiber(2, -3),
        Move::e8h_auto(0, 1, {1, -2, 0, 3, 0, 0, 1, -1}),
        Move::e8h_case(1, 2, E8Case::C1a, 4),
        Move::e8h_case(1, 2, E8Case::C2c1, 0),
        Move::e8h_case(0, 0, E8Case::C3c2, 3),
    };
    for (const auto& mv : moves) {
        for (int i = 0; i < 10; ++i) {
            ClassVector x = rnd_class(f, rng);
            CHECK(apply_move_inverse(f, mv, apply_move(f, mv, x)) == x);
            CHECK(apply_move(f, mv, apply_move_inverse(f, mv, x)) == x);
        }
    }
    BlockForm e2 = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    for (const auto& mv : {Move::e2_base_change(0, 3), Move::gamma_reflect()}) {
        ClassVector x = rnd_class(e2, rng);
        CHECK(apply_move_inverse(e2, mv, apply_move(e2, mv, x)) == x);
    }
    BlockForm t4 = build_form(ManifoldDescriptor::torus4(0));
    for (int w = 1; w <= 4; ++w) {
        Move mv = Move::t4_map(w, 7);
        ClassVector x = rnd_class(t4, rng);
        CHECK(apply_move_inverse(t4, mv, apply_move(t4, mv, x)) == x);
    }
    BlockForm kt = build_form(ManifoldDescriptor::kodaira_thurston(2, 0));
    for (const auto& mv : {Move::kt_phi0(), Move::kt_phi1(4), Move::kt_phi2(-2)}) {
        ClassVector x = rnd_class(kt, rng);
        CHECK(apply_move_inverse(kt, mv, apply_move(kt, mv, x)) == x);
    }
}

TEST_CASE("e8h action") {
    std::array<Scalar, 8> k{};
    std::array<mpz_class, 8> r{};
    // k = 0, b = 1, r = e0: k' = (2,0,...,0), a' = a + 4
    r[0] = 1;
    auto [k1, a1] = e8h_action(k, Scalar(10), Scalar(1), r);
    CHECK(k1[0] == Scalar(2));
    CHECK(a1 == Scalar(14));
    // r = 0 is the identity
    auto [k2, a2] = e8h_action(k1, a1, Scalar(1), std::array<mpz_class, 8>{});
    CHECK(k2 == k1);
    CHECK(a2 == a1);
    // k = (2,0,..), b = 1, r = -e0 undoes the first map: a' = a - 4.
    // (Square preservation forces the sign: 2a'b = 2ab + k^T E8 k.)
    r[0] = -1;
    auto [k3, a3] = e8h_action(k1, a1, Scalar(1), r);
    CHECK(k3 == k);
    CHECK(a3 == Scalar(10));
}

TEST_CASE("e8h auto preserves the form for random r") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<long> c(-4, 4);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    for (int t = 0; t < 50; ++t) {
        std::array<mpz_class, 8> r;
        for (auto& x : r) x = c(rng);
        Move mv = Move::e8h_auto(0, 2, r);
        ClassVector x = rnd_class(f, rng), y = rnd_class(f, rng);
        CHECK(pair(f, apply_move(f, mv, x), apply_move(f, mv, y)) == pair(f, x, y));
    }
}

TEST_CASE("the E8 case catalog matches the displayed composites") {
    // (1c1) = (1b) after (1a), and the composites shift k_i by -2b / +2b
    std::mt19937 rng(29);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    for (auto [ca, cb, cc1, cc2] :
         {std::tuple{E8Case::C1a, E8Case::C1b, E8Case::C1c1, E8Case::C1c2},
          std::tuple{E8Case::C2a, E8Case::C2b, E8Case::C2c1, E8Case::C2c2},
          std::tuple{E8Case::C3a, E8Case::C3b, E8Case::C3c1, E8Case::C3c2}}) {
        int idx = ca == E8Case::C1a ? 4 : ca == E8Case::C2a ? 0 : 3;
        for (int t = 0; t < 10; ++t) {
            ClassVector x = rnd_class(f, rng);
            ClassVector composite =
                apply_move(f, Move::e8h_case(0, 1, cb, idx),
                           apply_move(f, Move::e8h_case(0, 1, ca, idx), x));
            ClassVector direct = apply_move(f, Move::e8h_case(0, 1, cc1, idx), x);
            CHECK(composite == direct);
            ClassVector composite2 =
                apply_move(f, Move::e8h_case(0, 1, ca, idx),
                           apply_move(f, Move::e8h_case(0, 1, cb, idx), x));
            CHECK(composite2 == apply_move(f, Move::e8h_case(0, 1, cc2, idx), x));
            // the c-maps shift k_i by exactly -2b and +2b
            Scalar b = x[f.h_b_slot(1)];
            CHECK(direct[f.e8_slot(0, idx)] == x[f.e8_slot(0, idx)] - Scalar(2) * b);
            CHECK(composite2[f.e8_slot(0, idx)] == x[f.e8_slot(0, idx)] + Scalar(2) * b);
        }
    }
    CHECK_THROWS_AS(
        apply_move(f, Move::e8h_case(0, 1, E8Case::C1a, 0), zero_class(f)), apply_error);
    CHECK_THROWS_AS(
        apply_move(f, Move::e8h_case(0, 1, E8Case::C3a, 2), zero_class(f)), apply_error);
}

TEST_CASE("interchange has order 4, reflections are involutions") {
    std::mt19937 rng(31);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    Move ic = Move::interchange(1, 2);
    for (int t = 0; t < 10; ++t) {
        ClassVector x = rnd_class(f, rng);
        ClassVector y = x;
        for (int i = 0; i < 4; ++i) y = apply_move(f, ic, y);
        CHECK(y == x);
        ClassVector y2 = apply_move(f, ic, apply_move(f, ic, x));
        CHECK(y2 == apply_move(f, Move::q_map(1, 2), x));
        CHECK(apply_move(f, Move::h_reflect(0), apply_move(f, Move::h_reflect(0), x)) == x);
    }
}

TEST_CASE("kt phi0 is an involution with the displayed action") {
    BlockForm kt = build_form(ManifoldDescriptor::kodaira_thurston(1, 0));
    ClassVector x = zero_class(kt);
    x[kt.fiber_c_slot()] = Scalar(3);
    x[kt.fiber_g_slot()] = Scalar(5);
    x[kt.h_a_slot(0)] = Scalar(7);
    x[kt.h_b_slot(0)] = Scalar(11);
    ClassVector y = apply_move(kt, Move::kt_phi0(), x);
    CHECK(y[kt.fiber_c_slot()] == Scalar(-11));
    CHECK(y[kt.fiber_g_slot()] == Scalar(-7));
    CHECK(y[kt.h_a_slot(0)] == Scalar(-5));
    CHECK(y[kt.h_b_slot(0)] == Scalar(-3));
    CHECK(apply_move(kt, Move::kt_phi0(), y) == x);
}

TEST_CASE("fiber images match the stated classes") {
    BlockForm t4 = build_form(ManifoldDescriptor::torus4(0));
    auto img = [&](const BlockForm& f, const Move& mv) { return apply(f, mv, zero_class(f)).fiber_image; };

    ClassVector want = fiber_class(t4);
    want[t4.h_b_slot(0)] = Scalar(-5);  // F - A A2 with A = 5
    CHECK(img(t4, Move::t4_map(3, 5)) == want);

    want = fiber_class(t4);
    want[t4.h_a_slot(0)] = Scalar(5);  // F + A A1
    CHECK(img(t4, Move::t4_map(4, 5)) == want);

    BlockForm kt = build_form(ManifoldDescriptor::kodaira_thurston(1, 0));
    want = fiber_class(kt);
    want[kt.h_b_slot(0)] = Scalar(7);  // F + N A2
    CHECK(img(kt, Move::kt_phi1(7)) == want);

    // fiber preserving moves return F itself
    CHECK(img(t4, Move::t4_map(1, 3)) == fiber_class(t4));
    CHECK(img(t4, Move::t4_map(2, 3)) == fiber_class(t4));
    CHECK(img(kt, Move::kt_phi2(4)) == fiber_class(kt));
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    CHECK(img(f, Move::h_fiber(0, 9)) == fiber_class(f));
    CHECK(img(f, Move::shear_2h(0, 1, 2)) == fiber_class(f));

    BlockForm e2 = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    want = fiber_class(e2);
    want[e2.h_a_slot(0)] = Scalar(-4);  // F - i R
    CHECK(img(e2, Move::e2_base_change(0, 4)) == want);
    want = fiber_class(e2);
    want[e2.fiber_g_slot()] = Scalar(1);  // F + Gamma = W
    CHECK(img(e2, Move::gamma_reflect()) == want);
}

TEST_CASE("fiber transport pairs consistently with the moved class") {
    // pair(alpha, F_w) = pair(word(alpha), F) for random words
    std::mt19937 rng(41);
    BlockForm t4 = build_form(ManifoldDescriptor::torus4(0));
    std::uniform_int_distribution<int> pick(0, 5);
    std::uniform_int_distribution<long> par(-3, 3);
    for (int t = 0; t < 40; ++t) {
        std::vector<Move> word;
        for (int j = 0; j < 5; ++j) {
            switch (pick(rng)) {
                case 0: word.push_back(Move::t4_map(1, par(rng))); break;
                case 1: word.push_back(Move::t4_map(2, par(rng))); break;
                case 2: word.push_back(Move::t4_map(3, par(rng))); break;
                case 3: word.push_back(Move::t4_map(4, par(rng))); break;
                case 4: word.push_back(Move::interchange(0, 1)); break;
                default: word.push_back(Move::h_reflect(0)); break;
            }
        }
        ClassVector alpha = rnd_class(t4, rng);
        ClassVector moved = alpha;
        for (const auto& mv : word) moved = apply_move(t4, mv, moved);
        ClassVector fw = cumulative_fiber(t4, word, word.size());
        CHECK(pair(t4, alpha, fw) == pair(t4, moved, fiber_class(t4)));
    }
}

TEST_CASE("spinor norms") {
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    CHECK(spinor_norm(f, Move::q_map_single(0)) == -1);
    CHECK(spinor_norm(f, Move::q_map(0, 1)) == +1);
    CHECK(spinor_norm(f, Move::h_reflect(2)) == +1);
    CHECK(spinor_norm(f, Move::interchange(0, 3)) == +1);
    CHECK(spinor_norm(f, Move::shear_2h(0, 1, 7)) == +1);
    CHECK(spinor_norm(f, Move::h_fiber(1, 3)) == +1);
    CHECK(spinor_norm(f, Move::e8h_auto(0, 0, {1, 0, -2, 0, 0, 3, 0, 0})) == +1);
    // a -2 reflection fixing a maximal positive subspace
    ClassVector s = zero_class(f);
    s[f.e8_slot(0, 0)] = Scalar(1);
    CHECK(spinor_norm(f, Move::reflect(s)) == +1);
    ClassVector s2 = zero_class(f);
    s2[f.h_a_slot(0)] = Scalar(-1);
    s2[f.h_b_slot(0)] = Scalar(1);
    CHECK(spinor_norm(f, Move::reflect(s2)) == +1);

    BlockForm e2 = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    CHECK(spinor_norm(e2, Move::gamma_reflect()) == +1);
    CHECK(spinor_norm(e2, Move::e2_base_change(0, 2)) == +1);
}

TEST_CASE("spinor norm is multiplicative") {
    std::mt19937 rng(43);
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    std::vector<Move> pool = {Move::q_map_single(0), Move::q_map(0, 1), Move::h_reflect(1),
                              Move::interchange(0, 2), Move::shear_2h(2, 3, 3),
                              Move::h_fiber(0, 2),     Move::q_map_single(3)};
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (int t = 0; t < 100; ++t) {
        Move m1 = pool[pick(rng)], m2 = pool[pick(rng)];
        int n1 = spinor_norm(f, m1), n2 = spinor_norm(f, m2);
        CHECK(spinor_norm(f, std::vector<Move>{m1, m2}) == n1 * n2);
    }
}

TEST_CASE("certificates replay and reject tampering") {
    BlockForm f = build_form(ManifoldDescriptor::elliptic(2, 1, 0));
    ClassVector input = two_h_class(f, 4, 13, 7, 9);
    std::vector<Move> word = {Move::shear_2h(0, 1, 2), Move::h_reflect(1),
                              Move::shear_2h(0, 1, 2), Move::shear_2h(0, 1, 28)};
    Certificate cert = make_certificate(f, "E(2,1)", 0, input, word);
    std::string why;
    CHECK(verify_certificate(f, cert, &why));

    // empty certificate with input = output
    Certificate empty = make_certificate(f, "E(2,1)", 0, input, {});
    CHECK(verify_certificate(f, empty));

    // perturb the claimed output
    Certificate bad = cert;
    bad.output[f.h_a_slot(0)] += Scalar(1);
    CHECK_FALSE(verify_certificate(f, bad, &why));
}

TEST_CASE("certificate text round trip") {
    BlockForm e2 = build_form(ManifoldDescriptor::elliptic(2, 0, 0));
    ClassVector input = zero_class(e2);
    input[e2.fiber_c_slot()] = Scalar(5);
    input[e2.fiber_g_slot()] = Scalar(2);
    input[e2.h_a_slot(0)] = Scalar(mpq_class(1, 2), mpq_class(1, 3), 2);
    input[e2.h_b_slot(0)] = Scalar(3);
    std::vector<Move> word = {Move::e2_base_change(0, 1), Move::gamma_reflect(),
                              Move::h_fiber(0, -2),
                              Move::e8h_auto(0, 1, {1, 0, 0, -1, 0, 2, 0, 0}),
                              Move::e8h_case(1, 0, E8Case::C2c1, 7)};
    Certificate cert = make_certificate(e2, "E(2,0)", 2, input, word);
    cert.manifest_hash = fnv1a64("demo");
    std::string text = cert.serialize();
    Certificate back = Certificate::deserialize(text);
    CHECK(back.input == cert.input);
    CHECK(back.output == cert.output);
    CHECK(back.manifest_hash == cert.manifest_hash);
    CHECK(back.moves.size() == cert.moves.size());
    CHECK(back.serialize() == text);
    CHECK(verify_certificate(e2, back));
}

TEST_CASE("e1 moves and certificates") {
    std::vector<Scalar> v = {Scalar(3), Scalar(1), Scalar(2), Scalar(1), Scalar(1),
                             Scalar(1), Scalar(1), Scalar(1), Scalar(1), Scalar(1)};
    auto w = apply_e1_move(Move::e1_swap(1, 2), v);
    CHECK(w[1] == Scalar(2));
    CHECK(w[2] == Scalar(1));
    CHECK(e1_pair(v, v) == e1_pair(w, w));
    auto cr = apply_e1_move(Move::e1_cremona(), w);
    // a' = 2a - b1 - b2 - b3 = 6 - 4 = 2
    CHECK(cr[0] == Scalar(2));
    CHECK(e1_pair(cr, cr) == e1_pair(v, v));

    Certificate cert;
    cert.descriptor = "E(1,0)";
    cert.basis = CertBasis::E1Standard;
    cert.input = v;
    cert.moves = {Move::e1_swap(1, 2), Move::e1_cremona()};
    cert.output = cr;
    CHECK(verify_e1_certificate(cert));
    std::string text = cert.serialize();
    Certificate back = Certificate::deserialize(text);
    CHECK(back.input == cert.input);
    CHECK(verify_e1_certificate(back));
}
