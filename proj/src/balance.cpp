#include "symcone/balance.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace symcone {

BalanceContext BalanceContext::make(const ManifoldDescriptor& m, long field_d) {
    BalanceContext ctx;
    ctx.descriptor = m;
    ctx.form = build_form(m);
    ctx.field_d = field_d;
    return ctx;
}

namespace {

struct cap_exceeded : std::runtime_error {
    explicit cap_exceeded(const std::string& m) : std::runtime_error(m) {}
};

/// Move word under construction, applied eagerly to the working class.
struct Sess {
    const BalanceContext& ctx;
    ClassVector cur;
    std::vector<Move> word;
    long budget;

    Sess(const BalanceContext& c, ClassVector start)
        : ctx(c), cur(std::move(start)), budget(c.stage_cap * 256 + 16384) {}

    const BlockForm& f() const { return ctx.form; }

    void push(Move mv) {
        if (--budget < 0) throw cap_exceeded("move budget exhausted");
        cur = apply_move(ctx.form, mv, cur);
        word.push_back(std::move(mv));
    }

    Scalar a(int h) const { return cur[f().h_a_slot(h)]; }
    Scalar b(int h) const { return cur[f().h_b_slot(h)]; }
    Scalar fc() const { return cur[f().fiber_c_slot()]; }
    Scalar fg() const { return cur[f().fiber_g_slot()]; }
    Scalar e8k(int e, int i) const { return cur[f().e8_slot(e, i)]; }

    // a2 += t*a1 (junk flows to b1)
    void shift_a2(int h1, int h2, const mpz_class& t) {
        if (sgn(t) == 0) return;
        push(Move::shear_2h(h1, h2, -t));
    }
    // b2 += t*a1 (junk flows to b1)
    void shift_b2(int h1, int h2, const mpz_class& t) {
        if (sgn(t) == 0) return;
        push(Move::h_reflect(h2));
        push(Move::shear_2h(h1, h2, -t));
        push(Move::h_reflect(h2));
    }
    // b(h) += t * gGamma (junk flows to the fiber coefficient c)
    void shift_bh_by_g(int h, const mpz_class& t) {
        if (sgn(t) == 0) return;
        push(Move::h_fiber(h, t));
    }
    // a(h) += t * gGamma
    void shift_ah_by_g(int h, const mpz_class& t) {
        if (sgn(t) == 0) return;
        push(Move::h_reflect(h));
        push(Move::h_fiber(h, t));
        push(Move::h_reflect(h));
    }
    // gW -= t*b(h) on an E(2) form (junk flows to a(h)); changes the fiber
    void shift_g_by_bh(int h, const mpz_class& t) {
        if (sgn(t) == 0) return;
        push(Move::e2_base_change(h, t));
    }

    ClassVector e8_support(int e, int i, int h_or_minus1) const {
        ClassVector s = zero_class(f());
        s[f().e8_slot(e, i)] = Scalar(1);
        if (h_or_minus1 >= 0) s[f().h_a_slot(h_or_minus1)] = Scalar(1);
        return s;
    }

    // Eichler-style transvection: k_i -= b(h) (two -2 reflections).
    void transvect_down(int e, int i, int h) {
        push(Move::reflect(e8_support(e, i, h)));
        push(Move::reflect(e8_support(e, i, -1)));
    }
    // k_i += b(h)
    void transvect_up(int e, int i, int h) {
        push(Move::reflect(e8_support(e, i, -1)));
        push(Move::reflect(e8_support(e, i, h)));
    }
};

Scalar scalar_min(const Scalar& x, const Scalar& y) { return x < y ? x : y; }

Scalar e8_row(const Sess& s, int e, int i) {
    Scalar acc;
    for (int j = 0; j < 8; ++j)
        if (kE8Gram[i][j] != 0) acc += Scalar(kE8Gram[i][j]) * s.e8k(e, j);
    return acc;
}

bool e8_zero(const Sess& s, int e) {
    for (int i = 0; i < 8; ++i)
        if (!s.e8k(e, i).is_zero()) return false;
    return true;
}

bool pair_zero(const Sess& s, int h) { return s.a(h).is_zero() && s.b(h).is_zero(); }

ClassVector restriction(const Sess& s, const std::vector<int>& e8s, const std::vector<int>& hs) {
    ClassVector out;
    for (int e : e8s)
        for (int i = 0; i < 8; ++i) out.push_back(s.e8k(e, i));
    for (int h : hs) {
        out.push_back(s.a(h));
        out.push_back(s.b(h));
    }
    return out;
}

// --- the Euclidean stage engine on two H blocks ------------------------------
//
// Stage layout: pivot at h1.a, junk at h1.b, the pair being reduced at h2.
// A stage reduces (h2.a, h2.b) modulo the pivot; between stages the reduced
// nonzero residue rotates into the pivot slot, halving the pivot.

void arrange_pivot(Sess& s, int h1, int h2, int pos) {
    switch (pos) {
        case 0: break;
        case 1: s.push(Move::h_reflect(h1)); break;
        case 2: s.push(Move::interchange(h1, h2)); break;
        case 3:
            s.push(Move::h_reflect(h2));
            s.push(Move::interchange(h1, h2));
            break;
        default: assert(false);
    }
}

int smallest_nonzero_pos(const Sess& s, int h1, int h2) {
    Scalar vals[4] = {s.a(h1), s.b(h1), s.a(h2), s.b(h2)};
    int best = -1;
    for (int p = 0; p < 4; ++p) {
        if (vals[p].is_zero()) continue;
        if (best < 0 || vals[p].abs() < vals[best].abs()) best = p;
    }
    return best;
}

// Reduce the h2 pair modulo the pivot at h1.a. With sign_rel and a surviving
// b2, the a2 residue lands in the window sign(b2)*(0, |pivot|].
void reduce_pair2(Sess& s, int h1, int h2, bool sign_rel) {
    Scalar p = s.a(h1);
    assert(!p.is_zero());
    s.shift_b2(h1, h2, minimizing_shear_param(s.b(h2), p));
    Scalar b2 = s.b(h2);
    if (sign_rel && !b2.is_zero()) {
        s.shift_a2(h1, h2, signed_window_shear_param(s.a(h2), p, b2.sign()));
    } else {
        s.shift_a2(h1, h2, minimizing_shear_param(s.a(h2), p));
        if (s.b(h2).is_zero() && !s.a(h2).is_zero()) s.push(Move::h_reflect(h2));
    }
}

void rotate_pivot(Sess& s, int h1, int h2) {
    s.push(Move::interchange(h1, h2));
    s.push(Move::h_reflect(h1));
}

// The (a,b,0,0) step: pair2 dead, junk/pivot irrational. Revives pair2 with a
// halved pivot at h1.a.
void revive_step(Sess& s, int h1, int h2) {
    if (s.a(h1).abs() > s.b(h1).abs()) s.push(Move::h_reflect(h1));
    Scalar p = s.a(h1);
    assert(!p.is_zero());
    s.shift_b2(h1, h2, 1);  // (p, J, 0, p)
    mpz_class t = minimizing_shear_param(s.b(h1), s.b(h2));
    s.push(Move::shear_2h(h1, h2, t));  // (p, J + t p, -t p, p)
    assert(!s.b(h1).is_zero());
    s.push(Move::h_reflect(h1));
    s.push(Move::h_reflect(h2));  // (J', p, p, -t p)
}

// k halving stages; the restriction must not be a multiple of an integral
// class. Ends with (junk, pivot_k, r3, r4), pivot in the h1.b slot.
void euclid_stages(Sess& s, int h1, int h2, int k, bool sign_rel_last) {
    int pos = smallest_nonzero_pos(s, h1, h2);
    assert(pos >= 0);
    arrange_pivot(s, h1, h2, pos);
    for (int stage = 1; stage <= k; ++stage) {
        if (--s.budget < 0) throw cap_exceeded("stage budget exhausted");
        if (pair_zero(s, h2)) revive_step(s, h1, h2);
        else if (stage > 1) rotate_pivot(s, h1, h2);
        reduce_pair2(s, h1, h2, sign_rel_last && stage == k);
    }
    s.push(Move::h_reflect(h1));
}

// --- integer Euclid (scalar multiples of integral classes) -------------------

// Stages until the pair at h2 is exactly (0,0); content collects at h1.
void euclid_till_dead(Sess& s, int h1, int h2) {
    while (!pair_zero(s, h2)) {
        if (--s.budget < 0) throw cap_exceeded("integer euclid budget exhausted");
        int pos = smallest_nonzero_pos(s, h1, h2);
        if (pos < 0) return;
        arrange_pivot(s, h1, h2, pos);
        if (pair_zero(s, h2)) break;
        reduce_pair2(s, h1, h2, false);
        if (pair_zero(s, h2)) break;
        rotate_pivot(s, h1, h2);
    }
}

// Integer Euclid descending the pivot to +-gcd of the four entries; ends with
// the h2 pair dead, pivot at h1.a dividing the junk at h1.b.
void euclid_to_gcd(Sess& s, int h1, int h2) {
    euclid_till_dead(s, h1, h2);
    while (true) {
        if (--s.budget < 0) throw cap_exceeded("integer euclid budget exhausted");
        if (!s.b(h1).is_zero() &&
            (s.a(h1).is_zero() || s.a(h1).abs() > s.b(h1).abs()))
            s.push(Move::h_reflect(h1));
        Scalar p = s.a(h1), j = s.b(h1);
        if (p.is_zero()) return;  // whole 2H content is zero
        if (j.is_zero() || (j / p).is_integer()) return;
        // revive with the residue as the next pivot
        s.shift_b2(h1, h2, 1);
        mpz_class t = minimizing_shear_param(s.b(h1), s.b(h2));
        s.push(Move::shear_2h(h1, h2, t));
        s.push(Move::h_reflect(h1));
        s.push(Move::h_reflect(h2));
        euclid_till_dead(s, h1, h2);
    }
}

// --- E8 clearing via transvections -------------------------------------------

// Clears the E8 block e using the (h1, h2) pairs; assumes the restriction to
// (e, h1, h2) is omega * (primitive integral).
void clear_e8_block(Sess& s, int e, int h1, int h2, const Scalar& omega) {
    auto unit_in_b = [&]() {
        return !s.b(h1).is_zero() && (s.b(h1) / omega).abs() == Scalar(1);
    };
    long guard = 512;
    while (!e8_zero(s, e)) {
        if (--guard < 0) throw cap_exceeded("E8 clearing did not converge");
        // 1. drive the H gcd down until a unit sits in the h1.b slot
        long inject_guard = 128;
        while (true) {
            if (--inject_guard < 0) throw cap_exceeded("E8 gcd injection did not converge");
            euclid_to_gcd(s, h1, h2);
            if (!s.a(h1).is_zero()) s.push(Move::h_reflect(h1));  // pivot -> b slot
            if (unit_in_b()) break;
            Scalar pivot = s.b(h1);
            int pick = -1;
            for (int i = 0; i < 8 && pick < 0; ++i) {
                Scalar row = e8_row(s, e, i);
                if (row.is_zero()) continue;
                if (pivot.is_zero() || !(row / pivot).is_integer()) pick = i;
            }
            if (pick >= 0) {
                // reflection on D_pick + A(h2): injects the row value into h2.a
                s.push(Move::reflect(s.e8_support(e, pick, h2)));
                continue;
            }
            if (pivot.is_zero()) throw cap_exceeded("E8 clearing with no usable content");
            // every row divisible by the pivot: primitivity forces a unit
            if (!unit_in_b()) throw cap_exceeded("E8 gcd did not descend to a unit");
            break;
        }
        // 2. reduce k modulo 2b (residues in {-b, 0, b} of the model)
        Scalar b = s.b(h1);
        std::array<mpz_class, 8> r;
        bool any = false;
        for (int i = 0; i < 8; ++i) {
            r[i] = minimizing_shear_param(s.e8k(e, i), Scalar(2) * b);
            if (sgn(r[i]) != 0) any = true;
        }
        if (any) s.push(Move::e8h_auto(e, h1, r));
        // 3. clear the unit residues by transvections
        for (int i = 0; i < 8; ++i) {
            Scalar ki = s.e8k(e, i);
            if (ki.is_zero()) continue;
            Scalar steps = ki / b;
            if (!steps.is_integer()) throw cap_exceeded("E8 residue is not a unit multiple");
            mpz_class n = steps.to_integer();
            for (mpz_class cnt = 0; cnt < abs(n); ++cnt) {
                if (--s.budget < 0) throw cap_exceeded("transvection budget exhausted");
                if (sgn(n) > 0) s.transvect_down(e, i, h1);
                else s.transvect_up(e, i, h1);
            }
        }
    }
}

BalanceReport finish(const BalanceContext& ctx, const ClassVector& input, const Sess& s,
                     BalanceCase tag) {
    BalanceReport rep;
    rep.output = s.cur;
    rep.cert = make_certificate(ctx.form, ctx.descriptor.str(), ctx.field_d, input, s.word);
    rep.tag = tag;
    return rep;
}

BalanceReport cap_report(const BalanceContext& ctx, const ClassVector& input, const Sess& s,
                         const std::string& why) {
    BalanceReport rep = finish(ctx, input, s, BalanceCase::CapExceeded);
    rep.ok = false;
    rep.note = why;
    return rep;
}

}  // namespace

std::pair<int, int> rim_blocks_of_split(const ManifoldDescriptor& m, int split) {
    if (m.kind != ManifoldKind::EllipticPos)
        throw std::invalid_argument("splits are defined for E(n,g) descriptors only");
    if (m.n < 2) return {-1, -1};  // no rim pairs in E(1,g) sums
    if (split < 1 || split > m.n - 1)
        throw std::invalid_argument("split position must lie in [1, n-1]");
    return {2 * (split - 1), 2 * (split - 1) + 1};
}

// ---------------------------------------------------------------------------

BalanceReport integral_concentrate(const BalanceContext& ctx, const ClassVector& alpha,
                                   const std::vector<int>& e8_blocks,
                                   const std::vector<int>& h_blocks, int target_h) {
    if (h_blocks.size() < 2)
        throw std::invalid_argument("integral_concentrate needs >= 2 H blocks");
    if (std::find(h_blocks.begin(), h_blocks.end(), target_h) == h_blocks.end())
        throw std::invalid_argument("target H block must be among the designated blocks");
    Sess s(ctx, alpha);
    auto rest = restriction(s, e8_blocks, h_blocks);
    auto factor = integral_multiple(rest);
    if (!factor)
        throw std::invalid_argument(
            "integral_concentrate: restriction is not a multiple of an integral class");
    bool all_zero = true;
    for (const auto& v : rest)
        if (!v.is_zero()) all_zero = false;

    bool already = all_zero;
    if (!all_zero) {
        already = true;
        for (int e : e8_blocks)
            if (!e8_zero(s, e)) already = false;
        for (int h : h_blocks)
            if (h != target_h && !pair_zero(s, h)) already = false;
    }
    if (already) {
        BalanceReport rep = finish(ctx, alpha, s, BalanceCase::AlreadyBalanced);
        rep.note = "already concentrated";
        return rep;
    }

    int spare = -1;
    for (int h : h_blocks)
        if (h != target_h) { spare = h; break; }

    try {
        for (int h : h_blocks) {
            if (h == target_h || h == spare) continue;
            if (!pair_zero(s, h)) euclid_till_dead(s, spare, h);
        }
        for (int e : e8_blocks) {
            if (e8_zero(s, e)) continue;
            clear_e8_block(s, e, target_h, spare, factor->omega);
        }
        if (!pair_zero(s, spare)) euclid_till_dead(s, target_h, spare);
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }
    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::IntegralCollapse);
    rep.bounds.emplace_back("target.a", s.a(target_h));
    rep.bounds.emplace_back("target.b", s.b(target_h));
    return rep;
}

BalanceReport reduce_2h(const BalanceContext& ctx, const ClassVector& alpha, int h1, int h2,
                        int k, bool sign_relevant) {
    if (k < 1) throw std::invalid_argument("reduce_2h: k >= 1 required");
    if (h1 == h2) throw std::invalid_argument("reduce_2h: needs two distinct H blocks");
    Sess s(ctx, alpha);
    auto rest = restriction(s, {}, {h1, h2});
    bool all_zero = true;
    for (const auto& v : rest)
        if (!v.is_zero()) all_zero = false;
    if (all_zero) throw std::invalid_argument("reduce_2h: the 2H restriction is zero");

    if (integral_multiple(rest)) return integral_concentrate(ctx, alpha, {}, {h1, h2}, h1);

    Scalar d = alpha[ctx.form.h_b_slot(h1)].abs();
    bool d_degenerate = d.is_zero();
    if (d_degenerate) {
        int pos = smallest_nonzero_pos(s, h1, h2);
        Scalar vals[4] = {s.a(h1), s.b(h1), s.a(h2), s.b(h2)};
        d = vals[pos].abs();
    }

    if (pair_zero(s, h2) && k <= 1) {
        BalanceReport rep = finish(ctx, alpha, s, BalanceCase::AlreadyBalanced);
        rep.note = "second pair already dead";
        return rep;
    }
    try {
        euclid_stages(s, h1, h2, k, sign_relevant);
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }
    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::Concentrated);
    if (d_degenerate) rep.note = "input b1 is zero; bound reference is the smallest nonzero entry";
    rep.bounds.emplace_back("b1", s.b(h1).abs());
    rep.bounds.emplace_back("a2", s.a(h2).abs());
    rep.bounds.emplace_back("b2", s.b(h2).abs());
    rep.bounds.emplace_back("d", d);
    return rep;
}

// ---------------------------------------------------------------------------
// volume concentration on E8 + 2H + (F, Gamma)
// ---------------------------------------------------------------------------

namespace {

// Windows around 0 driven by the h block's b coefficient:
// k_0 in (-2|b|, 0], k_i in [0, 2|b|) for i >= 1.
void e8_window(Sess& s, int e, int h) {
    Scalar b = s.b(h);
    assert(!b.is_zero());
    Scalar two_b = Scalar(2) * b;
    std::array<mpz_class, 8> r;
    bool any = false;
    for (int i = 0; i < 8; ++i) {
        r[i] = minimizing_shear_param(s.e8k(e, i), two_b);
        if (sgn(r[i]) != 0) any = true;
    }
    if (any) s.push(Move::e8h_auto(e, h, r));
    std::array<mpz_class, 8> fix{};
    bool anyfix = false;
    for (int i = 0; i < 8; ++i) {
        Scalar ki = s.e8k(e, i);
        int want = i == 0 ? -1 : 1;
        if (ki.is_zero() || ki.sign() == want) continue;
        fix[i] = want * (two_b.sign() > 0 ? 1 : -1);
        anyfix = true;
    }
    if (anyfix) s.push(Move::e8h_auto(e, h, fix));
}

bool concentrate_case1_bounds(const Sess& s, int e, int h1, int h2, const Scalar& eps) {
    for (int h : {h1, h2}) {
        Scalar prod = Scalar(2) * s.a(h) * s.b(h);
        bool dead = s.a(h).is_zero() && s.b(h).is_zero();
        if (!dead && !(prod > Scalar(0) && prod < eps)) return false;
    }
    Scalar sq;
    for (int i = 0; i < 8; ++i) {
        Scalar ki = s.e8k(e, i);
        if (!(ki.abs() < eps)) return false;
        if (i == 0 && ki.sign() > 0) return false;
        if (i >= 1 && ki.sign() < 0) return false;
        for (int j = 0; j < 8; ++j)
            if (kE8Gram[i][j] != 0) sq += Scalar(kE8Gram[i][j]) * ki * s.e8k(e, j);
    }
    return sq <= Scalar(0) && -eps < sq;
}

}  // namespace

BalanceReport concentrate(const BalanceContext& ctx, const ClassVector& alpha, int e8_block,
                          int h1, int h2, const Scalar& eps) {
    const BlockForm& f = ctx.form;
    if (!(eps > Scalar(0))) throw std::invalid_argument("concentrate: eps must be positive");
    Scalar g0 = pair(f, alpha, fiber_class(f));
    if (g0.is_zero())
        throw std::invalid_argument("concentrate: pairing with the fiber class vanishes");

    {
        Sess probe(ctx, alpha);
        if (e8_zero(probe, e8_block) && pair_zero(probe, h1) && pair_zero(probe, h2)) {
            BalanceReport rep = finish(ctx, alpha, probe, BalanceCase::AlreadyBalanced);
            rep.note = "E8 and 2H parts vanish";
            return rep;
        }
    }

    Sess s(ctx, alpha);
    auto two_h = [&]() { return restriction(s, {}, {h1, h2}); };

    if (auto fac = integral_multiple(two_h())) {
        bool two_h_zero = true;
        for (const auto& v : two_h())
            if (!v.is_zero()) two_h_zero = false;
        if (!two_h_zero && !Scalar::ratio_is_rational(s.fg(), fac->omega)) {
            // one H-fiber map breaks the integral alignment; inject g into a
            // slot that leaves a nonzero anchor untouched
            bool done = false;
            for (int inj = 0; inj < 4 && !done; ++inj) {
                Sess t(ctx, s.cur);
                int h = inj % 2 == 0 ? h2 : h1;
                if (inj < 2) t.shift_bh_by_g(h, 1);
                else t.shift_ah_by_g(h, 1);
                ClassVector rest = restriction(t, {}, {h1, h2});
                if (!integral_multiple(rest)) {
                    for (const auto& mv : t.word) s.push(mv);
                    done = true;
                }
            }
            if (!done)
                throw std::logic_error("concentrate: irrational fiber injection failed");
        } else {
            if (two_h_zero) s.shift_bh_by_g(h2, 1);  // (0,0,0,0) -> (0,0,0,g)
            auto full = restriction(s, {e8_block}, {h1, h2});
            if (integral_multiple(full)) {
                BalanceReport inner =
                    integral_concentrate(ctx, s.cur, {e8_block}, {h1, h2}, h1);
                if (!inner.ok) return inner;
                for (const auto& mv : inner.cert.moves) s.push(mv);
                BalanceReport rep = finish(ctx, alpha, s, BalanceCase::IntegralCollapse);
                rep.bounds.emplace_back("a1", s.a(h1));
                rep.bounds.emplace_back("b1", s.b(h1));
                return rep;
            }
            // some E8 row breaks the alignment: one e8h shear moves it into
            // the 2H part
            auto fac2 = integral_multiple(two_h());
            assert(fac2);
            int pick = -1;
            for (int i = 0; i < 8 && pick < 0; ++i) {
                Scalar row = e8_row(s, e8_block, i);
                if (row.is_zero()) continue;
                if (!Scalar::ratio_is_rational(row, fac2->omega) ||
                    !(row / fac2->omega).is_integer())
                    pick = i;
            }
            if (pick < 0) throw std::logic_error("concentrate: no E8 witness row found");
            std::array<mpz_class, 8> r{};
            r[pick] = 1;
            s.push(Move::e8h_auto(e8_block, h1, r));
            assert(!integral_multiple(two_h()));
        }
    }

    // Case 1: iterate with growing k until every exact bound holds
    int k = 2;
    for (int attempt = 0; attempt < 64; ++attempt, k += 2) {
        Sess t(ctx, s.cur);
        t.word = s.word;
        try {
            euclid_stages(t, h1, h2, k, true);
            // state: (junk, pivot, r3, r4) with the pivot at h1.b
            if (t.b(h1).is_zero()) continue;
            // repair a (0, r4) second pair: one extra shear gives it the
            // pivot's magnitude and a matching sign
            if (t.a(h2).is_zero() != t.b(h2).is_zero()) {
                if (t.b(h2).is_zero()) t.push(Move::h_reflect(h2));
                t.push(Move::h_reflect(h1));  // pivot to the a slot
                mpz_class i = (t.a(h1).sign() * t.b(h2).sign()) > 0 ? -1 : 1;
                t.push(Move::shear_2h(h1, h2, i));  // a2 = -i*pivot, junk to b1
                t.push(Move::h_reflect(h1));
            }
            e8_window(t, e8_block, h1);
            // fold the junk into the fiber coefficient
            t.push(Move::h_reflect(h1));  // (pivot, junk)
            Scalar pivot = t.a(h1);
            mpz_class i = signed_window_shear_param(t.b(h1), t.fg(), pivot.sign());
            t.shift_bh_by_g(h1, i);
            if (!concentrate_case1_bounds(t, e8_block, h1, h2, eps)) continue;
            BalanceReport rep = finish(ctx, alpha, t, BalanceCase::Concentrated);
            rep.bounds.emplace_back("pair1.product", Scalar(2) * t.a(h1) * t.b(h1));
            rep.bounds.emplace_back("pair2.product", Scalar(2) * t.a(h2) * t.b(h2));
            for (int j = 0; j < 8; ++j)
                rep.bounds.emplace_back("k" + std::to_string(j), t.e8k(e8_block, j));
            return rep;
        } catch (const cap_exceeded& e) {
            return cap_report(ctx, alpha, t, e.what());
        }
    }
    return cap_report(ctx, alpha, s, "concentrate: bound iteration cap exceeded");
}

// ---------------------------------------------------------------------------
// balancing for E(n,g), (n,g) not in {(1,0),(2,0)}
// ---------------------------------------------------------------------------

namespace {

// Make the pair at small_h tiny (sign-matched product) or exactly dead,
// using keep_h as the partner block.
void make_pair_small(Sess& s, int keep_h, int small_h, const Scalar& eps) {
    if (pair_zero(s, small_h) && pair_zero(s, keep_h)) return;
    auto rest = restriction(s, {}, {keep_h, small_h});
    if (integral_multiple(rest)) {
        euclid_till_dead(s, keep_h, small_h);
        return;
    }
    int k = 2;
    for (int attempt = 0; attempt < 64; ++attempt, k += 2) {
        Sess t(s.ctx, s.cur);
        euclid_stages(t, keep_h, small_h, k, true);
        Scalar prod = (t.a(small_h) * t.b(small_h)).abs();
        if (prod < eps) {
            for (const auto& mv : t.word) s.push(mv);
            return;
        }
    }
    throw cap_exceeded("make_pair_small did not converge");
}

}  // namespace

BalanceReport balance_class(const BalanceContext& ctx, const ClassVector& alpha, int split,
                            const Scalar& eps) {
    const ManifoldDescriptor& m = ctx.descriptor;
    const BlockForm& f = ctx.form;
    if (m.kind != ManifoldKind::EllipticPos || (m.n == 1 && m.genus == 0) ||
        (m.n == 2 && m.genus == 0))
        throw std::invalid_argument("balance_class: descriptor not covered by this balancing");
    Scalar sq = square(f, alpha);
    Scalar gpair = pair(f, alpha, fiber_class(f));
    if (!(sq > Scalar(0)) || !(gpair > Scalar(0)))
        throw std::invalid_argument("balance_class: class must lie in the relative positive cone");
    if (!(eps > Scalar(0))) throw std::invalid_argument("balance_class: eps must be positive");

    Scalar eps_i = scalar_min(eps, sq / Scalar(8));
    auto [rim1, rim2] = rim_blocks_of_split(m, m.n >= 2 ? split : 1);

    std::vector<int> free_h;
    for (int h = 0; h < f.h_count; ++h)
        if (h != rim1 && h != rim2) free_h.push_back(h);

    Sess s(ctx, alpha);
    auto absorb = [&](const BalanceReport& step) -> bool {
        if (!step.ok) return false;
        for (const auto& mv : step.cert.moves) s.push(mv);
        return true;
    };

    try {
        if (rim1 < 0) {
            assert(free_h.size() >= 2);
            BalanceReport step = concentrate(ctx, s.cur, 0, free_h[0], free_h[1], eps_i);
            if (!absorb(step)) return step;
        } else {
            BalanceReport first = concentrate(ctx, s.cur, 0, rim1, rim2, eps_i);
            if (!absorb(first)) return first;
            bool collapsed = first.tag == BalanceCase::IntegralCollapse;
            assert(free_h.size() >= 2);
            for (int e = 1; e < f.e8_count; ++e) {
                Sess probe(ctx, s.cur);
                if (e8_zero(probe, e)) continue;
                BalanceReport step = concentrate(ctx, s.cur, e, free_h[0], free_h[1], eps_i);
                if (!absorb(step)) return step;
            }
            if (collapsed && !pair_zero(s, rim1)) {
                // the rim carries an uncontrolled (a, b): swap it against a
                // small free pair
                make_pair_small(s, free_h[1], free_h[0], eps_i);
                s.push(Move::interchange(free_h[0], rim1));
            }
        }
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }

    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::Concentrated);
    rep.ok = is_balanced(f, s.cur, m.n >= 2 ? split : 1);
    if (!rep.ok) rep.note = "balance predicates failed on the output";
    if (rim1 >= 0) {
        rep.bounds.emplace_back("rim.e1", s.a(rim1));
        rep.bounds.emplace_back("rim.d1", s.b(rim1));
        rep.bounds.emplace_back("rim.e2", s.a(rim2));
        rep.bounds.emplace_back("rim.d2", s.b(rim2));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// E(2) balancing in (F, W = Gamma + F) coordinates
// ---------------------------------------------------------------------------

namespace {

Scalar w_coeff(const Sess& s) { return s.fc() - s.fg(); }

// Integer endgame: kills the rim pair h of an omega-integral (w, g, a, b)
// state by Euclid across the fiber pair, keeping g positive throughout.
void e2_integral_endgame(Sess& s, int h) {
    long guard = 4096;
    auto divides = [](const Scalar& num, const Scalar& den) {
        return num.is_zero() || (!den.is_zero() && (num / den).is_integer());
    };
    while (!pair_zero(s, h)) {
        if (--guard < 0) throw cap_exceeded("e2 integral endgame budget exhausted");
        Scalar g = s.fg(), a = s.a(h), b = s.b(h);
        assert(!g.is_zero());
        if (divides(a, g) && divides(b, g)) {
            if (!b.is_zero()) s.shift_bh_by_g(h, (-(b / g)).to_integer());
            if (!a.is_zero()) s.shift_ah_by_g(h, (-(a / g)).to_integer());
            break;
        }
        if (!divides(b, g)) {
            // Euclid on (g, b): residues of b go below g, then g below b
            s.shift_bh_by_g(h, minimizing_shear_param(b, g));
            if (!s.b(h).is_zero()) s.shift_g_by_bh(h, signed_window_shear_param(s.fg(), -s.b(h), 1));
        } else {
            // Euclid on (g, a) through the reflected pair
            s.shift_ah_by_g(h, minimizing_shear_param(a, g));
            if (!s.a(h).is_zero()) {
                s.push(Move::h_reflect(h));
                s.shift_g_by_bh(h, signed_window_shear_param(s.fg(), -s.b(h), 1));
                s.push(Move::h_reflect(h));
            }
        }
    }
}

}  // namespace

BalanceReport balance_e2(const BalanceContext& ctx, const ClassVector& alpha, const Scalar& eps) {
    const ManifoldDescriptor& m = ctx.descriptor;
    const BlockForm& f = ctx.form;
    if (!m.is_e2()) throw std::invalid_argument("balance_e2: descriptor must be E(2)+l");
    if (!(eps > Scalar(0))) throw std::invalid_argument("balance_e2: eps must be positive");
    Scalar sq = square(f, alpha);
    Scalar g0 = pair(f, alpha, fiber_class(f));
    if (!(sq > Scalar(0)) || !(g0 > Scalar(0)))
        throw std::invalid_argument("balance_e2: class must lie in the relative positive cone");

    Scalar eps_i = scalar_min(eps / Scalar(4), sq / Scalar(8));
    const int h1 = 0, h2 = 1;
    Sess s(ctx, alpha);
    auto absorb = [&](const BalanceReport& step) -> bool {
        if (!step.ok) return false;
        for (const auto& mv : step.cert.moves) s.push(mv);
        return true;
    };

    try {
        for (int e = 0; e < 2; ++e) {
            if (e8_zero(s, e) && pair_zero(s, h1) && pair_zero(s, h2)) continue;
            BalanceReport step = concentrate(ctx, s.cur, e, h1, h2, eps_i);
            if (!absorb(step)) return step;
        }
        bool rim_alive = !pair_zero(s, h1) || !pair_zero(s, h2);
        bool e8_alive = !e8_zero(s, 0) || !e8_zero(s, 1);
        if (!rim_alive && e8_alive) {
            // manufacture a rim coefficient from an E8 row, then re-shrink
            for (int e = 0; e < 2 && !rim_alive; ++e)
                for (int i = 0; i < 8 && !rim_alive; ++i) {
                    if (e8_row(s, e, i).is_zero()) continue;
                    s.push(Move::reflect(s.e8_support(e, i, h1)));
                    rim_alive = true;
                }
            for (int e = 0; e < 2; ++e) {
                if (e8_zero(s, e)) continue;
                BalanceReport step = concentrate(ctx, s.cur, e, h1, h2, eps_i);
                if (!absorb(step)) return step;
            }
            rim_alive = !pair_zero(s, h1) || !pair_zero(s, h2);
        }

        // an integral-aligned state goes to the endgame; detect it on the
        // (w, g, rim) tuple (the E8 parts vanish exactly in that situation)
        auto fiber_rim_tuple = [&]() {
            return ClassVector{w_coeff(s), s.fg(), s.a(h1), s.b(h1), s.a(h2), s.b(h2)};
        };
        bool e8_dead = e8_zero(s, 0) && e8_zero(s, 1);
        if (e8_dead && rim_alive && integral_multiple(fiber_rim_tuple())) {
            if (!pair_zero(s, h2)) {
                BalanceReport park = integral_concentrate(ctx, s.cur, {}, {h1, h2}, h1);
                if (!absorb(park)) return park;
            }
            e2_integral_endgame(s, h1);
            rim_alive = false;
        } else if (e8_dead && rim_alive) {
            auto rim_only = restriction(s, {}, {h1, h2});
            if (integral_multiple(rim_only)) {
                // rim is integral but the fiber part is not aligned: inject g
                // or w to break the rim alignment, then re-concentrate
                bool broken = false;
                for (int attempt = 0; attempt < 4 && !broken; ++attempt) {
                    Sess t(ctx, s.cur);
                    if (attempt == 0) t.shift_bh_by_g(h1, 1);
                    else if (attempt == 1) t.shift_ah_by_g(h1, 1);
                    else if (attempt == 2) t.shift_g_by_bh(h1, 1);
                    else t.push(Move::e2_base_change(h1, -1));
                    if (!integral_multiple(restriction(t, {}, {h1, h2})) &&
                        !t.fg().is_zero()) {
                        for (const auto& mv : t.word) s.push(mv);
                        broken = true;
                    }
                }
                if (!broken) throw cap_exceeded("e2: could not break the rim alignment");
                BalanceReport step = concentrate(ctx, s.cur, 0, h1, h2, eps_i);
                if (!absorb(step)) return step;
            }
        }

        if (rim_alive) {
            // Case 1: drive a rim entry strictly below eps (the concentrate
            // output bounds products, not single entries), then window g
            // against it; euclid_stages leaves the pivot in the h1.b slot
            long guard = 128;
            while (s.b(h1).is_zero() || !(s.b(h1).abs() < eps)) {
                if (--guard < 0) throw cap_exceeded("e2 rim pivot descent budget");
                euclid_stages(s, h1, h2, 2, true);
            }
            Scalar b1 = s.b(h1);
            assert(!b1.is_zero());
            // reduce gW into (0, |b1|] (changes the fiber)
            s.shift_g_by_bh(h1, signed_window_shear_param(s.fg(), -b1, 1));
            // fold the junk a1 into c with b1's sign
            s.push(Move::h_reflect(h1));
            mpz_class t2 = signed_window_shear_param(s.b(h1), s.fg(), s.a(h1).sign());
            s.shift_bh_by_g(h1, t2);
        } else if (e8_zero(s, 0) && e8_zero(s, 1) && pair_zero(s, h1) && pair_zero(s, h2)) {
            Scalar w = w_coeff(s), g = s.fg();
            if (!Scalar::ratio_is_rational(w, g)) {
                // seed the rim with w and ping-pong (g, b1) below eps
                s.push(Move::e2_base_change(h1, 1));  // a1 += w (b1 = 0 keeps g)
                s.push(Move::h_reflect(h1));          // b1 = w
                long guard = ctx.stage_cap;
                while (true) {
                    if (--guard < 0) throw cap_exceeded("e2 irrational descent budget");
                    Scalar gw = s.fg(), b1 = s.b(h1);
                    if (gw > Scalar(0) && gw < eps) break;
                    s.shift_g_by_bh(h1, signed_window_shear_param(gw, -b1, 1));
                    gw = s.fg();
                    b1 = s.b(h1);
                    if (gw > Scalar(0) && gw < eps) break;
                    s.shift_bh_by_g(h1, minimizing_shear_param(b1, gw));
                }
                // clean a1 below eps with a matching sign
                s.push(Move::h_reflect(h1));
                mpz_class t2 = signed_window_shear_param(s.b(h1), s.fg(), s.a(h1).sign());
                s.shift_bh_by_g(h1, t2);
            }
            // rational w/g with a dead rim: terminal multiple of an integral
            // class on (F, W)
        }
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }

    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::Concentrated);
    Scalar gq = s.fg();
    bool rim_dead = pair_zero(s, h1) && pair_zero(s, h2);
    bool terminal_integral = false;
    if (rim_dead && e8_zero(s, 0) && e8_zero(s, 1)) {
        ClassVector fw = {w_coeff(s), gq};
        terminal_integral = integral_multiple(fw).has_value();
    }
    if (terminal_integral) rep.tag = BalanceCase::IntegralCollapse;
    rep.bounds.emplace_back("g", gq);
    rep.bounds.emplace_back("rim1.a", s.a(h1));
    rep.bounds.emplace_back("rim1.b", s.b(h1));
    rep.bounds.emplace_back("rim2.a", s.a(h2));
    rep.bounds.emplace_back("rim2.b", s.b(h2));
    bool ok = gq > Scalar(0);
    for (int h : {h1, h2}) {
        Scalar prod = s.a(h) * s.b(h);
        if (prod.sign() < 0 || !(prod <= eps)) ok = false;
    }
    for (int e = 0; e < 2; ++e)
        for (int i = 0; i < 8; ++i)
            if (!(s.e8k(e, i).abs() < eps)) ok = false;
    if (!terminal_integral && !(gq < eps)) ok = false;
    rep.ok = ok;
    if (!ok) {
        rep.tag = BalanceCase::CapExceeded;
        rep.note = "e2 conclusions failed on the output";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// T4 and Kodaira-Thurston concentration
// ---------------------------------------------------------------------------

BalanceReport concentrate_t4(const BalanceContext& ctx, const ClassVector& alpha,
                             const Scalar& eps) {
    const ManifoldDescriptor& m = ctx.descriptor;
    const BlockForm& f = ctx.form;
    if (m.kind != ManifoldKind::Torus4)
        throw std::invalid_argument("concentrate_t4: descriptor must be T4+l");
    if (!(eps > Scalar(0))) throw std::invalid_argument("concentrate_t4: eps must be positive");
    // layout: h0 = (A1, A2), h1 = (B1, B2), fiber (F, Gamma)
    Scalar a1 = alpha[f.h_a_slot(0)], b2 = alpha[f.h_b_slot(1)];
    if (integral_multiple(ClassVector{a1, b2}))
        throw std::invalid_argument("concentrate_t4: (a1, b2) is a multiple of an integral class");

    Sess s(ctx, alpha);
    try {
        long guard = ctx.stage_cap;
        while (true) {
            if (--guard < 0) throw cap_exceeded("t4 alternation budget exhausted");
            Scalar ca1 = s.cur[f.h_a_slot(0)], cb2 = s.cur[f.h_b_slot(1)];
            if (ca1.abs() < eps && cb2.abs() < eps) break;
            if (cb2.abs() >= ca1.abs()) {
                s.push(Move::t4_map(1, minimizing_shear_param(cb2, ca1)));  // b2 += N a1
            } else {
                s.push(Move::t4_map(2, minimizing_shear_param(ca1, -cb2)));  // a1 -= N b2
            }
        }
        // map III lowers g into (0, |a1|]
        Scalar ca1 = s.cur[f.h_a_slot(0)];
        mpz_class aparam = signed_window_shear_param(s.cur[f.fiber_g_slot()], -ca1, 1);
        if (sgn(aparam) != 0) s.push(Move::t4_map(3, aparam));  // g -= A a1
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }
    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::Concentrated);
    Scalar gq = s.cur[f.fiber_g_slot()];
    rep.bounds.emplace_back("fiber.pairing", gq);
    rep.ok = gq > Scalar(0) && gq < eps;
    if (!rep.ok) rep.note = "t4 fiber bound failed";
    return rep;
}

BalanceReport concentrate_kt(const BalanceContext& ctx, const ClassVector& alpha,
                             const Scalar& eps) {
    const ManifoldDescriptor& m = ctx.descriptor;
    const BlockForm& f = ctx.form;
    if (m.kind != ManifoldKind::KodairaThurston)
        throw std::invalid_argument("concentrate_kt: descriptor must be KT+l");
    if (!(eps > Scalar(0))) throw std::invalid_argument("concentrate_kt: eps must be positive");
    Scalar g = alpha[f.fiber_g_slot()], a1 = alpha[f.h_a_slot(0)];
    if (integral_multiple(ClassVector{g, a1}))
        throw std::invalid_argument("concentrate_kt: (g, a1) are linearly dependent over Z");
    int gsign = g.sign();

    Sess s(ctx, alpha);
    try {
        long guard = ctx.stage_cap;
        while (true) {
            if (--guard < 0) throw cap_exceeded("kt alternation budget exhausted");
            Scalar cg = s.cur[f.fiber_g_slot()], ca1 = s.cur[f.h_a_slot(0)];
            if (cg.abs() < eps && cg.sign() == gsign) break;
            if (ca1.abs() < cg.abs()) {
                if (ca1.abs() < eps)
                    s.push(Move::kt_phi1(signed_window_shear_param(cg, ca1, gsign)));
                else
                    s.push(Move::kt_phi1(minimizing_shear_param(cg, ca1)));  // g += N a1
            } else {
                s.push(Move::kt_phi2(minimizing_shear_param(ca1, -cg)));  // a1 -= Q g
            }
        }
    } catch (const cap_exceeded& e) {
        return cap_report(ctx, alpha, s, e.what());
    }
    BalanceReport rep = finish(ctx, alpha, s, BalanceCase::Concentrated);
    Scalar gq = s.cur[f.fiber_g_slot()];
    rep.bounds.emplace_back("fiber.pairing", gq);
    rep.ok = gq.abs() < eps && gq.sign() == gsign;
    if (!rep.ok) rep.note = "kt fiber bound or sign failed";
    return rep;
}

// ---------------------------------------------------------------------------
// balance predicates and the fiber-sum split
// ---------------------------------------------------------------------------

bool is_balanced(const BlockForm& f, const ClassVector& alpha, int split) {
    int rim1 = -1, rim2 = -1;
    if (f.e8_count >= 2 && split >= 1 && split <= f.e8_count - 1) {
        rim1 = 2 * (split - 1);
        rim2 = rim1 + 1;
    }
    if (rim1 < 0 || rim2 >= f.h_count) return true;  // no rim pairs in this sum
    Scalar e1 = alpha[f.h_a_slot(rim1)], d1 = alpha[f.h_b_slot(rim1)];
    Scalar e2 = alpha[f.h_a_slot(rim2)], d2 = alpha[f.h_b_slot(rim2)];
    auto pair_ok = [](const Scalar& e, const Scalar& d) {
        return (e * d).sign() > 0 || (e.is_zero() && d.is_zero());
    };
    if (!pair_ok(e1, d1) || !pair_ok(e2, d2)) return false;
    Scalar rest = square(f, alpha) - Scalar(2) * e1 * d1 - Scalar(2) * e2 * d2;
    return rest > Scalar(0);
}

std::optional<SumSplit> sum_split(const BalanceContext& ctx, const ClassVector& alpha, int split,
                                  long den_cap) {
    const ManifoldDescriptor& m = ctx.descriptor;
    const BlockForm& f = ctx.form;
    if (m.kind != ManifoldKind::EllipticPos || m.n < 2)
        throw std::invalid_argument("sum_split: needs an E(n,g) descriptor with n >= 2");
    auto [rim1, rim2] = rim_blocks_of_split(m, split);
    Scalar g = alpha[f.fiber_g_slot()];
    Scalar c = alpha[f.fiber_c_slot()];
    if (!(g > Scalar(0))) throw std::invalid_argument("sum_split: needs positive fiber pairing");

    // side X: E8 blocks [0, split) with the P_i pairs left of the split;
    // side Y: the rest, the torus pairs, and the blow-ups
    ManifoldDescriptor mx = ManifoldDescriptor::elliptic(split, 0, 0);
    ManifoldDescriptor my = ManifoldDescriptor::elliptic(m.n - split, m.genus, m.blowups);
    BlockForm fx = build_form(mx), fy = build_form(my);
    ClassVector vx = zero_class(fx), vy = zero_class(fy);
    for (int e = 0; e < f.e8_count; ++e)
        for (int i = 0; i < 8; ++i) {
            if (e < split) vx[fx.e8_slot(e, i)] = alpha[f.e8_slot(e, i)];
            else vy[fy.e8_slot(e - split, i)] = alpha[f.e8_slot(e, i)];
        }
    int yh = 0, xh = 0;
    for (int h = 0; h < f.h_count; ++h) {
        if (h == rim1 || h == rim2) continue;  // the rim part is removed
        if (h < 2 * (split - 1)) {
            vx[fx.h_a_slot(xh)] = alpha[f.h_a_slot(h)];
            vx[fx.h_b_slot(xh)] = alpha[f.h_b_slot(h)];
            ++xh;
        } else {
            vy[fy.h_a_slot(yh)] = alpha[f.h_a_slot(h)];
            vy[fy.h_b_slot(yh)] = alpha[f.h_b_slot(h)];
            ++yh;
        }
    }
    for (int i = 0; i < f.blowup_count; ++i) vy[fy.blowup_slot(i)] = alpha[f.blowup_slot(i)];
    vx[fx.fiber_g_slot()] = g;
    vy[fy.fiber_g_slot()] = g;

    Scalar sx = square(fx, vx);  // includes the -n1 g^2 term (c slot is zero)
    Scalar sy = square(fy, vy);
    Scalar lo = -sx / (Scalar(2) * g);
    Scalar hi = c + sy / (Scalar(2) * g);
    if (!(lo < hi)) return std::nullopt;
    std::optional<Scalar> best;
    for (long q = 1; q <= den_cap; ++q) {
        mpz_class nlo = (lo * Scalar(q)).floor() + 1;
        mpz_class nhi = (hi * Scalar(q)).floor();
        if (Scalar(mpq_class(nhi, q)) == hi) nhi -= 1;
        if (nlo > nhi) continue;
        mpz_class pick;
        if (nlo <= 0 && 0 <= nhi) pick = 0;
        else pick = nlo > 0 ? nlo : nhi;
        Scalar cand = Scalar(mpq_class(pick, q));
        if (!best || cand.abs() < best->abs()) best = cand;
    }
    if (!best) return std::nullopt;
    vx[fx.fiber_c_slot()] = *best;
    vy[fy.fiber_c_slot()] = c - *best;
    if (!(square(fx, vx) > Scalar(0)) || !(square(fy, vy) > Scalar(0))) return std::nullopt;
    return SumSplit{std::move(vx), std::move(vy), *best};
}

}  // namespace symcone
