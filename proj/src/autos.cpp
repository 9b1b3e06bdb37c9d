#include "symcone/autos.hpp"

#include <cassert>
#include <sstream>

namespace symcone {

Move Move::reflect(ClassVector s) {
    Move m;
    m.kind = MoveKind::ReflectMinus2;
    m.refl = std::move(s);
    return m;
}
Move Move::h_reflect(int h) {
    Move m;
    m.kind = MoveKind::HReflect;
    m.b1 = h;
    return m;
}
Move Move::q_map(int h1, int h2) {
    Move m;
    m.kind = MoveKind::QMap;
    m.b1 = h1;
    m.b2 = h2;
    return m;
}
Move Move::q_map_single(int h) {
    Move m;
    m.kind = MoveKind::QMapSingle;
    m.b1 = h;
    return m;
}
Move Move::interchange(int h1, int h2) {
    Move m;
    m.kind = MoveKind::Interchange;
    m.b1 = h1;
    m.b2 = h2;
    return m;
}
Move Move::shear_2h(int h1, int h2, mpz_class i) {
    Move m;
    m.kind = MoveKind::Shear2H;
    m.b1 = h1;
    m.b2 = h2;
    m.i = std::move(i);
    return m;
}
Move Move::h_fiber(int h, mpz_class i) {
    Move m;
    m.kind = MoveKind::HFiber;
    m.b1 = h;
    m.i = std::move(i);
    return m;
}
Move Move::e8h_auto(int e8, int h, std::array<mpz_class, 8> r) {
    Move m;
    m.kind = MoveKind::E8HAuto;
    m.b1 = e8;
    m.b2 = h;
    m.r = std::move(r);
    return m;
}
Move Move::e8h_case(int e8, int h, E8Case c, int i) {
    Move m;
    m.kind = MoveKind::E8HReflectCase;
    m.b1 = e8;
    m.b2 = h;
    m.e8case = c;
    m.case_index = i;
    return m;
}
Move Move::e2_base_change(int h, mpz_class i) {
    Move m;
    m.kind = MoveKind::E2BaseChange;
    m.b1 = h;
    m.i = std::move(i);
    return m;
}
Move Move::gamma_reflect() {
    Move m;
    m.kind = MoveKind::GammaReflect;
    return m;
}
Move Move::t4_map(int which, mpz_class param) {
    Move m;
    switch (which) {
        case 1: m.kind = MoveKind::T4MapI; break;
        case 2: m.kind = MoveKind::T4MapII; break;
        case 3: m.kind = MoveKind::T4MapIII; break;
        case 4: m.kind = MoveKind::T4MapIV; break;
        default: throw std::invalid_argument("t4_map index must be 1..4");
    }
    m.i = std::move(param);
    return m;
}
Move Move::kt_phi0() {
    Move m;
    m.kind = MoveKind::KTPhi0;
    return m;
}
Move Move::kt_phi1(mpz_class n) {
    Move m;
    m.kind = MoveKind::KTPhi1;
    m.i = std::move(n);
    return m;
}
Move Move::kt_phi2(mpz_class q) {
    Move m;
    m.kind = MoveKind::KTPhi2;
    m.i = std::move(q);
    return m;
}
Move Move::e1_swap(int i, int j) {
    Move m;
    m.kind = MoveKind::E1Swap;
    m.b1 = i;
    m.b2 = j;
    return m;
}
Move Move::e1_cremona() {
    Move m;
    m.kind = MoveKind::E1Cremona;
    return m;
}

bool move_changes_fiber(const Move& mv) {
    switch (mv.kind) {
        case MoveKind::E2BaseChange:
        case MoveKind::GammaReflect:
        case MoveKind::T4MapIII:
        case MoveKind::T4MapIV:
        case MoveKind::KTPhi0:
        case MoveKind::KTPhi1:
            return true;
        default:
            return false;
    }
}

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw apply_error(msg);
}

void check_h(const BlockForm& f, int h, const char* what) {
    require(h >= 0 && h < f.h_count, std::string(what) + ": H block index out of range");
}

void check_e8(const BlockForm& f, int e, const char* what) {
    require(e >= 0 && e < f.e8_count, std::string(what) + ": E8 block index out of range");
}

bool is_e2_form(const BlockForm& f) {
    return f.fiber_block_index >= 0 && f.gamma_sq() == -2 && f.e8_count == 2 && f.h_count == 2;
}

bool is_t4_form(const BlockForm& f) {
    return f.fiber_block_index >= 0 && f.gamma_sq() == 0 && f.e8_count == 0 && f.h_count == 2;
}

bool is_kt_form(const BlockForm& f) {
    return f.fiber_block_index >= 0 && f.gamma_sq() == 0 && f.e8_count == 0 && f.h_count == 1;
}

// (sigma, partner set) of the E8 case catalog; partner = indices j with
// (E8 k)_i = sum_j +- k_j as in the displayed reflections.
int case_sign(E8Case c) {
    switch (c) {
        case E8Case::C1a: case E8Case::C2a: case E8Case::C3a: return +1;
        case E8Case::C1b: case E8Case::C2b: case E8Case::C3b: return -1;
        default: return 0;  // composite
    }
}

int case_family(E8Case c) {
    switch (c) {
        case E8Case::C1a: case E8Case::C1b: case E8Case::C1c1: case E8Case::C1c2: return 1;
        case E8Case::C2a: case E8Case::C2b: case E8Case::C2c1: case E8Case::C2c2: return 2;
        default: return 3;
    }
}

void check_case_index(E8Case c, int i) {
    switch (case_family(c)) {
        case 1:
            require(i == 2 || i == 4 || i == 5 || i == 6, "E8 case family 1 needs i in {2,4,5,6}");
            break;
        case 2:
            require(i == 0 || i == 1 || i == 7, "E8 case family 2 needs i in {0,1,7}");
            break;
        default:
            require(i == 3, "E8 case family 3 needs i = 3");
            break;
    }
}

}  // namespace

std::pair<std::array<Scalar, 8>, Scalar> e8h_action(const std::array<Scalar, 8>& k,
                                                    const Scalar& a, const Scalar& b,
                                                    const std::array<mpz_class, 8>& r) {
    // k' = k + 2b r;  a' = a - 2 r^T E8 k - 2b r^T E8 r  (the unique update
    // preserving the pairing; composition of the catalog's (1c)/(2c)/(3c) maps)
    std::array<Scalar, 8> k2;
    Scalar rEk, rEr;
    for (int i = 0; i < 8; ++i) {
        Scalar rowk, rowr;
        for (int j = 0; j < 8; ++j) {
            if (kE8Gram[i][j] == 0) continue;
            rowk += Scalar(kE8Gram[i][j]) * k[j];
            rowr += Scalar(kE8Gram[i][j]) * Scalar(r[j]);
        }
        rEk += Scalar(r[i]) * rowk;
        rEr += Scalar(r[i]) * rowr;
        k2[i] = k[i] + Scalar(2) * b * Scalar(r[i]);
    }
    Scalar a2 = a - Scalar(2) * rEk - Scalar(2) * b * rEr;
    return {k2, a2};
}

namespace {

// reflection on sigma*D_i + A of the (e8, h) block pair
void apply_case_reflection(const BlockForm& f, int e8, int h, int sigma, int i, ClassVector& x) {
    Scalar eki;  // (E8 k)_i
    for (int j = 0; j < 8; ++j)
        if (kE8Gram[i][j] != 0) eki += Scalar(kE8Gram[i][j]) * x[f.e8_slot(e8, j)];
    Scalar dot = Scalar(sigma) * eki + x[f.h_b_slot(h)];  // alpha . (sigma D_i + A)
    x[f.e8_slot(e8, i)] += Scalar(sigma) * dot;
    x[f.h_a_slot(h)] += dot;
}

void apply_block_move(const BlockForm& f, const Move& mv, ClassVector& x, bool inverse) {
    switch (mv.kind) {
        case MoveKind::ReflectMinus2: {
            const ClassVector& s = mv.refl;
            require(static_cast<int>(s.size()) == f.slots, "reflect: support length mismatch");
            require(is_integral(s), "reflect: support class must be integral");
            require(square(f, s) == Scalar(-2), "reflect: support class must have square -2");
            if (f.fiber_block_index >= 0) {
                bool touches_fiber = !s[f.fiber_c_slot()].is_zero() || !s[f.fiber_g_slot()].is_zero();
                require(!touches_fiber, "reflect: support must avoid the F and Gamma slots");
            }
            Scalar dot = pair(f, x, s);
            for (int t = 0; t < f.slots; ++t) x[t] += dot * s[t];  // involution: inverse = itself
            break;
        }
        case MoveKind::HReflect: {
            check_h(f, mv.b1, "hreflect");
            std::swap(x[f.h_a_slot(mv.b1)], x[f.h_b_slot(mv.b1)]);
            break;
        }
        case MoveKind::QMap: {
            check_h(f, mv.b1, "qmap");
            check_h(f, mv.b2, "qmap");
            require(mv.b1 != mv.b2, "qmap: needs two distinct H blocks");
            for (int h : {mv.b1, mv.b2}) {
                x[f.h_a_slot(h)] = -x[f.h_a_slot(h)];
                x[f.h_b_slot(h)] = -x[f.h_b_slot(h)];
            }
            break;
        }
        case MoveKind::QMapSingle: {
            check_h(f, mv.b1, "qmap1");
            x[f.h_a_slot(mv.b1)] = -x[f.h_a_slot(mv.b1)];
            x[f.h_b_slot(mv.b1)] = -x[f.h_b_slot(mv.b1)];
            break;
        }
        case MoveKind::Interchange: {
            check_h(f, mv.b1, "interchange");
            check_h(f, mv.b2, "interchange");
            require(mv.b1 != mv.b2, "interchange: needs two distinct H blocks");
            Scalar a1 = x[f.h_a_slot(mv.b1)], b1 = x[f.h_b_slot(mv.b1)];
            Scalar a2 = x[f.h_a_slot(mv.b2)], b2 = x[f.h_b_slot(mv.b2)];
            if (!inverse) {
                // basis: A1->A2, B1->B2, A2->-A1, B2->-B1
                x[f.h_a_slot(mv.b1)] = -a2;
                x[f.h_b_slot(mv.b1)] = -b2;
                x[f.h_a_slot(mv.b2)] = a1;
                x[f.h_b_slot(mv.b2)] = b1;
            } else {
                x[f.h_a_slot(mv.b1)] = a2;
                x[f.h_b_slot(mv.b1)] = b2;
                x[f.h_a_slot(mv.b2)] = -a1;
                x[f.h_b_slot(mv.b2)] = -b1;
            }
            break;
        }
        case MoveKind::Shear2H: {
            check_h(f, mv.b1, "shear2h");
            check_h(f, mv.b2, "shear2h");
            require(mv.b1 != mv.b2, "shear2h: needs two distinct H blocks");
            Scalar i = Scalar(inverse ? -mv.i : mv.i);
            // (a1, b1, a2, b2) -> (a1, b1 + i b2, a2 - i a1, b2)
            x[f.h_b_slot(mv.b1)] += i * x[f.h_b_slot(mv.b2)];
            x[f.h_a_slot(mv.b2)] -= i * x[f.h_a_slot(mv.b1)];
            break;
        }
        case MoveKind::HFiber: {
            check_h(f, mv.b1, "hfiber");
            require(f.fiber_block_index >= 0, "hfiber: form has no fiber block");
            Scalar i = Scalar(inverse ? -mv.i : mv.i);
            // (c, g, a, b) -> (c - i a, g, a, b + i g)
            x[f.fiber_c_slot()] -= i * x[f.h_a_slot(mv.b1)];
            x[f.h_b_slot(mv.b1)] += i * x[f.fiber_g_slot()];
            break;
        }
        case MoveKind::E8HAuto: {
            check_e8(f, mv.b1, "e8auto");
            check_h(f, mv.b2, "e8auto");
            std::array<Scalar, 8> k;
            for (int j = 0; j < 8; ++j) k[j] = x[f.e8_slot(mv.b1, j)];
            std::array<mpz_class, 8> r = mv.r;
            if (inverse)
                for (auto& e : r) e = -e;
            auto [k2, a2] = e8h_action(k, x[f.h_a_slot(mv.b2)], x[f.h_b_slot(mv.b2)], r);
            for (int j = 0; j < 8; ++j) x[f.e8_slot(mv.b1, j)] = k2[j];
            x[f.h_a_slot(mv.b2)] = a2;
            break;
        }
        case MoveKind::E8HReflectCase: {
            check_e8(f, mv.b1, "e8case");
            check_h(f, mv.b2, "e8case");
            check_case_index(mv.e8case, mv.case_index);
            int s = case_sign(mv.e8case);
            if (s != 0) {
                apply_case_reflection(f, mv.b1, mv.b2, s, mv.case_index, x);  // involution
            } else {
                // c1 = (-D+A) after (D+A); c2 = (D+A) after (-D+A); both are
                // involutions composed, so the inverse swaps the order.
                bool c1 = mv.e8case == E8Case::C1c1 || mv.e8case == E8Case::C2c1 ||
                          mv.e8case == E8Case::C3c1;
                int first = c1 ? +1 : -1;
                if (inverse) first = -first;
                apply_case_reflection(f, mv.b1, mv.b2, first, mv.case_index, x);
                apply_case_reflection(f, mv.b1, mv.b2, -first, mv.case_index, x);
            }
            break;
        }
        case MoveKind::E2BaseChange: {
            require(is_e2_form(f), "e2base: legal only on E(2) forms");
            check_h(f, mv.b1, "e2base");
            Scalar i = Scalar(inverse ? -mv.i : mv.i);
            // in (F, W=Gamma+F) coordinates: (w,g,a,b) -> (w, g-ib, a+iw, b);
            // fixed coordinates: (c,g,a,b) -> (c-ib, g-ib, a+i(c-g), b)
            Scalar c = x[f.fiber_c_slot()], g = x[f.fiber_g_slot()];
            Scalar b = x[f.h_b_slot(mv.b1)];
            x[f.fiber_c_slot()] = c - i * b;
            x[f.fiber_g_slot()] = g - i * b;
            x[f.h_a_slot(mv.b1)] += i * (c - g);
            break;
        }
        case MoveKind::GammaReflect: {
            require(is_e2_form(f), "gammareflect: legal only on E(2) forms");
            Scalar dot = x[f.fiber_c_slot()] + Scalar(-2) * x[f.fiber_g_slot()];
            x[f.fiber_g_slot()] += dot;  // involution
            break;
        }
        case MoveKind::T4MapI: {
            require(is_t4_form(f), "t4map: legal only on the T4 form");
            Scalar n = Scalar(inverse ? -mv.i : mv.i);
            // (a1,a2,b1,b2) with pairs (A1,A2), (B1,B2): a2 -= N b1, b2 += N a1
            x[f.h_b_slot(0)] -= n * x[f.h_a_slot(1)];
            x[f.h_b_slot(1)] += n * x[f.h_a_slot(0)];
            break;
        }
        case MoveKind::T4MapII: {
            require(is_t4_form(f), "t4map: legal only on the T4 form");
            Scalar n = Scalar(inverse ? -mv.i : mv.i);
            // a1 -= N b2, b1 += N a2
            x[f.h_a_slot(0)] -= n * x[f.h_b_slot(1)];
            x[f.h_a_slot(1)] += n * x[f.h_b_slot(0)];
            break;
        }
        case MoveKind::T4MapIII: {
            require(is_t4_form(f), "t4map: legal only on the T4 form");
            Scalar a = Scalar(inverse ? -mv.i : mv.i);
            // (c, g, a1, a2, b1, b2) -> (c, g - a1 A, a1, a2 + c A, b1, b2)
            x[f.fiber_g_slot()] -= a * x[f.h_a_slot(0)];
            x[f.h_b_slot(0)] += a * x[f.fiber_c_slot()];
            break;
        }
        case MoveKind::T4MapIV: {
            require(is_t4_form(f), "t4map: legal only on the T4 form");
            Scalar a = Scalar(inverse ? -mv.i : mv.i);
            // (c, g, a1, a2, b1, b2) -> (c, g + A a2, a1 - A c, a2, b1, b2)
            x[f.fiber_g_slot()] += a * x[f.h_b_slot(0)];
            x[f.h_a_slot(0)] -= a * x[f.fiber_c_slot()];
            break;
        }
        case MoveKind::KTPhi0: {
            require(is_kt_form(f), "ktphi: legal only on the KT form");
            Scalar c = x[f.fiber_c_slot()], g = x[f.fiber_g_slot()];
            Scalar a1 = x[f.h_a_slot(0)], a2 = x[f.h_b_slot(0)];
            x[f.fiber_c_slot()] = -a2;
            x[f.fiber_g_slot()] = -a1;
            x[f.h_a_slot(0)] = -g;
            x[f.h_b_slot(0)] = -c;  // involution
            break;
        }
        case MoveKind::KTPhi1: {
            require(is_kt_form(f), "ktphi: legal only on the KT form");
            Scalar n = Scalar(inverse ? -mv.i : mv.i);
            // (c, g, a1, a2) -> (c, g + N a1, a1, a2 - N c)
            x[f.fiber_g_slot()] += n * x[f.h_a_slot(0)];
            x[f.h_b_slot(0)] -= n * x[f.fiber_c_slot()];
            break;
        }
        case MoveKind::KTPhi2: {
            require(is_kt_form(f), "ktphi: legal only on the KT form");
            Scalar q = Scalar(inverse ? -mv.i : mv.i);
            // (c, g, a1, a2) -> (c + Q a2, g, a1 - Q g, a2)
            x[f.fiber_c_slot()] += q * x[f.h_b_slot(0)];
            x[f.h_a_slot(0)] -= q * x[f.fiber_g_slot()];
            break;
        }
        case MoveKind::E1Swap:
        case MoveKind::E1Cremona:
            throw apply_error("E1 moves act on K-standard vectors, not on block forms");
    }
}

}  // namespace

ClassVector apply_move(const BlockForm& f, const Move& mv, const ClassVector& x) {
    if (static_cast<int>(x.size()) != f.slots) throw apply_error("class length mismatch");
    ClassVector y = x;
    apply_block_move(f, mv, y, false);
    return y;
}

ClassVector apply_move_inverse(const BlockForm& f, const Move& mv, const ClassVector& x) {
    if (static_cast<int>(x.size()) != f.slots) throw apply_error("class length mismatch");
    ClassVector y = x;
    apply_block_move(f, mv, y, true);
    return y;
}

ApplyResult apply(const BlockForm& f, const Move& mv, const ClassVector& x) {
    ApplyResult res;
    res.image = apply_move(f, mv, x);
    if (move_changes_fiber(mv))
        res.fiber_image = apply_move_inverse(f, mv, fiber_class(f));
    else
        res.fiber_image = fiber_class(f);
    return res;
}

// ---------------------------------------------------------------------------
// spinor norm
// ---------------------------------------------------------------------------

std::vector<ClassVector> positive_subspace_basis(const BlockForm& f) {
    std::vector<ClassVector> basis;
    for (const auto& b : f.blocks) {
        if (b.kind == BlockKind::H) {
            ClassVector v = zero_class(f);
            v[b.offset] = Scalar(1);
            v[b.offset + 1] = Scalar(1);  // (A+B)^2 = 2
            basis.push_back(std::move(v));
        } else if (b.kind == BlockKind::Fiber) {
            ClassVector v = zero_class(f);
            // (xF + Gamma)^2 = 2x + Gamma^2 > 0 for x = |Gamma^2| + 1
            long x = (b.gamma_sq < 0 ? -b.gamma_sq : b.gamma_sq) + 1;
            v[b.offset] = Scalar(x);
            v[b.offset + 1] = Scalar(1);
            basis.push_back(std::move(v));
        }
    }
    return basis;
}

int spinor_norm(const BlockForm& f, const std::vector<Move>& word) {
    auto basis = positive_subspace_basis(f);
    const size_t m = basis.size();
    if (m == 0) return +1;
    // images of the basis under the word, projected back: M[i][j] = <phi(p_i), p_j>
    std::vector<std::vector<Scalar>> M(m, std::vector<Scalar>(m));
    for (size_t i = 0; i < m; ++i) {
        ClassVector img = basis[i];
        for (const auto& mv : word) img = apply_move(f, mv, img);
        for (size_t j = 0; j < m; ++j) M[i][j] = pair(f, img, basis[j]);
    }
    // sign of det via fraction-free-ish Gaussian elimination over the field
    int sign = 1;
    for (size_t col = 0; col < m; ++col) {
        size_t piv = col;
        while (piv < m && M[piv][col].is_zero()) ++piv;
        if (piv == m)
            throw std::logic_error("spinor norm: degenerate projection (implementation bug)");
        if (piv != col) {
            std::swap(M[piv], M[col]);
            sign = -sign;
        }
        if (M[col][col].sign() < 0) sign = -sign;
        for (size_t row = col + 1; row < m; ++row) {
            if (M[row][col].is_zero()) continue;
            Scalar factor = M[row][col] / M[col][col];
            for (size_t j = col; j < m; ++j) M[row][j] -= factor * M[col][j];
        }
    }
    return sign;
}

int spinor_norm(const BlockForm& f, const Move& mv) {
    return spinor_norm(f, std::vector<Move>{mv});
}

// ---------------------------------------------------------------------------
// E(1) K-standard basis moves
// ---------------------------------------------------------------------------

Scalar e1_pair(const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
    if (x.size() != y.size() || x.empty()) throw apply_error("e1 vectors length mismatch");
    Scalar acc = x[0] * y[0];
    for (size_t i = 1; i < x.size(); ++i) acc -= x[i] * y[i];
    return acc;
}

std::vector<Scalar> apply_e1_move(const Move& mv, const std::vector<Scalar>& x) {
    std::vector<Scalar> y = x;
    if (mv.kind == MoveKind::E1Swap) {
        size_t i = static_cast<size_t>(mv.b1), j = static_cast<size_t>(mv.b2);
        if (i < 1 || j < 1 || i >= y.size() || j >= y.size() || i == j)
            throw apply_error("e1swap: bad indices");
        std::swap(y[i], y[j]);
    } else if (mv.kind == MoveKind::E1Cremona) {
        if (y.size() < 4) throw apply_error("e1cremona: needs at least (a; b1,b2,b3)");
        Scalar t = y[0] - y[1] - y[2] - y[3];  // <x, H - E1 - E2 - E3>
        y[0] += t;
        y[1] += t;
        y[2] += t;
        y[3] += t;
    } else {
        throw apply_error("not a K-standard-basis move");
    }
    return y;
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

long field_of(const ClassVector& v) {
    for (const auto& s : v)
        if (s.d() != 0) return s.d();
    return 0;
}

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

std::string class_text(const BlockForm* f, const ClassVector& v, bool include_zeros = false) {
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < v.size(); ++i) {
        if (v[i].is_zero() && !include_zeros) continue;
        if (!first) os << ", ";
        first = false;
        if (f)
            os << f->slot_name(static_cast<int>(i));
        else
            os << "x" << i;
        os << "=" << v[i].str();
    }
    if (first) os << "0";
    return os.str();
}

ClassVector parse_class_text(const BlockForm* f, size_t nslots, long field_d,
                             const std::string& text) {
    ClassVector v(f ? f->slots : nslots);
    std::string t = text;
    // strip whitespace-only "0"
    size_t pos = 0;
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t");
        size_t e = s.find_last_not_of(" \t");
        if (b == std::string::npos) return std::string();
        return s.substr(b, e - b + 1);
    };
    if (trim(t) == "0") return v;
    std::vector<bool> seen(v.size(), false);
    while (pos < t.size()) {
        size_t comma = t.find(',', pos);
        std::string item = t.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? t.size() : comma + 1;
        item = trim(item);
        if (item.empty()) continue;
        size_t eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("bad slot assignment: " + item);
        std::string name = trim(item.substr(0, eq));
        std::string val = trim(item.substr(eq + 1));
        int slot;
        if (f) {
            slot = f->slot_index(name);
        } else {
            if (name.empty() || name[0] != 'x') throw std::invalid_argument("bad slot name: " + name);
            slot = std::stoi(name.substr(1));
            if (slot < 0 || slot >= static_cast<int>(v.size()))
                throw std::invalid_argument("slot index out of range: " + name);
        }
        if (seen[slot]) throw std::invalid_argument("repeated slot: " + name);
        seen[slot] = true;
        v[slot] = Scalar::parse(val, field_d);
    }
    return v;
}

const char* case_name(E8Case c) {
    switch (c) {
        case E8Case::C1a: return "1a";
        case E8Case::C1b: return "1b";
        case E8Case::C1c1: return "1c1";
        case E8Case::C1c2: return "1c2";
        case E8Case::C2a: return "2a";
        case E8Case::C2b: return "2b";
        case E8Case::C2c1: return "2c1";
        case E8Case::C2c2: return "2c2";
        case E8Case::C3a: return "3a";
        case E8Case::C3b: return "3b";
        case E8Case::C3c1: return "3c1";
        default: return "3c2";
    }
}

E8Case case_from_name(const std::string& s) {
    static const std::pair<const char*, E8Case> table[] = {
        {"1a", E8Case::C1a},   {"1b", E8Case::C1b},   {"1c1", E8Case::C1c1},
        {"1c2", E8Case::C1c2}, {"2a", E8Case::C2a},   {"2b", E8Case::C2b},
        {"2c1", E8Case::C2c1}, {"2c2", E8Case::C2c2}, {"3a", E8Case::C3a},
        {"3b", E8Case::C3b},   {"3c1", E8Case::C3c1}, {"3c2", E8Case::C3c2}};
    for (const auto& [n, c] : table)
        if (s == n) return c;
    throw std::invalid_argument("unknown E8 case: " + s);
}

}  // namespace

std::string Move::str() const {
    std::ostringstream os;
    switch (kind) {
        case MoveKind::ReflectMinus2: os << "reflect " << class_text(nullptr, refl); break;
        case MoveKind::HReflect: os << "hreflect h" << b1; break;
        case MoveKind::QMap: os << "qmap h" << b1 << " h" << b2; break;
        case MoveKind::QMapSingle: os << "qmap1 h" << b1; break;
        case MoveKind::Interchange: os << "interchange h" << b1 << " h" << b2; break;
        case MoveKind::Shear2H: os << "shear2h h" << b1 << " h" << b2 << " i=" << i; break;
        case MoveKind::HFiber: os << "hfiber h" << b1 << " i=" << i; break;
        case MoveKind::E8HAuto: {
            os << "e8auto e" << b1 << " h" << b2 << " r=";
            for (int j = 0; j < 8; ++j) os << (j ? "," : "") << r[j];
            break;
        }
        case MoveKind::E8HReflectCase:
            os << "e8case e" << b1 << " h" << b2 << " case=" << case_name(e8case)
               << " i=" << case_index;
            break;
        case MoveKind::E2BaseChange: os << "e2base h" << b1 << " i=" << i; break;
        case MoveKind::GammaReflect: os << "gammareflect"; break;
        case MoveKind::T4MapI: os << "t4map1 N=" << i; break;
        case MoveKind::T4MapII: os << "t4map2 N=" << i; break;
        case MoveKind::T4MapIII: os << "t4map3 A=" << i; break;
        case MoveKind::T4MapIV: os << "t4map4 A=" << i; break;
        case MoveKind::KTPhi0: os << "ktphi0"; break;
        case MoveKind::KTPhi1: os << "ktphi1 N=" << i; break;
        case MoveKind::KTPhi2: os << "ktphi2 Q=" << i; break;
        case MoveKind::E1Swap: os << "e1swap " << b1 << " " << b2; break;
        case MoveKind::E1Cremona: os << "e1cremona"; break;
    }
    return os.str();
}

namespace {

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) toks.push_back(t);
    return toks;
}

int parse_block_token(const std::string& t, char prefix) {
    if (t.size() < 2 || t[0] != prefix) throw std::invalid_argument("bad block token: " + t);
    return std::stoi(t.substr(1));
}

mpz_class parse_param(const std::string& t, const char* key) {
    std::string k = std::string(key) + "=";
    if (t.rfind(k, 0) != 0) throw std::invalid_argument("expected " + k + "...: " + t);
    return mpz_class(t.substr(k.size()));
}

}  // namespace

Move Move::parse(const std::string& line, const BlockForm* f) {
    auto toks = tokens_of(line);
    if (toks.empty()) throw std::invalid_argument("empty move line");
    const std::string& op = toks[0];
    if (op == "reflect") {
        if (!f) throw std::invalid_argument("reflect move needs a form context");
        std::string rest = line.substr(line.find("reflect") + 7);
        return reflect(parse_class_text(f, 0, 0, rest));
    }
    if (op == "hreflect") return h_reflect(parse_block_token(toks.at(1), 'h'));
    if (op == "qmap") return q_map(parse_block_token(toks.at(1), 'h'), parse_block_token(toks.at(2), 'h'));
    if (op == "qmap1") return q_map_single(parse_block_token(toks.at(1), 'h'));
    if (op == "interchange")
        return interchange(parse_block_token(toks.at(1), 'h'), parse_block_token(toks.at(2), 'h'));
    if (op == "shear2h")
        return shear_2h(parse_block_token(toks.at(1), 'h'), parse_block_token(toks.at(2), 'h'),
                        parse_param(toks.at(3), "i"));
    if (op == "hfiber") return h_fiber(parse_block_token(toks.at(1), 'h'), parse_param(toks.at(2), "i"));
    if (op == "e8auto") {
        int e = parse_block_token(toks.at(1), 'e');
        int h = parse_block_token(toks.at(2), 'h');
        std::string rv = toks.at(3);
        if (rv.rfind("r=", 0) != 0) throw std::invalid_argument("e8auto: expected r=..");
        rv = rv.substr(2);
        std::array<mpz_class, 8> r;
        size_t pos = 0;
        for (int j = 0; j < 8; ++j) {
            size_t comma = rv.find(',', pos);
            std::string piece = rv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            r[j] = mpz_class(piece);
            pos = comma == std::string::npos ? rv.size() : comma + 1;
        }
        return e8h_auto(e, h, std::move(r));
    }
    if (op == "e8case") {
        int e = parse_block_token(toks.at(1), 'e');
        int h = parse_block_token(toks.at(2), 'h');
        std::string cs = toks.at(3);
        if (cs.rfind("case=", 0) != 0) throw std::invalid_argument("e8case: expected case=..");
        E8Case c = case_from_name(cs.substr(5));
        int idx = static_cast<int>(parse_param(toks.at(4), "i").get_si());
        return e8h_case(e, h, c, idx);
    }
    if (op == "e2base") return e2_base_change(parse_block_token(toks.at(1), 'h'), parse_param(toks.at(2), "i"));
    if (op == "gammareflect") return gamma_reflect();
    if (op == "t4map1") return t4_map(1, parse_param(toks.at(1), "N"));
    if (op == "t4map2") return t4_map(2, parse_param(toks.at(1), "N"));
    if (op == "t4map3") return t4_map(3, parse_param(toks.at(1), "A"));
    if (op == "t4map4") return t4_map(4, parse_param(toks.at(1), "A"));
    if (op == "ktphi0") return kt_phi0();
    if (op == "ktphi1") return kt_phi1(parse_param(toks.at(1), "N"));
    if (op == "ktphi2") return kt_phi2(parse_param(toks.at(1), "Q"));
    if (op == "e1swap") return e1_swap(std::stoi(toks.at(1)), std::stoi(toks.at(2)));
    if (op == "e1cremona") return e1_cremona();
    throw std::invalid_argument("unknown move: " + op);
}

ClassVector cumulative_fiber(const BlockForm& f, const std::vector<Move>& word, size_t count) {
    ClassVector v = fiber_class(f);
    if (count > word.size()) count = word.size();
    for (size_t t = count; t-- > 0;) v = apply_move_inverse(f, word[t], v);
    return v;
}

Certificate make_certificate(const BlockForm& f, const std::string& descriptor, long field_d,
                             const ClassVector& input, const std::vector<Move>& word) {
    Certificate cert;
    cert.descriptor = descriptor;
    cert.field_d = field_d;
    cert.input = input;
    cert.moves = word;
    ClassVector cur = input;
    for (size_t j = 0; j < word.size(); ++j) {
        cur = apply_move(f, word[j], cur);
        if (move_changes_fiber(word[j]))
            cert.fiber_track.emplace_back(static_cast<int>(j), cumulative_fiber(f, word, j + 1));
    }
    cert.output = cur;
    return cert;
}

std::string Certificate::serialize() const {
    std::ostringstream os;
    os << "symcone certificate v1\n";
    os << "descriptor: " << descriptor << "\n";
    os << "field: " << (field_d == 0 ? std::string("rational") : "sqrt " + std::to_string(field_d))
       << "\n";
    os << "basis: " << (basis == CertBasis::Block ? "block" : "e1") << "\n";
    if (manifest_hash != 0) {
        os << "manifest-hash: " << std::hex << manifest_hash << std::dec << "\n";
    }
    BlockForm form;
    const BlockForm* fp = nullptr;
    if (basis == CertBasis::Block) {
        form = build_form(ManifoldDescriptor::parse(descriptor));
        fp = &form;
    }
    const bool zeros = basis == CertBasis::E1Standard;
    os << "input: " << class_text(fp, input, zeros) << "\n";
    os << "moves: " << moves.size() << "\n";
    size_t ft = 0;
    for (size_t j = 0; j < moves.size(); ++j) {
        os << "  " << moves[j].str() << "\n";
        if (ft < fiber_track.size() && fiber_track[ft].first == static_cast<int>(j)) {
            os << "  fiber: " << class_text(fp, fiber_track[ft].second) << "\n";
            ++ft;
        }
    }
    os << "output: " << class_text(fp, output, zeros) << "\n";
    os << "end\n";
    return os.str();
}

Certificate Certificate::deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    auto next = [&]() {
        if (!std::getline(is, line)) throw std::invalid_argument("truncated certificate");
        return line;
    };
    if (next() != "symcone certificate v1")
        throw std::invalid_argument("not a symcone certificate");
    Certificate cert;
    auto field_of = [](const std::string& l, const char* key) {
        std::string k = std::string(key) + ": ";
        if (l.rfind(k, 0) != 0) throw std::invalid_argument("expected '" + k + "' line, got: " + l);
        return l.substr(k.size());
    };
    cert.descriptor = field_of(next(), "descriptor");
    std::string fld = field_of(next(), "field");
    if (fld == "rational") cert.field_d = 0;
    else if (fld.rfind("sqrt ", 0) == 0) cert.field_d = std::stol(fld.substr(5));
    else throw std::invalid_argument("bad field line: " + fld);
    std::string bs = field_of(next(), "basis");
    cert.basis = bs == "block" ? CertBasis::Block
               : bs == "e1"    ? CertBasis::E1Standard
                               : throw std::invalid_argument("bad basis: " + bs);
    next();
    if (line.rfind("manifest-hash: ", 0) == 0) {
        cert.manifest_hash = std::stoull(line.substr(15), nullptr, 16);
        next();
    }
    BlockForm form;
    const BlockForm* fp = nullptr;
    size_t nslots = 0;
    if (cert.basis == CertBasis::Block) {
        form = build_form(ManifoldDescriptor::parse(cert.descriptor));
        fp = &form;
    }
    std::string in_text = field_of(line, "input");
    size_t nmoves = std::stoul(field_of(next(), "moves"));
    std::vector<std::string> move_lines;
    std::vector<std::pair<int, std::string>> fiber_lines;
    for (size_t j = 0; j < nmoves; ++j) {
        std::string ml = next();
        move_lines.push_back(ml);
        std::streampos save = is.tellg();
        if (std::getline(is, line) && line.find("fiber: ") != std::string::npos) {
            fiber_lines.emplace_back(static_cast<int>(j), line.substr(line.find("fiber: ") + 7));
        } else {
            is.clear();
            is.seekg(save);
        }
    }
    std::string out_text = field_of(next(), "output");
    if (next() != "end") throw std::invalid_argument("missing 'end' line");

    if (cert.basis == CertBasis::E1Standard) {
        // e1 vectors use x<i> slot names; infer the length from the input text
        size_t maxslot = 0;
        for (const std::string* t : {&in_text, &out_text}) {
            std::istringstream ts(*t);
            std::string item;
            while (std::getline(ts, item, ',')) {
                size_t x = item.find('x');
                size_t eq = item.find('=');
                if (x != std::string::npos && eq != std::string::npos && eq > x)
                    maxslot = std::max(maxslot, (size_t)std::stoul(item.substr(x + 1, eq - x - 1)));
            }
        }
        nslots = maxslot + 1;
        if (nslots < 10) nslots = 10;
    }
    cert.input = parse_class_text(fp, nslots, cert.field_d, in_text);
    cert.output = parse_class_text(fp, cert.input.size(), cert.field_d, out_text);
    for (const auto& ml : move_lines) {
        std::string trimmed = ml;
        size_t b = trimmed.find_first_not_of(" \t");
        trimmed = b == std::string::npos ? "" : trimmed.substr(b);
        cert.moves.push_back(Move::parse(trimmed, fp));
    }
    for (const auto& [idx, ftext] : fiber_lines)
        cert.fiber_track.emplace_back(idx, parse_class_text(fp, cert.input.size(), cert.field_d, ftext));
    return cert;
}

bool verify_certificate(const BlockForm& f, const Certificate& cert, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (cert.basis == CertBasis::E1Standard) return verify_e1_certificate(cert, why);
    if (static_cast<int>(cert.input.size()) != f.slots) return fail("input length mismatch");
    if (static_cast<int>(cert.output.size()) != f.slots) return fail("output length mismatch");
    ClassVector cur = cert.input;
    size_t ft = 0;
    try {
        for (size_t j = 0; j < cert.moves.size(); ++j) {
            cur = apply_move(f, cert.moves[j], cur);
            if (move_changes_fiber(cert.moves[j])) {
                if (ft >= cert.fiber_track.size() ||
                    cert.fiber_track[ft].first != static_cast<int>(j))
                    return fail("missing fiber image after move " + std::to_string(j));
                ClassVector expect = cumulative_fiber(f, cert.moves, j + 1);
                if (cert.fiber_track[ft].second != expect)
                    return fail("fiber image mismatch after move " + std::to_string(j));
                ++ft;
            }
        }
    } catch (const std::exception& e) {
        return fail(std::string("replay error: ") + e.what());
    }
    if (ft != cert.fiber_track.size()) return fail("extra fiber images recorded");
    if (cur != cert.output) return fail("replay does not reach the claimed output");
    return true;
}

bool verify_e1_certificate(const Certificate& cert, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (cert.input.size() != cert.output.size()) return fail("input/output length mismatch");
    std::vector<Scalar> cur = cert.input;
    try {
        for (const auto& mv : cert.moves) cur = apply_e1_move(mv, cur);
    } catch (const std::exception& e) {
        return fail(std::string("replay error: ") + e.what());
    }
    if (ClassVector(cur) != cert.output) return fail("replay does not reach the claimed output");
    return true;
}

}  // namespace symcone
