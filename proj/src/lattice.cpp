#include "symcone/lattice.hpp"

#include <cassert>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace symcone {

const std::array<std::array<int, 8>, 8> kE8Gram = {{
    {-2, 0, 0, 1, 0, 0, 0, 0},
    {0, -2, 1, 0, 0, 0, 0, 0},
    {0, 1, -2, 1, 0, 0, 0, 0},
    {1, 0, 1, -2, 1, 0, 0, 0},
    {0, 0, 0, 1, -2, 1, 0, 0},
    {0, 0, 0, 0, 1, -2, 1, 0},
    {0, 0, 0, 0, 0, 1, -2, 1},
    {0, 0, 0, 0, 0, 0, 1, -2},
}};

ManifoldDescriptor ManifoldDescriptor::elliptic(long n, long g, long l) {
    if (n < 1 || g < 0 || l < 0) throw std::invalid_argument("E(n,g): need n>=1, g>=0, l>=0");
    ManifoldDescriptor m;
    m.kind = ManifoldKind::EllipticPos;
    m.n = n;
    m.genus = g;
    m.blowups = l;
    return m;
}

ManifoldDescriptor ManifoldDescriptor::torus4(long l) {
    ManifoldDescriptor m;
    m.kind = ManifoldKind::Torus4;
    m.blowups = l;
    return m;
}

ManifoldDescriptor ManifoldDescriptor::kodaira_thurston(long lambda, long l) {
    if (lambda == 0) throw std::invalid_argument("KT(lambda): lambda must be nonzero");
    ManifoldDescriptor m;
    m.kind = ManifoldKind::KodairaThurston;
    m.lambda = lambda;
    m.blowups = l;
    return m;
}

ManifoldDescriptor ManifoldDescriptor::bundle_sum(std::vector<BundleComponent> cs, long l) {
    if (cs.empty()) throw std::invalid_argument("MB[...]: need at least one component");
    for (const auto& c : cs)
        if (c.piece == BundlePiece::KT && c.lambda == 0)
            throw std::invalid_argument("KT component needs nonzero lambda");
    ManifoldDescriptor m;
    m.kind = ManifoldKind::TorusBundleSum;
    m.components = std::move(cs);
    m.blowups = l;
    return m;
}

std::string ManifoldDescriptor::str() const {
    std::ostringstream os;
    switch (kind) {
        case ManifoldKind::EllipticPos:
            os << "E(" << n << "," << genus << ")";
            break;
        case ManifoldKind::Torus4:
            os << "T4";
            break;
        case ManifoldKind::KodairaThurston:
            os << "KT(" << lambda << ")";
            break;
        case ManifoldKind::TorusBundleSum: {
            os << "MB[";
            for (size_t i = 0; i < components.size(); ++i) {
                if (i) os << ",";
                const auto& c = components[i];
                if (c.piece == BundlePiece::T4) os << "T4";
                else if (c.piece == BundlePiece::KT) os << "KT(" << c.lambda << ")";
                else os << "B1";
            }
            os << "]";
            break;
        }
    }
    if (blowups > 0) os << "+" << blowups << "bu";
    return os.str();
}

namespace {

struct DCursor {
    const std::string& s;
    size_t i = 0;
    void ws() { while (i < s.size() && isspace((unsigned char)s[i])) ++i; }
    bool eat(char c) {
        ws();
        if (i < s.size() && s[i] == c) { ++i; return true; }
        return false;
    }
    bool eat_word(const char* w) {
        ws();
        size_t j = i;
        for (const char* p = w; *p; ++p, ++j)
            if (j >= s.size() || s[j] != *p) return false;
        i = j;
        return true;
    }
    long num() {
        ws();
        size_t start = i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        size_t digits = i;
        while (i < s.size() && isdigit((unsigned char)s[i])) ++i;
        if (i == digits) throw std::invalid_argument("expected number in descriptor: " + s);
        return std::stol(s.substr(start, i - start));
    }
    void expect(char c) {
        if (!eat(c)) throw std::invalid_argument(std::string("expected '") + c + "' in descriptor: " + s);
    }
    bool at_end() { ws(); return i >= s.size(); }
};

long parse_blowups(DCursor& c) {
    if (c.eat('+')) {
        long l = c.num();
        if (!c.eat_word("bu")) throw std::invalid_argument("expected 'bu' after blow-up count");
        if (l < 0) throw std::invalid_argument("negative blow-up count");
        return l;
    }
    return 0;
}

}  // namespace

ManifoldDescriptor ManifoldDescriptor::parse(const std::string& text) {
    DCursor c{text};
    ManifoldDescriptor m;
    if (c.eat_word("E(")) {
        long n = c.num();
        c.expect(',');
        long g = c.num();
        c.expect(')');
        m = elliptic(n, g, parse_blowups(c));
    } else if (c.eat_word("T4")) {
        m = torus4(parse_blowups(c));
    } else if (c.eat_word("KT(")) {
        long lam = c.num();
        c.expect(')');
        m = kodaira_thurston(lam, parse_blowups(c));
    } else if (c.eat_word("MB[")) {
        std::vector<BundleComponent> cs;
        while (true) {
            if (c.eat_word("T4")) cs.push_back({BundlePiece::T4, 0});
            else if (c.eat_word("KT(")) {
                long lam = c.num();
                c.expect(')');
                cs.push_back({BundlePiece::KT, lam});
            } else if (c.eat_word("B1")) cs.push_back({BundlePiece::BPlusOne, 0});
            else throw std::invalid_argument("unknown bundle component in: " + text);
            if (c.eat(']')) break;
            c.expect(',');
        }
        m = bundle_sum(std::move(cs), parse_blowups(c));
    } else {
        throw std::invalid_argument("unknown manifold descriptor: " + text);
    }
    if (!c.at_end()) throw std::invalid_argument("trailing text in descriptor: " + text);
    return m;
}

// ---------------------------------------------------------------------------

BlockForm build_form(const ManifoldDescriptor& m) {
    BlockForm f;
    int off = 0;
    auto add = [&](Block b) {
        b.offset = off;
        off += b.size();
        f.blocks.push_back(b);
    };
    switch (m.kind) {
        case ManifoldKind::EllipticPos: {
            for (long i = 0; i < m.n; ++i) add({BlockKind::E8, 0});
            // rim-capable pairs P_1..P_{n-1} first, then the 2g torus pairs
            for (long i = 0; i < 2 * (m.n - 1); ++i) add({BlockKind::H, 0, 0, HTag::RimPair});
            for (long i = 0; i < 2 * m.genus; ++i) add({BlockKind::H, 0, 0, HTag::TorusPair});
            add({BlockKind::Fiber, 0, -m.n});
            break;
        }
        case ManifoldKind::Torus4:
            add({BlockKind::H, 0, 0, HTag::TorusPair});
            add({BlockKind::H, 0, 0, HTag::TorusPair});
            add({BlockKind::Fiber, 0, 0});
            break;
        case ManifoldKind::KodairaThurston:
            add({BlockKind::H, 0, 0, HTag::TorusPair});
            add({BlockKind::Fiber, 0, 0});
            break;
        case ManifoldKind::TorusBundleSum: {
            int bplus = 0;
            for (const auto& c : m.components) {
                if (c.piece == BundlePiece::T4) bplus += 3;
                else if (c.piece == BundlePiece::KT) bplus += 2;
                else bplus += 1;
            }
            bplus -= static_cast<int>(m.components.size()) - 1;
            for (int i = 0; i < bplus - 1; ++i) add({BlockKind::H, 0, 0, HTag::TorusPair});
            add({BlockKind::Fiber, 0, 0});
            break;
        }
    }
    for (long i = 0; i < m.blowups; ++i) add({BlockKind::MinusOne, 0});

    f.slots = off;
    for (size_t i = 0; i < f.blocks.size(); ++i) {
        switch (f.blocks[i].kind) {
            case BlockKind::E8: f.e8_count++; break;
            case BlockKind::H: f.h_count++; break;
            case BlockKind::Fiber: f.fiber_block_index = static_cast<int>(i); break;
            case BlockKind::MinusOne: f.blowup_count++; break;
        }
    }
    return f;
}

std::string BlockForm::slot_name(int slot) const {
    for (const auto& b : blocks) {
        if (slot < b.offset || slot >= b.offset + b.size()) continue;
        int k = slot - b.offset;
        switch (b.kind) {
            case BlockKind::E8: {
                int idx = 0;
                for (const auto& o : blocks) {
                    if (&o == &b) break;
                    if (o.kind == BlockKind::E8) ++idx;
                }
                return "e8[" + std::to_string(idx) + "].k" + std::to_string(k);
            }
            case BlockKind::H: {
                int idx = 0;
                for (const auto& o : blocks) {
                    if (&o == &b) break;
                    if (o.kind == BlockKind::H) ++idx;
                }
                return "h[" + std::to_string(idx) + "]." + (k == 0 ? "a" : "b");
            }
            case BlockKind::Fiber:
                return k == 0 ? "F" : "Gamma";
            case BlockKind::MinusOne: {
                int idx = 0;
                for (const auto& o : blocks) {
                    if (&o == &b) break;
                    if (o.kind == BlockKind::MinusOne) ++idx;
                }
                return "E[" + std::to_string(idx + 1) + "]";
            }
        }
    }
    throw std::out_of_range("slot index out of range");
}

int BlockForm::slot_index(const std::string& name) const {
    for (int s = 0; s < slots; ++s)
        if (slot_name(s) == name) return s;
    throw std::invalid_argument("unknown slot name: " + name);
}

ClassVector zero_class(const BlockForm& f) { return ClassVector(f.slots); }

ClassVector basis_class(const BlockForm& f, int slot) {
    ClassVector v = zero_class(f);
    v.at(slot) = Scalar(1);
    return v;
}

ClassVector fiber_class(const BlockForm& f) { return basis_class(f, f.fiber_c_slot()); }

Scalar pair(const BlockForm& f, const ClassVector& x, const ClassVector& y) {
    if (static_cast<int>(x.size()) != f.slots || static_cast<int>(y.size()) != f.slots)
        throw std::invalid_argument("class length does not match form");
    Scalar acc;
    for (const auto& b : f.blocks) {
        switch (b.kind) {
            case BlockKind::E8:
                for (int i = 0; i < 8; ++i)
                    for (int j = 0; j < 8; ++j)
                        if (kE8Gram[i][j] != 0)
                            acc += x[b.offset + i] * y[b.offset + j] * Scalar(kE8Gram[i][j]);
                break;
            case BlockKind::H:
                acc += x[b.offset] * y[b.offset + 1] + x[b.offset + 1] * y[b.offset];
                break;
            case BlockKind::Fiber:
                acc += x[b.offset] * y[b.offset + 1] + x[b.offset + 1] * y[b.offset] +
                       x[b.offset + 1] * y[b.offset + 1] * Scalar(b.gamma_sq);
                break;
            case BlockKind::MinusOne:
                acc -= x[b.offset] * y[b.offset];
                break;
        }
    }
    return acc;
}

Scalar square(const BlockForm& f, const ClassVector& x) { return pair(f, x, x); }

bool is_integral(const ClassVector& x) {
    for (const auto& s : x)
        if (!s.is_integer()) return false;
    return true;
}

std::optional<IntegralFactor> integral_multiple(const ClassVector& x) {
    int pivot = -1;
    for (size_t i = 0; i < x.size(); ++i)
        if (!x[i].is_zero()) { pivot = static_cast<int>(i); break; }
    if (pivot < 0) return IntegralFactor{Scalar(1), std::vector<mpz_class>(x.size(), 0)};
    mpz_class den = 1;
    std::vector<mpq_class> ratios(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        Scalar r = x[i] / x[pivot];
        if (!r.is_rational()) return std::nullopt;
        ratios[i] = r.a();
        mpz_class d = ratios[i].get_den();
        mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), d.get_mpz_t());
    }
    std::vector<mpz_class> w(x.size());
    mpz_class content = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mpq_class scaled = ratios[i] * den;
        assert(scaled.get_den() == 1);
        w[i] = scaled.get_num();
        mpz_gcd(content.get_mpz_t(), content.get_mpz_t(), w[i].get_mpz_t());
    }
    for (auto& e : w) e /= content;
    if (sgn(w[pivot]) < 0)
        for (auto& e : w) e = -e;
    Scalar omega = x[pivot] / Scalar(w[pivot]);
    return IntegralFactor{omega, std::move(w)};
}

Kodaira kodaira_dimension(const ManifoldDescriptor& m) {
    if (m.kind != ManifoldKind::EllipticPos) return Kodaira::Zero;
    long delta = 2 * m.genus - 2 + m.n;
    if (delta < 0) return Kodaira::MinusInfinity;
    return delta == 0 ? Kodaira::Zero : Kodaira::One;
}

int betti_plus(const BlockForm& f) {
    int b = 0;
    for (const auto& blk : f.blocks)
        if (blk.kind == BlockKind::H || blk.kind == BlockKind::Fiber) ++b;
    return b;
}

int betti_plus(const ManifoldDescriptor& m) { return betti_plus(build_form(m)); }

ClassVector CanonicalClass::to_class(const BlockForm& f) const {
    ClassVector v = zero_class(f);
    v[f.fiber_c_slot()] = Scalar(fiber_multiple);
    if (static_cast<int>(deltas.size()) != f.blowup_count)
        throw std::invalid_argument("canonical class sign vector length mismatch");
    for (int i = 0; i < f.blowup_count; ++i)
        v[f.blowup_slot(i)] = Scalar(-deltas[i]);
    return v;
}

std::string CanonicalClass::str() const {
    std::ostringstream os;
    os << fiber_multiple << "F";
    for (size_t i = 0; i < deltas.size(); ++i)
        os << (deltas[i] > 0 ? "-" : "+") << "E" << (i + 1);
    return os.str();
}

std::vector<CanonicalClass> canonical_classes(const ManifoldDescriptor& m) {
    long mult = 0;
    if (m.kind == ManifoldKind::EllipticPos) mult = 2 * m.genus - 2 + m.n;
    // chi = 0 bundles carry K_min = 0 (or torsion), so only the sign sweep remains
    std::vector<CanonicalClass> out;
    const long l = m.blowups;
    if (l > 40) throw std::invalid_argument("too many blow-ups to enumerate canonical classes");
    for (long mask = 0; mask < (1L << l); ++mask) {
        CanonicalClass k;
        k.fiber_multiple = mult;
        k.deltas.resize(l);
        for (long i = 0; i < l; ++i) k.deltas[i] = (mask >> i) & 1 ? -1 : 1;
        out.push_back(std::move(k));
    }
    return out;
}

}  // namespace symcone
