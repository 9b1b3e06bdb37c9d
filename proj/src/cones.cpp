#include "symcone/cones.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace symcone {

std::string ConeVerdict::str() const {
    std::ostringstream os;
    switch (decision) {
        case Decision::Member: os << "member"; break;
        case Decision::NonMember: os << "non-member"; break;
        case Decision::Undecided: os << "undecided"; break;
    }
    os << " (";
    switch (kind) {
        case ConeKind::Positive: os << "positive cone"; break;
        case ConeKind::RelativePositive: os << "relative positive cone"; break;
        case ConeKind::RelativeSymplectic: os << "relative symplectic cone"; break;
        case ConeKind::FullSymplectic: os << "full symplectic cone"; break;
    }
    os << ")";
    if (violated != ViolatedCond::None) {
        os << " violated=";
        switch (violated) {
            case ViolatedCond::Square: os << "square"; break;
            case ViolatedCond::FiberPairing: os << "fiber-pairing"; break;
            case ViolatedCond::ExceptionalIndex: os << "exceptional-class[" << violated_index << "]"; break;
            case ViolatedCond::ReducedForm: os << "reduced-form"; break;
            case ViolatedCond::OutOfScope: os << "out-of-scope"; break;
            default: break;
        }
    }
    if (!note.empty()) os << " -- " << note;
    return os.str();
}

ConeVerdict in_positive_cone(const BlockForm& f, const ClassVector& alpha) {
    ConeVerdict v;
    v.kind = ConeKind::Positive;
    if (square(f, alpha) > Scalar(0)) {
        v.decision = Decision::Member;
    } else {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
    }
    return v;
}

ConeVerdict in_relative_positive_cone(const BlockForm& f, const ClassVector& alpha,
                                      const ClassVector& a) {
    ConeVerdict v;
    v.kind = ConeKind::RelativePositive;
    bool a_zero = true;
    for (const auto& s : a)
        if (!s.is_zero()) a_zero = false;
    if (!(square(f, alpha) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
        return v;
    }
    if (!a_zero && !(pair(f, alpha, a) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::FiberPairing;
        return v;
    }
    v.decision = Decision::Member;
    return v;
}

// ---------------------------------------------------------------------------
// E(1) K-standard reduction
// ---------------------------------------------------------------------------

bool e1_is_reduced_member(const std::vector<Scalar>& v) {
    if (v.size() < 2) return false;
    for (size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] < v[i + 1]) return false;
    for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > Scalar(0))) return false;
    Scalar top;
    for (size_t i = 1; i < std::min<size_t>(4, v.size()); ++i) top += v[i];
    return v[0] >= top;
}

E1Reduction reduce_e1(const std::vector<Scalar>& v0, long iteration_cap) {
    if (v0.size() < 2) throw std::invalid_argument("reduce_e1: needs (a; b1..bN)");
    // square >= 0 keeps the descent bounded; the fiber class (3; 1,...,1)
    // sits exactly on the boundary
    if (e1_pair(v0, v0).sign() < 0)
        throw std::invalid_argument("reduce_e1: class must have nonnegative square");
    std::vector<Scalar> v = v0;
    std::vector<Move> word;
    const size_t n = v.size();
    auto sort_desc = [&]() {
        for (size_t i = 1; i < n; ++i) {
            size_t best = i;
            for (size_t j = i + 1; j < n; ++j)
                if (v[j] > v[best]) best = j;
            if (best != i) {
                Move mv = Move::e1_swap(static_cast<int>(i), static_cast<int>(best));
                v = apply_e1_move(mv, v);
                word.push_back(std::move(mv));
            }
        }
    };
    bool terminal = false;
    bool wrong_component = false;
    for (long it = 0; it < iteration_cap; ++it) {
        if (v[0].sign() <= 0 && e1_pair(v, v).sign() > 0) {
            // reflections on -2 classes preserve the light cone components,
            // so a negative leading coefficient can never reach a reduced
            // member state
            wrong_component = true;
            terminal = true;
            break;
        }
        sort_desc();
        Scalar top;
        for (size_t i = 1; i < std::min<size_t>(4, n); ++i) top += v[i];
        if (v[0] >= top) {
            terminal = true;
            break;
        }
        Move mv = Move::e1_cremona();
        v = apply_e1_move(mv, v);
        word.push_back(std::move(mv));
    }

    E1Reduction out;
    out.reduced = v;
    Certificate cert;
    long extra = static_cast<long>(n) - 10;
    cert.descriptor = "E(1,0)" + (extra > 0 ? "+" + std::to_string(extra) + "bu" : "");
    cert.basis = CertBasis::E1Standard;
    cert.input = v0;
    cert.output = v;
    cert.moves = std::move(word);
    out.cert = std::move(cert);
    out.verdict.kind = ConeKind::RelativeSymplectic;
    if (!terminal) {
        out.verdict.decision = Decision::Undecided;
        out.verdict.note = "iteration cap exceeded";
        return out;
    }
    if (wrong_component) {
        out.verdict.decision = Decision::NonMember;
        out.verdict.violated = ViolatedCond::ReducedForm;
        out.verdict.note = "negative light cone component";
        return out;
    }
    if (e1_is_reduced_member(v)) {
        out.verdict.decision = Decision::Member;
        out.verdict.witness = out.cert;
    } else {
        out.verdict.decision = Decision::NonMember;
        out.verdict.violated = ViolatedCond::ReducedForm;
        for (size_t i = 1; i < n; ++i)
            if (!(v[i] > Scalar(0))) {
                out.verdict.violated_index = static_cast<int>(i);
                break;
            }
    }
    return out;
}

std::vector<Scalar> base_change_split_to_standard(const std::array<Scalar, 8>& k, const Scalar& g,
                                                  const Scalar& c) {
    std::vector<Scalar> v(10);
    v[0] = Scalar(3) * c + k[0];
    v[1] = c + k[0] - k[1];
    v[2] = c + k[0] + k[1] - k[2];
    v[3] = c + k[0] + k[2] - k[3];
    v[4] = c + k[3] - k[4];
    v[5] = c + k[4] - k[5];
    v[6] = c + k[5] - k[6];
    v[7] = c + k[6] - k[7];
    v[8] = c + k[7];
    v[9] = c - g;
    return v;
}

std::vector<Scalar> e1_standard_vector(const BlockForm& f, const ClassVector& alpha,
                                       const CanonicalClass& k) {
    if (f.e8_count != 1) throw std::invalid_argument("e1_standard_vector: needs an E(1)+l form");
    std::array<Scalar, 8> kv;
    for (int i = 0; i < 8; ++i) kv[i] = alpha[f.e8_slot(0, i)];
    std::vector<Scalar> v =
        base_change_split_to_standard(kv, alpha[f.fiber_g_slot()], alpha[f.fiber_c_slot()]);
    if (static_cast<int>(k.deltas.size()) != f.blowup_count)
        throw std::invalid_argument("canonical class does not match the blow-up count");
    for (int i = 0; i < f.blowup_count; ++i)
        v.push_back(Scalar(k.deltas[i]) * alpha[f.blowup_slot(i)]);
    return v;
}

// ---------------------------------------------------------------------------
// relative symplectic cone
// ---------------------------------------------------------------------------

namespace {

bool has_bplus_one_piece(const ManifoldDescriptor& m) {
    if (m.kind != ManifoldKind::TorusBundleSum) return false;
    for (const auto& c : m.components)
        if (c.piece == BundlePiece::BPlusOne) return true;
    return false;
}

}  // namespace

ConeVerdict relative_cone_member(const ManifoldDescriptor& m, const BlockForm& f,
                                 const ClassVector& alpha, const CanonicalClass& k,
                                 long iteration_cap) {
    ConeVerdict v;
    v.kind = ConeKind::RelativeSymplectic;
    if (static_cast<long>(k.deltas.size()) != m.blowups)
        throw std::invalid_argument("canonical class does not match the descriptor");
    long expect = m.kind == ManifoldKind::EllipticPos ? 2 * m.genus - 2 + m.n : 0;
    if (k.fiber_multiple != expect)
        throw std::invalid_argument("canonical class fiber multiple does not match the descriptor");

    if (has_bplus_one_piece(m)) {
        v.decision = Decision::Undecided;
        v.violated = ViolatedCond::OutOfScope;
        v.note = "torus-bundle sums with a b+=1 piece are decided per component";
        return v;
    }

    if (kodaira_dimension(m) == Kodaira::MinusInfinity) {
        // E(1)+l: decided through the K-standard reduced form
        if (!(square(f, alpha) > Scalar(0))) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::Square;
            return v;
        }
        if (!(pair(f, alpha, fiber_class(f)) > Scalar(0))) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::FiberPairing;
            return v;
        }
        E1Reduction red = reduce_e1(e1_standard_vector(f, alpha, k), iteration_cap);
        v = red.verdict;
        v.kind = ConeKind::RelativeSymplectic;
        return v;
    }

    if (!(square(f, alpha) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
        return v;
    }
    if (!(pair(f, alpha, fiber_class(f)) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::FiberPairing;
        return v;
    }
    for (int i = 0; i < f.blowup_count; ++i) {
        // alpha . (-delta_i E_i) = delta_i e_i must be positive
        Scalar val = Scalar(k.deltas[i]) * alpha[f.blowup_slot(i)];
        if (!(val > Scalar(0))) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::ExceptionalIndex;
            v.violated_index = i + 1;
            return v;
        }
    }
    v.decision = Decision::Member;
    return v;
}

// ---------------------------------------------------------------------------
// full symplectic cone
// ---------------------------------------------------------------------------

namespace {

// Minimal model is E(2), a T^2-bundle over T^2, or b+ = 1: the fiber
// condition is dropped.
bool full_cone_drops_fiber(const ManifoldDescriptor& m, const BlockForm& f) {
    if (betti_plus(f) == 1) return true;
    if (m.is_e2()) return true;
    if (m.kind == ManifoldKind::Torus4 || m.kind == ManifoldKind::KodairaThurston) return true;
    if (m.kind == ManifoldKind::TorusBundleSum && m.components.size() == 1) return true;
    return false;
}

}  // namespace

ConeVerdict full_cone_member(const ManifoldDescriptor& m, const BlockForm& f,
                             const ClassVector& alpha, long iteration_cap) {
    ConeVerdict v;
    v.kind = ConeKind::FullSymplectic;
    if (has_bplus_one_piece(m) && m.components.size() > 1) {
        v.decision = Decision::Undecided;
        v.violated = ViolatedCond::OutOfScope;
        v.note = "torus-bundle sums with a b+=1 piece are decided per component";
        return v;
    }
    if (!(square(f, alpha) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
        return v;
    }

    if (kodaira_dimension(m) == Kodaira::MinusInfinity) {
        // sign-normalized reduced-form test spanning the canonical-class sweep
        CanonicalClass k;
        k.fiber_multiple = 2 * m.genus - 2 + m.n;
        k.deltas.assign(m.blowups, 1);
        std::vector<Scalar> w = e1_standard_vector(f, alpha, k);
        const size_t n = w.size();
        bool terminal = false;
        for (long it = 0; it < iteration_cap; ++it) {
            // interleave the exceptional sign sweep and the global flip with
            // the Cremona descent
            if (w[0].sign() < 0)
                for (auto& x : w) x = -x;
            for (size_t i = 1; i < n; ++i)
                if (w[i].sign() < 0) w[i] = -w[i];
            std::sort(w.begin() + 1, w.end(), [](const Scalar& x, const Scalar& y) { return y < x; });
            Scalar top;
            for (size_t i = 1; i < std::min<size_t>(4, n); ++i) top += w[i];
            if (w[0] >= top) {
                terminal = true;
                break;
            }
            Scalar t = w[0] - top;
            w[0] += t;
            for (size_t i = 1; i < std::min<size_t>(4, n); ++i) w[i] += t;
        }
        if (!terminal) {
            v.decision = Decision::Undecided;
            v.note = "reduction cap exceeded";
            return v;
        }
        for (size_t i = 1; i < n; ++i)
            if (!(w[i] > Scalar(0))) {
                v.decision = Decision::NonMember;
                v.violated = ViolatedCond::ReducedForm;
                v.violated_index = static_cast<int>(i);
                return v;
            }
        v.decision = Decision::Member;
        return v;
    }

    for (int i = 0; i < f.blowup_count; ++i) {
        if (alpha[f.blowup_slot(i)].is_zero()) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::ExceptionalIndex;
            v.violated_index = i + 1;
            return v;
        }
    }
    if (!full_cone_drops_fiber(m, f)) {
        if (pair(f, alpha, fiber_class(f)).is_zero()) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::FiberPairing;
            return v;
        }
    }
    v.decision = Decision::Member;
    return v;
}

// ---------------------------------------------------------------------------
// special families
// ---------------------------------------------------------------------------

ConeVerdict s2t2_cone_member(long l, const Scalar& a, const Scalar& b,
                             const std::vector<Scalar>& e) {
    if (static_cast<long>(e.size()) != l)
        throw std::invalid_argument("s2t2_cone_member: wrong number of exceptional weights");
    ConeVerdict v;
    v.kind = ConeKind::RelativeSymplectic;
    Scalar sq = Scalar(2) * a * b;
    for (const auto& ei : e) sq -= ei * ei;
    if (!(sq > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
        return v;
    }
    if (!(b > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::FiberPairing;
        return v;
    }
    for (size_t i = 0; i < e.size(); ++i) {
        if (!(e[i] > Scalar(0)) || !(a - e[i] > Scalar(0))) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::ExceptionalIndex;
            v.violated_index = static_cast<int>(i) + 1;
            return v;
        }
    }
    v.decision = Decision::Member;
    return v;
}

ConeVerdict kt_t4_full_member(const ManifoldDescriptor& m, const BlockForm& f,
                              const ClassVector& alpha) {
    bool supported = m.is_e2() || m.kind == ManifoldKind::Torus4 ||
                     m.kind == ManifoldKind::KodairaThurston;
    if (!supported)
        throw std::invalid_argument("kt_t4_full_member: descriptor must be E(2)+l, T4+l or KT+l");
    ConeVerdict v;
    v.kind = ConeKind::FullSymplectic;
    if (!(square(f, alpha) > Scalar(0))) {
        v.decision = Decision::NonMember;
        v.violated = ViolatedCond::Square;
        return v;
    }
    for (int i = 0; i < f.blowup_count; ++i) {
        if (alpha[f.blowup_slot(i)].is_zero()) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::ExceptionalIndex;
            v.violated_index = i + 1;
            return v;
        }
    }
    ClassVector fib = fiber_class(f);
    std::vector<Move> word;
    if (pair(f, alpha, fib).is_zero()) {
        // search the finite list of fiber-swapping moves for a new fiber with
        // nonzero pairing
        std::vector<std::vector<Move>> candidates;
        if (m.is_e2()) {
            for (int h : {0, 1})
                for (int i : {1, -1}) {
                    candidates.push_back({Move::e2_base_change(h, i)});
                    candidates.push_back({Move::h_reflect(h), Move::e2_base_change(h, i)});
                }
            candidates.push_back({Move::gamma_reflect()});
        } else if (m.kind == ManifoldKind::KodairaThurston) {
            candidates.push_back({Move::kt_phi0()});
            for (int i : {1, -1}) candidates.push_back({Move::kt_phi1(i)});
        } else {
            for (int i : {1, -1}) {
                candidates.push_back({Move::t4_map(4, i)});
                candidates.push_back({Move::t4_map(3, i)});
                candidates.push_back({Move::interchange(1, 0), Move::t4_map(4, i)});
                candidates.push_back({Move::interchange(1, 0), Move::t4_map(3, i)});
            }
        }
        bool found = false;
        for (const auto& cand : candidates) {
            ClassVector img = alpha;
            for (const auto& mv : cand) img = apply_move(f, mv, img);
            if (!pair(f, img, fib).is_zero()) {
                word = cand;
                found = true;
                break;
            }
        }
        if (!found) {
            v.decision = Decision::NonMember;
            v.violated = ViolatedCond::FiberPairing;
            v.note = "no fiber-swapping move produced a nonzero pairing";
            return v;
        }
    }
    v.decision = Decision::Member;
    v.witness = make_certificate(f, m.str(), field_of(alpha), alpha, word);
    return v;
}

}  // namespace symcone
