#include "symcone/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <random>
#include <set>
#include <unordered_map>

#include "symcone/cones.hpp"

namespace symcone {

size_t effective_node_cap(const SearchBounds& b) {
    if (const char* env = std::getenv("SYMCONE_NODE_CAP")) {
        long v = std::atol(env);
        if (v > 0) return static_cast<size_t>(v);
    }
    return b.node_cap;
}

namespace {

using IState = std::vector<mpz_class>;

IState to_istate(const ClassVector& v) {
    IState s;
    s.reserve(v.size());
    for (const auto& x : v) s.push_back(x.to_integer());
    return s;
}

ClassVector to_class(const IState& s) {
    ClassVector v;
    v.reserve(s.size());
    for (const auto& x : s) v.emplace_back(x);
    return v;
}

bool within(const IState& s, long bound) {
    for (const auto& x : s)
        if (abs(x) > bound) return false;
    return true;
}

std::vector<int> search_h_blocks(const BlockForm& f, const SearchBounds& b) {
    if (b.restrict_blocks) return b.h_blocks;
    std::vector<int> hs(f.h_count);
    for (int i = 0; i < f.h_count; ++i) hs[i] = i;
    return hs;
}

// Enumerates the legal neighbor states of a bounded BFS node. Parametric
// shears only instantiate the parameters that keep every entry in bounds.
template <typename Fn>
void for_each_neighbor(const BlockForm& f, const SearchBounds& b, const std::vector<int>& hs,
                       const ClassVector& x, bool inverse, Fn&& fn) {
    auto emit = [&](const Move& mv) {
        ClassVector y = inverse ? apply_move_inverse(f, mv, x) : apply_move(f, mv, x);
        fn(mv, std::move(y));
    };
    auto has = [&](MoveTemplate t) {
        return std::find(b.whitelist.begin(), b.whitelist.end(), t) != b.whitelist.end();
    };
    if (has(MoveTemplate::HReflect))
        for (int h : hs) emit(Move::h_reflect(h));
    if (has(MoveTemplate::QMap))
        for (size_t i = 0; i < hs.size(); ++i)
            for (size_t j = i + 1; j < hs.size(); ++j) emit(Move::q_map(hs[i], hs[j]));
    if (has(MoveTemplate::Interchange))
        for (int h1 : hs)
            for (int h2 : hs)
                if (h1 != h2) emit(Move::interchange(h1, h2));
    if (has(MoveTemplate::Shear2H)) {
        for (int h1 : hs)
            for (int h2 : hs) {
                if (h1 == h2) continue;
                // forward: b1 += i b2, a2 -= i a1; enumerate i keeping both in
                // bounds (the inverse action swaps the sign of i, same ranges)
                Scalar b1 = x[f.h_b_slot(h1)], b2 = x[f.h_b_slot(h2)];
                Scalar a1 = x[f.h_a_slot(h1)], a2 = x[f.h_a_slot(h2)];
                long bound = b.max_coeff;
                auto range = [&](const Scalar& base, const Scalar& step, mpz_class& lo,
                                 mpz_class& hi) {
                    // |base + i*step| <= bound
                    if (step.is_zero()) {
                        lo = 1;
                        hi = 0;
                        return false;  // unconstrained: caller intersects
                    }
                    Scalar l = (Scalar(-bound) - base) / step;
                    Scalar r = (Scalar(bound) - base) / step;
                    if (r < l) std::swap(l, r);
                    lo = l.floor();
                    if (Scalar(lo) < l) lo += 1;  // ceil
                    hi = r.floor();
                    return true;
                };
                mpz_class lo1, hi1, lo2, hi2;
                bool c1 = range(b1, b2, lo1, hi1);
                bool c2 = range(a2, -a1, lo2, hi2);
                mpz_class lo, hi;
                if (c1 && c2) {
                    lo = lo1 > lo2 ? lo1 : lo2;
                    hi = hi1 < hi2 ? hi1 : hi2;
                } else if (c1) {
                    lo = lo1, hi = hi1;
                } else if (c2) {
                    lo = lo2, hi = hi2;
                } else {
                    continue;  // both steps zero: the shear fixes the class
                }
                if (lo < -bound) lo = -bound;
                if (hi > bound) hi = bound;
                for (mpz_class i = lo; i <= hi; ++i) {
                    if (sgn(i) == 0) continue;
                    emit(Move::shear_2h(h1, h2, i));
                }
            }
    }
    if (has(MoveTemplate::HFiber) && f.fiber_block_index >= 0) {
        for (int h : hs) {
            Scalar c = x[f.fiber_c_slot()], g = x[f.fiber_g_slot()];
            Scalar a = x[f.h_a_slot(h)], bb = x[f.h_b_slot(h)];
            long bound = b.max_coeff;
            // c -= i a, b += i g
            for (mpz_class i = -bound; i <= bound; ++i) {
                if (sgn(i) == 0) continue;
                Scalar nc = c - Scalar(i) * a;
                Scalar nb = bb + Scalar(i) * g;
                if (nc.abs() > Scalar(bound) || nb.abs() > Scalar(bound)) continue;
                emit(Move::h_fiber(h, i));
            }
        }
    }
}

}  // namespace

OrbitResult orbit_bfs(const BlockForm& f, const ClassVector& alpha, const SearchBounds& bounds) {
    if (!is_integral(alpha)) throw std::invalid_argument("orbit_bfs: class must be integral");
    OrbitResult out;
    IState start = to_istate(alpha);
    if (!within(start, bounds.max_coeff))
        throw std::invalid_argument("orbit_bfs: start exceeds the magnitude bound");
    const size_t cap = effective_node_cap(bounds);
    auto hs = search_h_blocks(f, bounds);
    std::deque<std::pair<IState, int>> queue;
    out.reached.emplace(start, std::vector<Move>{});
    queue.emplace_back(start, 0);
    while (!queue.empty()) {
        auto [state, depth] = queue.front();
        queue.pop_front();
        if (depth >= bounds.max_depth) continue;
        auto word = out.reached.at(state);
        ++out.expanded;
        for_each_neighbor(f, bounds, hs, to_class(state), false,
                          [&](const Move& mv, ClassVector img) {
                              if (out.reached.size() >= cap) {
                                  out.node_cap_hit = true;
                                  return;
                              }
                              IState istate = to_istate(img);
                              if (!within(istate, bounds.max_coeff)) return;
                              auto it = out.reached.find(istate);
                              if (it != out.reached.end()) return;
                              auto w = word;
                              w.push_back(mv);
                              out.reached.emplace(istate, std::move(w));
                              queue.emplace_back(std::move(istate), depth + 1);
                          });
        if (out.node_cap_hit) break;
    }
    return out;
}

namespace {

// Fast engine for the common restricted search: two H blocks under
// HReflect / QMap / Interchange / Shear2H, with every coefficient in a
// 16-bit window. States pack into one 64-bit key; the resulting word is
// re-verified through apply_move by the caller.
struct Fast2H {
    struct St {
        int64_t v[4];  // a1 b1 a2 b2
        uint64_t key() const {
            uint64_t k = 0;
            for (int i = 0; i < 4; ++i) k = (k << 16) | (static_cast<uint16_t>(v[i]));
            return k;
        }
    };
    // encoded move: kind 0 = hreflect(h), 1 = qmap, 2 = interchange(b1,b2),
    // 3 = shear(b1,b2,i)
    struct Mv {
        int kind;
        int x = 0, y = 0;
        long long i = 0;
    };

    long bound;
    int h0, h1;

    static St apply(const St& s, const Mv& m) {
        St t = s;
        switch (m.kind) {
            case 0:
                if (m.x == 0) std::swap(t.v[0], t.v[1]);
                else std::swap(t.v[2], t.v[3]);
                break;
            case 1:
                for (auto& e : t.v) e = -e;
                break;
            case 2:
                if (m.x == 0) {  // interchange(h0, h1)
                    t.v[0] = -s.v[2];
                    t.v[1] = -s.v[3];
                    t.v[2] = s.v[0];
                    t.v[3] = s.v[1];
                } else {  // interchange(h1, h0)
                    t.v[0] = s.v[2];
                    t.v[1] = s.v[3];
                    t.v[2] = -s.v[0];
                    t.v[3] = -s.v[1];
                }
                break;
            default:
                if (m.x == 0) {  // shear(h0, h1, i): b1 += i b2, a2 -= i a1
                    t.v[1] += m.i * s.v[3];
                    t.v[2] -= m.i * s.v[0];
                } else {  // shear(h1, h0, i)
                    t.v[3] += m.i * s.v[1];
                    t.v[0] -= m.i * s.v[2];
                }
                break;
        }
        return t;
    }

    static Mv inverse(const Mv& m) {
        Mv r = m;
        if (m.kind == 2) r.x = 1 - m.x;
        if (m.kind == 3) r.i = -m.i;
        return r;
    }

    template <typename Fn>
    void neighbors(const St& s, Fn&& fn) const {
        fn(Mv{0, 0}, apply(s, {0, 0}));
        fn(Mv{0, 1}, apply(s, {0, 1}));
        fn(Mv{1}, apply(s, {1}));
        fn(Mv{2, 0}, apply(s, {2, 0}));
        fn(Mv{2, 1}, apply(s, {2, 1}));
        for (int x = 0; x < 2; ++x) {
            // i ranges keeping both sheared entries inside the bound
            int64_t base1 = x == 0 ? s.v[1] : s.v[3];
            int64_t step1 = x == 0 ? s.v[3] : s.v[1];
            int64_t base2 = x == 0 ? s.v[2] : s.v[0];
            int64_t step2 = x == 0 ? -s.v[0] : -s.v[2];
            long long lo = -bound * 2L, hi = bound * 2L;
            bool constrained = false;
            auto clamp = [&](int64_t base, int64_t step) {
                if (step == 0) return;
                double l = (-double(bound) - double(base)) / double(step);
                double r = (double(bound) - double(base)) / double(step);
                if (r < l) std::swap(l, r);
                lo = std::max<long long>(lo, (long long)std::ceil(l - 1e-9));
                hi = std::min<long long>(hi, (long long)std::floor(r + 1e-9));
                constrained = true;
            };
            clamp(base1, step1);
            clamp(base2, step2);
            if (!constrained) continue;  // the shear fixes the class
            for (long long i = lo; i <= hi; ++i) {
                if (i == 0) continue;
                St t = apply(s, {3, x, 0, i});
                bool ok = true;
                for (auto e : t.v)
                    if (e > bound || e < -bound) ok = false;
                if (ok) fn(Mv{3, x, 0, i}, t);
            }
        }
    }

    Move lift(const Mv& m) const {
        switch (m.kind) {
            case 0: return Move::h_reflect(m.x == 0 ? h0 : h1);
            case 1: return Move::q_map(h0, h1);
            case 2: return m.x == 0 ? Move::interchange(h0, h1) : Move::interchange(h1, h0);
            default: {
                mpz_class i(static_cast<long>(m.i));
                return m.x == 0 ? Move::shear_2h(h0, h1, i) : Move::shear_2h(h1, h0, i);
            }
        }
    }
};

bool fast2h_applicable(const BlockForm& f, const ClassVector& alpha, const ClassVector& beta,
                       const SearchBounds& b) {
    if (!b.restrict_blocks || b.h_blocks.size() != 2) return false;
    if (b.max_coeff >= (1 << 14)) return false;
    for (MoveTemplate t : b.whitelist)
        if (t != MoveTemplate::HReflect && t != MoveTemplate::QMap &&
            t != MoveTemplate::Interchange && t != MoveTemplate::Shear2H)
            return false;
    bool all[4] = {false, false, false, false};
    for (MoveTemplate t : b.whitelist) {
        if (t == MoveTemplate::HReflect) all[0] = true;
        if (t == MoveTemplate::QMap) all[1] = true;
        if (t == MoveTemplate::Interchange) all[2] = true;
        if (t == MoveTemplate::Shear2H) all[3] = true;
    }
    if (!(all[0] && all[1] && all[2] && all[3])) return false;
    // every slot outside the two blocks must agree between the endpoints
    int s0 = f.h(b.h_blocks[0]).offset, s1 = f.h(b.h_blocks[1]).offset;
    for (int s = 0; s < f.slots; ++s) {
        bool inside = (s == s0 || s == s0 + 1 || s == s1 || s == s1 + 1);
        if (!inside && alpha[s] != beta[s]) return false;
    }
    return true;
}

std::optional<std::vector<Move>> fast2h_search(const BlockForm& f, const ClassVector& alpha,
                                               const ClassVector& beta, const SearchBounds& bounds,
                                               bool& cap_hit) {
    Fast2H eng{bounds.max_coeff, bounds.h_blocks[0], bounds.h_blocks[1]};
    auto pack = [&](const ClassVector& v) {
        Fast2H::St s;
        s.v[0] = v[f.h_a_slot(eng.h0)].to_integer().get_si();
        s.v[1] = v[f.h_b_slot(eng.h0)].to_integer().get_si();
        s.v[2] = v[f.h_a_slot(eng.h1)].to_integer().get_si();
        s.v[3] = v[f.h_b_slot(eng.h1)].to_integer().get_si();
        return s;
    };
    Fast2H::St sa = pack(alpha), sb = pack(beta);
    if (sa.key() == sb.key()) return std::vector<Move>{};
    const size_t cap = effective_node_cap(bounds);

    struct Entry {
        uint64_t parent;
        Fast2H::Mv mv;
        int depth;
    };
    std::unordered_map<uint64_t, Entry> fwd, bwd;
    fwd.reserve(1 << 16);
    bwd.reserve(1 << 16);
    fwd.emplace(sa.key(), Entry{sa.key(), {}, 0});
    bwd.emplace(sb.key(), Entry{sb.key(), {}, 0});
    std::deque<Fast2H::St> fq{sa}, bq{sb};
    const int fmax = (bounds.max_depth + 1) / 2, bmax = bounds.max_depth / 2;

    auto unwind = [&](std::unordered_map<uint64_t, Entry>& side, uint64_t key) {
        std::vector<Fast2H::Mv> mvs;
        while (true) {
            const Entry& e = side.at(key);
            if (e.parent == key) break;
            mvs.push_back(e.mv);
            key = e.parent;
        }
        return mvs;  // last move first
    };
    auto stitch = [&](uint64_t meet) {
        std::vector<Move> word;
        auto fw = unwind(fwd, meet);
        for (auto it = fw.rbegin(); it != fw.rend(); ++it) word.push_back(eng.lift(*it));
        auto bw = unwind(bwd, meet);
        // backward entries store the forward move mapping child -> parent
        for (const auto& m : bw) word.push_back(eng.lift(m));
        return word;
    };

    std::optional<std::vector<Move>> result;
    while ((!fq.empty() || !bq.empty()) && !result) {
        bool use_fwd = !fq.empty() && (bq.empty() || fq.size() <= bq.size());
        auto& queue = use_fwd ? fq : bq;
        auto& mine = use_fwd ? fwd : bwd;
        auto& other = use_fwd ? bwd : fwd;
        Fast2H::St state = queue.front();
        queue.pop_front();
        int depth = mine.at(state.key()).depth;
        if (depth >= (use_fwd ? fmax : bmax)) continue;
        eng.neighbors(state, [&](const Fast2H::Mv& mv, const Fast2H::St& nx) {
            if (result) return;
            uint64_t key = nx.key();
            if (mine.count(key)) return;
            if (mine.size() >= cap) {
                cap_hit = true;
                return;
            }
            // backward side stores the move that maps the child back to the
            // parent (a forward move toward beta)
            Fast2H::Mv stored = use_fwd ? mv : Fast2H::inverse(mv);
            mine.emplace(key, Entry{state.key(), stored, depth + 1});
            if (other.count(key)) {
                result = stitch(key);
                return;
            }
            queue.push_back(nx);
        });
        if (cap_hit && !result) return std::nullopt;
    }
    return result;
}

}  // namespace

BruteForceOutcome equivalent_bruteforce(const BlockForm& f, const std::string& descriptor,
                                        const ClassVector& alpha, const ClassVector& beta,
                                        const SearchBounds& bounds) {
    BruteForceOutcome out;
    if (!is_integral(alpha) || !is_integral(beta))
        throw std::invalid_argument("equivalent_bruteforce: classes must be integral");
    if (square(f, alpha) != square(f, beta)) {
        out.reason = "square-mismatch";
        return out;
    }
    if (fast2h_applicable(f, alpha, beta, bounds)) {
        bool cap_hit = false;
        auto word = fast2h_search(f, alpha, beta, bounds, cap_hit);
        if (word) {
            out.cert = make_certificate(f, descriptor, 0, alpha, *word);
            if (out.cert->output != beta)
                throw std::logic_error("equivalent_bruteforce: fast path missed the target");
            return out;
        }
        out.node_cap_hit = cap_hit;
        out.reason = cap_hit ? "node-cap" : "exhausted";
        return out;
    }
    IState sa = to_istate(alpha), sb = to_istate(beta);
    if (sa == sb) {
        out.cert = make_certificate(f, descriptor, 0, alpha, {});
        return out;
    }
    const size_t cap = effective_node_cap(bounds);
    auto hs = search_h_blocks(f, bounds);

    // bidirectional: forward words from alpha, backward (inverse) words from
    // beta; meeting state m gives alpha -> m -> beta
    std::map<IState, std::vector<Move>> fwd, bwd;
    fwd.emplace(sa, std::vector<Move>{});
    bwd.emplace(sb, std::vector<Move>{});
    std::deque<std::pair<IState, int>> fq{{sa, 0}}, bq{{sb, 0}};
    int fdepth_max = (bounds.max_depth + 1) / 2;
    int bdepth_max = bounds.max_depth / 2;

    auto stitch = [&](const IState& m) {
        std::vector<Move> word = fwd.at(m);
        auto back = bwd.at(m);
        for (auto it = back.rbegin(); it != back.rend(); ++it) word.push_back(*it);
        out.cert = make_certificate(f, descriptor, 0, alpha, word);
        if (out.cert->output != beta)
            throw std::logic_error("equivalent_bruteforce: stitched word misses the target");
    };

    while (!fq.empty() || !bq.empty()) {
        bool use_fwd = !fq.empty() && (bq.empty() || fq.size() <= bq.size());
        auto& queue = use_fwd ? fq : bq;
        auto& mine = use_fwd ? fwd : bwd;
        auto& other = use_fwd ? bwd : fwd;
        int depth_max = use_fwd ? fdepth_max : bdepth_max;
        auto [state, depth] = queue.front();
        queue.pop_front();
        if (depth >= depth_max) continue;
        auto word = mine.at(state);
        bool met = false;
        for_each_neighbor(f, bounds, hs, to_class(state), !use_fwd,
                          [&](const Move& mv, ClassVector img) {
                              if (met) return;
                              if (mine.size() >= cap) {
                                  out.node_cap_hit = true;
                                  return;
                              }
                              IState istate = to_istate(img);
                              if (!within(istate, bounds.max_coeff)) return;
                              if (mine.count(istate)) return;
                              auto w = word;
                              w.push_back(mv);
                              mine.emplace(istate, std::move(w));
                              if (other.count(istate)) {
                                  stitch(istate);
                                  met = true;
                                  return;
                              }
                              queue.emplace_back(std::move(istate), depth + 1);
                          });
        if (out.cert) return out;
        if (out.node_cap_hit) {
            out.reason = "node-cap";
            return out;
        }
    }
    out.reason = "exhausted";
    return out;
}

PreservationReport check_form_preservation(const BlockForm& f, const std::vector<Move>& moves,
                                           size_t samples, unsigned seed, long field_d) {
    PreservationReport rep;
    std::mt19937 rng(seed);
    std::uniform_int_distribution<long> num(-12, 12);
    std::uniform_int_distribution<long> den(1, 4);
    std::uniform_int_distribution<int> coin(0, 3);
    auto rand_scalar = [&]() {
        mpq_class a(num(rng), den(rng));
        a.canonicalize();
        if (field_d != 0 && coin(rng) == 0) {
            mpq_class b(num(rng), den(rng));
            b.canonicalize();
            return Scalar(a, b, field_d);
        }
        return Scalar(a);
    };
    auto rand_class = [&]() {
        ClassVector v(f.slots);
        for (auto& x : v) x = rand_scalar();
        return v;
    };
    for (const auto& mv : moves) {
        for (size_t s = 0; s < samples; ++s) {
            ClassVector x = rand_class(), y = rand_class();
            Scalar before = pair(f, x, y);
            Scalar after = pair(f, apply_move(f, mv, x), apply_move(f, mv, y));
            ++rep.samples;
            if (before != after) {
                ++rep.violations;
                if (rep.details.size() < 16)
                    rep.details.push_back(mv.str() + ": pairing changed");
            }
        }
    }
    return rep;
}

E1SearchOutcome e1_orbit_search(const std::vector<Scalar>& v, const SearchBounds& bounds) {
    E1SearchOutcome out;
    for (const auto& x : v)
        if (!x.is_integer()) throw std::invalid_argument("e1_orbit_search: integral input only");
    const size_t n = v.size();
    // permutations of the b entries are free moves: canonicalize by sorting
    // them descending, and fire the Cremona reflection on every index triple
    // (each is a permutation conjugate of the standard one)
    auto canonical = [&](IState s) {
        std::sort(s.begin() + 1, s.end(), [](const mpz_class& a, const mpz_class& b) { return b < a; });
        return s;
    };
    auto reduced_member = [&](const IState& s) {
        if (sgn(s[n - 1]) <= 0) return false;
        mpz_class top = 0;
        for (size_t i = 1; i < std::min<size_t>(4, n); ++i) top += s[i];
        return s[0] >= top;
    };
    IState start;
    for (const auto& x : v) start.push_back(x.to_integer());
    start = canonical(start);
    if (reduced_member(start)) {
        out.found_reduced_member = true;
        return out;
    }
    const size_t cap = effective_node_cap(bounds);
    std::set<IState> seen{start};
    std::deque<std::pair<IState, int>> queue{{start, 0}};
    while (!queue.empty()) {
        auto [state, depth] = queue.front();
        queue.pop_front();
        if (depth >= bounds.max_depth) continue;
        for (size_t i = 1; i + 2 < n + 0; ++i)
            for (size_t j = i + 1; j + 1 < n; ++j)
                for (size_t k = j + 1; k < n; ++k) {
                    mpz_class t = state[0] - state[i] - state[j] - state[k];
                    if (sgn(t) == 0) continue;
                    IState nx = state;
                    nx[0] += t;
                    nx[i] += t;
                    nx[j] += t;
                    nx[k] += t;
                    bool ok = true;
                    for (const auto& z : nx)
                        if (abs(z) > bounds.max_coeff) ok = false;
                    if (!ok) continue;
                    nx = canonical(std::move(nx));
                    if (seen.count(nx)) continue;
                    if (seen.size() >= cap) {
                        out.node_cap_hit = true;
                        return out;
                    }
                    if (reduced_member(nx)) {
                        out.found_reduced_member = true;
                        return out;
                    }
                    seen.insert(nx);
                    queue.emplace_back(std::move(nx), depth + 1);
                }
    }
    return out;
}

}  // namespace symcone
