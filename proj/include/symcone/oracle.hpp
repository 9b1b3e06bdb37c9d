#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symcone/autos.hpp"
#include "symcone/lattice.hpp"

namespace symcone {

/// Move templates the bounded search may instantiate.
enum class MoveTemplate {
    HReflect,
    QMap,
    Interchange,
    Shear2H,   // integer parameter enumerated within the magnitude bound
    HFiber,
    E1Swap,
    E1Cremona,
};

struct SearchBounds {
    long max_coeff = 32;       // prune states with an entry beyond this
    int max_depth = 8;         // word length
    std::vector<MoveTemplate> whitelist;
    size_t node_cap = 1000000; // overridable via SYMCONE_NODE_CAP
    bool restrict_blocks = false;
    std::vector<int> h_blocks; // when restrict_blocks: only these H blocks
};

size_t effective_node_cap(const SearchBounds& b);

struct OrbitResult {
    /// reachable integral classes -> shortest word reaching them
    std::map<std::vector<mpz_class>, std::vector<Move>> reached;
    bool node_cap_hit = false;
    size_t expanded = 0;
};

/// Bounded BFS closure of an integral class under the whitelisted moves.
OrbitResult orbit_bfs(const BlockForm& f, const ClassVector& alpha, const SearchBounds& bounds);

struct BruteForceOutcome {
    std::optional<Certificate> cert;
    bool node_cap_hit = false;
    std::string reason;  // set when absent: square-mismatch, exhausted, cap
};

/// Bidirectional bounded search for a word sending alpha to beta.
BruteForceOutcome equivalent_bruteforce(const BlockForm& f, const std::string& descriptor,
                                        const ClassVector& alpha, const ClassVector& beta,
                                        const SearchBounds& bounds);

struct PreservationReport {
    size_t samples = 0;
    size_t violations = 0;
    std::vector<std::string> details;
};

/// Asserts pairing preservation of each move on random scalar classes.
PreservationReport check_form_preservation(const BlockForm& f, const std::vector<Move>& moves,
                                           size_t samples, unsigned seed, long field_d = 2);

// E(1) standard-basis search (Cremona + sorting swaps) used to cross-check
// reduce_e1 verdicts.
struct E1SearchOutcome {
    bool found_reduced_member = false;
    bool node_cap_hit = false;
};
E1SearchOutcome e1_orbit_search(const std::vector<Scalar>& v, const SearchBounds& bounds);

}  // namespace symcone
