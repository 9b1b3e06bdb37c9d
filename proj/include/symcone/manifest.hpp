#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symcone/balance.hpp"
#include "symcone/lattice.hpp"

namespace symcone {

/// Parsed manifest: a descriptor, the scalar field, one class, and the
/// optional knobs the CLI commands consume.
struct Manifest {
    ManifoldDescriptor descriptor;
    BlockForm form;
    long field_d = 0;
    ClassVector cls;
    std::optional<std::vector<int>> canonical_signs;  // +1/-1 per blow-up
    std::optional<int> split;
    std::optional<Scalar> epsilon;
    std::optional<long> max_norm;
    std::optional<int> max_depth;
    uint64_t hash = 0;  // of the canonical manifest text

    static Manifest parse(const std::string& text);
    static Manifest load(const std::string& path);
};

struct manifest_error : std::runtime_error {
    explicit manifest_error(const std::string& m) : std::runtime_error(m) {}
};

/// Parses "slot=value, slot=value" against a form.
ClassVector parse_class_list(const BlockForm& f, long field_d, const std::string& text);
std::string class_list_text(const BlockForm& f, const ClassVector& v);

}  // namespace symcone
