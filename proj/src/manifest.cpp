#include "symcone/manifest.hpp"

#include <fstream>
#include <sstream>

#include "symcone/autos.hpp"

namespace symcone {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ClassVector parse_class_list(const BlockForm& f, long field_d, const std::string& text) {
    ClassVector v = zero_class(f);
    std::vector<bool> seen(v.size(), false);
    std::string t = trim(text);
    if (t.empty() || t == "0") return v;
    size_t pos = 0;
    while (pos < t.size()) {
        size_t comma = t.find(',', pos);
        std::string item =
            t.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? t.size() : comma + 1;
        item = trim(item);
        if (item.empty()) continue;
        size_t eq = item.find('=');
        if (eq == std::string::npos) throw manifest_error("bad slot assignment: " + item);
        std::string name = trim(item.substr(0, eq));
        std::string val = trim(item.substr(eq + 1));
        int slot;
        try {
            slot = f.slot_index(name);
        } catch (const std::exception&) {
            throw manifest_error("unknown slot: " + name);
        }
        if (seen[slot]) throw manifest_error("repeated slot: " + name);
        seen[slot] = true;
        try {
            v[slot] = Scalar::parse(val, field_d);
        } catch (const field_mismatch& e) {
            throw manifest_error(std::string("slot ") + name + ": " + e.what());
        } catch (const std::exception& e) {
            throw manifest_error(std::string("slot ") + name + ": " + e.what());
        }
    }
    return v;
}

std::string class_list_text(const BlockForm& f, const ClassVector& v) {
    std::ostringstream os;
    bool first = true;
    for (int i = 0; i < f.slots; ++i) {
        if (v[i].is_zero()) continue;
        if (!first) os << ", ";
        first = false;
        os << f.slot_name(i) << "=" << v[i].str();
    }
    if (first) os << "0";
    return os.str();
}

Manifest Manifest::parse(const std::string& text) {
    Manifest m;
    std::istringstream is(text);
    std::string line;
    std::string manifold_text, field_text = "rational", class_text_acc;
    std::string k_text, split_text, eps_text, norm_text, depth_text;
    bool in_class = false;
    std::ostringstream canonical;
    while (std::getline(is, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (in_class && (line[0] == ' ' || line[0] == '\t')) {
            class_text_acc += (class_text_acc.empty() ? "" : ", ") + t;
            continue;
        }
        in_class = false;
        size_t colon = t.find(':');
        if (colon == std::string::npos) throw manifest_error("expected 'key: value' line: " + t);
        std::string key = trim(t.substr(0, colon));
        std::string val = trim(t.substr(colon + 1));
        if (key == "manifold") manifold_text = val;
        else if (key == "field") field_text = val;
        else if (key == "class") {
            class_text_acc = val;
            in_class = true;
        } else if (key == "K") k_text = val;
        else if (key == "split") split_text = val;
        else if (key == "epsilon") eps_text = val;
        else if (key == "max-norm") norm_text = val;
        else if (key == "max-depth") depth_text = val;
        else throw manifest_error("unknown manifest key: " + key);
    }
    if (manifold_text.empty()) throw manifest_error("manifest needs a 'manifold:' line");
    try {
        m.descriptor = ManifoldDescriptor::parse(manifold_text);
    } catch (const std::exception& e) {
        throw manifest_error(e.what());
    }
    m.form = build_form(m.descriptor);
    if (field_text == "rational") m.field_d = 0;
    else if (field_text.rfind("sqrt", 0) == 0) {
        try {
            m.field_d = std::stol(trim(field_text.substr(4)));
            Scalar::validate_d(m.field_d);
        } catch (const std::exception& e) {
            throw manifest_error(std::string("bad field: ") + e.what());
        }
        if (m.field_d == 0) throw manifest_error("bad field: " + field_text);
    } else throw manifest_error("bad field: " + field_text);
    m.cls = parse_class_list(m.form, m.field_d, class_text_acc);
    if (!k_text.empty()) {
        std::vector<int> signs;
        for (char c : k_text) {
            if (c == '+') signs.push_back(1);
            else if (c == '-') signs.push_back(-1);
            else if (!isspace((unsigned char)c)) throw manifest_error("K must be a +- string");
        }
        if (static_cast<long>(signs.size()) != m.descriptor.blowups)
            throw manifest_error("K sign count must equal the blow-up count");
        m.canonical_signs = std::move(signs);
    }
    try {
        if (!split_text.empty()) m.split = std::stoi(split_text);
        if (!eps_text.empty()) m.epsilon = Scalar::parse(eps_text, m.field_d);
        if (!norm_text.empty()) m.max_norm = std::stol(norm_text);
        if (!depth_text.empty()) m.max_depth = std::stoi(depth_text);
    } catch (const manifest_error&) {
        throw;
    } catch (const std::exception& e) {
        throw manifest_error(e.what());
    }
    // canonical text for the hash: normalized key order and class listing
    canonical << "manifold: " << m.descriptor.str() << "\n";
    canonical << "field: " << (m.field_d == 0 ? "rational" : "sqrt " + std::to_string(m.field_d))
              << "\n";
    canonical << "class: " << class_list_text(m.form, m.cls) << "\n";
    m.hash = fnv1a64(canonical.str());
    return m;
}

Manifest Manifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw manifest_error("cannot open manifest: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

}  // namespace symcone
