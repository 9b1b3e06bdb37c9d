#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "symcone/balance.hpp"
#include "symcone/cones.hpp"
#include "symcone/manifest.hpp"
#include "symcone/oracle.hpp"

using namespace symcone;

namespace {

constexpr int kExitMember = 0;
constexpr int kExitNonMember = 1;
constexpr int kExitParse = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitUndecided = 4;

int verdict_exit(const ConeVerdict& v) {
    switch (v.decision) {
        case Decision::Member: return kExitMember;
        case Decision::NonMember: return kExitNonMember;
        default: return kExitUndecided;
    }
}

std::string kodaira_text(Kodaira k) {
    switch (k) {
        case Kodaira::MinusInfinity: return "-infinity";
        case Kodaira::Zero: return "0";
        default: return "1";
    }
}

CanonicalClass canonical_from_manifest(const Manifest& mf) {
    CanonicalClass k;
    k.fiber_multiple =
        mf.descriptor.kind == ManifoldKind::EllipticPos ? 2 * mf.descriptor.genus - 2 + mf.descriptor.n : 0;
    if (mf.canonical_signs) k.deltas = *mf.canonical_signs;
    else k.deltas.assign(mf.descriptor.blowups, 1);
    return k;
}

int cmd_classify(const Manifest& mf) {
    std::cout << "manifold: " << mf.descriptor.str() << "\n";
    std::cout << "kodaira: " << kodaira_text(kodaira_dimension(mf.descriptor)) << "\n";
    std::cout << "b+: " << betti_plus(mf.form) << "\n";
    std::cout << "slots: " << mf.form.slots << "\n";
    std::cout << "form:";
    for (const auto& b : mf.form.blocks) {
        switch (b.kind) {
            case BlockKind::E8: std::cout << " E8"; break;
            case BlockKind::H: std::cout << " H"; break;
            case BlockKind::Fiber: std::cout << " (F,Gamma|" << b.gamma_sq << ")"; break;
            case BlockKind::MinusOne: std::cout << " <-1>"; break;
        }
    }
    std::cout << "\n";
    auto ks = canonical_classes(mf.descriptor);
    std::cout << "canonical classes: " << ks.size() << "\n";
    size_t shown = 0;
    for (const auto& k : ks) {
        if (shown++ >= 32) {
            std::cout << "  ...\n";
            break;
        }
        std::cout << "  " << k.str() << "\n";
    }
    if (!mf.cls.empty()) {
        std::cout << "class: " << class_list_text(mf.form, mf.cls) << "\n";
        std::cout << "square: " << square(mf.form, mf.cls).str() << "\n";
        std::cout << "fiber pairing: " << pair(mf.form, mf.cls, fiber_class(mf.form)).str() << "\n";
    }
    return kExitMember;
}

int cmd_pair(const Manifest& mf, const std::string& beta_text) {
    ClassVector beta = parse_class_list(mf.form, mf.field_d, beta_text);
    std::cout << pair(mf.form, mf.cls, beta).str() << "\n";
    return kExitMember;
}

int cmd_member(const Manifest& mf, const std::string& cone) {
    ConeVerdict v;
    if (cone == "positive") {
        v = in_positive_cone(mf.form, mf.cls);
    } else if (cone == "relative-positive") {
        v = in_relative_positive_cone(mf.form, mf.cls, fiber_class(mf.form));
    } else if (cone == "relative") {
        v = relative_cone_member(mf.descriptor, mf.form, mf.cls, canonical_from_manifest(mf));
    } else if (cone == "full") {
        v = full_cone_member(mf.descriptor, mf.form, mf.cls);
    } else {
        std::cerr << "unknown cone: " << cone << "\n";
        return kExitParse;
    }
    std::cout << v.str() << "\n";
    if (v.witness) {
        Certificate cert = *v.witness;
        cert.manifest_hash = mf.hash;
        std::cout << cert.serialize();
    }
    return verdict_exit(v);
}

const char* case_text(BalanceCase c) {
    switch (c) {
        case BalanceCase::Concentrated: return "concentrated";
        case BalanceCase::IntegralCollapse: return "integral-collapse";
        case BalanceCase::AlreadyBalanced: return "already-balanced";
        default: return "cap-exceeded";
    }
}

int report_out(const Manifest& mf, BalanceReport rep, const std::string& out_path) {
    std::cout << "case: " << case_text(rep.tag) << "\n";
    std::cout << "output: " << class_list_text(mf.form, rep.output) << "\n";
    for (const auto& [name, val] : rep.bounds)
        std::cout << "bound " << name << ": " << val.str() << "\n";
    if (!rep.note.empty()) std::cout << "note: " << rep.note << "\n";
    rep.cert.manifest_hash = mf.hash;
    std::string cert_text = rep.cert.serialize();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << cert_text;
        std::cout << "certificate: " << out_path << "\n";
    } else {
        std::cout << cert_text;
    }
    if (!rep.ok) {
        std::cout << "status: " << (rep.tag == BalanceCase::CapExceeded ? "cap-exceeded" : "failed")
                  << "\n";
        return kExitUndecided;
    }
    std::cout << "status: ok\n";
    return kExitMember;
}

int cmd_balance(const Manifest& mf, const std::string& algorithm, int h1, int h2, int e8, int k,
                const std::string& out_path) {
    BalanceContext ctx = BalanceContext::make(mf.descriptor, mf.field_d);
    Scalar eps = mf.epsilon ? *mf.epsilon : Scalar(mpq_class(1, 16));
    std::string algo = algorithm;
    if (algo == "auto") {
        if (mf.descriptor.kind == ManifoldKind::Torus4) algo = "t4";
        else if (mf.descriptor.kind == ManifoldKind::KodairaThurston) algo = "kt";
        else if (mf.descriptor.is_e2()) algo = "e2";
        else if (mf.descriptor.kind == ManifoldKind::EllipticPos && !mf.descriptor.is_e1())
            algo = "ba";
        else algo = "2h";
    }
    BalanceReport rep;
    if (algo == "2h") rep = reduce_2h(ctx, mf.cls, h1, h2, k);
    else if (algo == "mine1") rep = concentrate(ctx, mf.cls, e8, h1, h2, eps);
    else if (algo == "ba") rep = balance_class(ctx, mf.cls, mf.split.value_or(1), eps);
    else if (algo == "e2") rep = balance_e2(ctx, mf.cls, eps);
    else if (algo == "t4") rep = concentrate_t4(ctx, mf.cls, eps);
    else if (algo == "kt") rep = concentrate_kt(ctx, mf.cls, eps);
    else {
        std::cerr << "unknown algorithm: " << algo << "\n";
        return kExitParse;
    }
    return report_out(mf, std::move(rep), out_path);
}

int cmd_reduce_e1(const Manifest& mf) {
    if (!mf.descriptor.is_e1()) {
        std::cerr << "reduce-e1 expects an E(1,0)+l manifold\n";
        return kExitPrecondition;
    }
    E1Reduction red = reduce_e1(e1_standard_vector(mf.form, mf.cls, canonical_from_manifest(mf)));
    std::cout << "reduced:";
    for (const auto& x : red.reduced) std::cout << " " << x.str();
    std::cout << "\n" << red.verdict.str() << "\n";
    Certificate cert = red.cert;
    cert.manifest_hash = mf.hash;
    std::cout << cert.serialize();
    return verdict_exit(red.verdict);
}

int cmd_verify(const std::string& path, const std::string& manifest_path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open certificate: " << path << "\n";
        return kExitParse;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    Certificate cert;
    try {
        cert = Certificate::deserialize(buf.str());
    } catch (const std::exception& e) {
        std::cerr << "certificate parse error: " << e.what() << "\n";
        return kExitParse;
    }
    if (!manifest_path.empty()) {
        Manifest mf = Manifest::load(manifest_path);
        if (cert.manifest_hash != 0 && cert.manifest_hash != mf.hash) {
            std::cout << "fail: certificate is bound to a different manifest\n";
            return kExitNonMember;
        }
    }
    std::string why;
    bool ok;
    if (cert.basis == CertBasis::E1Standard) {
        ok = verify_e1_certificate(cert, &why);
    } else {
        BlockForm f = build_form(ManifoldDescriptor::parse(cert.descriptor));
        ok = verify_certificate(f, cert, &why);
    }
    std::cout << (ok ? "pass" : "fail: " + why) << "\n";
    return ok ? kExitMember : kExitNonMember;
}

int cmd_oracle(const Manifest& mf, const std::string& target_text, long max_norm, int max_depth) {
    ClassVector target = parse_class_list(mf.form, mf.field_d, target_text);
    SearchBounds bounds;
    bounds.max_coeff = mf.max_norm.value_or(max_norm);
    bounds.max_depth = mf.max_depth.value_or(max_depth);
    bounds.whitelist = {MoveTemplate::HReflect, MoveTemplate::QMap, MoveTemplate::Interchange,
                        MoveTemplate::Shear2H};
    auto outcome = equivalent_bruteforce(mf.form, mf.descriptor.str(), mf.cls, target, bounds);
    if (outcome.cert) {
        Certificate cert = *outcome.cert;
        cert.manifest_hash = mf.hash;
        std::cout << "found (" << cert.moves.size() << " moves)\n" << cert.serialize();
        return kExitMember;
    }
    std::cout << "absent: " << outcome.reason << "\n";
    return outcome.node_cap_hit ? kExitUndecided : kExitNonMember;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact lattice computations for elliptic-surface symplectic cones"};
    app.require_subcommand(1);

    std::string manifest_path, beta_text, cone = "relative", algorithm = "auto";
    std::string cert_path, out_path, target_text, verify_manifest;
    int h1 = 0, h2 = 1, e8 = 0, kdepth = 8, max_depth = 8;
    long max_norm = 64;
    long seed = 0;

    auto* classify = app.add_subcommand("classify", "kappa, b+, canonical classes, form summary");
    classify->add_option("manifest", manifest_path)->required();

    auto* pairc = app.add_subcommand("pair", "pair the manifest class with a second class");
    pairc->add_option("manifest", manifest_path)->required();
    pairc->add_option("--beta", beta_text, "second class as slot=value list")->required();

    auto* member = app.add_subcommand("member", "cone membership");
    member->add_option("manifest", manifest_path)->required();
    member->add_option("--cone", cone, "positive|relative-positive|relative|full");
    member->add_option("--K", beta_text, "canonical sign overrides (unused; use manifest K)");

    auto* balance = app.add_subcommand("balance", "reduction and concentration algorithms");
    balance->add_option("manifest", manifest_path)->required();
    balance->add_option("--algorithm", algorithm, "auto|2h|mine1|ba|e2|t4|kt");
    balance->add_option("--h1", h1);
    balance->add_option("--h2", h2);
    balance->add_option("--e8", e8);
    balance->add_option("--k", kdepth, "halving depth for 2h");
    balance->add_option("--out", out_path, "write the certificate to this file");
    balance->add_option("--epsilon", beta_text, "override epsilon (scalar text)");

    auto* reduce = app.add_subcommand("reduce-e1", "K-standard reduced form on E(1)+l");
    reduce->add_option("manifest", manifest_path)->required();

    auto* verify = app.add_subcommand("verify", "replay a certificate");
    verify->add_option("certificate", cert_path)->required();
    verify->add_option("--manifest", verify_manifest, "check the manifest binding");

    auto* oracle = app.add_subcommand("oracle", "bounded brute-force equivalence search");
    oracle->add_option("manifest", manifest_path)->required();
    oracle->add_option("--target", target_text)->required();
    oracle->add_option("--max-norm", max_norm);
    oracle->add_option("--max-depth", max_depth);

    app.add_option("--seed", seed, "seed for randomized subroutines (none by default)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify(cert_path, verify_manifest);
        Manifest mf = Manifest::load(manifest_path);
        if (balance->parsed() && balance->count("--epsilon")) {
            try {
                mf.epsilon = Scalar::parse(beta_text, mf.field_d);
            } catch (const std::exception& e) {
                std::cerr << "bad --epsilon: " << e.what() << "\n";
                return kExitParse;
            }
        }
        if (classify->parsed()) return cmd_classify(mf);
        if (pairc->parsed()) return cmd_pair(mf, beta_text);
        if (member->parsed()) return cmd_member(mf, cone);
        if (balance->parsed()) return cmd_balance(mf, algorithm, h1, h2, e8, kdepth, out_path);
        if (reduce->parsed()) return cmd_reduce_e1(mf);
        if (oracle->parsed()) return cmd_oracle(mf, target_text, max_norm, max_depth);
    } catch (const manifest_error& e) {
        std::cerr << "manifest error: " << e.what() << "\n";
        return kExitParse;
    } catch (const field_mismatch& e) {
        std::cerr << "field error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const apply_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPrecondition;
    }
    return kExitParse;
}
