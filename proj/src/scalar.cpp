#include "symcone/scalar.hpp"

#include <cassert>
#include <cctype>
#include <ostream>
#include <sstream>

namespace symcone {

void Scalar::validate_d(long d) {
    if (d == 0) return;
    if (d < 2) throw std::invalid_argument("sqrt argument must be >= 2, got " + std::to_string(d));
    for (long p = 2; p * p <= d; ++p) {
        if (d % (p * p) == 0)
            throw std::invalid_argument("sqrt argument must be squarefree, got " + std::to_string(d));
    }
    // squarefree and >= 2 implies not a perfect square
}

Scalar::Scalar(mpq_class a, mpq_class b, long d) : a_(std::move(a)), b_(std::move(b)), d_(d) {
    validate_d(d);
    a_.canonicalize();
    b_.canonicalize();
    if (d_ == 0 && sgn(b_) != 0)
        throw field_mismatch("radical part requires a declared sqrt field");
    normalize();
}

void Scalar::normalize() {
    if (sgn(b_) == 0) d_ = 0;
}

void Scalar::check_fields(const Scalar& x, const Scalar& y) {
    if (x.d_ != 0 && y.d_ != 0 && x.d_ != y.d_)
        throw field_mismatch("cannot mix sqrt(" + std::to_string(x.d_) + ") with sqrt(" +
                             std::to_string(y.d_) + ")");
}

mpz_class Scalar::to_integer() const {
    if (!is_integer()) throw std::logic_error("scalar is not an integer: " + str());
    return a_.get_num();
}

int Scalar::sign() const {
    const int sa = sgn(a_), sb = sgn(b_);
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    // opposite signs: compare a^2 against b^2*d exactly
    mpq_class lhs = a_ * a_;
    mpq_class rhs = b_ * b_ * d_;
    const int c = cmp(lhs, rhs);
    if (c == 0)
        throw std::logic_error("a^2 == b^2*d with nonzero a,b contradicts squarefree d");
    return c > 0 ? sa : sb;
}

Scalar& Scalar::operator+=(const Scalar& o) {
    check_fields(*this, o);
    a_ += o.a_;
    b_ += o.b_;
    if (d_ == 0) d_ = o.d_;
    normalize();
    return *this;
}

Scalar& Scalar::operator-=(const Scalar& o) {
    check_fields(*this, o);
    a_ -= o.a_;
    b_ -= o.b_;
    if (d_ == 0) d_ = o.d_;
    normalize();
    return *this;
}

Scalar& Scalar::operator*=(const Scalar& o) {
    check_fields(*this, o);
    const long d = d_ != 0 ? d_ : o.d_;
    mpq_class na = a_ * o.a_ + b_ * o.b_ * d;
    mpq_class nb = a_ * o.b_ + b_ * o.a_;
    a_ = std::move(na);
    b_ = std::move(nb);
    d_ = d;
    normalize();
    return *this;
}

Scalar Scalar::inverse() const {
    if (is_zero()) throw std::domain_error("division by zero scalar");
    // 1/(a+b*sqrt(d)) = (a-b*sqrt(d))/(a^2-b^2 d); the norm is nonzero since d
    // is not a rational square.
    mpq_class norm = a_ * a_ - b_ * b_ * d_;
    assert(sgn(norm) != 0);
    return Scalar(a_ / norm, -b_ / norm, d_);
}

Scalar& Scalar::operator/=(const Scalar& o) { return *this *= o.inverse(); }

bool operator==(const Scalar& x, const Scalar& y) {
    Scalar::check_fields(x, y);
    return x.a_ == y.a_ && x.b_ == y.b_;
}

bool Scalar::ratio_is_rational(const Scalar& x, const Scalar& y) {
    if (y.is_zero()) throw std::domain_error("ratio_is_rational: zero denominator");
    return (x / y).is_rational();
}

mpz_class Scalar::floor() const {
    if (is_rational()) {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), a_.get_num_mpz_t(), a_.get_den_mpz_t());
        return q;
    }
    // value = (P + R*sqrt(d)) / Q with Q > 0
    mpz_class Q = a_.get_den() * b_.get_den();
    mpz_class P = a_.get_num() * b_.get_den();
    mpz_class R = b_.get_num() * a_.get_den();
    mpz_class t;
    mpz_class rd = R * R * d_;
    mpz_sqrt(t.get_mpz_t(), rd.get_mpz_t());
    // R*sqrt(d) lies in [t, t+1) for R > 0 and in (-(t+1), -t] for R < 0
    mpz_class num;
    if (sgn(R) > 0) num = P + t;
    else num = P - t - 1;
    mpz_class c;
    mpz_fdiv_q(c.get_mpz_t(), num.get_mpz_t(), Q.get_mpz_t());
    // settle the boundary exactly
    while (*this >= Scalar(mpz_class(c + 1))) c += 1;
    while (*this < Scalar(c)) c -= 1;
    return c;
}

std::string Scalar::str() const {
    std::ostringstream os;
    auto rat = [](const mpq_class& q) {
        std::ostringstream t;
        t << q;
        return t.str();
    };
    if (sgn(b_) == 0) return rat(a_);
    std::string radical;
    mpq_class babs = ::abs(b_);
    if (babs != 1) radical = rat(babs) + "*";
    radical += "sqrt(" + std::to_string(d_) + ")";
    if (sgn(a_) == 0) return (sgn(b_) < 0 ? "-" : "") + radical;
    return rat(a_) + (sgn(b_) < 0 ? "-" : "+") + radical;
}

std::ostream& operator<<(std::ostream& os, const Scalar& s) { return os << s.str(); }

namespace {

struct Cursor {
    const std::string& s;
    size_t i = 0;
    void skip_ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char c) {
        skip_ws();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    bool eat_word(const char* w) {
        skip_ws();
        size_t j = i;
        for (const char* p = w; *p; ++p, ++j)
            if (j >= s.size() || s[j] != *p) return false;
        i = j;
        return true;
    }
    bool at_end() {
        skip_ws();
        return i >= s.size();
    }
};

mpz_class parse_int(Cursor& c) {
    c.skip_ws();
    size_t start = c.i;
    if (c.i < c.s.size() && (c.s[c.i] == '+' || c.s[c.i] == '-')) ++c.i;
    size_t digits = c.i;
    while (c.i < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.i]))) ++c.i;
    if (c.i == digits) throw std::invalid_argument("expected integer in scalar text");
    return mpz_class(c.s.substr(start, c.i - start));
}

mpq_class parse_rational(Cursor& c) {
    mpz_class num = parse_int(c);
    mpz_class den = 1;
    if (c.eat('/')) {
        den = parse_int(c);
        if (sgn(den) == 0) throw std::invalid_argument("zero denominator in scalar text");
    }
    mpq_class q(num, den);
    q.canonicalize();
    return q;
}

}  // namespace

Scalar Scalar::parse(const std::string& text, long session_d) {
    validate_d(session_d);
    Cursor c{text};
    mpq_class a = 0, b = 0;
    bool saw_a = false, saw_b = false;
    bool first = true;
    while (!c.at_end()) {
        int sign = 1;
        c.skip_ws();
        if (c.eat('+')) {
            sign = 1;
        } else if (c.eat('-')) {
            sign = -1;
        } else if (!first) {
            throw std::invalid_argument("expected '+' or '-' in scalar text: " + text);
        }
        first = false;
        c.skip_ws();
        mpq_class coeff = 1;
        bool have_coeff = false;
        if (c.i < c.s.size() &&
            (std::isdigit(static_cast<unsigned char>(c.s[c.i])))) {
            coeff = parse_rational(c);
            have_coeff = true;
        }
        bool radical = false;
        if (have_coeff) {
            if (c.eat('*')) {
                if (!c.eat_word("sqrt")) throw std::invalid_argument("expected sqrt after '*'");
                radical = true;
            }
        } else if (c.eat_word("sqrt")) {
            radical = true;
        } else {
            throw std::invalid_argument("malformed scalar text: " + text);
        }
        if (radical) {
            if (!c.eat('(')) throw std::invalid_argument("expected '(' after sqrt");
            mpz_class dval = parse_int(c);
            if (!c.eat(')')) throw std::invalid_argument("expected ')' after sqrt argument");
            if (!dval.fits_slong_p()) throw std::invalid_argument("sqrt argument out of range");
            long d = dval.get_si();
            if (session_d == 0)
                throw field_mismatch("sqrt(" + std::to_string(d) + ") used in a rational session");
            if (d != session_d)
                throw field_mismatch("sqrt(" + std::to_string(d) + ") does not match session sqrt(" +
                                     std::to_string(session_d) + ")");
            if (saw_b) throw std::invalid_argument("repeated radical term in scalar text");
            saw_b = true;
            b = sign * coeff;
        } else {
            if (saw_a) throw std::invalid_argument("repeated rational term in scalar text");
            saw_a = true;
            a = sign * coeff;
        }
    }
    if (!saw_a && !saw_b) throw std::invalid_argument("empty scalar text");
    return Scalar(a, b, sgn(b) != 0 ? session_d : 0);
}

mpz_class minimizing_shear_param(const Scalar& s, const Scalar& p) {
    if (p.is_zero()) throw std::domain_error("shear parameter with zero pivot");
    Scalar target = -s / p;
    mpz_class lo = target.floor();
    mpz_class hi = lo + 1;
    Scalar rlo = (s + Scalar(lo) * p).abs();
    Scalar rhi = (s + Scalar(hi) * p).abs();
    if (rlo < rhi) return lo;
    if (rhi < rlo) return hi;
    // tie: smaller |i|, then positive i
    mpz_class alo = ::abs(lo), ahi = ::abs(hi);
    if (alo != ahi) return alo < ahi ? lo : hi;
    return lo > hi ? lo : hi;
}

mpz_class signed_window_shear_param(const Scalar& s, const Scalar& p, int sign) {
    if (p.is_zero()) throw std::domain_error("shear parameter with zero pivot");
    assert(sign == 1 || sign == -1);
    // want r = s + i*p with sign*r in (0, |p|]
    Scalar pa = p.abs();
    Scalar lo_bound = sign > 0 ? Scalar(0) : -pa;  // r in (lo, hi] for sign=+1, [lo, hi) for -1
    // solve uniformly: sign*r in (0, |p|]  <=>  r in (0,|p|] when sign=+1, r in [-|p|,0) else
    Scalar t = (Scalar(sign) * pa - s) / p;  // i with r = sign*|p|
    mpz_class i = t.floor();
    // adjust: residues step by p as i steps; walk into the window
    auto in_window = [&](const mpz_class& k) {
        Scalar r = s + Scalar(k) * p;
        return (Scalar(sign) * r).sign() > 0 && r.abs() <= pa;
    };
    for (mpz_class k = i - 2; k <= i + 2; ++k)
        if (in_window(k)) return k;
    throw std::logic_error("signed window shear parameter not found");
}

}  // namespace symcone
