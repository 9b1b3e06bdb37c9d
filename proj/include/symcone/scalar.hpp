#pragma once

#include <gmpxx.h>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace symcone {

struct field_mismatch : std::runtime_error {
    explicit field_mismatch(const std::string& msg) : std::runtime_error(msg) {}
};

/// Exact element a + b*sqrt(d) of Q or a fixed real quadratic field Q(sqrt(d)).
///
/// d == 0 encodes a plain rational (b is forced to 0); otherwise d is a
/// squarefree integer >= 2.  Values from Q embed into any Q(sqrt(d)), so a
/// rational and a quadratic scalar may be combined; two quadratic scalars
/// with different d raise field_mismatch.  All arithmetic is exact, sign and
/// comparison are decided by comparing a^2 against b^2*d over Q.
class Scalar {
public:
    Scalar() : a_(0), b_(0), d_(0) {}
    Scalar(long n) : a_(n), b_(0), d_(0) {}          // NOLINT: implicit by design
    Scalar(const mpz_class& n) : a_(n), b_(0), d_(0) {}
    Scalar(const mpq_class& a) : a_(a), b_(0), d_(0) { a_.canonicalize(); }
    Scalar(mpq_class a, mpq_class b, long d);

    static Scalar sqrt_d(long d) { return Scalar(mpq_class(0), mpq_class(1), d); }
    static Scalar rational(long num, long den) { return Scalar(mpq_class(num, den)); }

    const mpq_class& a() const { return a_; }
    const mpq_class& b() const { return b_; }
    long d() const { return d_; }

    bool is_rational() const { return d_ == 0; }
    bool is_zero() const { return sgn(a_) == 0 && sgn(b_) == 0; }
    bool is_integer() const { return sgn(b_) == 0 && a_.get_den() == 1; }
    mpz_class numerator() const;   // requires is_integer-free rational access
    mpz_class to_integer() const;  // requires is_integer()

    int sign() const;
    Scalar abs() const { return sign() < 0 ? -*this : *this; }
    Scalar conjugate() const { return Scalar(a_, -b_, d_); }

    Scalar operator-() const { return Scalar(-a_, -b_, d_); }
    Scalar& operator+=(const Scalar& o);
    Scalar& operator-=(const Scalar& o);
    Scalar& operator*=(const Scalar& o);
    Scalar& operator/=(const Scalar& o);

    friend Scalar operator+(Scalar x, const Scalar& y) { return x += y; }
    friend Scalar operator-(Scalar x, const Scalar& y) { return x -= y; }
    friend Scalar operator*(Scalar x, const Scalar& y) { return x *= y; }
    friend Scalar operator/(Scalar x, const Scalar& y) { return x /= y; }

    Scalar inverse() const;

    friend bool operator==(const Scalar& x, const Scalar& y);
    friend bool operator!=(const Scalar& x, const Scalar& y) { return !(x == y); }
    friend bool operator<(const Scalar& x, const Scalar& y) { return (x - y).sign() < 0; }
    friend bool operator<=(const Scalar& x, const Scalar& y) { return (x - y).sign() <= 0; }
    friend bool operator>(const Scalar& x, const Scalar& y) { return (x - y).sign() > 0; }
    friend bool operator>=(const Scalar& x, const Scalar& y) { return (x - y).sign() >= 0; }

    /// Exact floor of the real value.
    mpz_class floor() const;

    /// true iff x/y lies in Q; y must be nonzero.
    static bool ratio_is_rational(const Scalar& x, const Scalar& y);

    /// Text form "p/q" or "p/q+r/s*sqrt(d)", whitespace-insensitive on input.
    std::string str() const;
    static Scalar parse(const std::string& text, long session_d);

    friend std::ostream& operator<<(std::ostream& os, const Scalar& s);

    /// Throws unless d is 0 or a squarefree integer >= 2.
    static void validate_d(long d);

private:
    void normalize();
    static void check_fields(const Scalar& x, const Scalar& y);

    mpq_class a_, b_;
    long d_;
};

/// Nearest integer to -s/p (the shear parameter minimizing |s + i*p|).
/// Ties go to the smaller |i|, then to the positive i.
mpz_class minimizing_shear_param(const Scalar& s, const Scalar& p);

/// The unique i with s + i*p in sign*(0, |p|]; p nonzero, sign = +-1.
mpz_class signed_window_shear_param(const Scalar& s, const Scalar& p, int sign);

}  // namespace symcone
