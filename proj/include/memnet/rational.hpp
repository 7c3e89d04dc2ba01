#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace memnet {

/// Exact rational on 128-bit integers, always reduced with a positive
/// denominator. Arithmetic throws std::overflow_error instead of wrapping.
class Rational {
public:
    using Int = __int128;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t value) : num_(value) {}  // NOLINT(implicit)
    Rational(Int num, Int den) : num_(num), den_(den) {
        if (den_ == 0) throw std::domain_error("Rational: zero denominator");
        normalize();
    }

    Int num() const { return num_; }
    Int den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    bool is_zero() const { return num_ == 0; }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const Int g = gcd(a.den_, b.den_);
        const Int left = checked_mul(a.num_, b.den_ / g);
        const Int right = checked_mul(b.num_, a.den_ / g);
        return {checked_add(left, right), checked_mul(a.den_ / g, b.den_)};
    }
    friend Rational operator-(const Rational& a) { return {-a.num_, a.den_}; }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        const Int g1 = gcd(a.num_, b.den_);
        const Int g2 = gcd(b.num_, a.den_);
        return {checked_mul(a.num_ / g1, b.num_ / g2), checked_mul(a.den_ / g2, b.den_ / g1)};
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("Rational: division by zero");
        return a * Rational(b.den_, b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    std::string to_string() const {
        std::string out = int_to_string(num_);
        if (den_ != 1) out += "/" + int_to_string(den_);
        return out;
    }

private:
    static Int abs(Int x) { return x < 0 ? -x : x; }
    static Int gcd(Int a, Int b) {
        a = abs(a);
        b = abs(b);
        while (b != 0) {
            const Int t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }
    static Int checked_mul(Int a, Int b) {
        Int out;
        if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("Rational: overflow");
        return out;
    }
    static Int checked_add(Int a, Int b) {
        Int out;
        if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("Rational: overflow");
        return out;
    }
    static std::string int_to_string(Int x) {
        if (x == 0) return "0";
        const bool negative = x < 0;
        std::string digits;
        while (x != 0) {
            const int digit = static_cast<int>(x % 10);
            digits.insert(digits.begin(), static_cast<char>('0' + (digit < 0 ? -digit : digit)));
            x /= 10;
        }
        return negative ? "-" + digits : digits;
    }
    void normalize() {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const Int g = gcd(num_, den_);
        num_ /= g;
        den_ /= g;
    }

    Int num_ = 0;
    Int den_ = 1;
};

}  // namespace memnet
