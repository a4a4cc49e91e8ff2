#include <cmath>
#include <string>
#include <vector>

#include "adamil/errors.hpp"
#include "adamil/wiener.hpp"

namespace adamil {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

cpp_int binomial(int n, int k) {
    cpp_int r = 1;
    for (int t = 1; t <= k; ++t) {
        r = r * (n - k + t) / t;
    }
    return r;
}

}  // namespace

cpp_int euler_number(int n) {
    if (n < 0) {
        throw UsageError("Euler number index must be non-negative");
    }
    if (n % 2 != 0) {
        return 0;
    }
    // cosh(x) * sech(x) = 1  =>  sum_{k=0}^{N} C(2N, 2k) E_{2k} = 0 for N >= 1.
    std::vector<cpp_int> even{1};
    for (int big = 1; big <= n / 2; ++big) {
        cpp_int sum = 0;
        for (int k = 0; k < big; ++k) {
            sum += binomial(2 * big, 2 * k) * even[static_cast<std::size_t>(k)];
        }
        even.push_back(-sum);
    }
    return even.back();
}

namespace {

// I_b = (prod_{B<b} (b - B)) / b! * E_b * (-i/2)^b, real for every b.
cpp_rational signed_moment(int b) {
    if (b % 2 != 0) {
        return 0;
    }
    cpp_int falling = 1;
    cpp_int factorial = 1;
    for (int k = 0; k < b; ++k) {
        falling *= b - k;
        factorial *= k + 1;
    }
    // (-i)^b = (-1)^(b/2) for even b.
    const int sign = (b / 2) % 2 == 0 ? 1 : -1;
    cpp_rational value(falling * euler_number(b), factorial);
    value *= cpp_rational(sign, cpp_int(1) << b);
    return value;
}

}  // namespace

LevyMoment moment_constant(int b) {
    if (b < 1 || b > kMaxMomentOrder) {
        throw UsageError("moment order " + std::to_string(b) + " outside [1, " + std::to_string(kMaxMomentOrder) + "]");
    }
    LevyMoment out;
    out.order = b;
    out.exact = signed_moment(b);
    out.value = out.exact.convert_to<double>();
    const double second = signed_moment(2).convert_to<double>();
    if (b == 1) {
        out.abs_bound = std::sqrt(second);
    } else if (b % 2 != 0) {
        out.abs_bound = std::sqrt(signed_moment(2 * b - 2).convert_to<double>() * second);
    } else {
        out.abs_bound = out.value;
    }
    return out;
}

}  // namespace adamil
