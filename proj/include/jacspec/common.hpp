#pragma once

#include <complex>
#include <cstddef>

namespace jacspec {

using Index = std::ptrdiff_t;

template <typename Real>
using ComplexT = std::complex<Real>;

using Complex = ComplexT<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

}  // namespace jacspec
