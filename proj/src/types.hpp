#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace echobeam {

using Complex = std::complex<double>;
using Vec = std::vector<double>;
using CVec = std::vector<Complex>;

}  // namespace echobeam
