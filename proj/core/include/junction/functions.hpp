#pragma once

#include <functional>

namespace junction {

using ScalarFn1 = std::function<double(double)>;
using ScalarFn2 = std::function<double(double, double)>;

}  // namespace junction
