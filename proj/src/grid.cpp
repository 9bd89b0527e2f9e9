#include "lfpp/grid.hpp"

#include <string>

#include "lfpp/error.hpp"

namespace lfpp {

void GridSpec::validate() const {
  if (n < 2 || (n & (n - 1)) != 0) {
    throw Error(ErrorKind::geometry, "grid n=" + std::to_string(n) + " is not a power of two");
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorKind::geometry, "grid half_width must be positive and finite");
  }
  if (pad_factor < 2) {
    throw Error(ErrorKind::geometry,
                "pad_factor=" + std::to_string(pad_factor) + " must be at least 2");
  }
}

}  // namespace lfpp
