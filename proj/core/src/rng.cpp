#include "acdlab/rng.hpp"

#include "acdlab/normal.hpp"

namespace acdlab {

double Rng::gaussian() noexcept {
    return normal_quantile(uniform01());
}

} // namespace acdlab
