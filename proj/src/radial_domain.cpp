#include "nls4/radial_domain.hpp"

namespace nls4 {

template class RadialGrid<double>;
template class RadialField<double>;

}  // namespace nls4
