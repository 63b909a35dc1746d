#include "nls4/spectral_operator.hpp"

#include <bit>
#include <cstdio>

namespace nls4 {

template class SpectralOperator<double>;

namespace detail {

std::string cache_file_name(OperatorKind kind, int n, double r_max, long long N,
                            std::uint64_t potential_hash) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "eig_%s_n%d_N%lld_R%016llx_V%016llx.bin",
                kind == OperatorKind::free ? "free" : "full", n, N,
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(r_max)),
                static_cast<unsigned long long>(potential_hash));
  return buf;
}

std::string resolve_cache_dir(const OperatorOptions& options) {
  if (!options.cache_dir.empty()) return options.cache_dir;
  const char* env = std::getenv("NLS4_CACHE_DIR");
  return env ? std::string(env) : std::string();
}

}  // namespace detail

}  // namespace nls4
