#include "nls4/nls_solver.hpp"

namespace nls4 {

void SimulationConfig::validate(int n) const {
  if (!(dt > 0) || !std::isfinite(dt)) throw PreconditionError("simulation: dt must be positive");
  if (!(t_end > 0) || !std::isfinite(t_end)) throw PreconditionError("simulation: t_end must be positive");
  if (dt > t_end) throw PreconditionError("simulation: dt must not exceed t_end");
  if (!(p > 1) || !std::isfinite(p)) throw PreconditionError("simulation: p must exceed 1");
  if (!std::isfinite(lambda)) throw PreconditionError("simulation: lambda must be finite");
  if (critical && n > 4 && std::abs(p - critical_power(n)) >= 1e-12)
    throw PreconditionError("simulation: p is marked critical but differs from 2n/(n-4) - 1");
  if (monitor_stride < 1) throw PreconditionError("simulation: monitor_stride must be >= 1");
  if (snapshot_stride < 0) throw PreconditionError("simulation: snapshot_stride must be >= 0");
  if (!(picard_tol > 0)) throw PreconditionError("simulation: picard_tol must be positive");
  if (picard_max_iter < 1) throw PreconditionError("simulation: picard_max_iter must be >= 1");
  if (!(boundary_threshold > 0)) throw PreconditionError("simulation: boundary_threshold must be positive");
  if (!(blowup_factor > 1)) throw PreconditionError("simulation: blowup_factor must exceed 1");
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::boundary_contaminated: return "boundary contaminated";
    case RunStatus::blowup_suspected: return "blow-up suspected";
  }
  return "unknown";
}

}  // namespace nls4
