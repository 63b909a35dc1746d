#pragma once

#include "nls4/analysis.hpp"
#include "nls4/config.hpp"
#include "nls4/potentials.hpp"
#include "nls4/report.hpp"

namespace nls4::experiments {

struct Setup {
  int n = 0;
  GridPtr<double> grid;
  PotentialSpec spec;
  OperatorPtr<double> full;
  OperatorPtr<double> free;
  SimulationConfig sim;
};

Setup make_setup(const ExperimentConfig& cfg);
PotentialSpec potential_from(const ExperimentConfig& cfg);
SimulationConfig simulation_from(const ExperimentConfig& cfg);
RadialField<double> initial_datum(const ExperimentConfig& cfg, const Setup& s);

void conservation(const ExperimentConfig& cfg, ExperimentReport& rep);
void decay(const ExperimentConfig& cfg, ExperimentReport& rep);
void sobolev_equiv(const ExperimentConfig& cfg, ExperimentReport& rep);
void strichartz(const ExperimentConfig& cfg, ExperimentReport& rep);
void localized_mass(const ExperimentConfig& cfg, ExperimentReport& rep);
void morawetz(const ExperimentConfig& cfg, ExperimentReport& rep);
void small_data_global(const ExperimentConfig& cfg, ExperimentReport& rep);
void subcritical_global_cases(const ExperimentConfig& cfg, ExperimentReport& rep);
void perturbation(const ExperimentConfig& cfg, ExperimentReport& rep);
void wave_operator(const ExperimentConfig& cfg, ExperimentReport& rep);
void scattering(const ExperimentConfig& cfg, ExperimentReport& rep);
void final_state(const ExperimentConfig& cfg, ExperimentReport& rep);

}  // namespace nls4::experiments
