#pragma once

#include "crn/graph_recovery.hpp"
#include "crn/mass_action.hpp"
#include "crn/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crn {

/// A benchmark model plus the experiment protocol it is run under.
struct Preset {
  std::string name;
  CrnModel model;                   // rates are the fixed values, or placeholders when sampled
  std::optional<RateRange> rates;   // sampled i.i.d. per trial when set
  int w = 1;
  double t0 = 0.0;
  double tn = 20.0;
  double tau = 1e-2;
  Scheme scheme = Scheme::active_columns;
  std::vector<std::vector<int>> moieties;  // conserved species index sets
};

/// A + cat <-> catA <-> P + cat.
Preset preset_m1();
/// M1 plus cat -> catI and catA -> catAI.
Preset preset_m20();
/// 2 x1 -> x2, x1 -> x3 -> x4 with fixed rates.
Preset preset_vdv();

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
Preset preset_by_name(const std::string& name);

}  // namespace crn
