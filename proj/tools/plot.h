// tools/plot.h

// Copyright 2026  The svbackend Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVB_TOOLS_PLOT_H_
#define SVB_TOOLS_PLOT_H_

#include <span>
#include <string>
#include <vector>

namespace svb {

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

/// Histogram of `scores` over [lo, hi] with `bins` equal bins; the top edge
/// belongs to the last bin.
Histogram MakeHistogram(std::span<const double> scores, double lo, double hi, int bins);

/**
   Writes det.csv (p_fa,p_miss per DET point), hist_target.csv and
   hist_nontarget.csv (50 bins over the shared score range) and scores.svg,
   which overlays both histograms with vertical lines at log(beta_k) and at
   the minimum-cost thresholds.
*/
void WritePlotOutputs(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas, const std::string &out_dir);

}  // namespace svb

#endif  // SVB_TOOLS_PLOT_H_
