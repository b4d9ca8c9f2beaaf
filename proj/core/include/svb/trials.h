// core/include/svb/trials.h

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

#ifndef SVB_TRIALS_H_
#define SVB_TRIALS_H_

#include <cstddef>
#include <cstdint>

#include "svb/data_model.h"

namespace svb {

struct SamplingConfig {
  std::size_t n_trials = 0;
  double target_fraction = 0.1;
  std::uint64_t seed = 0;
  bool allow_repeats = false;
};

/**
   Randomly samples gender-matched trials from the labeled utterances of
   `data`.  Exactly round(n_trials * target_fraction) trials are targets
   (same speaker, distinct utterances); the rest pair utterances of different
   speakers with the same gender.  Utterances with gender U or no speaker
   label are never used.  Without allow_repeats no unordered pair appears
   twice.  Deterministic given the seed; throws DataError when the request
   cannot be satisfied.
*/
TrialList SampleTrials(const EmbeddingSet &data, const SamplingConfig &config);

}  // namespace svb

#endif  // SVB_TRIALS_H_
