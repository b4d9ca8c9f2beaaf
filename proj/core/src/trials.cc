// core/src/trials.cc

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

#include "svb/trials.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "svb/error.h"

namespace svb {

namespace {

using Pair = std::pair<std::size_t, std::size_t>;

std::uint64_t PairKey(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

std::uint64_t Choose2(std::size_t n) {
  return n < 2 ? 0 : static_cast<std::uint64_t>(n) * (n - 1) / 2;
}

/// Eligible utterances grouped by gender, and within a gender by speaker.
struct Pools {
  // gender -> rows
  std::vector<std::vector<std::size_t>> by_gender;
  // (gender, speaker) groups
  std::vector<std::vector<std::size_t>> groups;
  std::vector<int> speaker_of_row;  // dense speaker id per row, -1 if ineligible
  std::vector<std::uint64_t> nontarget_pairs;  // per gender
  std::uint64_t target_total = 0;
  std::uint64_t nontarget_total = 0;
};

Pools BuildPools(const EmbeddingSet &data) {
  Pools p;
  p.by_gender.resize(2);
  p.speaker_of_row.assign(data.Size(), -1);
  std::map<std::pair<int, std::string>, std::size_t> group_of;
  for (std::size_t i = 0; i < data.Size(); ++i) {
    Gender g = data.Genders()[i];
    if (g == Gender::kUnknown || !data.IsLabeled(i)) continue;
    int gi = static_cast<int>(g);
    auto [it, inserted] = group_of.emplace(std::make_pair(gi, data.Speakers()[i]),
                                           p.groups.size());
    if (inserted) p.groups.emplace_back();
    p.groups[it->second].push_back(i);
    p.by_gender[gi].push_back(i);
  }
  // Speaker identity for the nontarget check is the speaker string.
  std::map<std::string, int> spk_id;
  for (std::size_t i = 0; i < data.Size(); ++i) {
    if (data.Genders()[i] == Gender::kUnknown || !data.IsLabeled(i)) continue;
    auto it = spk_id.emplace(data.Speakers()[i], static_cast<int>(spk_id.size())).first;
    p.speaker_of_row[i] = it->second;
  }
  std::vector<std::uint64_t> same_speaker(2, 0);
  for (const auto &[key, gidx] : group_of) {
    std::uint64_t n2 = Choose2(p.groups[gidx].size());
    p.target_total += n2;
    same_speaker[key.first] += n2;
  }
  p.nontarget_pairs.resize(2);
  for (int g = 0; g < 2; ++g) {
    p.nontarget_pairs[g] = Choose2(p.by_gender[g].size()) - same_speaker[g];
    p.nontarget_total += p.nontarget_pairs[g];
  }
  return p;
}

class PairSampler {
 public:
  PairSampler(std::mt19937_64 &rng, bool allow_repeats)
      : rng_(rng), allow_repeats_(allow_repeats) {}

  /// Draws `count` pairs from the uniform proposal `draw`, rejecting repeats
  /// unless allowed.  `total` is the number of distinct unordered pairs and
  /// `enumerate` lists them; it is used instead of rejection when the request
  /// covers a large share of the population.
  template <typename Draw, typename Enumerate>
  std::vector<Pair> Sample(std::size_t count, std::uint64_t total, Draw draw,
                           Enumerate enumerate, const char *what) {
    std::vector<Pair> out;
    if (count == 0) return out;
    if (total == 0)
      throw DataError(std::string("trial sampling: no eligible gender-matched ") + what +
                      " pairs");
    if (!allow_repeats_ && count > total)
      throw DataError(std::string("trial sampling: requested ") + std::to_string(count) +
                      " " + what + " trials but only " + std::to_string(total) +
                      " distinct pairs exist");
    if (!allow_repeats_ && total <= 2 * static_cast<std::uint64_t>(count)) {
      std::vector<Pair> all = enumerate();
      for (std::size_t k = 0; k < count; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, all.size() - 1);
        std::swap(all[k], all[pick(rng_)]);
        out.push_back(RandomOrientation(all[k]));
      }
      return out;
    }
    std::unordered_set<std::uint64_t> seen;
    while (out.size() < count) {
      Pair p = draw();
      if (!allow_repeats_ && !seen.insert(PairKey(p.first, p.second)).second) continue;
      out.push_back(p);
    }
    return out;
  }

 private:
  Pair RandomOrientation(Pair p) {
    std::bernoulli_distribution flip(0.5);
    if (flip(rng_)) std::swap(p.first, p.second);
    return p;
  }

  std::mt19937_64 &rng_;
  bool allow_repeats_;
};

/// Uniform index in [0, n).
std::size_t Uniform(std::mt19937_64 &rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Index i in weights chosen with probability weights[i] / sum.
std::size_t Weighted(std::mt19937_64 &rng, const std::vector<std::uint64_t> &cumulative) {
  std::uint64_t r = std::uniform_int_distribution<std::uint64_t>(0, cumulative.back() - 1)(rng);
  return static_cast<std::size_t>(
      std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
}

}  // namespace

TrialList SampleTrials(const EmbeddingSet &data, const SamplingConfig &config) {
  if (config.n_trials < 1) throw UsageError("trial sampling: n_trials must be >= 1");
  if (!(config.target_fraction > 0.0 && config.target_fraction < 1.0))
    throw UsageError("trial sampling: target_fraction must be in (0, 1)");
  if (data.Size() >= (std::size_t{1} << 32))
    throw DataError("trial sampling: too many utterances");

  const std::size_t n_target = static_cast<std::size_t>(
      std::llround(static_cast<double>(config.n_trials) * config.target_fraction));
  const std::size_t n_nontarget = config.n_trials - n_target;
  Pools pools = BuildPools(data);
  std::mt19937_64 rng(config.seed);
  PairSampler sampler(rng, config.allow_repeats);

  std::vector<std::uint64_t> target_cum;
  std::uint64_t acc = 0;
  for (const auto &g : pools.groups) target_cum.push_back(acc += Choose2(g.size()));
  auto draw_target = [&]() -> Pair {
    const auto &g = pools.groups[Weighted(rng, target_cum)];
    std::size_t i = Uniform(rng, g.size());
    std::size_t j = Uniform(rng, g.size() - 1);
    if (j >= i) ++j;
    return {g[i], g[j]};
  };
  auto enumerate_targets = [&]() {
    std::vector<Pair> all;
    for (const auto &g : pools.groups)
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j) all.emplace_back(g[i], g[j]);
    return all;
  };

  std::vector<std::uint64_t> nontarget_cum{pools.nontarget_pairs[0],
                                           pools.nontarget_pairs[0] + pools.nontarget_pairs[1]};
  auto draw_nontarget = [&]() -> Pair {
    const auto &rows = pools.by_gender[Weighted(rng, nontarget_cum)];
    while (true) {
      std::size_t a = rows[Uniform(rng, rows.size())];
      std::size_t b = rows[Uniform(rng, rows.size())];
      if (pools.speaker_of_row[a] != pools.speaker_of_row[b]) return {a, b};
    }
  };
  auto enumerate_nontargets = [&]() {
    std::vector<Pair> all;
    for (const auto &rows : pools.by_gender)
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
          if (pools.speaker_of_row[rows[i]] != pools.speaker_of_row[rows[j]])
            all.emplace_back(rows[i], rows[j]);
    return all;
  };

  std::vector<Pair> targets =
      sampler.Sample(n_target, pools.target_total, draw_target, enumerate_targets, "target");
  std::vector<Pair> nontargets = sampler.Sample(n_nontarget, pools.nontarget_total,
                                                draw_nontarget, enumerate_nontargets,
                                                "nontarget");

  TrialList out;
  out.reserve(config.n_trials);
  for (const auto &[e, t] : targets)
    out.push_back({data.UttIds()[e], data.UttIds()[t], TrialLabel::kTarget});
  for (const auto &[e, t] : nontargets)
    out.push_back({data.UttIds()[e], data.UttIds()[t], TrialLabel::kNontarget});
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

}  // namespace svb
