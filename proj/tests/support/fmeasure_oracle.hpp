#pragma once

// Reference bucketed F-measure computed from sorted token multisets with
// std::set_intersection; no hashing, no per-word clipping loop.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct BucketCounts {
  std::uint64_t matched = 0, sys = 0, ref = 0;
};

inline std::map<std::string, BucketCounts> fmeasure_counts(const std::vector<std::vector<std::string>>& hyp,
                                                           const std::vector<std::vector<std::string>>& ref,
                                                           const std::vector<std::vector<std::string>>& ref_pos,
                                                           const std::map<std::string, std::set<std::string>>& buckets) {
  // Majority tag per type; on a tie the alphabetically first tag.
  std::map<std::string, std::vector<std::string>> seen;
  for (std::size_t i = 0; i < ref.size(); ++i)
    for (std::size_t k = 0; k < ref[i].size(); ++k) seen[ref[i][k]].push_back(ref_pos[i][k]);
  std::map<std::string, std::string> bucket_of;
  for (auto& [word, tags] : seen) {
    std::sort(tags.begin(), tags.end());
    std::string best;
    long best_n = -1;
    for (const auto& t : std::set<std::string>(tags.begin(), tags.end())) {
      const long n = std::count(tags.begin(), tags.end(), t);
      if (n > best_n) best = t, best_n = n;
    }
    for (const auto& [name, set] : buckets)
      if (set.count(best)) {
        bucket_of[word] = name;
        break;
      }
  }

  std::map<std::string, BucketCounts> out;
  for (const auto& [name, _] : buckets) out[name];
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    for (const auto& [name, _] : buckets) {
      std::vector<std::string> h, r;
      for (const auto& w : hyp[i])
        if (bucket_of.count(w) && bucket_of[w] == name) h.push_back(w);
      for (const auto& w : ref[i])
        if (bucket_of.count(w) && bucket_of[w] == name) r.push_back(w);
      std::sort(h.begin(), h.end());
      std::sort(r.begin(), r.end());
      std::vector<std::string> common;
      std::set_intersection(h.begin(), h.end(), r.begin(), r.end(), std::back_inserter(common));
      out[name].matched += common.size();
      out[name].sys += h.size();
      out[name].ref += r.size();
    }
  }
  return out;
}

}  // namespace oracle
