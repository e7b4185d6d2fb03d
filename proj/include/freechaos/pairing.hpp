// Copyright 2026 The freechaos Authors.
//
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

// Pairings of {1..n}, interval partitions n1 x ... x nr, and the bijection
// between respectful noncrossing pairings and words of adjacent-block partial
// contractions.

#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "freechaos/error.hpp"

namespace freechaos {

// One pair {i, j} of a pairing, 1-based, stored with i < j.
using IndexPair = std::array<int, 2>;

// A perfect matching of {1..n}. Always held in canonical form: every pair is
// (min, max) and pairs are sorted by their first element, so two pairings
// are equal iff they are the same set of pairs.
class Pairing {
 public:
  Pairing() = default;

  explicit Pairing(std::vector<IndexPair> pairs) : pairs_(std::move(pairs)) {
    const int n = static_cast<int>(2 * pairs_.size());
    partner_.assign(n + 1, 0);
    for (auto& pr : pairs_) {
      if (pr[0] > pr[1]) std::swap(pr[0], pr[1]);
      if (pr[0] == pr[1]) {
        throw ValidationError("pairing: index " + std::to_string(pr[0]) +
                              " is paired with itself");
      }
      for (int idx : pr) {
        if (idx < 1 || idx > n) {
          throw ValidationError("pairing: index " + std::to_string(idx) +
                                " outside {1.." + std::to_string(n) + "}");
        }
        if (partner_[idx] != 0) {
          throw ValidationError("pairing: index " + std::to_string(idx) +
                                " appears twice");
        }
      }
      partner_[pr[0]] = pr[1];
      partner_[pr[1]] = pr[0];
    }
    std::sort(pairs_.begin(), pairs_.end());
  }

  // Size of the ground set {1..n}.
  int size() const { return static_cast<int>(2 * pairs_.size()); }
  const std::vector<IndexPair>& pairs() const { return pairs_; }

  int partner(int index) const {
    if (index < 1 || index > size()) {
      throw ArgumentError("pairing: no index " + std::to_string(index));
    }
    return partner_[index];
  }

  std::string to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      if (k) os << ',';
      os << '{' << pairs_[k][0] << ',' << pairs_[k][1] << '}';
    }
    os << '}';
    return os.str();
  }

  friend bool operator==(const Pairing& a, const Pairing& b) {
    return a.pairs_ == b.pairs_;
  }
  friend auto operator<=>(const Pairing& a, const Pairing& b) {
    return a.pairs_ <=> b.pairs_;
  }

 private:
  std::vector<IndexPair> pairs_;
  std::vector<int> partner_{0};
};

// The interval partition n1 x n2 x ... x nr of {1..n1+...+nr}.
class IntervalPartition {
 public:
  explicit IntervalPartition(std::vector<int> block_sizes)
      : sizes_(std::move(block_sizes)) {
    if (sizes_.empty()) {
      throw ValidationError("interval partition needs at least one block");
    }
    begins_.reserve(sizes_.size());
    int next = 1;
    for (int s : sizes_) {
      if (s < 1) {
        throw ValidationError("interval partition: block sizes must be >= 1");
      }
      begins_.push_back(next);
      next += s;
    }
    total_ = next - 1;
    block_of_.assign(total_ + 1, -1);
    for (int b = 0; b < block_count(); ++b) {
      for (int i = 0; i < sizes_[b]; ++i) block_of_[begins_[b] + i] = b;
    }
  }

  const std::vector<int>& block_sizes() const { return sizes_; }
  int block_count() const { return static_cast<int>(sizes_.size()); }
  int total() const { return total_; }

  // 0-based block containing the 1-based index.
  int block_of(int index) const {
    if (index < 1 || index > total_) {
      throw ArgumentError("interval partition: no index " +
                          std::to_string(index));
    }
    return block_of_[index];
  }
  // First 1-based index of block b.
  int block_begin(int b) const { return begins_.at(b); }

  std::vector<int> block_indices(int b) const {
    std::vector<int> out(sizes_.at(b));
    std::iota(out.begin(), out.end(), begins_[b]);
    return out;
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t b = 0; b < sizes_.size(); ++b) {
      if (b) s += 'x';
      s += std::to_string(sizes_[b]);
    }
    return s;
  }

  friend bool operator==(const IntervalPartition& a,
                         const IntervalPartition& b) {
    return a.sizes_ == b.sizes_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<int> begins_;
  std::vector<int> block_of_;
  int total_ = 0;
};

// Depths p1..p_{r-1} of the partial contractions that build a respectful
// noncrossing pairing block by block. Zero depths are kept: they record that
// two blocks were joined without pairing anything.
struct ContractionWord {
  std::vector<int> depths;

  // "tau_{p_{r-1}} o ... o tau_{p_1}", the composition order.
  std::string composition_string() const {
    std::string s;
    for (auto it = depths.rbegin(); it != depths.rend(); ++it) {
      if (!s.empty()) s += " o ";
      s += "tau" + std::to_string(*it);
    }
    return s;
  }

  friend bool operator==(const ContractionWord&,
                         const ContractionWord&) = default;
  friend auto operator<=>(const ContractionWord&,
                          const ContractionWord&) = default;
};

// Blocks of an interval partition, linked when some pair joins them.
struct LinkGraph {
  int vertex_count = 0;
  std::set<std::pair<int, int>> edges;  // (i, j) with i < j, 0-based blocks
};

namespace detail {

inline void check_ground(const Pairing& p, const IntervalPartition& ip) {
  if (p.size() != ip.total()) {
    throw ValidationError("pairing on {1.." + std::to_string(p.size()) +
                          "} does not match interval partition " +
                          ip.to_string() + " of total " +
                          std::to_string(ip.total()));
  }
}

inline void check_even(int n, const char* what) {
  if (n < 0 || n % 2 != 0) {
    throw ArgumentError(std::string(what) + ": n must be even and >= 0, got " +
                        std::to_string(n));
  }
}

}  // namespace detail

// False iff two pairs {x1,y1}, {x2,y2} satisfy x1 < x2 < y1 < y2.
inline bool is_noncrossing(const Pairing& p) {
  // Scanning left to right, a closing index must close the innermost open arc.
  std::vector<int> open;
  for (int i = 1; i <= p.size(); ++i) {
    const int j = p.partner(i);
    if (j > i) {
      open.push_back(i);
    } else {
      if (open.empty() || open.back() != j) return false;
      open.pop_back();
    }
  }
  return true;
}

// True iff no pair of p lies inside a single block of ip.
inline bool respects(const Pairing& p, const IntervalPartition& ip) {
  detail::check_ground(p, ip);
  for (const auto& pr : p.pairs()) {
    if (ip.block_of(pr[0]) == ip.block_of(pr[1])) return false;
  }
  return true;
}

// All (n-1)!! perfect matchings of {1..n}, in lexicographic order.
inline std::vector<Pairing> enumerate_all_pairings(int n,
                                                   const Limits& limits = {}) {
  detail::check_even(n, "enumerate_all_pairings");
  if (n > limits.all_pairings_max_n) {
    throw ResourceError("enumerate_all_pairings: n = " + std::to_string(n) +
                        " exceeds the cap of " +
                        std::to_string(limits.all_pairings_max_n) +
                        "; try n <= " +
                        std::to_string(limits.all_pairings_max_n));
  }
  std::vector<Pairing> out;
  std::vector<char> used(n + 1, 0);
  std::vector<IndexPair> current;
  std::function<void()> extend = [&] {
    int i = 1;
    while (i <= n && used[i]) ++i;
    if (i > n) {
      out.emplace_back(current);
      return;
    }
    used[i] = 1;
    for (int j = i + 1; j <= n; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current.push_back({i, j});
      extend();
      current.pop_back();
      used[j] = 0;
    }
    used[i] = 0;
  };
  extend();
  return out;
}

// All noncrossing pairings of {1..n}, lexicographic order.
inline std::vector<Pairing> enumerate_nc2(int n, const Limits& limits = {}) {
  detail::check_even(n, "enumerate_nc2");
  if (n > limits.nc_pairings_max_n) {
    throw ResourceError("enumerate_nc2: n = " + std::to_string(n) +
                        " exceeds the cap of " +
                        std::to_string(limits.nc_pairings_max_n) +
                        "; try n <= " +
                        std::to_string(limits.nc_pairings_max_n));
  }
  std::vector<Pairing> out;
  std::vector<IndexPair> current;
  // Pending closed intervals [lo, hi] still to be paired, leftmost first.
  std::vector<std::pair<int, int>> pending;
  std::function<void()> extend = [&] {
    while (!pending.empty() && pending.front().first > pending.front().second) {
      pending.erase(pending.begin());
    }
    if (pending.empty()) {
      out.emplace_back(current);
      return;
    }
    const auto [lo, hi] = pending.front();
    const auto saved = pending;
    for (int j = lo + 1; j <= hi; j += 2) {
      pending = saved;
      pending.erase(pending.begin());
      pending.insert(pending.begin(), {{lo + 1, j - 1}, {j + 1, hi}});
      current.push_back({lo, j});
      extend();
      current.pop_back();
    }
    pending = saved;
  };
  if (n > 0) pending.push_back({1, n});
  extend();
  return out;
}

// All depth sequences satisfying the chained inequalities
//   0 <= p_k <= min(n_{k+1}, n_1 + ... + n_k - 2(p_1 + ... + p_{k-1}))
// together with 2 * sum(p) = n, in lexicographic order.
inline std::vector<ContractionWord> enumerate_contraction_words(
    const IntervalPartition& ip) {
  const auto& sizes = ip.block_sizes();
  const int r = ip.block_count();
  std::vector<int> suffix(r + 1, 0);
  for (int b = r - 1; b >= 0; --b) suffix[b] = suffix[b + 1] + sizes[b];

  std::vector<ContractionWord> out;
  std::vector<int> depths;
  std::function<void(int, int)> extend = [&](int k, int open) {
    // k: index of the next block to join; open: unpaired indices so far.
    if (k == r) {
      if (open == 0) out.push_back({depths});
      return;
    }
    const int limit = std::min(sizes[k], open);
    for (int p = 0; p <= limit; ++p) {
      const int next_open = open + sizes[k] - 2 * p;
      // Everything still open must be paired by the blocks after k.
      if (next_open > suffix[k + 1]) continue;
      depths.push_back(p);
      extend(k + 1, next_open);
      depths.pop_back();
    }
  };
  if (sizes[0] <= suffix[1]) extend(1, sizes[0]);
  return out;
}

// Applies the partial contractions block by block. Throws ArgumentError when
// the word violates the chained inequalities or leaves indices unpaired.
inline Pairing compose(const ContractionWord& word,
                       const IntervalPartition& ip) {
  const int r = ip.block_count();
  if (static_cast<int>(word.depths.size()) != r - 1) {
    throw ArgumentError("compose: word of length " +
                        std::to_string(word.depths.size()) +
                        " does not fit " + std::to_string(r) + " blocks");
  }
  std::vector<int> merged = ip.block_indices(0);
  std::vector<IndexPair> pairs;
  for (int k = 0; k + 1 < r; ++k) {
    const int p = word.depths[k];
    const std::vector<int> next = ip.block_indices(k + 1);
    if (p < 0 || p > static_cast<int>(next.size()) ||
        p > static_cast<int>(merged.size())) {
      throw ArgumentError("compose: depth " + std::to_string(p) +
                          " at step " + std::to_string(k + 1) +
                          " violates 0 <= p <= min(" +
                          std::to_string(next.size()) + ", " +
                          std::to_string(merged.size()) + ")");
    }
    for (int i = 0; i < p; ++i) {
      pairs.push_back({merged[merged.size() - 1 - i], next[i]});
    }
    merged.resize(merged.size() - p);
    merged.insert(merged.end(), next.begin() + p, next.end());
  }
  if (!merged.empty()) {
    throw ArgumentError("compose: word leaves " +
                        std::to_string(merged.size()) + " indices unpaired");
  }
  return Pairing(std::move(pairs));
}

// NC2(n1 x ... x nr), built from contraction words, sorted lexicographically.
inline std::vector<Pairing> enumerate_nc2_respecting(
    const IntervalPartition& ip, const Limits& limits = {}) {
  detail::check_even(ip.total(), "enumerate_nc2_respecting");
  if (ip.total() > limits.nc_pairings_max_n) {
    throw ResourceError("enumerate_nc2_respecting: total " +
                        std::to_string(ip.total()) + " exceeds the cap of " +
                        std::to_string(limits.nc_pairings_max_n));
  }
  std::vector<Pairing> out;
  for (const auto& w : enumerate_contraction_words(ip)) {
    out.push_back(compose(w, ip));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Every pairing (crossing or not) respecting ip, lexicographic order. This
// is the index set of the classical moment formula.
inline std::vector<Pairing> enumerate_respecting_pairings(
    const IntervalPartition& ip, const Limits& limits = {}) {
  const int n = ip.total();
  detail::check_even(n, "enumerate_respecting_pairings");
  if (n > limits.all_pairings_max_n) {
    throw ResourceError("enumerate_respecting_pairings: total " +
                        std::to_string(n) + " exceeds the cap of " +
                        std::to_string(limits.all_pairings_max_n));
  }
  std::vector<Pairing> out;
  std::vector<char> used(n + 1, 0);
  std::vector<IndexPair> current;
  std::function<void()> extend = [&] {
    int i = 1;
    while (i <= n && used[i]) ++i;
    if (i > n) {
      out.emplace_back(current);
      return;
    }
    used[i] = 1;
    for (int j = i + 1; j <= n; ++j) {
      if (used[j] || ip.block_of(j) == ip.block_of(i)) continue;
      used[j] = 1;
      current.push_back({i, j});
      extend();
      current.pop_back();
      used[j] = 0;
    }
    used[i] = 0;
  };
  extend();
  return out;
}

inline LinkGraph link_graph(const Pairing& p, const IntervalPartition& ip) {
  detail::check_ground(p, ip);
  LinkGraph g;
  g.vertex_count = ip.block_count();
  for (const auto& pr : p.pairs()) {
    const int a = ip.block_of(pr[0]);
    const int b = ip.block_of(pr[1]);
    if (a != b) g.edges.insert({std::min(a, b), std::max(a, b)});
  }
  return g;
}

// Connected components of the link graph, each a sorted list of 0-based
// blocks, ordered by their first block.
inline std::vector<std::vector<int>> connected_components(
    const Pairing& p, const IntervalPartition& ip) {
  if (!respects(p, ip)) {
    throw ArgumentError("connected_components: pairing " + p.to_string() +
                        " does not respect " + ip.to_string());
  }
  const int r = ip.block_count();
  std::vector<int> parent(r);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : link_graph(p, ip).edges) {
    parent[find(a)] = find(b);
  }
  std::vector<std::vector<int>> comps;
  std::vector<int> slot(r, -1);
  for (int b = 0; b < r; ++b) {
    const int root = find(b);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[slot[root]].push_back(b);
  }
  return comps;
}

inline bool is_connected(const Pairing& p, const IntervalPartition& ip) {
  return connected_components(p, ip).size() == 1;
}

// The unique contraction word with compose(word, ip) == p. Depth k counts the
// pairs joining block k+1 to the blocks already merged; noncrossing forces
// those pairs to nest around the boundary.
inline ContractionWord decompose(const Pairing& p,
                                 const IntervalPartition& ip) {
  detail::check_ground(p, ip);
  if (!respects(p, ip)) {
    throw DecompositionError("decompose: pairing " + p.to_string() +
                             " does not respect " + ip.to_string());
  }
  if (!is_noncrossing(p)) {
    throw DecompositionError("decompose: pairing " + p.to_string() +
                             " has a crossing");
  }
  ContractionWord word;
  std::vector<int> merged = ip.block_indices(0);
  for (int k = 1; k < ip.block_count(); ++k) {
    const std::vector<int> next = ip.block_indices(k);
    const int limit =
        static_cast<int>(std::min(merged.size(), next.size()));
    int depth = 0;
    while (depth < limit &&
           p.partner(merged[merged.size() - 1 - depth]) == next[depth]) {
      ++depth;
    }
    word.depths.push_back(depth);
    merged.resize(merged.size() - depth);
    merged.insert(merged.end(), next.begin() + depth, next.end());
  }
  if (!merged.empty() || compose(word, ip) != p) {
    throw DecompositionError("decompose: pairing " + p.to_string() +
                             " is not a composition of partial contractions");
  }
  return word;
}

// Exact Catalan number C_m = binom(2m, m) / (m + 1).
inline std::uint64_t catalan(int m) {
  if (m < 0) throw ArgumentError("catalan: m must be >= 0");
  unsigned __int128 c = 1;
  for (int k = 0; k < m; ++k) {
    // C_{k+1} = C_k * 2(2k+1) / (k+2), exact at every step.
    c = c * (2u * (2u * static_cast<unsigned>(k) + 1u)) /
        static_cast<unsigned>(k + 2);
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      throw ArithmeticError("catalan: C_" + std::to_string(m) +
                            " overflows 64 bits");
    }
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace freechaos
