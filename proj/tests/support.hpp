#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "evlog/catalog.hpp"
#include "evlog/ingest.hpp"
#include "evlog/matching.hpp"

namespace testing {

using namespace evlog;

// video_play(duration:int64:8, genre:utf8:16)
inline BehaviorType video_play() {
  return {0, "video_play", {{"duration", AttrKind::int64, 8}, {"genre", AttrKind::utf8, 16}}};
}

inline BehaviorType click() {
  return {0, "click", {{"target", AttrKind::utf8, 12}, {"pos", AttrKind::int64, 4}}};
}

inline BehaviorEvent event(std::uint64_t seq, BehaviorId b, std::int64_t ts, std::map<std::string, Value> values) {
  return {seq, b, ts, std::move(values)};
}

/// Every matching of a small graph by recursion; returns the best weight.
inline std::int64_t brute_force_matching_weight(std::size_t n, const std::vector<WeightedEdge>& edges) {
  std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, std::numeric_limits<std::int64_t>::min()));
  for (const auto& e : edges) {
    if (e.u == e.v || e.weight <= 0) continue;
    w[e.u][e.v] = w[e.v][e.u] = std::max(w[e.u][e.v], e.weight);
  }
  std::vector<bool> used(n, false);
  std::function<std::int64_t(std::size_t)> go = [&](std::size_t i) -> std::int64_t {
    while (i < n && used[i]) ++i;
    if (i >= n) return 0;
    used[i] = true;
    std::int64_t best = go(i + 1);  // i unmatched
    for (std::size_t j = i + 1; j < n; ++j) {
      if (used[j] || w[i][j] == std::numeric_limits<std::int64_t>::min()) continue;
      used[j] = true;
      best = std::max(best, w[i][j] + go(i + 1));
      used[j] = false;
    }
    used[i] = false;
    return best;
  };
  return go(0);
}

inline std::vector<WeightedEdge> random_graph(std::mt19937_64& rng, std::size_t n, double density, int max_w) {
  std::vector<WeightedEdge> edges;
  std::uniform_real_distribution<double> coin(0, 1);
  std::uniform_int_distribution<int> weight(1, max_w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng) < density) edges.push_back({i, j, weight(rng)});
    }
  }
  return edges;
}

/// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("evlog_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
