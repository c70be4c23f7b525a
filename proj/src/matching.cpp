#include "evlog/matching.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace evlog {

namespace {

// Primal-dual weighted matching after Galil's exposition of Edmonds'
// algorithm. Edge k has endpoints 2k and 2k+1; a "p" below is an endpoint id.
// Vertex duals and slacks are kept doubled so everything stays integral.
class Blossom {
 public:
  Blossom(std::size_t n, std::span<const WeightedEdge> edges) : nv_(static_cast<int>(n)) {
    for (const auto& e : edges) edges_.push_back({static_cast<int>(e.u), static_cast<int>(e.v), e.weight});
    const int ne = static_cast<int>(edges_.size());
    std::int64_t maxw = 0;
    for (const auto& e : edges_) maxw = std::max(maxw, e.w);
    endpoint_.resize(2 * ne);
    for (int p = 0; p < 2 * ne; ++p) endpoint_[p] = p % 2 == 0 ? edges_[p / 2].i : edges_[p / 2].j;
    neighbend_.assign(nv_, {});
    for (int k = 0; k < ne; ++k) {
      neighbend_[edges_[k].i].push_back(2 * k + 1);
      neighbend_[edges_[k].j].push_back(2 * k);
    }
    mate_.assign(nv_, -1);
    label_.assign(2 * nv_, 0);
    labelend_.assign(2 * nv_, -1);
    inblossom_.resize(nv_);
    for (int v = 0; v < nv_; ++v) inblossom_[v] = v;
    blossomparent_.assign(2 * nv_, -1);
    blossomchilds_.assign(2 * nv_, {});
    blossombase_.assign(2 * nv_, -1);
    for (int v = 0; v < nv_; ++v) blossombase_[v] = v;
    blossomendps_.assign(2 * nv_, {});
    bestedge_.assign(2 * nv_, -1);
    blossombestedges_.assign(2 * nv_, std::nullopt);
    for (int b = 2 * nv_ - 1; b >= nv_; --b) unused_.push_back(b);
    std::reverse(unused_.begin(), unused_.end());
    dualvar_.assign(2 * nv_, 0);
    for (int v = 0; v < nv_; ++v) dualvar_[v] = maxw;
    allowedge_.assign(ne, false);
  }

  void solve() {
    const int ne = static_cast<int>(edges_.size());
    if (ne == 0) return;
    for (int stage = 0; stage < nv_; ++stage) {
      std::fill(label_.begin(), label_.end(), 0);
      std::fill(bestedge_.begin(), bestedge_.end(), -1);
      for (int b = nv_; b < 2 * nv_; ++b) blossombestedges_[b].reset();
      std::fill(allowedge_.begin(), allowedge_.end(), false);
      queue_.clear();
      for (int v = 0; v < nv_; ++v) {
        if (mate_[v] == -1 && label_[inblossom_[v]] == 0) assign_label(v, 1, -1);
      }
      bool augmented = false;
      while (true) {
        while (!queue_.empty() && !augmented) {
          const int v = queue_.back();
          queue_.pop_back();
          for (int p : neighbend_[v]) {
            const int k = p / 2;
            const int w = endpoint_[p];
            if (inblossom_[v] == inblossom_[w]) continue;
            std::int64_t kslack = 0;
            if (!allowedge_[k]) {
              kslack = slack(k);
              if (kslack <= 0) allowedge_[k] = true;
            }
            if (allowedge_[k]) {
              if (label_[inblossom_[w]] == 0) {
                assign_label(w, 2, p ^ 1);
              } else if (label_[inblossom_[w]] == 1) {
                const int base = scan_blossom(v, w);
                if (base >= 0) {
                  add_blossom(base, k);
                } else {
                  augment_matching(k);
                  augmented = true;
                  break;
                }
              } else if (label_[w] == 0) {
                label_[w] = 2;
                labelend_[w] = p ^ 1;
              }
            } else if (label_[inblossom_[w]] == 1) {
              const int b = inblossom_[v];
              if (bestedge_[b] == -1 || kslack < slack(bestedge_[b])) bestedge_[b] = k;
            } else if (label_[w] == 0) {
              if (bestedge_[w] == -1 || kslack < slack(bestedge_[w])) bestedge_[w] = k;
            }
          }
        }
        if (augmented) break;

        int deltatype = 1;
        std::int64_t delta = *std::min_element(dualvar_.begin(), dualvar_.begin() + nv_);
        int deltaedge = -1;
        int deltablossom = -1;
        for (int v = 0; v < nv_; ++v) {
          if (label_[inblossom_[v]] == 0 && bestedge_[v] != -1) {
            const auto d = slack(bestedge_[v]);
            if (d < delta) {
              delta = d;
              deltatype = 2;
              deltaedge = bestedge_[v];
            }
          }
        }
        for (int b = 0; b < 2 * nv_; ++b) {
          if (blossomparent_[b] == -1 && label_[b] == 1 && bestedge_[b] != -1) {
            const auto kslack = slack(bestedge_[b]);
            if (kslack % 2 != 0) throw std::logic_error("blossom: odd slack between S-vertices");
            const auto d = kslack / 2;
            if (d < delta) {
              delta = d;
              deltatype = 3;
              deltaedge = bestedge_[b];
            }
          }
        }
        for (int b = nv_; b < 2 * nv_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1 && label_[b] == 2 && dualvar_[b] < delta) {
            delta = dualvar_[b];
            deltatype = 4;
            deltablossom = b;
          }
        }
        for (int v = 0; v < nv_; ++v) {
          if (label_[inblossom_[v]] == 1) {
            dualvar_[v] -= delta;
          } else if (label_[inblossom_[v]] == 2) {
            dualvar_[v] += delta;
          }
        }
        for (int b = nv_; b < 2 * nv_; ++b) {
          if (blossombase_[b] >= 0 && blossomparent_[b] == -1) {
            if (label_[b] == 1) {
              dualvar_[b] += delta;
            } else if (label_[b] == 2) {
              dualvar_[b] -= delta;
            }
          }
        }
        if (deltatype == 1) break;
        if (deltatype == 2) {
          allowedge_[deltaedge] = true;
          int i = edges_[deltaedge].i;
          int j = edges_[deltaedge].j;
          if (label_[inblossom_[i]] == 0) std::swap(i, j);
          queue_.push_back(i);
        } else if (deltatype == 3) {
          allowedge_[deltaedge] = true;
          queue_.push_back(edges_[deltaedge].i);
        } else {
          expand_blossom(deltablossom, false);
        }
      }
      if (!augmented) break;
      for (int b = nv_; b < 2 * nv_; ++b) {
        if (blossomparent_[b] == -1 && blossombase_[b] >= 0 && label_[b] == 1 && dualvar_[b] == 0) {
          expand_blossom(b, true);
        }
      }
    }
  }

  std::vector<std::ptrdiff_t> mates() const {
    std::vector<std::ptrdiff_t> out(nv_, -1);
    for (int v = 0; v < nv_; ++v) {
      if (mate_[v] >= 0) out[v] = endpoint_[mate_[v]];
    }
    return out;
  }

  /// Complementary-slackness reduced cost of edge k (doubled); an edge can be
  /// in an optimal matching only if this is zero.
  std::int64_t reduced_cost(int k) const {
    std::int64_t z = 0;
    std::vector<int> chain_i;
    for (int b = edges_[k].i; b != -1; b = blossomparent_[b]) chain_i.push_back(b);
    for (int b = edges_[k].j; b != -1; b = blossomparent_[b]) {
      if (b >= nv_ && std::find(chain_i.begin(), chain_i.end(), b) != chain_i.end()) z += dualvar_[b];
    }
    return slack(k) + 2 * z;
  }

 private:
  struct E {
    int i;
    int j;
    std::int64_t w;
  };

  std::int64_t slack(int k) const { return dualvar_[edges_[k].i] + dualvar_[edges_[k].j] - 2 * edges_[k].w; }

  void leaves(int b, std::vector<int>& out) const {
    if (b < nv_) {
      out.push_back(b);
      return;
    }
    for (int t : blossomchilds_[b]) leaves(t, out);
  }
  std::vector<int> leaves(int b) const {
    std::vector<int> out;
    leaves(b, out);
    return out;
  }

  void assign_label(int w, int t, int p) {
    const int b = inblossom_[w];
    label_[w] = label_[b] = t;
    labelend_[w] = labelend_[b] = p;
    bestedge_[w] = bestedge_[b] = -1;
    if (t == 1) {
      leaves(b, queue_);
    } else if (t == 2) {
      const int base = blossombase_[b];
      assign_label(endpoint_[mate_[base]], 1, mate_[base] ^ 1);
    }
  }

  int scan_blossom(int v, int w) {
    std::vector<int> path;
    int base = -1;
    while (v != -1 || w != -1) {
      int b = inblossom_[v];
      if (label_[b] & 4) {
        base = blossombase_[b];
        break;
      }
      path.push_back(b);
      label_[b] = 5;
      if (labelend_[b] == -1) {
        v = -1;
      } else {
        v = endpoint_[labelend_[b]];
        b = inblossom_[v];
        v = endpoint_[labelend_[b]];
      }
      if (w != -1) std::swap(v, w);
    }
    for (int b : path) label_[b] = 1;
    return base;
  }

  void add_blossom(int base, int k) {
    int v = edges_[k].i;
    int w = edges_[k].j;
    const int bb = inblossom_[base];
    int bv = inblossom_[v];
    int bw = inblossom_[w];
    const int b = unused_.back();
    unused_.pop_back();
    blossombase_[b] = base;
    blossomparent_[b] = -1;
    blossomparent_[bb] = b;
    auto& path = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    path.clear();
    endps.clear();
    while (bv != bb) {
      blossomparent_[bv] = b;
      path.push_back(bv);
      endps.push_back(labelend_[bv]);
      v = endpoint_[labelend_[bv]];
      bv = inblossom_[v];
    }
    path.push_back(bb);
    std::reverse(path.begin(), path.end());
    std::reverse(endps.begin(), endps.end());
    endps.push_back(2 * k);
    while (bw != bb) {
      blossomparent_[bw] = b;
      path.push_back(bw);
      endps.push_back(labelend_[bw] ^ 1);
      w = endpoint_[labelend_[bw]];
      bw = inblossom_[w];
    }
    label_[b] = 1;
    labelend_[b] = labelend_[bb];
    dualvar_[b] = 0;
    for (int leaf : leaves(b)) {
      if (label_[inblossom_[leaf]] == 2) queue_.push_back(leaf);
      inblossom_[leaf] = b;
    }
    std::vector<int> bestedgeto(2 * nv_, -1);
    for (int child : path) {
      std::vector<std::vector<int>> nblists;
      if (!blossombestedges_[child]) {
        for (int leaf : leaves(child)) {
          std::vector<int> list;
          for (int p : neighbend_[leaf]) list.push_back(p / 2);
          nblists.push_back(std::move(list));
        }
      } else {
        nblists.push_back(*blossombestedges_[child]);
      }
      for (const auto& nblist : nblists) {
        for (int kk : nblist) {
          int i = edges_[kk].i;
          int j = edges_[kk].j;
          if (inblossom_[j] == b) std::swap(i, j);
          const int bj = inblossom_[j];
          if (bj != b && label_[bj] == 1 && (bestedgeto[bj] == -1 || slack(kk) < slack(bestedgeto[bj]))) {
            bestedgeto[bj] = kk;
          }
        }
      }
      blossombestedges_[child].reset();
      bestedge_[child] = -1;
    }
    std::vector<int> best;
    for (int kk : bestedgeto) {
      if (kk != -1) best.push_back(kk);
    }
    bestedge_[b] = -1;
    for (int kk : best) {
      if (bestedge_[b] == -1 || slack(kk) < slack(bestedge_[b])) bestedge_[b] = kk;
    }
    blossombestedges_[b] = std::move(best);
  }

  void expand_blossom(int b, bool endstage) {
    const auto childs = blossomchilds_[b];
    for (int s : childs) {
      blossomparent_[s] = -1;
      if (s < nv_) {
        inblossom_[s] = s;
      } else if (endstage && dualvar_[s] == 0) {
        expand_blossom(s, endstage);
      } else {
        for (int leaf : leaves(s)) inblossom_[leaf] = s;
      }
    }
    if (!endstage && label_[b] == 2) {
      const int entrychild = inblossom_[endpoint_[labelend_[b] ^ 1]];
      const int len = static_cast<int>(childs.size());
      int j = static_cast<int>(std::find(childs.begin(), childs.end(), entrychild) - childs.begin());
      int jstep;
      int endptrick;
      if (j & 1) {
        j -= len;
        jstep = 1;
        endptrick = 0;
      } else {
        jstep = -1;
        endptrick = 1;
      }
      auto at = [len](const std::vector<int>& xs, int idx) { return xs[((idx % len) + len) % len]; };
      const auto& endps = blossomendps_[b];
      int p = labelend_[b];
      while (j != 0) {
        label_[endpoint_[p ^ 1]] = 0;
        label_[endpoint_[at(endps, j - endptrick) ^ endptrick ^ 1]] = 0;
        assign_label(endpoint_[p ^ 1], 2, p);
        allowedge_[at(endps, j - endptrick) / 2] = true;
        j += jstep;
        p = at(endps, j - endptrick) ^ endptrick;
        allowedge_[p / 2] = true;
        j += jstep;
      }
      int bv = at(childs, j);
      label_[endpoint_[p ^ 1]] = label_[bv] = 2;
      labelend_[endpoint_[p ^ 1]] = labelend_[bv] = p;
      bestedge_[bv] = -1;
      j += jstep;
      while (at(childs, j) != entrychild) {
        bv = at(childs, j);
        if (label_[bv] == 1) {
          j += jstep;
          continue;
        }
        int found = -1;
        for (int leaf : leaves(bv)) {
          if (label_[leaf] != 0) {
            found = leaf;
            break;
          }
        }
        if (found != -1) {
          label_[found] = 0;
          label_[endpoint_[mate_[blossombase_[bv]]]] = 0;
          assign_label(found, 2, labelend_[found]);
        }
        j += jstep;
      }
    }
    label_[b] = labelend_[b] = -1;
    blossomchilds_[b].clear();
    blossomendps_[b].clear();
    blossombase_[b] = -1;
    blossombestedges_[b].reset();
    bestedge_[b] = -1;
    unused_.push_back(b);
  }

  void augment_blossom(int b, int v) {
    int t = v;
    while (blossomparent_[t] != b) t = blossomparent_[t];
    if (t >= nv_) augment_blossom(t, v);
    auto& childs = blossomchilds_[b];
    auto& endps = blossomendps_[b];
    const int len = static_cast<int>(childs.size());
    const int i = static_cast<int>(std::find(childs.begin(), childs.end(), t) - childs.begin());
    int j = i;
    int jstep;
    int endptrick;
    if (i & 1) {
      j -= len;
      jstep = 1;
      endptrick = 0;
    } else {
      jstep = -1;
      endptrick = 1;
    }
    auto at = [len](const std::vector<int>& xs, int idx) { return xs[((idx % len) + len) % len]; };
    while (j != 0) {
      j += jstep;
      t = at(childs, j);
      const int p = at(endps, j - endptrick) ^ endptrick;
      if (t >= nv_) augment_blossom(t, endpoint_[p]);
      j += jstep;
      t = at(childs, j);
      if (t >= nv_) augment_blossom(t, endpoint_[p ^ 1]);
      mate_[endpoint_[p]] = p ^ 1;
      mate_[endpoint_[p ^ 1]] = p;
    }
    std::rotate(childs.begin(), childs.begin() + i, childs.end());
    std::rotate(endps.begin(), endps.begin() + i, endps.end());
    blossombase_[b] = blossombase_[childs[0]];
  }

  void augment_matching(int k) {
    const int v = edges_[k].i;
    const int w = edges_[k].j;
    for (auto [s, p] : {std::pair{v, 2 * k + 1}, std::pair{w, 2 * k}}) {
      while (true) {
        const int bs = inblossom_[s];
        if (bs >= nv_) augment_blossom(bs, s);
        mate_[s] = p;
        if (labelend_[bs] == -1) break;
        const int t = endpoint_[labelend_[bs]];
        const int bt = inblossom_[t];
        s = endpoint_[labelend_[bt]];
        const int j = endpoint_[labelend_[bt] ^ 1];
        if (bt >= nv_) augment_blossom(bt, j);
        mate_[j] = labelend_[bt];
        p = labelend_[bt] ^ 1;
      }
    }
  }

  int nv_;
  std::vector<E> edges_;
  std::vector<int> endpoint_;
  std::vector<std::vector<int>> neighbend_;
  std::vector<int> mate_;
  std::vector<int> label_;
  std::vector<int> labelend_;
  std::vector<int> inblossom_;
  std::vector<int> blossomparent_;
  std::vector<std::vector<int>> blossomchilds_;
  std::vector<int> blossombase_;
  std::vector<std::vector<int>> blossomendps_;
  std::vector<int> bestedge_;
  std::vector<std::optional<std::vector<int>>> blossombestedges_;
  std::vector<int> unused_;
  std::vector<std::int64_t> dualvar_;
  std::vector<bool> allowedge_;
  std::vector<int> queue_;
};

// Positive-weight simple edges, heaviest parallel edge kept, as (u < v).
std::vector<WeightedEdge> normalize(std::size_t n, std::span<const WeightedEdge> edges) {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> best;
  for (const auto& e : edges) {
    if (e.u == e.v || e.weight <= 0) continue;
    if (e.u >= n || e.v >= n) throw std::out_of_range("matching: edge endpoint out of range");
    const auto key = std::minmax(e.u, e.v);
    auto [it, inserted] = best.emplace(key, e.weight);
    if (!inserted) it->second = std::max(it->second, e.weight);
  }
  std::vector<WeightedEdge> out;
  out.reserve(best.size());
  for (const auto& [key, w] : best) out.push_back({key.first, key.second, w});
  return out;
}

std::int64_t optimum(std::size_t n, const std::vector<WeightedEdge>& edges, const std::vector<bool>& removed) {
  std::vector<WeightedEdge> live;
  for (const auto& e : edges) {
    if (!removed[e.u] && !removed[e.v]) live.push_back(e);
  }
  if (live.empty()) return 0;
  Blossom solver(n, live);
  solver.solve();
  const auto mate = solver.mates();
  std::int64_t total = 0;
  for (const auto& e : live) {
    if (mate[e.u] == static_cast<std::ptrdiff_t>(e.v)) total += e.weight;
  }
  return total;
}

}  // namespace

std::vector<std::ptrdiff_t> blossom_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges) {
  const auto simple = normalize(vertex_count, edges);
  Blossom solver(vertex_count, simple);
  solver.solve();
  return solver.mates();
}

std::vector<MatchedPair> max_weight_matching(std::size_t vertex_count, std::span<const WeightedEdge> edges) {
  const auto simple = normalize(vertex_count, edges);
  if (simple.empty()) return {};

  Blossom solver(vertex_count, simple);
  solver.solve();
  const auto mate = solver.mates();
  std::int64_t target = 0;
  for (const auto& e : simple) {
    if (mate[e.u] == static_cast<std::ptrdiff_t>(e.v)) target += e.weight;
  }

  // Lexicographic tie-break: walk edges in (u, v) order and keep an edge
  // whenever an optimum containing everything kept so far still includes it.
  // Only edges with zero reduced cost can appear in any optimum, so the
  // others are skipped; if that ever fails to reach the optimum, retry with
  // every edge.
  auto greedy = [&](bool tight_only) -> std::optional<std::vector<MatchedPair>> {
    std::vector<bool> removed(vertex_count, false);
    std::vector<MatchedPair> chosen;
    std::int64_t kept = 0;
    for (std::size_t k = 0; k < simple.size() && kept < target; ++k) {
      const auto& e = simple[k];
      if (removed[e.u] || removed[e.v]) continue;
      if (tight_only && solver.reduced_cost(static_cast<int>(k)) != 0) continue;
      removed[e.u] = removed[e.v] = true;
      if (kept + e.weight + optimum(vertex_count, simple, removed) == target) {
        chosen.emplace_back(e.u, e.v);
        kept += e.weight;
      } else {
        removed[e.u] = removed[e.v] = false;
      }
    }
    if (kept != target) return std::nullopt;
    return chosen;
  };
  if (auto result = greedy(true)) return *result;
  if (auto result = greedy(false)) return *result;
  throw std::logic_error("max_weight_matching: tie-break failed to reproduce the optimum");
}

std::int64_t matching_weight(std::span<const MatchedPair> matching, std::span<const WeightedEdge> edges) {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> best;
  for (const auto& e : edges) {
    const auto key = std::minmax(e.u, e.v);
    auto [it, inserted] = best.emplace(key, e.weight);
    if (!inserted) it->second = std::max(it->second, e.weight);
  }
  std::int64_t total = 0;
  for (const auto& m : matching) {
    auto it = best.find(std::minmax(m.first, m.second));
    if (it != best.end()) total += it->second;
  }
  return total;
}

}  // namespace evlog
