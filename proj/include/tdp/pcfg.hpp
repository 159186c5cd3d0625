#pragma once

// Probabilistic context-free grammars induced from treebanks by
// relative-frequency estimation, with tree scoring and ancestral sampling.
//
// Conventions:
//   - A grammar symbol is a label plus a terminal flag; two symbols with the
//     same text but different flags are distinct.
//   - The start symbol never appears on a right-hand side.  Induction adds
//     one start production per observed root label, so scores of whole trees
//     include the start step and sum to one over the training distribution.
//   - An epsilon production has an empty right-hand side.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tdp/tree.hpp"

namespace tdp {

struct Sym {
  std::string text;
  bool term = false;

  bool operator==(const Sym& o) const {
    return term == o.term && text == o.text;
  }
  bool operator!=(const Sym& o) const { return !(*this == o); }
  bool operator<(const Sym& o) const {
    return std::tie(term, text) < std::tie(o.term, o.text);
  }
};

using Rhs = std::vector<Sym>;

// Right-hand side of the production a non-terminal node licenses.
inline Rhs rhs_of(const Tree& t) {
  Rhs r;
  r.reserve(t.children.size());
  for (const Tree& c : t.children) r.push_back(Sym{c.label, c.terminal});
  return r;
}

struct RuleStat {
  double count = 0.0;
  double prob = 0.0;
};

struct Pcfg {
  std::string start = "S†";
  // lhs -> rhs -> statistics.  Iteration order is deterministic.
  std::map<std::string, std::map<Rhs, RuleStat>> rules;
  std::map<std::string, double> lhs_total;

  double prob(const std::string& lhs, const Rhs& rhs) const {
    auto it = rules.find(lhs);
    if (it == rules.end()) return 0.0;
    auto jt = it->second.find(rhs);
    return jt == it->second.end() ? 0.0 : jt->second.prob;
  }

  double log_prob(const std::string& lhs, const Rhs& rhs) const {
    double p = prob(lhs, rhs);
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }

  std::size_t production_count() const {
    std::size_t n = 0;
    for (const auto& [lhs, m] : rules) n += m.size();
    return n;
  }

  bool has_epsilon() const {
    for (const auto& [lhs, m] : rules)
      for (const auto& [rhs, st] : m)
        if (rhs.empty()) return true;
    return false;
  }
};

namespace detail {

inline void count_tree(const Tree& t, double w, Pcfg& g) {
  if (t.terminal) return;
  g.rules[t.label][rhs_of(t)].count += w;
  g.lhs_total[t.label] += w;
  for (const Tree& c : t.children) count_tree(c, w, g);
}

}  // namespace detail

// Relative-frequency estimation over weighted trees.  Weights must be
// non-negative; a zero-weight tree contributes nothing.
inline Pcfg induce_pcfg(const std::vector<std::pair<Tree, double>>& trees) {
  Pcfg g;
  for (const auto& [t, w] : trees) {
    if (w <= 0.0) continue;
    g.rules[g.start][Rhs{Sym{t.label, false}}].count += w;
    g.lhs_total[g.start] += w;
    detail::count_tree(t, w, g);
  }
  for (auto& [lhs, m] : g.rules) {
    double total = g.lhs_total[lhs];
    for (auto& [rhs, st] : m) st.prob = st.count / total;
  }
  return g;
}

inline Pcfg induce_pcfg(const Corpus& corpus) {
  std::vector<std::pair<Tree, double>> weighted;
  weighted.reserve(corpus.trees.size());
  for (const Tree& t : corpus.trees) weighted.emplace_back(t, 1.0);
  return induce_pcfg(weighted);
}

// Log probability of a complete tree, including the start production.
// Any production absent from the grammar yields -infinity.
inline double score_tree_log(const Pcfg& g, const Tree& t) {
  double lg = g.log_prob(g.start, Rhs{Sym{t.label, false}});
  std::vector<const Tree*> stack{&t};
  while (!stack.empty()) {
    const Tree* n = stack.back();
    stack.pop_back();
    if (n->terminal) continue;
    lg += g.log_prob(n->label, rhs_of(*n));
    for (const Tree& c : n->children) stack.push_back(&c);
  }
  return lg;
}

inline double score_tree(const Pcfg& g, const Tree& t) {
  return std::exp(score_tree_log(g, t));
}

// Largest deviation of any left-hand side's probability mass from one.
inline double max_normalization_gap(const Pcfg& g) {
  double worst = 0.0;
  for (const auto& [lhs, m] : g.rules) {
    double sum = 0.0;
    for (const auto& [rhs, st] : m) sum += st.prob;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

// Ancestral sampling from the start symbol.  Returns the tree below the
// start production, or nullopt once the expansion budget is exhausted
// (the partial tree is abandoned, keeping samples unbiased via rejection).
inline std::optional<Tree> sample_tree(const Pcfg& g, std::mt19937_64& rng,
                                       std::size_t max_expansions = 10000) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t used = 0;

  // Returns false when the budget runs out or a symbol has no productions.
  auto expand = [&](auto&& self, Tree& node) -> bool {
    if (++used > max_expansions) return false;
    auto it = g.rules.find(node.label);
    if (it == g.rules.end() || it->second.empty()) return false;
    double u = unit(rng);
    const Rhs* chosen = nullptr;
    double cum = 0.0;
    for (const auto& [rhs, st] : it->second) {
      cum += st.prob;
      chosen = &rhs;
      if (u < cum) break;
    }
    for (const Sym& s : *chosen) {
      if (s.term) {
        node.children.push_back(Tree::word(s.text));
      } else {
        node.children.emplace_back(s.text);
        if (!self(self, node.children.back())) return false;
      }
    }
    return true;
  };

  Tree top(g.start);
  if (!expand(expand, top)) return std::nullopt;
  if (top.children.size() != 1 || top.children[0].terminal)
    return std::nullopt;
  return std::move(top.children[0]);
}

}  // namespace tdp
