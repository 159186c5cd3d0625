// Constituent-level scoring of parser output against gold trees, plus the
// aggregate report in the usual table layout.
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tdp/tree.hpp"

namespace tdp {

struct ParsevalOptions {
  // Preterminal tags (and bare terminals) that never occupy a word position.
  std::set<std::string> punctuation = default_punctuation();
  // Labels scored as one category, looked up per constituent.
  std::map<std::string, std::string> label_aliases = {{"PRN", "ADVP"}};
  // Categories whose bracket is kept even when flat or zero-width and whose
  // words do not advance scoring positions. Empty for the standard metric;
  // the disfluency metric adds the edit label.
  std::set<std::string> transparent;
  std::string edited_label = "EDITED";
};

// A scorable bracket: label over [start, end) in non-punctuation positions.
struct Constituent {
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator<(const Constituent& a, const Constituent& b) {
    return std::tie(a.label, a.start, a.end) <
           std::tie(b.label, b.start, b.end);
  }
  friend bool operator==(const Constituent& a, const Constituent& b) {
    return std::tie(a.label, a.start, a.end) ==
           std::tie(b.label, b.start, b.end);
  }
};

struct ParsevalCounts {
  std::size_t gold = 0;
  std::size_t test = 0;
  std::size_t matched = 0;
  std::size_t crossing = 0;  // test constituents crossing some gold span

  bool exact() const { return matched == gold && matched == test; }
};

namespace detail {

inline const std::string& score_label(const ParsevalOptions& o,
                                      const std::string& label) {
  const auto it = o.label_aliases.find(label);
  return it != o.label_aliases.end() ? it->second : label;
}

inline bool punct_node(const Tree& t, const std::set<std::string>& punct) {
  return punct.count(t.label) > 0;
}

inline void collect_constituents(const Tree& t, const ParsevalOptions& o,
                                 std::size_t& pos,
                                 std::vector<Constituent>* out) {
  if (t.terminal) {
    if (!punct_node(t, o.punctuation)) ++pos;
    return;
  }
  if (o.transparent.count(t.label)) {
    if (out) out->push_back({detail::score_label(o, t.label), pos, pos});
    return;
  }
  if (t.is_pos()) {
    if (!punct_node(t, o.punctuation)) ++pos;
    return;
  }
  const std::size_t start = pos;
  for (const Tree& c : t.children) collect_constituents(c, o, pos, out);
  if (out && pos > start)
    out->push_back({detail::score_label(o, t.label), start, pos});
}

inline void alignment_yield(const Tree& t, const std::set<std::string>& punct,
                            std::vector<std::string>& out) {
  if (t.terminal) {
    if (!punct.count(t.label)) out.push_back(t.label);
    return;
  }
  if (t.is_pos()) {
    if (!punct.count(t.label)) out.push_back(t.children[0].label);
    return;
  }
  for (const Tree& c : t.children) alignment_yield(c, punct, out);
}

inline bool spans_cross(std::size_t s1, std::size_t e1, std::size_t s2,
                        std::size_t e2) {
  return (s1 < s2 && s2 < e1 && e1 < e2) || (s2 < s1 && s1 < e2 && e2 < e1);
}

}  // namespace detail

inline std::vector<Constituent> scored_constituents(
    const Tree& t, const ParsevalOptions& opt = {}) {
  std::vector<Constituent> out;
  std::size_t pos = 0;
  detail::collect_constituents(t, opt, pos, &out);
  return out;
}

// Labeled bracket counts for one sentence. Matching is over the multiset of
// (label, span) triples; crossing is span-only and counted at most once per
// test constituent.
inline ParsevalCounts parseval(const Tree& gold, const Tree& test,
                               const ParsevalOptions& opt = {}) {
  std::vector<std::string> gy, ty;
  detail::alignment_yield(gold, opt.punctuation, gy);
  detail::alignment_yield(test, opt.punctuation, ty);
  if (gy != ty)
    throw std::invalid_argument("gold/test yield mismatch");

  std::vector<Constituent> gc = scored_constituents(gold, opt);
  std::vector<Constituent> tc = scored_constituents(test, opt);
  ParsevalCounts counts;
  counts.gold = gc.size();
  counts.test = tc.size();

  std::sort(gc.begin(), gc.end());
  std::sort(tc.begin(), tc.end());
  std::size_t i = 0, j = 0;
  while (i < gc.size() && j < tc.size()) {
    if (gc[i] == tc[j]) {
      ++counts.matched;
      ++i;
      ++j;
    } else if (gc[i] < tc[j]) {
      ++i;
    } else {
      ++j;
    }
  }

  for (const Constituent& c : tc) {
    for (const Constituent& g : gc) {
      if (detail::spans_cross(c.start, c.end, g.start, g.end)) {
        ++counts.crossing;
        break;
      }
    }
  }
  return counts;
}

// Normal form for scoring disfluency-annotated trees: every edit node loses
// its internal structure and keeps its words flat, and sibling edit nodes
// separated by at most punctuation collapse into the first of the run.
inline Tree edited_normal_form(const Tree& t, const ParsevalOptions& opt = {}) {
  if (t.terminal) return t;
  if (t.label == opt.edited_label) {
    Tree flat(opt.edited_label);
    for (const std::string& w : t.yield())
      flat.children.push_back(Tree::word(w));
    return flat;
  }
  Tree out(t.label);
  std::ptrdiff_t run = -1;  // index of the open edit run, -1 when broken
  for (const Tree& c : t.children) {
    Tree norm = edited_normal_form(c, opt);
    const bool is_edit = !norm.terminal && norm.label == opt.edited_label;
    if (is_edit && run >= 0) {
      Tree& head = out.children[static_cast<std::size_t>(run)];
      for (Tree& w : norm.children) head.children.push_back(std::move(w));
      continue;
    }
    const bool punct_like =
        opt.punctuation.count(norm.label) > 0 &&
        (norm.terminal || norm.is_pos());
    if (is_edit)
      run = static_cast<std::ptrdiff_t>(out.children.size());
    else if (!punct_like)
      run = -1;
    out.children.push_back(std::move(norm));
  }
  return out;
}

// The modified metric for edit regions: flatten, merge, then score with the
// edit label transparent so its endpoints cannot misalign the rest.
inline ParsevalCounts edited_metric(const Tree& gold, const Tree& test,
                                    ParsevalOptions opt = {}) {
  Tree g = edited_normal_form(gold, opt);
  Tree t = edited_normal_form(test, opt);
  opt.transparent.insert(opt.edited_label);
  return parseval(g, t, opt);
}

struct EvalReport {
  std::size_t sentences = 0;
  double lr = 0;
  double lp = 0;
  double f = 0;
  double cb = 0;
  double zero_cb_pct = 0;
  double leq2_cb_pct = 0;
  double failed_pct = 0;
  double exact_pct = 0;
  double expansions_per_word = 0;
  double advanced_per_word = 0;
};

// Micro-averaged totals over a test run. Effort counters are optional; a
// file-versus-file evaluation leaves them at zero.
struct EvalAccumulator {
  std::size_t sentences = 0, failed = 0, zero_cb = 0, leq2_cb = 0, exact = 0;
  std::size_t gold = 0, test = 0, matched = 0, crossing = 0;
  double expansions = 0, advanced = 0;
  std::size_t words = 0;

  void add(const ParsevalCounts& c, bool garden_path = false) {
    ++sentences;
    if (garden_path) ++failed;
    gold += c.gold;
    test += c.test;
    matched += c.matched;
    crossing += c.crossing;
    if (c.crossing == 0) ++zero_cb;
    if (c.crossing <= 2) ++leq2_cb;
    if (c.exact()) ++exact;
  }

  void add_effort(std::size_t sentence_words, double expansions_considered,
                  double analyses_advanced) {
    words += sentence_words;
    expansions += expansions_considered;
    advanced += analyses_advanced;
  }

  EvalReport report() const {
    EvalReport r;
    r.sentences = sentences;
    if (gold > 0) r.lr = 100.0 * static_cast<double>(matched) / gold;
    if (test > 0) r.lp = 100.0 * static_cast<double>(matched) / test;
    if (r.lr + r.lp > 0) r.f = 2 * r.lr * r.lp / (r.lr + r.lp);
    if (sentences > 0) {
      r.cb = static_cast<double>(crossing) / sentences;
      r.zero_cb_pct = 100.0 * static_cast<double>(zero_cb) / sentences;
      r.leq2_cb_pct = 100.0 * static_cast<double>(leq2_cb) / sentences;
      r.failed_pct = 100.0 * static_cast<double>(failed) / sentences;
      r.exact_pct = 100.0 * static_cast<double>(exact) / sentences;
    }
    if (words > 0) {
      r.expansions_per_word = expansions / static_cast<double>(words);
      r.advanced_per_word = advanced / static_cast<double>(words);
    }
    return r;
  }
};

}  // namespace tdp
