#pragma once

// Exhaustive chart parsing over a Pcfg: exact string probability (inside
// sum), the single most probable parse, and a bounded enumeration of all
// parses.  Serves as the correctness oracle for the incremental parser.
//
// The oracle refuses inputs it cannot answer exactly rather than returning
// an approximation: sentences over the length bound, grammars with epsilon
// productions, and inputs where some derivation's run of consecutive unary
// expansions exceeds the depth bound.  The last case is detected by
// recomputing the inside probability with the bound widened by the number
// of symbols touching unary productions: any over-deep derivation can be
// shortened, one unary cycle at a time, into one whose longest run lands
// inside that widened window, so equal masses prove no derivation was
// dropped.  A sentence with no parse is not a refusal; it reports
// probability zero.
//
// Probabilities of whole parses include the start production, matching
// score_tree.  Returned trees are rooted at the sentence root, below the
// start symbol.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tdp/pcfg.hpp"
#include "tdp/tree.hpp"

namespace tdp {

struct ExhaustiveOptions {
  std::size_t max_length = 15;
  // Longest run of consecutive unary expansions permitted on any path.
  int unary_budget = 3;
  // Parses are enumerated only when the forest holds at most this many;
  // otherwise the result is marked truncated with parses left empty.
  std::size_t max_parses = 5000;
};

struct ExhaustiveResult {
  bool refused = false;
  std::string reason;
  double string_prob = 0.0;
  // Number of distinct parses (exact while small enough for a double).
  double parse_count = 0.0;
  std::optional<Tree> best_parse;
  double best_prob = 0.0;
  // Sorted by descending probability; empty iff truncated or unparseable.
  std::vector<std::pair<Tree, double>> parses;
  bool truncated = false;
};

namespace detail {

// Memoized recursions over (symbol, span, remaining unary budget).  Spans
// covered by a production's right-hand side are memoized per (production,
// position, span) and are budget-independent because every child below a
// branching production starts a fresh chain.
class ExhaustiveEngine {
 public:
  ExhaustiveEngine(const Pcfg& g, const std::vector<std::string>& words,
                   const ExhaustiveOptions& opt)
      : g_(g), words_(words), opt_(opt) {}

  double inside(const std::string& a, std::size_t i, std::size_t j, int b) {
    NtKey key{a, i, j, b};
    auto it = inside_memo_.find(key);
    if (it != inside_memo_.end()) return it->second;
    double total = 0.0;
    auto rit = g_.rules.find(a);
    if (rit != g_.rules.end()) {
      for (const auto& [rhs, st] : rit->second) {
        if (rhs.size() == 1 && !rhs[0].term) {
          if (b > 0) total += st.prob * inside(rhs[0].text, i, j, b - 1);
        } else {
          total += st.prob * seq_inside(rhs, 0, i, j);
        }
      }
    }
    inside_memo_[key] = total;
    return total;
  }

  double count(const std::string& a, std::size_t i, std::size_t j, int b) {
    NtKey key{a, i, j, b};
    auto it = count_memo_.find(key);
    if (it != count_memo_.end()) return it->second;
    double total = 0.0;
    auto rit = g_.rules.find(a);
    if (rit != g_.rules.end()) {
      for (const auto& [rhs, st] : rit->second) {
        if (rhs.size() == 1 && !rhs[0].term) {
          if (b > 0) total += count(rhs[0].text, i, j, b - 1);
        } else {
          total += seq_count(rhs, 0, i, j);
        }
      }
    }
    count_memo_[key] = total;
    return total;
  }

  std::optional<std::pair<double, Tree>> best(const std::string& a,
                                              std::size_t i, std::size_t j,
                                              int b) {
    NtKey key{a, i, j, b};
    auto it = best_memo_.find(key);
    if (it != best_memo_.end()) return it->second;
    std::optional<std::pair<double, Tree>> out;
    auto rit = g_.rules.find(a);
    if (rit != g_.rules.end()) {
      for (const auto& [rhs, st] : rit->second) {
        if (rhs.size() == 1 && !rhs[0].term) {
          if (b <= 0) continue;
          auto sub = best(rhs[0].text, i, j, b - 1);
          if (sub && (!out || st.prob * sub->first > out->first))
            out = {st.prob * sub->first, Tree(a, {sub->second})};
        } else {
          auto sub = seq_best(rhs, 0, i, j);
          if (sub && (!out || st.prob * sub->first > out->first))
            out = {st.prob * sub->first, Tree(a, sub->second)};
        }
      }
    }
    best_memo_[key] = out;
    return out;
  }

  // Callers must gate on count(); lists stay within max_parses.
  std::vector<std::pair<double, Tree>> all(const std::string& a,
                                           std::size_t i, std::size_t j,
                                           int b) {
    NtKey key{a, i, j, b};
    auto it = all_memo_.find(key);
    if (it != all_memo_.end()) return it->second;
    std::vector<std::pair<double, Tree>> out;
    auto rit = g_.rules.find(a);
    if (rit != g_.rules.end()) {
      for (const auto& [rhs, st] : rit->second) {
        if (rhs.size() == 1 && !rhs[0].term) {
          if (b <= 0) continue;
          for (auto& [p, t] : all(rhs[0].text, i, j, b - 1))
            out.emplace_back(st.prob * p, Tree(a, {t}));
        } else {
          for (auto& [p, kids] : seq_all(rhs, 0, i, j))
            out.emplace_back(st.prob * p, Tree(a, kids));
        }
      }
    }
    all_memo_[key] = out;
    return out;
  }

 private:
  double sym_inside(const Sym& s, std::size_t i, std::size_t j) {
    if (s.term) return j == i + 1 && words_[i] == s.text ? 1.0 : 0.0;
    return inside(s.text, i, j, opt_.unary_budget);
  }

  double sym_count(const Sym& s, std::size_t i, std::size_t j) {
    if (s.term) return j == i + 1 && words_[i] == s.text ? 1.0 : 0.0;
    return count(s.text, i, j, opt_.unary_budget);
  }

  double seq_inside(const Rhs& rhs, std::size_t pos, std::size_t i,
                    std::size_t j) {
    if (pos + 1 == rhs.size()) return sym_inside(rhs[pos], i, j);
    SeqKey key{&rhs, pos, i, j};
    auto it = seq_inside_memo_.find(key);
    if (it != seq_inside_memo_.end()) return it->second;
    double total = 0.0;
    for (std::size_t k = i + 1; k + (rhs.size() - pos - 1) <= j; ++k) {
      double left = sym_inside(rhs[pos], i, k);
      if (left > 0.0) total += left * seq_inside(rhs, pos + 1, k, j);
    }
    seq_inside_memo_[key] = total;
    return total;
  }

  double seq_count(const Rhs& rhs, std::size_t pos, std::size_t i,
                   std::size_t j) {
    if (pos + 1 == rhs.size()) return sym_count(rhs[pos], i, j);
    SeqKey key{&rhs, pos, i, j};
    auto it = seq_count_memo_.find(key);
    if (it != seq_count_memo_.end()) return it->second;
    double total = 0.0;
    for (std::size_t k = i + 1; k + (rhs.size() - pos - 1) <= j; ++k) {
      double left = sym_count(rhs[pos], i, k);
      if (left > 0.0) total += left * seq_count(rhs, pos + 1, k, j);
    }
    seq_count_memo_[key] = total;
    return total;
  }

  std::optional<std::pair<double, Tree>> sym_best(const Sym& s, std::size_t i,
                                                  std::size_t j) {
    if (s.term) {
      if (j == i + 1 && words_[i] == s.text)
        return std::make_pair(1.0, Tree::word(s.text));
      return std::nullopt;
    }
    return best(s.text, i, j, opt_.unary_budget);
  }

  std::optional<std::pair<double, std::vector<Tree>>> seq_best(
      const Rhs& rhs, std::size_t pos, std::size_t i, std::size_t j) {
    if (pos + 1 == rhs.size()) {
      auto sub = sym_best(rhs[pos], i, j);
      if (!sub) return std::nullopt;
      return std::make_pair(sub->first, std::vector<Tree>{sub->second});
    }
    SeqKey key{&rhs, pos, i, j};
    auto it = seq_best_memo_.find(key);
    if (it != seq_best_memo_.end()) return it->second;
    std::optional<std::pair<double, std::vector<Tree>>> out;
    for (std::size_t k = i + 1; k + (rhs.size() - pos - 1) <= j; ++k) {
      auto left = sym_best(rhs[pos], i, k);
      if (!left) continue;
      auto rest = seq_best(rhs, pos + 1, k, j);
      if (!rest) continue;
      double p = left->first * rest->first;
      if (!out || p > out->first) {
        std::vector<Tree> kids{left->second};
        kids.insert(kids.end(), rest->second.begin(), rest->second.end());
        out = {p, std::move(kids)};
      }
    }
    seq_best_memo_[key] = out;
    return out;
  }

  std::vector<std::pair<double, Tree>> sym_all(const Sym& s, std::size_t i,
                                               std::size_t j) {
    if (s.term) {
      if (j == i + 1 && words_[i] == s.text)
        return {{1.0, Tree::word(s.text)}};
      return {};
    }
    return all(s.text, i, j, opt_.unary_budget);
  }

  std::vector<std::pair<double, std::vector<Tree>>> seq_all(
      const Rhs& rhs, std::size_t pos, std::size_t i, std::size_t j) {
    std::vector<std::pair<double, std::vector<Tree>>> out;
    if (pos + 1 == rhs.size()) {
      for (auto& [p, t] : sym_all(rhs[pos], i, j))
        out.emplace_back(p, std::vector<Tree>{t});
      return out;
    }
    for (std::size_t k = i + 1; k + (rhs.size() - pos - 1) <= j; ++k) {
      // Materializing a sub-forest is safe only on splits that complete;
      // the zero checks keep every list within the root parse count.
      if (sym_count(rhs[pos], i, k) <= 0.0) continue;
      if (seq_count(rhs, pos + 1, k, j) <= 0.0) continue;
      auto rest = seq_all(rhs, pos + 1, k, j);
      for (auto& [lp, lt] : sym_all(rhs[pos], i, k)) {
        for (auto& [rp, rkids] : rest) {
          std::vector<Tree> kids{lt};
          kids.insert(kids.end(), rkids.begin(), rkids.end());
          out.emplace_back(lp * rp, std::move(kids));
        }
      }
    }
    return out;
  }

  using NtKey = std::tuple<std::string, std::size_t, std::size_t, int>;
  using SeqKey = std::tuple<const Rhs*, std::size_t, std::size_t, std::size_t>;
  const Pcfg& g_;
  const std::vector<std::string>& words_;
  const ExhaustiveOptions& opt_;
  std::map<NtKey, double> inside_memo_;
  std::map<NtKey, double> count_memo_;
  std::map<NtKey, std::optional<std::pair<double, Tree>>> best_memo_;
  std::map<NtKey, std::vector<std::pair<double, Tree>>> all_memo_;
  std::map<SeqKey, double> seq_inside_memo_;
  std::map<SeqKey, double> seq_count_memo_;
  std::map<SeqKey, std::optional<std::pair<double, std::vector<Tree>>>>
      seq_best_memo_;
};

}  // namespace detail

inline ExhaustiveResult exhaustive_parse(const Pcfg& g,
                                         const std::vector<std::string>& words,
                                         ExhaustiveOptions opt = {}) {
  ExhaustiveResult res;
  auto refuse = [&](std::string why) {
    res.refused = true;
    res.reason = std::move(why);
    return res;
  };
  if (words.empty()) return refuse("empty sentence");
  if (words.size() > opt.max_length)
    return refuse("sentence longer than the exhaustive length bound");
  if (g.has_epsilon())
    return refuse("grammar has epsilon productions");

  detail::ExhaustiveEngine eng(g, words, opt);
  std::size_t n = words.size();
  res.string_prob = eng.inside(g.start, 0, n, opt.unary_budget);
  int slack = 1;
  {
    std::set<std::string> unary_syms;
    for (const auto& [lhs, m] : g.rules)
      for (const auto& [rhs, st] : m)
        if (rhs.size() == 1 && !rhs[0].term) {
          unary_syms.insert(lhs);
          unary_syms.insert(rhs[0].text);
        }
    slack += static_cast<int>(unary_syms.size());
  }
  double widened = eng.inside(g.start, 0, n, opt.unary_budget + slack);
  double gap = std::abs(widened - res.string_prob);
  if (gap > 1e-12 * std::max(widened, 1e-300))
    return refuse("unary chain depth exceeds the exhaustive bound");

  if (auto top = eng.best(g.start, 0, n, opt.unary_budget)) {
    res.best_prob = top->first;
    res.best_parse = top->second.children.at(0);
  }
  res.parse_count = eng.count(g.start, 0, n, opt.unary_budget);
  if (res.parse_count > static_cast<double>(opt.max_parses)) {
    res.truncated = true;
  } else {
    for (auto& [p, t] : eng.all(g.start, 0, n, opt.unary_budget))
      res.parses.emplace_back(t.children.at(0), p);
    std::stable_sort(
        res.parses.begin(), res.parses.end(),
        [](const auto& a, const auto& b) { return a.second > b.second; });
  }
  return res;
}

}  // namespace tdp
