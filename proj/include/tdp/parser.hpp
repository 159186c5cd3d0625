#pragma once
// Incremental nondeterministic top-down beam parser.
//
// Candidate analyses advance word-synchronously through a chain of priority
// queues, one per input position plus one for the end marker and one for
// complete analyses.  A candidate carries its derivation probability and a
// figure of merit: the derivation probability times the look-ahead
// probability of the next input word.  The queue loop keeps expanding the
// best candidate while its figure of merit beats the derivation probability
// of the best analysis already advanced, scaled by an adaptive factor that
// tightens as the next queue fills.
//
// Two grammar backends share the engine.  The rule backend expands stack
// symbols with whole productions and scans terminals.  The Markov backend
// predicts one child label at a time over a cloned context graph, with an
// explicit stop outcome and, from a constituent's second hypothesis on, a
// split over head-placement alternatives; word predictions advance to the
// next queue.  Probabilities are carried as log values throughout.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdp/features.hpp"
#include "tdp/lap.hpp"
#include "tdp/markov.hpp"
#include "tdp/pcfg.hpp"
#include "tdp/tree.hpp"

namespace tdp {

struct BeamOptions {
  double gamma = 1e-11;  // base beam factor
  // Narrower beam while predicting the first word; unset means gamma.
  std::optional<double> gamma_initial;
  // Exponent of the queue-size term in the threshold; defaults to 3 for
  // word input and 1 for POS input.
  std::optional<int> pushed_exponent;
  std::size_t max_pop = 10000;  // analyses admitted per queue
  std::size_t nbest = 10;       // complete parses returned
  bool pos_mode = false;        // input tokens are POS tags
  bool empty_punctuation = false;
  // Successor outcomes with smoothed probability below the floor are not
  // enqueued; the smoothed grammar otherwise admits every outcome anywhere.
  double outcome_floor = 1e-12;
  // Lower bound on the look-ahead factor inside the figure of merit, so an
  // estimate of zero cannot by itself erase a viable analysis.
  double lap_floor = 1e-30;
  // Analyses with equal bracketing are reported once with their
  // probabilities summed (head placement may differ between them).
  bool merge_equal_trees = true;
};

// Beam test: expand while F exceeds the derivation probability of the best
// analysis already pushed onto the next queue, scaled by gamma times the
// pushed count raised to the exponent.  An empty next queue always passes.
inline bool above_threshold(double log_f, std::optional<double> best_log_p,
                            std::size_t pushed, double gamma, int exponent) {
  if (!best_log_p || pushed == 0) return true;
  return log_f > *best_log_p + std::log(gamma) +
                     static_cast<double>(exponent) *
                         std::log(static_cast<double>(pushed));
}

struct ScoredParse {
  Tree tree;
  double log_prob = 0;
};

struct ParseResult {
  // Complete parses, most probable first.
  std::vector<ScoredParse> parses;
  bool garden_path = false;
  // Input position whose queue received nothing (when garden_path).
  std::size_t failed_at = 0;
  // Fallback analysis: the initially best-ranked candidate of the last
  // non-empty queue, remaining words attached at the top.
  std::optional<ScoredParse> partial;
  // Sum of derivation probabilities over each queue's initial contents,
  // indexed by position; the last entry covers the complete-parse queue.
  std::vector<double> log_prefix_mass;
  // Per position: probability evaluations, analyses advanced to the next
  // queue, and analyses that died or were dropped.
  std::vector<std::uint64_t> expansions;
  std::vector<std::uint64_t> advanced;
  std::vector<std::uint64_t> dead;
};

namespace detail {

inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Max-priority queue over candidates keyed by figure of merit, ties going
// to the earlier-created analysis.  Tracks how many analyses were ever
// pushed and the derivation probability of the current best entry.
template <class C>
class BeamQueue {
 public:
  bool empty() const { return heap_.empty(); }
  std::size_t pushed() const { return pushed_; }

  std::optional<double> best_log_p() const {
    if (heap_.empty()) return std::nullopt;
    return heap_.front().log_p;
  }

  const C& top() const { return heap_.front(); }

  void push(C&& c) {
    heap_.push_back(std::move(c));
    std::push_heap(heap_.begin(), heap_.end(), Less{});
    ++pushed_;
  }

  C pop() {
    std::pop_heap(heap_.begin(), heap_.end(), Less{});
    C c = std::move(heap_.back());
    heap_.pop_back();
    return c;
  }

  double log_mass() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const C& c : heap_) m = logaddexp(m, c.log_p);
    return m;
  }

 private:
  struct Less {
    bool operator()(const C& a, const C& b) const {
      if (a.log_f != b.log_f) return a.log_f < b.log_f;
      return a.seq > b.seq;
    }
  };
  std::vector<C> heap_;
  std::size_t pushed_ = 0;
};

// The word-synchronous queue loop shared by both backends.  The parser
// type supplies candidates and the derives relation.
template <class P>
ParseResult beam_engine(const P& parser, const std::vector<std::string>& words,
                        const BeamOptions& opt,
                        const std::string& end_marker) {
  if (words.empty()) throw std::invalid_argument("empty input sentence");
  using Cand = typename P::Candidate;
  const std::size_t n = words.size();
  const int expo =
      opt.pushed_exponent ? *opt.pushed_exponent : (opt.pos_mode ? 1 : 3);
  ParseResult res;
  res.log_prefix_mass.assign(n + 2,
                             -std::numeric_limits<double>::infinity());
  res.expansions.assign(n + 1, 0);
  res.advanced.assign(n + 1, 0);
  res.dead.assign(n + 1, 0);
  std::vector<BeamQueue<Cand>> qs(n + 2);
  std::uint64_t seq = 0;
  qs[0].push(parser.initial());

  std::optional<Cand> fallback;
  for (std::size_t i = 0; i <= n; ++i) {
    BeamQueue<Cand>& cur = qs[i];
    BeamQueue<Cand>& next = qs[i + 1];
    res.log_prefix_mass[i] = cur.log_mass();
    fallback = parser.clone(cur.top());
    const double gamma =
        (i == 0 && opt.gamma_initial) ? *opt.gamma_initial : opt.gamma;
    const std::string& la_same = i == n ? end_marker : words[i];
    const std::string& la_next = i + 1 >= n ? end_marker : words[i + 1];
    while (!cur.empty()) {
      // A saturated next queue abandons the word.
      if (next.pushed() >= opt.max_pop) break;
      if (!above_threshold(cur.top().log_f, next.best_log_p(), next.pushed(),
                           gamma, expo))
        break;
      Cand c = cur.pop();
      if (i == n && parser.complete(c)) {
        c.log_f = c.log_p;  // the look-ahead of a finished analysis is one
        c.seq = ++seq;
        next.push(std::move(c));
        ++res.advanced[i];
        continue;
      }
      auto succ = parser.derive_step(c, la_same, la_next, i == n,
                                     &res.expansions[i]);
      if (succ.empty()) {
        ++res.dead[i];
        continue;
      }
      for (auto& [s, advances] : succ) {
        BeamQueue<Cand>& target = advances ? next : cur;
        if (target.pushed() >= opt.max_pop) {
          ++res.dead[i];
          continue;
        }
        s.seq = ++seq;
        target.push(std::move(s));
        if (advances) ++res.advanced[i];
      }
    }
    if (next.pushed() == 0) {
      res.garden_path = true;
      res.failed_at = i;
      res.partial = parser.partial_parse(*fallback, words, i);
      return res;
    }
  }

  res.log_prefix_mass[n + 1] = qs[n + 1].log_mass();
  BeamQueue<Cand>& fin = qs[n + 1];
  while (!fin.empty()) {
    Cand c = fin.pop();
    ScoredParse sp{parser.extract(c), c.log_p};
    bool merged = false;
    if (opt.merge_equal_trees) {
      for (ScoredParse& have : res.parses)
        if (have.tree == sp.tree) {
          have.log_prob = logaddexp(have.log_prob, sp.log_prob);
          merged = true;
          break;
        }
    }
    if (!merged) res.parses.push_back(std::move(sp));
  }
  std::stable_sort(res.parses.begin(), res.parses.end(),
                   [](const ScoredParse& a, const ScoredParse& b) {
                     return a.log_prob > b.log_prob;
                   });
  if (opt.nbest > 0 && res.parses.size() > opt.nbest)
    res.parses.resize(opt.nbest);
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rule backend: candidates carry a persistent symbol stack and the list of
// applied productions; terminals sit on the stack and scan against input.

class PcfgBeamParser {
 public:
  struct StackNode {
    Sym sym;
    std::shared_ptr<const StackNode> below;
  };
  struct Step {
    std::string lhs;
    const Rhs* rhs;
    std::shared_ptr<const Step> prev;
  };
  struct Candidate {
    std::shared_ptr<const StackNode> stack;
    std::shared_ptr<const Step> steps;
    double log_p = 0;
    double log_f = 0;
    std::uint64_t seq = 0;
  };

  PcfgBeamParser(const Pcfg& g, const LapModel& lap, BeamOptions opt = {})
      : g_(g), lap_(lap), opt_(std::move(opt)) {
    if (lap_.opt.prev_depth != 0)
      throw std::invalid_argument(
          "rule-backend look-ahead states carry no previous children");
  }

  const BeamOptions& options() const { return opt_; }

  Candidate initial() const {
    Candidate c;
    c.stack = std::make_shared<const StackNode>(
        StackNode{Sym{g_.start, false}, nullptr});
    return c;
  }

  Candidate clone(const Candidate& c) const { return c; }

  bool complete(const Candidate& c) const { return c.stack == nullptr; }

  // One application of the derives relation: scan a terminal top against
  // the look-ahead (successor advances) or expand a nonterminal top with
  // every production above the outcome floor (successors stay).  A
  // candidate with an exhausted stack and input remaining dies.
  std::vector<std::pair<Candidate, bool>> derive_step(
      const Candidate& c, const std::string& la_same,
      const std::string& la_next, bool at_end, std::uint64_t* evals) const {
    std::vector<std::pair<Candidate, bool>> out;
    if (!c.stack) return out;
    const Sym top = c.stack->sym;
    if (top.term) {
      if (at_end || top.text != la_same) return out;
      Candidate s;
      s.stack = c.stack->below;
      s.steps = c.steps;
      s.log_p = c.log_p;
      s.log_f = s.log_p + log_lap(s.stack, la_next);
      out.emplace_back(std::move(s), true);
      return out;
    }
    if (opt_.empty_punctuation && lap_.opt.punctuation.count(top.text)) {
      out.push_back(empty_pop(c, top.text, la_same, evals));
      return out;
    }
    const auto it = g_.rules.find(top.text);
    if (it == g_.rules.end()) return out;
    for (const auto& [rhs, stat] : it->second) {
      ++*evals;
      if (stat.prob < opt_.outcome_floor) continue;
      Candidate s;
      s.stack = c.stack->below;
      for (auto r = rhs.rbegin(); r != rhs.rend(); ++r)
        s.stack = std::make_shared<const StackNode>(StackNode{*r, s.stack});
      s.steps =
          std::make_shared<const Step>(Step{top.text, &rhs, c.steps});
      s.log_p = c.log_p + std::log(stat.prob);
      s.log_f = s.log_p + log_lap(s.stack, la_same);
      out.emplace_back(std::move(s), false);
    }
    return out;
  }

  ParseResult parse(const std::vector<std::string>& words) const {
    return detail::beam_engine(*this, words, opt_, lap_.opt.end_marker);
  }

  Tree extract(const Candidate& c) const {
    std::size_t budget = std::numeric_limits<std::size_t>::max();
    return rebuild(c, &budget);
  }

  ScoredParse partial_parse(const Candidate& c,
                            const std::vector<std::string>& words,
                            std::size_t consumed) const {
    std::size_t budget = consumed;
    Tree t = rebuild(c, &budget);
    for (std::size_t j = consumed; j < words.size(); ++j)
      t.children.push_back(Tree::word(words[j]));
    return {std::move(t), c.log_p};
  }

 private:
  // Punctuation treated as an empty category: popped without consuming
  // input, at the trained epsilon probability when the grammar has one and
  // for free otherwise.
  std::pair<Candidate, bool> empty_pop(const Candidate& c,
                                       const std::string& label,
                                       const std::string& la_same,
                                       std::uint64_t* evals) const {
    static const Rhs kEmptyRhs;
    Candidate s;
    s.stack = c.stack->below;
    s.log_p = c.log_p;
    const auto it = g_.rules.find(label);
    if (it != g_.rules.end()) {
      const auto jt = it->second.find(kEmptyRhs);
      if (jt != it->second.end()) {
        ++*evals;
        s.log_p += std::log(jt->second.prob);
      }
    }
    s.steps = std::make_shared<const Step>(Step{label, &kEmptyRhs, c.steps});
    s.log_f = s.log_p + log_lap(s.stack, la_same);
    return {std::move(s), false};
  }

  double log_lap(const std::shared_ptr<const StackNode>& stack,
                 const std::string& la) const {
    std::vector<LapFrame> frames;
    for (const StackNode* n = stack.get(); n; n = n->below.get()) {
      LapFrame f;
      if (n->sym.term) {
        f.literal = n->sym.text;
      } else {
        f.state = CtxTuple{n->sym.text};
      }
      frames.push_back(std::move(f));
    }
    return std::log(std::max(lap_over(lap_, frames, la), opt_.lap_floor));
  }

  // Replays the recorded productions depth-first.  The budget limits how
  // many terminal leaves may be emitted, so a partial analysis renders only
  // the words it actually consumed.
  Tree rebuild(const Candidate& c, std::size_t* budget) const {
    std::vector<const Step*> order;
    for (const Step* s = c.steps.get(); s; s = s->prev.get())
      order.push_back(s);
    std::reverse(order.begin(), order.end());
    std::size_t pos = 0;
    if (order.empty()) return flat_root();
    Tree top = build_sym(Sym{g_.start, false}, order, &pos, budget)
                   .value_or(Tree(g_.start));
    if (top.children.empty()) return flat_root();
    Tree root = std::move(top.children.front());
    return root;
  }

  std::optional<Tree> build_sym(const Sym& sym,
                                const std::vector<const Step*>& order,
                                std::size_t* pos, std::size_t* budget) const {
    if (sym.term) {
      if (*budget == 0) return std::nullopt;
      --*budget;
      return Tree::word(sym.text);
    }
    if (*pos == order.size() || order[*pos]->lhs != sym.text)
      return std::nullopt;
    const Step* st = order[(*pos)++];
    Tree t(sym.text);
    for (const Sym& s : *st->rhs) {
      auto child = build_sym(s, order, pos, budget);
      if (!child) break;
      t.children.push_back(std::move(*child));
    }
    return t;
  }

  // Fallback when nothing was ever expanded: the most probable root
  // category over all the words.
  Tree flat_root() const {
    std::string best = g_.start;
    double bp = -1;
    const auto it = g_.rules.find(g_.start);
    if (it != g_.rules.end()) {
      for (const auto& [rhs, stat] : it->second)
        if (rhs.size() == 1 && !rhs[0].term && stat.prob > bp) {
          bp = stat.prob;
          best = rhs[0].text;
        }
    }
    return Tree(best);
  }

  const Pcfg& g_;
  const LapModel& lap_;
  BeamOptions opt_;
};

// ---------------------------------------------------------------------------
// Markov backend: candidates own a context graph mirroring the structure
// built so far; child, word, and head events are evaluated on exactly the
// contexts training replay saw.

class MarkovBeamParser {
 public:
  struct Candidate {
    ContextArena arena;
    CtxNode* root = nullptr;  // start-symbol node
    CtxNode* open = nullptr;  // innermost constituent being expanded
    double log_p = 0;
    double log_f = 0;
    std::uint64_t seq = 0;
  };

  MarkovBeamParser(const MarkovGrammar& g, const LapModel& lap,
                   BeamOptions opt = {})
      : g_(g), lap_(lap), opt_(std::move(opt)) {}

  const BeamOptions& options() const { return opt_; }

  Candidate initial() const {
    Candidate c;
    c.root = c.arena.placeholder(nullptr, g_.opt.start);
    c.open = c.root;
    return c;
  }

  Candidate clone(const Candidate& c) const {
    Candidate out;
    out.log_p = c.log_p;
    out.log_f = c.log_f;
    out.seq = c.seq;
    out.root = c.root;
    out.open = c.open;
    out.arena.clone_from(c.arena, {&out.root, &out.open});
    return out;
  }

  bool complete(const Candidate& c) const { return c.open == nullptr; }

  // One derives-relation application.  An open POS category emits the
  // look-ahead word and advances; any other open category spawns one
  // successor per child outcome above the floor, each split over the
  // consistent head-placement alternatives for the previous child.  The
  // stop outcome closes the constituent and reopens its parent.
  std::vector<std::pair<Candidate, bool>> derive_step(
      const Candidate& c, const std::string& la_same,
      const std::string& la_next, bool at_end, std::uint64_t* evals) const {
    std::vector<std::pair<Candidate, bool>> out;
    if (!c.open) return out;
    const bool punct_empty =
        opt_.empty_punctuation && lap_.opt.punctuation.count(c.open->label);
    if (!punct_empty && g_.is_pos_category(c.open->label) && !c.open->child) {
      if (at_end) return out;
      Candidate s = clone(c);
      CtxNode* w = s.arena.placeholder(s.open, "", true);
      const CtxTuple ctx =
          context_vector(g_.cond, ExpansionClass::PosWord, w);
      ++*evals;
      const double p = g_.word_prob(ctx, la_same);
      if (p < opt_.outcome_floor) return out;
      // The arena keeps the vocabulary-mapped symbol so that head-word
      // context slots match training; parse() restores the surface words.
      w->label = g_.map_word(la_same);
      s.open->head = w;
      s.open = s.open->parent;
      s.log_p += std::log(p);
      s.log_f = s.log_p + log_lap_spine(s.open, la_next);
      out.emplace_back(std::move(s), true);
      return out;
    }
    // Child prediction.  The context is the same for every outcome, so it
    // is evaluated once on a scratch copy holding the new placeholder.
    Candidate scratch = clone(c);
    CtxNode* ph = scratch.arena.placeholder(scratch.open);
    const CtxTuple cctx =
        context_vector(g_.cond, ExpansionClass::NonPos, ph);
    std::size_t existing = 0;
    for (const CtxNode* k = c.open->child; k; k = k->rightsib) ++existing;
    // The start node takes exactly one child.
    const bool root_filled = c.open == c.root && existing > 0;
    for (const auto& [outcome, cnt] : g_.child.alphabet()) {
      if ((punct_empty || root_filled) && outcome != kStopToken) continue;
      ++*evals;
      const double pc = g_.child_prob(cctx, outcome);
      if (pc < opt_.outcome_floor) continue;
      const bool stop = outcome == kStopToken;
      std::array<std::pair<const std::string*, bool>, 2> alts;
      std::size_t nalt = 0;
      if (existing == 0) {
        alts[nalt++] = {nullptr, false};
      } else if (c.open->head) {
        alts[nalt++] = {&kHeadAlready, false};
      } else if (c.open == c.root) {
        alts[nalt++] = {&kHeadPrev, true};
      } else {
        alts[nalt++] = {&kHeadPrev, true};
        alts[nalt++] = {&kHeadNone, false};
      }
      for (std::size_t a = 0; a < nalt; ++a) {
        Candidate s;
        s.log_p = c.log_p;
        s.root = scratch.root;
        s.open = scratch.open;
        CtxNode* nh = ph;
        s.arena.clone_from(scratch.arena, {&s.root, &s.open, &nh});
        nh->label = stop ? kStopToken : outcome;
        double lp = std::log(pc);
        if (alts[a].first) {
          const CtxTuple hctx = head_context_vector(g_.cond, nh);
          ++*evals;
          const double ph_prob = g_.head_prob(hctx, *alts[a].first);
          if (ph_prob < opt_.outcome_floor) continue;
          if (alts[a].second) s.open->head = nh->leftsib;
          lp += std::log(ph_prob);
        }
        s.open = stop ? s.open->parent : nh;
        s.log_p += lp;
        s.log_f = s.log_p + log_lap_spine(s.open, la_same);
        out.emplace_back(std::move(s), false);
      }
    }
    return out;
  }

  ParseResult parse(const std::vector<std::string>& words) const {
    ParseResult res =
        detail::beam_engine(*this, words, opt_, lap_.opt.end_marker);
    for (ScoredParse& sp : res.parses) restore_words(sp.tree, words);
    return res;
  }

  Tree extract(const Candidate& c) const {
    const CtxNode* top = first_real_child(c.root);
    if (!top) return Tree(g_.opt.start);
    return to_tree(top);
  }

  ScoredParse partial_parse(const Candidate& c,
                            const std::vector<std::string>& words,
                            std::size_t consumed) const {
    const CtxNode* top = first_real_child(c.root);
    Tree t = top ? to_tree(top) : Tree(best_root_label());
    for (std::size_t j = consumed; j < words.size(); ++j)
      t.children.push_back(Tree::word(words[j]));
    restore_words(t, words);
    return {std::move(t), c.log_p};
  }

 private:
  static const CtxNode* first_real_child(const CtxNode* n) {
    for (const CtxNode* k = n->child; k; k = k->rightsib)
      if (!k->label.empty() && k->label != kStopToken) return k;
    return nullptr;
  }

  // Word leaves come out of the arena vocabulary-mapped; put the input
  // words back in left-to-right order.
  static void restore_words(Tree& t, const std::vector<std::string>& words) {
    std::size_t i = 0;
    restore_words_at(t, words, i);
  }
  static void restore_words_at(Tree& t,
                               const std::vector<std::string>& words,
                               std::size_t& i) {
    if (t.terminal) {
      if (i < words.size()) t.label = words[i];
      ++i;
      return;
    }
    for (Tree& c : t.children) restore_words_at(c, words, i);
  }

  Tree to_tree(const CtxNode* n) const {
    if (n->terminal) return Tree::word(n->label);
    Tree t(n->label);
    std::optional<std::size_t> hidx;
    for (const CtxNode* k = n->child; k; k = k->rightsib) {
      if (k->label.empty() || k->label == kStopToken) continue;
      if (k == n->head) hidx = t.children.size();
      t.children.push_back(to_tree(k));
    }
    t.head_child = hidx;
    return t;
  }

  double log_lap_spine(const CtxNode* open, const std::string& la) const {
    std::vector<LapFrame> frames;
    const std::size_t width =
        1 + static_cast<std::size_t>(lap_.opt.prev_depth);
    for (const CtxNode* n = open; n; n = n->parent) {
      CtxTuple st(width);
      st[0] = n->label;
      std::vector<const std::string*> kids;
      for (const CtxNode* k = n->child; k; k = k->rightsib)
        if (!k->label.empty() && k->label != kStopToken)
          kids.push_back(&k->label);
      for (std::size_t d = 0; d + 1 < width && d < kids.size(); ++d)
        st[1 + d] = *kids[kids.size() - 1 - d];
      LapFrame f;
      f.state = std::move(st);
      frames.push_back(std::move(f));
    }
    return std::log(
        std::max(lap_over(lap_, frames, la), opt_.lap_floor));
  }

  std::string best_root_label() const {
    ContextArena a;
    CtxNode* r = a.placeholder(nullptr, g_.opt.start);
    CtxNode* ph = a.placeholder(r);
    const CtxTuple ctx = context_vector(g_.cond, ExpansionClass::NonPos, ph);
    std::string best = g_.opt.start;
    double bp = -1;
    for (const auto& [outcome, cnt] : g_.child.alphabet()) {
      if (outcome == kStopToken) continue;
      const double p = g_.child_prob(ctx, outcome);
      if (p > bp) {
        bp = p;
        best = outcome;
      }
    }
    return best;
  }

  const MarkovGrammar& g_;
  const LapModel& lap_;
  BeamOptions opt_;
};

}  // namespace tdp
