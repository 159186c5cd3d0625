#pragma once
// Smoothed Markov grammar: child labels of a constituent are predicted one
// at a time (with an explicit stop outcome) from the interpolated
// conditioning model, words are predicted from the POS-expansion model, and
// head placement from the head-decision model.
//
// Training replays each gold tree's top-down left-to-right derivation over
// an incrementally built context graph, so every training context exposes
// exactly the left context and head decisions a parser would have at the
// same point. The derivation starts with the start-symbol expansion and
// includes it in scores.
//
// Head rules are a training-time input and are not serialized; rescoring a
// tree after loading a model uses the rules passed by the caller.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdp/features.hpp"
#include "tdp/interp.hpp"
#include "tdp/transform.hpp"
#include "tdp/tree.hpp"

namespace tdp {

inline const std::string kStopToken = "<STOP>";
inline const std::string kUnkToken = "<UNK>";
inline const std::string kHeadAlready = "already";
inline const std::string kHeadPrev = "prev";
inline const std::string kHeadNone = "none";

enum class EventKind { Child, Word, Head };

struct ReplayEvent {
  EventKind kind;
  CtxTuple context;
  std::string outcome;
};

namespace detail {

template <class Fn>
void replay_node(const ConditioningModel& cond, ContextArena& arena,
                 CtxNode* node, const Tree& gold, Fn& fn);

// One constituent's expansion: a child event per gold child plus the stop,
// and from the second hypothesis on, a head decision about the previous
// child. Heads become visible exactly when their decision event fires.
template <class Fn>
void replay_children(const ConditioningModel& cond, ContextArena& arena,
                     CtxNode* node, const Tree& gold, Fn& fn) {
  const std::size_t k = gold.children.size();
  const std::size_t j = gold.head_child.value_or(k);
  std::vector<CtxNode*> built;
  built.reserve(k);
  for (std::size_t i = 0; i <= k; ++i) {
    const bool stop = i == k;
    CtxNode* ph = arena.placeholder(node);
    fn(ReplayEvent{EventKind::Child,
                   context_vector(cond, ExpansionClass::NonPos, ph),
                   stop ? kStopToken : gold.children[i].label});
    ph->label = stop ? kStopToken : gold.children[i].label;
    if (i >= 1) {
      const std::string& out = j < i - 1  ? kHeadAlready
                               : j == i - 1 ? kHeadPrev
                                            : kHeadNone;
      fn(ReplayEvent{EventKind::Head, head_context_vector(cond, ph), out});
      if (j == i - 1) node->head = built[i - 1];
    }
    if (!stop) {
      built.push_back(ph);
      replay_node(cond, arena, ph, gold.children[i], fn);
    }
  }
}

template <class Fn>
void replay_node(const ConditioningModel& cond, ContextArena& arena,
                 CtxNode* node, const Tree& gold, Fn& fn) {
  if (gold.terminal) return;
  if (gold.is_pos()) {
    CtxNode* w = arena.placeholder(node, "", true);
    fn(ReplayEvent{EventKind::Word,
                   context_vector(cond, ExpansionClass::PosWord, w),
                   gold.children[0].label});
    w->label = gold.children[0].label;
    node->head = w;
    return;
  }
  replay_children(cond, arena, node, gold, fn);
}

}  // namespace detail

// Emits every model event of the tree's derivation, in derivation order.
// The tree must already carry head assignments; the start wrapper's head is
// its only child.
template <class Fn>
void replay_tree(const ConditioningModel& cond, const std::string& start,
                 const Tree& tree_with_heads, Fn&& fn) {
  Tree wrapped(start, {tree_with_heads});
  wrapped.head_child = 0;
  ContextArena arena;
  CtxNode* top = arena.placeholder(nullptr, start);
  detail::replay_children(cond, arena, top, wrapped, fn);
}

// Replaces the previous-child slots of the non-POS list so that `order`
// previous children condition each child prediction.
inline ConditioningModel with_order(ConditioningModel m, int order) {
  if (order < 0) throw std::invalid_argument("negative Markov order");
  m.non_pos.erase(m.non_pos.begin() + 1, m.non_pos.begin() + 4);
  std::vector<FeatureFn> prev;
  prev.reserve(static_cast<std::size_t>(order));
  for (int i = 1; i <= order; ++i)
    prev.push_back(detail::make_par_sib(0, i, 0, 0));
  m.non_pos.insert(m.non_pos.begin() + 1, prev.begin(), prev.end());
  return m;
}

struct MarkovOptions {
  int order = 3;
  std::string conditioning = "all";
  bool lc_chain = false;
  double unk_max_count = 1;  // <= 0 disables the UNK mapping
  std::optional<char> flc_slash;
  Bucketing bucketing = Bucketing::RawFrequency;
  HeadRules head_rules = default_head_rules();
  std::string start = "S†";
};

struct MarkovGrammar {
  MarkovOptions opt;
  ConditioningModel cond;
  InterpolatedModel child;
  InterpolatedModel word;
  InterpolatedModel head;
  std::map<std::string, double> vocab;
  // label -> (weight seen as a part-of-speech node, weight seen phrasal).
  std::map<std::string, std::pair<double, double>> cats;

  // Rare and unseen words share the UNK outcome, at training and test time.
  const std::string& map_word(const std::string& w) const {
    if (opt.unk_max_count <= 0) return w;
    const auto it = vocab.find(w);
    return it != vocab.end() && it->second > opt.unk_max_count ? w
                                                               : kUnkToken;
  }

  // A predicted child with a part-of-speech label emits a word next; any
  // other label opens a constituent. Labels seen both ways go by weight.
  bool is_pos_category(const std::string& label) const {
    const auto it = cats.find(label);
    return it != cats.end() && it->second.first > 0 &&
           it->second.first >= it->second.second;
  }

  std::set<std::string> pos_categories() const {
    std::set<std::string> out;
    for (const auto& [label, w] : cats)
      if (w.first > 0 && w.first >= w.second) out.insert(label);
    return out;
  }

  double child_prob(const CtxTuple& ctx, const std::string& outcome) const {
    return child.prob(ctx, outcome);
  }
  double word_prob(const CtxTuple& ctx, const std::string& w) const {
    return word.prob(ctx, map_word(w));
  }
  double head_prob(const CtxTuple& ctx, const std::string& outcome) const {
    return head.prob(ctx, outcome);
  }
};

namespace detail {

inline void count_words(const Tree& t, double w,
                        std::map<std::string, double>& vocab) {
  if (t.terminal) {
    vocab[t.label] += w;
    return;
  }
  for (const Tree& c : t.children) count_words(c, w, vocab);
}

inline void count_cats(
    const Tree& t, double w,
    std::map<std::string, std::pair<double, double>>& cats) {
  if (t.terminal) return;
  auto& entry = cats[t.label];
  if (t.is_pos())
    entry.first += w;
  else
    entry.second += w;
  for (const Tree& c : t.children) count_cats(c, w, cats);
}

// Rewrites the tree's word leaves through the grammar's vocabulary mapping
// so that head-word conditioning slots carry the same symbols at training
// and at parse time.
inline void map_tree_words(const MarkovGrammar& g, Tree& t) {
  if (t.terminal) return;
  if (t.is_pos()) {
    t.children[0].label = g.map_word(t.children[0].label);
    return;
  }
  for (Tree& c : t.children) map_tree_words(g, c);
}

inline void pin_slash_lambda(MarkovGrammar& g) {
  const char sep = *g.opt.flc_slash;
  // A slash category closes its production: when the previous child is one,
  // the one-child-history level is used in full so no mass reaches
  // continuations never seen after a slash.
  g.child.lambda_override =
      [sep](std::size_t level, const CtxTuple& ctx) -> std::optional<double> {
    if (level == 2 && ctx.size() > 1 && ctx[1] &&
        label::parse_slash(*ctx[1], sep))
      return 1.0;
    return std::nullopt;
  };
}

}  // namespace detail

struct MarkovTrainReport {
  LambdaReport child, word, head;
  bool lambdas_estimated = false;
};

inline MarkovGrammar train_markov(
    const std::vector<std::pair<Tree, double>>& train,
    const std::vector<Tree>* heldout, MarkovOptions opt = {},
    MarkovTrainReport* report = nullptr) {
  if (train.empty()) throw std::invalid_argument("empty training corpus");
  MarkovGrammar g;
  g.opt = opt;
  auto base = ConditioningModel::from_name(
      opt.conditioning, {.lc_chain = opt.lc_chain,
                         .punctuation = default_punctuation()});
  if (!base)
    throw std::invalid_argument("unknown conditioning model: " +
                                opt.conditioning);
  g.cond = with_order(*base, opt.order);
  g.child = InterpolatedModel(g.cond.non_pos.size());
  g.word = InterpolatedModel(g.cond.pos.size());
  g.head = InterpolatedModel(g.cond.head.size());
  g.child.table.bucketing = opt.bucketing;
  g.word.table.bucketing = opt.bucketing;
  g.head.table.bucketing = opt.bucketing;
  if (opt.flc_slash) detail::pin_slash_lambda(g);

  for (const auto& [t, w] : train) {
    if (w <= 0) continue;
    detail::count_words(t, w, g.vocab);
    detail::count_cats(t, w, g.cats);
  }

  for (const auto& [t, w] : train) {
    if (w <= 0) continue;
    Tree copy = t;
    assign_heads(copy, opt.head_rules);
    detail::map_tree_words(g, copy);
    replay_tree(g.cond, opt.start, copy, [&](ReplayEvent ev) {
      switch (ev.kind) {
        case EventKind::Child:
          g.child.add(ev.context, ev.outcome, w);
          break;
        case EventKind::Word:
          g.word.add(ev.context, ev.outcome, w);
          break;
        case EventKind::Head:
          g.head.add(ev.context, ev.outcome, w);
          break;
      }
    });
  }

  if (heldout && !heldout->empty()) {
    std::vector<InterpEvent> ce, we, he;
    for (const Tree& t : *heldout) {
      Tree copy = t;
      assign_heads(copy, opt.head_rules);
      detail::map_tree_words(g, copy);
      replay_tree(g.cond, opt.start, copy, [&](ReplayEvent ev) {
        switch (ev.kind) {
          case EventKind::Child:
            ce.push_back({std::move(ev.context), std::move(ev.outcome), 1});
            break;
          case EventKind::Word:
            we.push_back(
                {std::move(ev.context), std::move(ev.outcome), 1});
            break;
          case EventKind::Head:
            he.push_back({std::move(ev.context), std::move(ev.outcome), 1});
            break;
        }
      });
    }
    MarkovTrainReport local;
    local.child = g.child.estimate_lambdas(ce);
    local.word = g.word.estimate_lambdas(we);
    local.head = g.head.estimate_lambdas(he);
    local.lambdas_estimated = true;
    if (report) *report = std::move(local);
  }
  return g;
}

inline MarkovGrammar train_markov(const Corpus& train, const Corpus* heldout,
                                  MarkovOptions opt = {},
                                  MarkovTrainReport* report = nullptr) {
  std::vector<std::pair<Tree, double>> weighted;
  weighted.reserve(train.trees.size());
  for (const Tree& t : train.trees) weighted.emplace_back(t, 1.0);
  std::vector<Tree> held;
  if (heldout) held = heldout->trees;
  return train_markov(weighted, heldout ? &held : nullptr, std::move(opt),
                      report);
}

// Log probability of a complete tree: product over every child, word, and
// head event of its derivation, start expansion included. By default head
// decisions come from the grammar's head rules; with reassign_heads false
// the tree's own head_child annotations are replayed as-is, unset meaning
// no head was ever selected.
inline double markov_score_tree_log(const MarkovGrammar& g, const Tree& t,
                                    bool reassign_heads = true) {
  Tree copy = t;
  if (reassign_heads) assign_heads(copy, g.opt.head_rules);
  detail::map_tree_words(g, copy);
  double lp = 0;
  replay_tree(g.cond, g.opt.start, copy, [&](const ReplayEvent& ev) {
    double p = 0;
    switch (ev.kind) {
      case EventKind::Child:
        p = g.child_prob(ev.context, ev.outcome);
        break;
      case EventKind::Word:
        p = g.word_prob(ev.context, ev.outcome);
        break;
      case EventKind::Head:
        p = g.head_prob(ev.context, ev.outcome);
        break;
    }
    lp += std::log(p);
  });
  return lp;
}

// Child prediction with the spec'd split signature: previous children are
// given closest-first and padded with NULL to the grammar's order.
inline double markov_child_prob(const MarkovGrammar& g,
                                const std::string& parent,
                                const std::vector<std::string>& prev,
                                const CtxTuple& extra,
                                const std::string& outcome) {
  CtxTuple ctx;
  ctx.reserve(1 + static_cast<std::size_t>(g.opt.order) + extra.size());
  ctx.emplace_back(parent);
  for (int i = 0; i < g.opt.order; ++i) {
    if (i < static_cast<int>(prev.size()))
      ctx.emplace_back(prev[i]);
    else
      ctx.emplace_back(std::nullopt);
  }
  for (const auto& e : extra) ctx.push_back(e);
  if (ctx.size() != g.child.arity())
    throw std::invalid_argument("context arity mismatch");
  return g.child.prob(ctx, outcome);
}

// ---------------------------------------------------------------------------
// Serialization: line-oriented, tab-delimited, versioned.

namespace detail {

inline std::string fmt_count(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

inline void save_model(std::ostream& out, const std::string& name,
                       const InterpolatedModel& m) {
  out << "model " << name << " " << m.arity() << "\n";
  const auto& levels = m.levels();
  for (std::size_t j = 0; j < levels.size(); ++j)
    for (const auto& [key, stats] : levels[j])
      for (const auto& [outcome, c] : stats.outcomes)
        out << "count\t" << j << "\t" << key << "\t" << outcome << "\t"
            << fmt_count(c) << "\n";
  out << "boundaries";
  for (double b : m.table.boundaries) out << "\t" << fmt_count(b);
  out << "\n";
  for (std::size_t j = 0; j < m.table.lambda.size(); ++j)
    for (std::size_t b = 0; b < m.table.lambda[j].size(); ++b)
      out << "lambda\t" << j << "\t" << b << "\t"
          << fmt_count(m.table.lambda[j][b]) << "\n";
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace detail

inline void save_markov(const MarkovGrammar& g, std::ostream& out) {
  out << "tdparse-markov 1\n";
  out << "order " << g.opt.order << "\n";
  out << "conditioning " << g.opt.conditioning << "\n";
  out << "lc-chain " << (g.opt.lc_chain ? 1 : 0) << "\n";
  out << "bucketing " << to_string(g.opt.bucketing) << "\n";
  out << "unk-max-count " << detail::fmt_count(g.opt.unk_max_count) << "\n";
  if (g.opt.flc_slash) out << "flc-slash " << *g.opt.flc_slash << "\n";
  out << "start " << g.opt.start << "\n";
  for (const auto& [w, c] : g.vocab)
    out << "vocab\t" << w << "\t" << detail::fmt_count(c) << "\n";
  for (const auto& [label, w] : g.cats)
    out << "cat\t" << label << "\t" << detail::fmt_count(w.first) << "\t"
        << detail::fmt_count(w.second) << "\n";
  detail::save_model(out, "child", g.child);
  detail::save_model(out, "word", g.word);
  detail::save_model(out, "head", g.head);
  out << "end\n";
}

inline MarkovGrammar load_markov(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "tdparse-markov 1")
    throw std::runtime_error("unrecognized model file header");
  MarkovOptions opt;
  MarkovGrammar g;
  InterpolatedModel* cur = nullptr;
  bool have_cond = false;
  auto finish_options = [&]() {
    if (have_cond) return;
    auto base = ConditioningModel::from_name(
        opt.conditioning, {.lc_chain = opt.lc_chain,
                           .punctuation = default_punctuation()});
    if (!base)
      throw std::runtime_error("model file names unknown conditioning: " +
                               opt.conditioning);
    g.opt = opt;
    g.cond = with_order(*base, opt.order);
    have_cond = true;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "end") break;
    if (line.rfind("model ", 0) == 0) {
      finish_options();
      std::istringstream row(line);
      std::string kw, name;
      std::size_t arity = 0;
      row >> kw >> name >> arity;
      if (name == "child")
        cur = &g.child;
      else if (name == "word")
        cur = &g.word;
      else if (name == "head")
        cur = &g.head;
      else
        throw std::runtime_error("unknown model section: " + name);
      *cur = InterpolatedModel(arity);
      cur->table.bucketing = opt.bucketing;
      continue;
    }
    const std::vector<std::string> f = detail::split_tabs(line);
    if (f[0] == "vocab") {
      if (f.size() != 3) throw std::runtime_error("bad vocab line");
      g.vocab[f[1]] = std::stod(f[2]);
      continue;
    }
    if (f[0] == "cat") {
      if (f.size() != 4) throw std::runtime_error("bad category line");
      g.cats[f[1]] = {std::stod(f[2]), std::stod(f[3])};
      continue;
    }
    if (f[0] == "count") {
      if (!cur || f.size() != 5) throw std::runtime_error("bad count line");
      cur->add_raw(std::stoul(f[1]), f[2], f[3], std::stod(f[4]));
      continue;
    }
    if (f[0] == "boundaries") {
      if (!cur) throw std::runtime_error("boundaries outside model");
      cur->table.boundaries.clear();
      for (std::size_t i = 1; i < f.size(); ++i)
        cur->table.boundaries.push_back(std::stod(f[i]));
      continue;
    }
    if (f[0] == "lambda") {
      if (!cur || f.size() != 4) throw std::runtime_error("bad lambda line");
      const std::size_t j = std::stoul(f[1]);
      const std::size_t b = std::stoul(f[2]);
      if (cur->table.lambda.size() <= j) cur->table.lambda.resize(j + 1);
      if (cur->table.lambda[j].size() <= b)
        cur->table.lambda[j].resize(b + 1, 0.5);
      cur->table.lambda[j][b] = std::stod(f[3]);
      continue;
    }
    // Header key-value line.
    std::istringstream row(line);
    std::string key, value;
    row >> key;
    std::getline(row, value);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    if (key == "order")
      opt.order = std::stoi(value);
    else if (key == "conditioning")
      opt.conditioning = value;
    else if (key == "lc-chain")
      opt.lc_chain = value == "1";
    else if (key == "bucketing")
      opt.bucketing = value == "avgcount" ? Bucketing::AverageCount
                                          : Bucketing::RawFrequency;
    else if (key == "unk-max-count")
      opt.unk_max_count = std::stod(value);
    else if (key == "flc-slash")
      opt.flc_slash = value.empty() ? '/' : value[0];
    else if (key == "start")
      opt.start = value;
    else
      throw std::runtime_error("unknown model file key: " + key);
  }
  finish_options();
  if (g.opt.flc_slash) detail::pin_slash_lambda(g);
  return g;
}

}  // namespace tdp
