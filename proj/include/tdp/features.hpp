#pragma once
// Conditioning features for incremental parsing: tree-walking functions
// evaluated at a newly hypothesized node of a partial parse.
//
// The conditioned event is the label (or word) of a new node attached at the
// frontier.  Every feature walks the left context from that node and returns
// a label, or NULL when the walk falls off the structure.  NULL is a
// first-class outcome, not an error.
//
// Nodes expose exactly the links the walks need: parent, first child, left
// sibling, and the head child once a head decision has been made.  Partial
// parses simply leave links unset; the walks degrade to NULL.

#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tdp/tree.hpp"

namespace tdp {

struct CtxNode {
  // Empty label marks a placeholder whose label is the variable being
  // conditioned; it matches no real category.
  std::string label;
  CtxNode* parent = nullptr;
  CtxNode* child = nullptr;  // first child
  CtxNode* leftsib = nullptr;
  CtxNode* rightsib = nullptr;  // navigation only; walks never use it
  CtxNode* head = nullptr;      // head child, when decided
  bool terminal = false;
};

// Owns CtxNode storage; addresses are stable for the arena's lifetime.
// Copying is disabled because a plain member copy would leave the nodes
// pointing into the source pool; use clone_from.
class ContextArena {
 public:
  ContextArena() = default;
  ContextArena(const ContextArena&) = delete;
  ContextArena& operator=(const ContextArena&) = delete;
  ContextArena(ContextArena&&) = default;
  ContextArena& operator=(ContextArena&&) = default;

  // Materializes the whole tree. POS nodes head their terminal child; other
  // nodes take Tree::head_child when set.
  CtxNode* build(const Tree& t) { return build_rec(t, nullptr, nullptr); }

  // Appends a new rightmost child under parent. An empty label makes an
  // unlabeled placeholder; a labeled one models the post-labeling state.
  CtxNode* placeholder(CtxNode* parent, std::string label = "",
                       bool terminal = false) {
    CtxNode* n = alloc();
    n->label = std::move(label);
    n->terminal = terminal;
    n->parent = parent;
    if (parent) {
      CtxNode* last = parent->child;
      if (!last) {
        parent->child = n;
      } else {
        while (last->rightsib) last = last->rightsib;
        last->rightsib = n;
        n->leftsib = last;
      }
    }
    return n;
  }

  // Child-index navigation from a root, for addressing fixture nodes.
  static CtxNode* find(CtxNode* root, std::initializer_list<int> path) {
    CtxNode* n = root;
    for (int idx : path) {
      if (!n) return nullptr;
      n = n->child;
      for (int i = 0; i < idx && n; ++i) n = n->rightsib;
    }
    return n;
  }

  static void set_head(CtxNode* parent, CtxNode* head_child) {
    if (parent) parent->head = head_child;
  }

  // Structure-preserving copy of another arena's nodes into this one,
  // replacing any prior contents. Pointer slots listed in tracked address
  // nodes of src and are rewritten to the corresponding copies. src must be
  // a different arena.
  void clone_from(const ContextArena& src,
                  std::initializer_list<CtxNode**> tracked = {}) {
    pool_.clear();
    std::unordered_map<const CtxNode*, CtxNode*> to_copy;
    for (const CtxNode& n : src.pool_) {
      pool_.push_back(n);
      to_copy[&n] = &pool_.back();
    }
    const auto re = [&](CtxNode* p) { return p ? to_copy.at(p) : nullptr; };
    for (CtxNode& n : pool_) {
      n.parent = re(n.parent);
      n.child = re(n.child);
      n.leftsib = re(n.leftsib);
      n.rightsib = re(n.rightsib);
      n.head = re(n.head);
    }
    for (CtxNode** slot : tracked) *slot = re(*slot);
  }

 private:
  CtxNode* alloc() {
    pool_.emplace_back();
    return &pool_.back();
  }

  CtxNode* build_rec(const Tree& t, CtxNode* parent, CtxNode* leftsib) {
    CtxNode* n = alloc();
    n->label = t.label;
    n->terminal = t.terminal;
    n->parent = parent;
    n->leftsib = leftsib;
    if (leftsib) leftsib->rightsib = n;
    CtxNode* prev = nullptr;
    std::vector<CtxNode*> kids;
    kids.reserve(t.children.size());
    for (const Tree& c : t.children) {
      CtxNode* k = build_rec(c, n, prev);
      kids.push_back(k);
      prev = k;
    }
    if (!kids.empty()) n->child = kids.front();
    if (t.is_pos()) {
      n->head = kids.front();
    } else if (t.head_child && *t.head_child < kids.size()) {
      n->head = kids[*t.head_child];
    }
    return n;
  }

  std::deque<CtxNode> pool_;
};

namespace features {

// Label of the node reached by climbing m parents then stepping left n times.
inline std::optional<std::string> par_sib(const CtxNode* node, int m, int n) {
  for (int i = 0; i < m; ++i)
    if (node) node = node->parent;
  for (int i = 0; i < n; ++i)
    if (node) node = node->leftsib;
  if (!node) return std::nullopt;
  return node->label;
}

// par_sib gated on the start node being a leftmost child.
inline std::optional<std::string> leftmost_ps(const CtxNode* node, int m,
                                              int n) {
  if (!node || node->leftsib) return std::nullopt;
  return par_sib(node, m, n);
}

// Descends head links to the lexical head, then climbs m parents. The climb
// recovers the POS (m=1) or higher projections of the head word.
inline const CtxNode* lex_head_node(const CtxNode* node, int m) {
  if (node) node = node->head;
  while (node && node->child) node = node->head;
  for (int i = 0; i < m; ++i)
    if (node) node = node->parent;
  return node;
}

inline std::optional<std::string> lex_head(const CtxNode* node, int m) {
  const CtxNode* h = lex_head_node(node, m);
  if (!h) return std::nullopt;
  return h->label;
}

// Head of the constituent being built: the parent's head if decided,
// otherwise the head of the previous child.
inline std::optional<std::string> curr_head(const CtxNode* node, int m) {
  if (!node) return std::nullopt;
  const CtxNode* h = lex_head_node(node->parent, m);
  if (h) return h->label;
  h = lex_head_node(node->leftsib, m);
  if (!h) return std::nullopt;
  return h->label;
}

// Closest c-commanding node: the left sibling of the lowest non-leftmost
// ancestor, or that ancestor's parent's head child once one is decided.
inline const CtxNode* left_ccommand_node(const CtxNode* node) {
  while (node && !node->leftsib) node = node->parent;
  if (!node || !node->parent) return nullptr;
  const CtxNode* parenthead = node->parent->head;
  return parenthead ? parenthead : node->leftsib;
}

// Lexical head (climbed n levels) of the m-th closest c-commanding node.
inline std::optional<std::string> cc_head(const CtxNode* node, int m, int n) {
  for (int i = 0; i < m; ++i)
    if (node) node = left_ccommand_node(node);
  return lex_head(node, n);
}

inline std::optional<std::string> leftmost_cch(const CtxNode* node, int m,
                                               int n) {
  if (!node || node->leftsib) return std::nullopt;
  return cc_head(node, m, n);
}

// Inside the second conjunct of a coordination, the label of the first
// child of the parallel constituent in the first conjunct.
inline std::optional<std::string> conj_parallel(const CtxNode* node) {
  if (node && !node->leftsib) node = node->parent;
  if (!node) return std::nullopt;
  const std::string thislabel = node->label;
  if (!node->leftsib || node->leftsib->label != "CC") return std::nullopt;
  node = node->leftsib;
  while (node && node->label != thislabel) node = node->leftsib;
  if (!node) return std::nullopt;
  node = node->child;
  if (!node) return std::nullopt;
  return node->label;
}

// Label m levels up a strictly leftmost-child chain; NULL if the chain
// breaks before m steps.
inline std::optional<std::string> lc_chain(const CtxNode* node, int m) {
  for (int i = 0; i < m; ++i) {
    if (node && !node->leftsib)
      node = node->parent;
    else
      return std::nullopt;
  }
  if (!node) return std::nullopt;
  return node->label;
}

// Categories transparent to disfluency context: punctuation, parentheticals,
// interjections.
inline bool edit_skip(const CtxNode* node,
                      const std::set<std::string>& punct) {
  if (!node) return false;
  return punct.count(node->label) > 0 || node->label == "PRN" ||
         node->label == "INTJ";
}

// When the left neighbor (past skippable material) is an EDITED constituent,
// the label of the first grandchild along the restart-parallel path: child
// of the EDITED node (descending one extra level when that child repeats
// the EDITED node's parent label), provided it matches the category being
// rebuilt.
inline std::optional<std::string> edit_child(
    const CtxNode* node, const std::set<std::string>& punct) {
  if (node && !node->leftsib && node->parent)
    node = node->parent;
  else
    return std::nullopt;
  const std::string thislabel = node->label;
  node = node->leftsib;
  while (node && edit_skip(node, punct)) node = node->leftsib;
  if (!node || node->label != "EDITED") return std::nullopt;
  if (!node->parent) return std::nullopt;
  const std::string parentlabel = node->parent->label;
  node = node->child;
  if (node && node->label == parentlabel) node = node->child;
  if (!node || node->label != thislabel) return std::nullopt;
  node = node->child;
  if (!node) return std::nullopt;
  return node->label;
}

// Left-corner word of an EDITED constituent immediately left (past
// skippable material) of the constituent being built, climbed m levels.
inline std::optional<std::string> edit_lex(const CtxNode* node, int m,
                                           const std::set<std::string>& punct) {
  while (node && !node->leftsib) node = node->parent;
  if (!node) return std::nullopt;
  node = node->leftsib;
  while (node && edit_skip(node, punct)) node = node->leftsib;
  if (!node || node->label != "EDITED") return std::nullopt;
  while (node->child) node = node->child;
  for (int i = 0; i < m; ++i)
    if (node) node = node->parent;
  if (!node) return std::nullopt;
  return node->label;
}

}  // namespace features

// ---------------------------------------------------------------------------
// Head percolation over complete trees, for training-time head assignment.

struct HeadRules {
  struct Rule {
    bool from_right = false;
    std::vector<std::string> priorities;
  };
  std::map<std::string, Rule> rules;
  Rule fallback{true, {}};

  // Index of the head child. Scans priority labels in order, each over the
  // children in the rule's direction; falls back to the directional edge.
  std::size_t find_head(const Tree& parent) const {
    const auto it = rules.find(base_label(parent.label));
    const Rule& r = it == rules.end() ? fallback : it->second;
    const std::size_t n = parent.children.size();
    for (const std::string& want : r.priorities) {
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = r.from_right ? n - 1 - k : k;
        if (base_label(parent.children[i].label) == want) return i;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t i = r.from_right ? n - 1 - k : k;
      if (!parent.children[i].terminal && !parent.children[i].is_empty())
        return i;
    }
    return r.from_right ? n - 1 : 0;
  }
};

inline HeadRules default_head_rules() {
  HeadRules h;
  auto add = [&](const std::string& cat, bool from_right,
                 std::vector<std::string> pri) {
    h.rules[cat] = HeadRules::Rule{from_right, std::move(pri)};
  };
  add("S", false, {"VP", "AUX", "S", "SBAR", "ADJP", "NP"});
  add("SBAR", false, {"S", "SBAR", "IN", "WHNP", "WHADVP"});
  add("SINV", false, {"VP", "VBZ", "VBD", "VBP", "VB", "AUX", "S"});
  add("SQ", false, {"VP", "VBZ", "VBD", "VBP", "VB", "AUX", "SQ"});
  add("VP", false, {"VBD", "VBZ", "VBP", "VB", "VBN", "VBG", "MD", "AUX", "V",
                    "TO", "VP"});
  add("NP", true, {"NN", "NNS", "NNP", "NNPS", "NX", "PRP", "CD", "NP", "JJ"});
  add("NX", true, {"NN", "NNS", "NNP", "NNPS", "NX"});
  add("WHNP", true, {"WP", "WDT", "NN", "NNS", "WHNP"});
  add("PP", false, {"IN", "TO", "RP", "PP"});
  add("ADJP", true, {"JJ", "JJR", "JJS", "VBN", "ADJP"});
  add("ADVP", true, {"RB", "RBR", "RBS", "ADVP"});
  add("PRT", false, {"RP"});
  add("QP", true, {"CD", "NN", "JJ"});
  add("CONJP", true, {"CC", "RB", "IN"});
  add("EDITED", false, {});
  add("PRN", false, {});
  add("INTJ", false, {"UH"});
  add("UCP", false, {});
  add("FRAG", false, {});
  return h;
}

// Sets head_child on every node with children. POS nodes head their terminal
// child; empty (trace) children are never chosen while an alternative exists.
inline void assign_heads(Tree& t, const HeadRules& rules) {
  if (t.terminal || t.children.empty()) return;
  for (Tree& c : t.children) assign_heads(c, rules);
  t.head_child = t.is_pos() ? 0 : rules.find_head(t);
}

// One rule per line: CATEGORY left|right [priority labels...]. '#' comments.
inline HeadRules parse_head_rules(std::istream& in) {
  HeadRules h;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string cat, dir;
    if (!(row >> cat >> dir)) continue;
    if (dir != "left" && dir != "right")
      throw std::runtime_error("head rule direction must be left or right: " +
                               line);
    HeadRules::Rule r;
    r.from_right = dir == "right";
    std::string lab;
    while (row >> lab) r.priorities.push_back(lab);
    h.rules[cat] = std::move(r);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Conditioning model: ordered feature lists per expansion class, with a
// truncation depth per decision-tree path.

// One conditioning feature. Levels place the feature on the decision-tree
// paths used for truncation; kOffPath marks a feature absent from a path.
struct FeatureFn {
  static constexpr int kOffPath = std::numeric_limits<int>::max();

  std::string name;
  int level_leftmost = 0;
  int level_nonleftmost = 0;
  std::function<std::optional<std::string>(const CtxNode*)> eval;
};

// Truncation depths: non-POS expansions, leftmost POS expansions,
// non-leftmost POS expansions.
struct TruncationTriple {
  int non_pos = 6;
  int leftmost_pos = 6;
  int nonleftmost_pos = 4;
};

enum class ExpansionClass { NonPos, PosWord };

struct ConditioningOptions {
  bool lc_chain = false;
  std::set<std::string> punctuation = default_punctuation();
};

struct ConditioningModel {
  std::vector<FeatureFn> non_pos;
  std::vector<FeatureFn> pos;
  std::vector<FeatureFn> head;  // head-decision context; never truncated
  TruncationTriple truncation;

  static ConditioningModel standard(TruncationTriple t,
                                    ConditioningOptions opt = {});
  static ConditioningModel switchboard(TruncationTriple t = {6, 6, 4},
                                       ConditioningOptions opt = {});
  // Named configurations; nullopt for an unknown name.
  static std::optional<ConditioningModel> from_name(const std::string& name,
                                                    ConditioningOptions opt = {});
};

namespace detail {

inline FeatureFn make_par_sib(int m, int n, int lvl_left, int lvl_nonleft) {
  return {"PAR-SIB(" + std::to_string(m) + "," + std::to_string(n) + ")",
          lvl_left, lvl_nonleft,
          [m, n](const CtxNode* x) { return features::par_sib(x, m, n); }};
}

inline FeatureFn make_leftmost_ps(int m, int n, int lvl_left,
                                  int lvl_nonleft) {
  return {"LEFTMOST-PS(" + std::to_string(m) + "," + std::to_string(n) + ")",
          lvl_left, lvl_nonleft,
          [m, n](const CtxNode* x) { return features::leftmost_ps(x, m, n); }};
}

inline FeatureFn make_cc_head(int m, int n, int lvl_left, int lvl_nonleft) {
  return {"CC-HEAD(" + std::to_string(m) + "," + std::to_string(n) + ")",
          lvl_left, lvl_nonleft,
          [m, n](const CtxNode* x) { return features::cc_head(x, m, n); }};
}

inline FeatureFn make_leftmost_cch(int m, int n, int lvl_left,
                                   int lvl_nonleft) {
  return {"LEFTMOST-CCH(" + std::to_string(m) + "," + std::to_string(n) + ")",
          lvl_left, lvl_nonleft,
          [m, n](const CtxNode* x) { return features::leftmost_cch(x, m, n); }};
}

inline FeatureFn make_conj_parallel(int lvl) {
  return {"CONJ-PARALLEL", lvl, lvl,
          [](const CtxNode* x) { return features::conj_parallel(x); }};
}

inline FeatureFn make_curr_head(int m, int lvl) {
  return {"CURR-HEAD(" + std::to_string(m) + ")", lvl, lvl,
          [m](const CtxNode* x) { return features::curr_head(x, m); }};
}

inline FeatureFn make_lc_chain(int m, int lvl) {
  return {"LC-CHAIN(" + std::to_string(m) + ")", lvl, lvl,
          [m](const CtxNode* x) { return features::lc_chain(x, m); }};
}

inline FeatureFn make_edit_child(
    int lvl, std::shared_ptr<const std::set<std::string>> punct) {
  return {"EDIT-CHILD", lvl, lvl, [punct](const CtxNode* x) {
            return features::edit_child(x, *punct);
          }};
}

inline FeatureFn make_edit_lex(
    int m, int lvl, std::shared_ptr<const std::set<std::string>> punct) {
  return {"EDIT-LEX(" + std::to_string(m) + ")", lvl, lvl,
          [m, punct](const CtxNode* x) {
            return features::edit_lex(x, m, *punct);
          }};
}

}  // namespace detail

inline ConditioningModel ConditioningModel::standard(TruncationTriple t,
                                                     ConditioningOptions opt) {
  using namespace detail;
  ConditioningModel m;
  m.truncation = t;
  const int off = FeatureFn::kOffPath;

  // Label prediction for non-POS expansions. The first four features carry
  // rule identity (the expanding category and previous children) and sit at
  // level 0; structure above and to the left follows in decision-tree order.
  m.non_pos = {
      make_par_sib(1, 0, 0, 0),  // expanding category
      make_par_sib(0, 1, 0, 0),  // previous child
      make_par_sib(0, 2, 0, 0),
      make_par_sib(0, 3, 0, 0),
      make_par_sib(2, 0, 1, 1),  // parent of the expanding category
      make_par_sib(1, 1, 2, 2),  // its closest left sibling
      make_par_sib(3, 0, 3, 3),  // grandparent
      make_par_sib(2, 1, 4, 4),  // parent's closest left sibling
      make_conj_parallel(5),
      make_curr_head(0, 6),
  };
  if (opt.lc_chain) {
    m.non_pos.insert(m.non_pos.begin() + 8,
                     {make_lc_chain(4, 4), make_lc_chain(5, 4)});
  }

  // Word prediction under a POS. Levels 3 and 4 exist only on the leftmost
  // path; the c-command heads sit deeper on the leftmost path than on the
  // non-leftmost one.
  m.pos = {
      make_par_sib(1, 0, 0, 0),  // the POS itself
      make_par_sib(2, 0, 1, 1),  // its parent
      make_par_sib(1, 1, 2, 2),  // its closest left sibling
      make_leftmost_ps(3, 0, 3, off),
      make_leftmost_cch(1, 1, 4, off),
      make_cc_head(1, 0, 5, 3),
      make_cc_head(2, 0, 6, 4),
  };

  m.head = {
      make_par_sib(0, 1, 0, 0),  // previous child
      make_par_sib(1, 0, 0, 0),  // expanding category
      make_par_sib(0, 0, 0, 0),  // the new node's own label
      make_par_sib(0, 2, 0, 0),
      make_par_sib(0, 3, 0, 0),
  };
  return m;
}

inline ConditioningModel ConditioningModel::switchboard(
    TruncationTriple t, ConditioningOptions opt) {
  using namespace detail;
  ConditioningModel m = standard(t, opt);
  auto punct =
      std::make_shared<const std::set<std::string>>(opt.punctuation);
  // Restart context slots in on each list: the parallel child label after
  // the parent feature, and the interrupted word and its POS after the
  // sibling feature.
  m.non_pos.insert(m.non_pos.begin() + 5, make_edit_child(1, punct));
  m.pos.insert(m.pos.begin() + 3,
               {make_edit_lex(1, 2, punct), make_edit_lex(0, 2, punct)});
  return m;
}

inline std::optional<ConditioningModel> ConditioningModel::from_name(
    const std::string& name, ConditioningOptions opt) {
  if (name == "none") return standard({0, 0, 0}, opt);
  if (name == "par+sib") return standard({2, 2, 2}, opt);
  if (name == "ntstruct") return standard({5, 2, 2}, opt);
  if (name == "nthead") return standard({6, 2, 2}, opt);
  if (name == "posstruct") return standard({6, 3, 2}, opt);
  if (name == "attach") return standard({6, 5, 2}, opt);
  if (name == "all") return standard({6, 6, 4}, opt);
  if (name == "swbd") return switchboard({6, 6, 4}, opt);
  return std::nullopt;
}

// True when the new node is a leftmost expansion for truncation purposes:
// word prediction under a POS that is its parent's first child.
inline bool leftmost_expansion(ExpansionClass cls, const CtxNode* node) {
  if (cls == ExpansionClass::NonPos) return true;
  return node && node->parent && !node->parent->leftsib;
}

// Evaluates the class's feature list at the new node. Features beyond the
// truncation depth for the node's path, or absent from it, yield NULL; the
// vector's arity never varies.
inline std::vector<std::optional<std::string>> context_vector(
    const ConditioningModel& m, ExpansionClass cls, const CtxNode* node) {
  const std::vector<FeatureFn>& list =
      cls == ExpansionClass::NonPos ? m.non_pos : m.pos;
  const bool leftmost = leftmost_expansion(cls, node);
  int depth;
  if (cls == ExpansionClass::NonPos)
    depth = m.truncation.non_pos;
  else
    depth = leftmost ? m.truncation.leftmost_pos : m.truncation.nonleftmost_pos;

  std::vector<std::optional<std::string>> out;
  out.reserve(list.size());
  for (const FeatureFn& f : list) {
    const int lvl = leftmost ? f.level_leftmost : f.level_nonleftmost;
    if (lvl == FeatureFn::kOffPath || lvl > depth)
      out.push_back(std::nullopt);
    else
      out.push_back(f.eval(node));
  }
  return out;
}

// Head-decision context at a labeled new node; never truncated.
inline std::vector<std::optional<std::string>> head_context_vector(
    const ConditioningModel& m, const CtxNode* node) {
  std::vector<std::optional<std::string>> out;
  out.reserve(m.head.size());
  for (const FeatureFn& f : m.head) out.push_back(f.eval(node));
  return out;
}

}  // namespace tdp
