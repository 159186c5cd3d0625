#pragma once

// Reversible tree transforms that move a parser's announce points:
//
//   LF0/LF1/LF2  left factorization, children predicted one at a time,
//                terminating in a nullary / unary / binary remainder
//   RF           right factorization: all but the last child grouped into a
//                left-nested binary spine with "+"-joined labels
//   LC / SLC     (selective) left-corner transform: the left-corner subtree
//                is recognized first and the rest of the spine hangs off a
//                right-branching slash chain ending in an empty self-slash
//                node.  A preterminal left corner is kept whole; a phrasal
//                stop production is inlined (its children are hoisted).
//   FLC          SLC restricted to one category's left recursion, with the
//                slash chain flattened to sibling groups
//   PA / LCA     parent / left-corner-ancestor label annotation
//   EPS_REMOVE   drops the self-slash empty terminator of LC/SLC images
//
// Every apply has an exact detransform on its image.  Decoding walks
// expected-label chains rather than splitting labels, so factored names
// that collide with slash names (both render as "S-DT") stay unambiguous.
// Factored names extend an already factored or slash base with commas
// ("S-DT" consuming JJ yields "S-DT,JJ"), which keeps composed images in
// the same label space as their single-transform counterparts.  Round
// trips are guaranteed for trees whose original labels contain none of the
// separator characters - , / + ^ ↑ in positions that mimic constructed
// labels; treebank labels qualify.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdp/tree.hpp"

namespace tdp {

struct TransformError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Label construction.

namespace label {

// "base-c1,c2,..." for factored remainder categories; a base that already
// contains a dash is extended with commas only.
inline std::string factored(const std::string& base,
                            const std::vector<std::string>& consumed) {
  std::string out = base;
  out.push_back(base.find('-') == std::string::npos ? '-' : ',');
  for (std::size_t i = 0; i < consumed.size(); ++i) {
    if (i) out.push_back(',');
    out += consumed[i];
  }
  return out;
}

// "ancestor-found" (LC/SLC) or "ancestor/found" (FLC).
inline std::string slash(const std::string& anc, const std::string& found,
                         char sep) {
  return anc + sep + found;
}

// Splits at the first separator; the caller checks the ancestor part, so a
// separator inside the found part stays intact.
inline std::optional<std::pair<std::string, std::string>> parse_slash(
    const std::string& lab, char sep) {
  std::size_t p = lab.find(sep);
  if (p == std::string::npos || p == 0 || p + 1 == lab.size())
    return std::nullopt;
  return std::make_pair(lab.substr(0, p), lab.substr(p + 1));
}

// "base↑parent" annotations, stripped at the last marker so that an
// annotated base survives one more round of annotation.
inline std::string annotated(const std::string& base,
                             const std::string& parent) {
  return base + "↑" + parent;
}

inline std::optional<std::pair<std::string, std::string>> parse_annotated(
    const std::string& lab) {
  std::size_t p = lab.rfind("↑");
  if (p == std::string::npos) return std::nullopt;
  return std::make_pair(lab.substr(0, p),
                        lab.substr(p + std::string("↑").size()));
}

}  // namespace label

// ---------------------------------------------------------------------------
// Transform specification.

enum class TransformKind { LF0, LF1, LF2, RF, LC, SLC, FLC, PA, LCA,
                           EPS_REMOVE };

// Predicate over (parent label, leftmost child label) selecting the
// left-corner production set L.  Lexical and ε productions are never in L.
struct SlcPredicate {
  enum Kind { All, LeftRecursive, Parent, Child, ParentChild } kind = All;
  std::string parent, child;

  bool operator()(const std::string& p, const std::string& c) const {
    switch (kind) {
      case All: return true;
      case LeftRecursive: return p == c;
      case Parent: return p == parent;
      case Child: return c == child;
      case ParentChild: return p == parent && c == child;
    }
    return false;
  }
};

struct TransformSpec {
  TransformKind kind = TransformKind::LF0;
  SlcPredicate predicate;      // SLC only
  std::string category;        // FLC only
  bool eps_remove = false;     // LC/SLC flag: fold the ε terminator away
  // LC/SLC flag: superscript the innermost slash category with the label of
  // the node the left corner attaches into.  Experimental.
  bool annotate_parent = false;
  std::string top_symbol = "TOP";  // PA root annotation

  static TransformSpec lf0() { return {TransformKind::LF0}; }
  static TransformSpec lf1() { return {TransformKind::LF1}; }
  static TransformSpec lf2() { return {TransformKind::LF2}; }
  static TransformSpec rf() { return {TransformKind::RF}; }
  static TransformSpec lc(bool eps_rm = false, bool ann = false) {
    TransformSpec s{TransformKind::LC};
    s.eps_remove = eps_rm;
    s.annotate_parent = ann;
    return s;
  }
  static TransformSpec slc(SlcPredicate pred, bool eps_rm = false) {
    TransformSpec s{TransformKind::SLC};
    s.predicate = pred;
    s.eps_remove = eps_rm;
    return s;
  }
  static TransformSpec flc(std::string cat) {
    TransformSpec s{TransformKind::FLC};
    s.category = std::move(cat);
    return s;
  }
  static TransformSpec pa(std::string top = "TOP") {
    TransformSpec s{TransformKind::PA};
    s.top_symbol = std::move(top);
    return s;
  }
  static TransformSpec lca() { return {TransformKind::LCA}; }
  static TransformSpec eps_removal() { return {TransformKind::EPS_REMOVE}; }
};

namespace detail {

// ---------------------------------------------------------------------------
// Left factorization.  stop_arity selects the remainder production: 0 ends
// in ε, 1 in a unary rule, 2 in a binary rule.

inline Tree lf_apply(const Tree& t, int stop_arity);

inline Tree lf_chain(const std::string& base, const std::vector<Tree>& kids,
                     std::vector<std::string>& consumed, std::size_t i,
                     int stop_arity) {
  std::size_t remaining = kids.size() - i;
  if (static_cast<int>(remaining) == stop_arity) {
    Tree stop(label::factored(base, consumed));
    for (std::size_t j = i; j < kids.size(); ++j)
      stop.children.push_back(kids[j]);
    return stop;
  }
  Tree node(label::factored(base, consumed));
  node.children.push_back(kids[i]);
  consumed.push_back(kids[i].label);
  node.children.push_back(lf_chain(base, kids, consumed, i + 1, stop_arity));
  return node;
}

inline Tree lf_apply(const Tree& t, int stop_arity) {
  if (t.terminal || t.is_pos()) return t;
  std::vector<Tree> kids;
  kids.reserve(t.children.size());
  for (const Tree& c : t.children) kids.push_back(lf_apply(c, stop_arity));
  std::size_t n = kids.size();
  if (static_cast<int>(n) <= stop_arity || n == 0)
    return Tree(t.label, std::move(kids));
  Tree out(t.label);
  out.children.push_back(kids[0]);
  std::vector<std::string> consumed = {kids[0].label};
  out.children.push_back(lf_chain(t.label, kids, consumed, 1, stop_arity));
  return out;
}

inline Tree lf_undo(const Tree& t, int stop_arity) {
  if (t.terminal || t.is_pos()) return t;
  const std::string& base = t.label;
  bool entry = false;
  if (t.children.size() == 2 && !t.children[1].terminal) {
    entry = t.children[1].label ==
            label::factored(base, {t.children[0].label});
  }
  if (!entry) {
    // Untouched node: permitted arities depend on the remainder kind.
    if (static_cast<int>(t.children.size()) > stop_arity &&
        !t.children.empty())
      throw TransformError("not a factored image at '" + base + "'");
    Tree out(t.label);
    for (const Tree& c : t.children)
      out.children.push_back(lf_undo(c, stop_arity));
    return out;
  }
  std::vector<const Tree*> orig = {&t.children[0]};
  std::vector<std::string> consumed = {t.children[0].label};
  const Tree* cur = &t.children[1];
  while (cur->children.size() == 2) {
    const Tree& c0 = cur->children[0];
    const Tree& c1 = cur->children[1];
    consumed.push_back(c0.label);
    if (!c1.terminal && c1.label == label::factored(base, consumed)) {
      orig.push_back(&c0);
      cur = &c1;
      continue;
    }
    consumed.pop_back();
    break;
  }
  if (static_cast<int>(cur->children.size()) != stop_arity)
    throw TransformError("factored chain at '" + cur->label +
                         "' ends with arity " +
                         std::to_string(cur->children.size()) +
                         ", expected " + std::to_string(stop_arity));
  for (const Tree& c : cur->children) orig.push_back(&c);
  Tree out(base);
  for (const Tree* c : orig) out.children.push_back(lf_undo(*c, stop_arity));
  return out;
}

// ---------------------------------------------------------------------------
// Right factorization: children 0..n-2 grouped into a left-nested binary
// spine labeled by the "+"-join of the grouped labels.

inline Tree rf_apply(const Tree& t) {
  if (t.terminal || t.is_pos()) return t;
  std::vector<Tree> kids;
  kids.reserve(t.children.size());
  for (const Tree& c : t.children) kids.push_back(rf_apply(c));
  if (kids.size() <= 2) return Tree(t.label, std::move(kids));
  Tree group(kids[0].label + "+" + kids[1].label, {kids[0], kids[1]});
  for (std::size_t i = 2; i + 1 < kids.size(); ++i) {
    std::string lab = group.label + "+" + kids[i].label;
    group = Tree(std::move(lab), {std::move(group), kids[i]});
  }
  Tree out(t.label);
  out.children.push_back(std::move(group));
  out.children.push_back(kids.back());
  return out;
}

// The nested reading is tried first: a group's first child is itself a
// group for every grouped arity above three, and the base reading would
// also match those labels.
inline bool rf_try_group(const Tree& g, std::vector<const Tree*>& leaves) {
  if (g.terminal || g.children.size() != 2) return false;
  const Tree& a = g.children[0];
  const Tree& b = g.children[1];
  std::vector<const Tree*> inner;
  if (rf_try_group(a, inner) && g.label == a.label + "+" + b.label) {
    inner.push_back(&b);
    leaves = std::move(inner);
    return true;
  }
  if (g.label == a.label + "+" + b.label) {
    leaves = {&a, &b};
    return true;
  }
  return false;
}

inline Tree rf_undo(const Tree& t) {
  if (t.terminal || t.is_pos()) return t;
  if (t.children.size() > 2)
    throw TransformError("not a right-factored image at '" + t.label + "'");
  std::vector<const Tree*> leaves;
  if (t.children.size() == 2 && rf_try_group(t.children[0], leaves)) {
    Tree out(t.label);
    for (const Tree* c : leaves) out.children.push_back(rf_undo(*c));
    out.children.push_back(rf_undo(t.children[1]));
    return out;
  }
  Tree out(t.label);
  for (const Tree& c : t.children) out.children.push_back(rf_undo(c));
  return out;
}

// ---------------------------------------------------------------------------
// Selective left-corner transform.  The spine m_0..m_k descends leftmost
// children while the production (parent, leftmost child) is in L; lexical
// and ε productions are never in L, so the spine stops at the left-corner
// item m_k.  A preterminal m_k is recognized whole; otherwise its
// production is inlined and its children hoisted.  The chain node for
// "found m_i" holds the transformed right siblings of m_i and then the
// chain node for m_{i-1}; "found m_0" is the empty self-slash terminator.

inline Tree slc_apply(const Tree& t, const SlcPredicate& pred, char sep,
                      bool eps_rm, bool ann);

inline Tree slc_chain(const std::string& anc,
                      const std::vector<const Tree*>& spine, std::size_t i,
                      const SlcPredicate& pred, char sep, bool eps_rm,
                      bool ann) {
  Tree node(label::slash(anc, spine[i]->label, sep));
  if (ann && i + 1 == spine.size())
    node.label += "^" + spine[i - 1]->label;
  if (i == 0) return node;  // ε terminator, omitted under eps_rm
  const Tree& above = *spine[i - 1];
  for (std::size_t j = 1; j < above.children.size(); ++j)
    node.children.push_back(
        slc_apply(above.children[j], pred, sep, eps_rm, ann));
  if (!(eps_rm && i == 1))
    node.children.push_back(
        slc_chain(anc, spine, i - 1, pred, sep, eps_rm, ann));
  return node;
}

inline Tree slc_apply(const Tree& t, const SlcPredicate& pred, char sep,
                      bool eps_rm, bool ann) {
  if (t.terminal || t.is_pos()) return t;
  std::vector<const Tree*> spine = {&t};
  while (true) {
    const Tree* m = spine.back();
    if (m->children.empty() || m->children[0].terminal) break;
    if (!pred(m->label, m->children[0].label)) break;
    spine.push_back(&m->children[0]);
  }
  if (spine.size() == 1) {
    Tree out(t.label);
    for (const Tree& c : t.children)
      out.children.push_back(slc_apply(c, pred, sep, eps_rm, ann));
    return out;
  }
  const Tree& bottom = *spine.back();
  Tree out(t.label);
  if (bottom.is_pos()) {
    out.children.push_back(bottom);
  } else {
    for (const Tree& c : bottom.children)
      out.children.push_back(slc_apply(c, pred, sep, eps_rm, ann));
  }
  out.children.push_back(
      slc_chain(t.label, spine, spine.size() - 1, pred, sep, eps_rm, ann));
  return out;
}

inline Tree slc_undo(const Tree& t, char sep, bool eps_rm, bool ann) {
  if (t.terminal || t.is_pos()) return t;
  const std::string& anc = t.label;
  auto chain_link = [&](const Tree& n) -> std::optional<std::string> {
    if (n.terminal) return std::nullopt;
    auto ps = label::parse_slash(n.label, sep);
    if (!ps || ps->first != anc) return std::nullopt;
    std::string found = ps->second;
    if (ann) {
      std::size_t caret = found.find('^');
      if (caret != std::string::npos) found.resize(caret);
    }
    return found;
  };
  std::optional<std::string> found;
  if (!t.children.empty()) found = chain_link(t.children.back());
  if (!found) {
    Tree out(t.label);
    for (const Tree& c : t.children)
      out.children.push_back(slc_undo(c, sep, eps_rm, ann));
    return out;
  }
  // Rebuild the left-corner item: a single preterminal child matching the
  // announced category was recognized whole, anything else is the hoisted
  // right-hand side of the inlined stop production.
  Tree cur(*found);
  if (t.children.size() == 2 && t.children[0].is_pos() &&
      t.children[0].label == *found) {
    cur = t.children[0];
  } else {
    for (std::size_t i = 0; i + 1 < t.children.size(); ++i)
      cur.children.push_back(slc_undo(t.children[i], sep, eps_rm, ann));
  }
  const Tree* walk = &t.children.back();
  while (true) {
    std::optional<std::string> next;
    if (!walk->children.empty()) next = chain_link(walk->children.back());
    if (next) {
      Tree parent(*next);
      parent.children.push_back(std::move(cur));
      for (std::size_t i = 0; i + 1 < walk->children.size(); ++i)
        parent.children.push_back(slc_undo(walk->children[i], sep, eps_rm,
                                           ann));
      cur = std::move(parent);
      walk = &walk->children.back();
      if (!eps_rm && walk->children.empty() && *next == anc) break;
      continue;
    }
    if (!eps_rm)
      throw TransformError("left-corner chain at '" + walk->label +
                           "' is missing its ε terminator");
    // Last chain node: the remaining children are right siblings of the
    // recognized node and the step completes the ancestor itself.
    Tree parent(anc);
    parent.children.push_back(std::move(cur));
    for (const Tree& c : walk->children)
      parent.children.push_back(slc_undo(c, sep, eps_rm, ann));
    cur = std::move(parent);
    break;
  }
  if (cur.label != anc)
    throw TransformError("left-corner chain under '" + anc +
                         "' rebuilds label '" + cur.label + "'");
  return cur;
}

// ---------------------------------------------------------------------------
// Flattened selective left-corner for one category's left recursion.

inline Tree flc_apply(const Tree& t, const std::string& cat) {
  if (t.terminal || t.is_pos()) return t;
  SlcPredicate pred{SlcPredicate::ParentChild, cat, cat};
  std::vector<const Tree*> spine = {&t};
  while (true) {
    const Tree* m = spine.back();
    if (m->children.empty() || m->children[0].terminal) break;
    if (!pred(m->label, m->children[0].label)) break;
    spine.push_back(&m->children[0]);
  }
  if (spine.size() == 1) {
    Tree out(t.label);
    for (const Tree& c : t.children)
      out.children.push_back(flc_apply(c, cat));
    return out;
  }
  const Tree& bottom = *spine.back();
  if (!bottom.is_pos() && bottom.children.empty())
    throw TransformError(
        "flattened transform would place a slash group leftmost under '" +
        t.label + "'");
  Tree out(t.label);
  if (bottom.is_pos()) {
    out.children.push_back(bottom);
  } else {
    for (const Tree& c : bottom.children)
      out.children.push_back(flc_apply(c, cat));
  }
  // One flat group per chain step, innermost first; the ε tail is dropped.
  for (std::size_t i = spine.size() - 1; i >= 1; --i) {
    Tree group(label::slash(t.label, spine[i]->label, '/'));
    const Tree& above = *spine[i - 1];
    for (std::size_t j = 1; j < above.children.size(); ++j)
      group.children.push_back(flc_apply(above.children[j], cat));
    out.children.push_back(std::move(group));
  }
  return out;
}

inline Tree flc_undo(const Tree& t, const std::string& cat) {
  if (t.terminal || t.is_pos()) return t;
  auto is_group = [&](const Tree& n) {
    if (n.terminal) return false;
    auto ps = label::parse_slash(n.label, '/');
    return ps && ps->first == t.label && ps->second == t.label;
  };
  std::size_t run = 0;
  while (run < t.children.size() &&
         is_group(t.children[t.children.size() - 1 - run]))
    ++run;
  if (run == 0) {
    Tree out(t.label);
    for (const Tree& c : t.children)
      out.children.push_back(flc_undo(c, cat));
    return out;
  }
  std::size_t base_n = t.children.size() - run;
  if (base_n == 0)
    throw TransformError("slash group is leftmost under '" + t.label + "'");
  Tree cur(t.label);
  if (base_n == 1 && t.children[0].is_pos() &&
      t.children[0].label == t.label) {
    cur = t.children[0];
  } else {
    for (std::size_t i = 0; i < base_n; ++i)
      cur.children.push_back(flc_undo(t.children[i], cat));
  }
  for (std::size_t i = base_n; i < t.children.size(); ++i) {
    Tree parent(t.label);
    parent.children.push_back(std::move(cur));
    for (const Tree& c : t.children[i].children)
      parent.children.push_back(flc_undo(c, cat));
    cur = std::move(parent);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Annotation transforms.

inline Tree pa_apply(const Tree& t, const std::string& parent_label) {
  if (t.terminal || t.is_pos()) return t;
  Tree out(label::annotated(t.label, parent_label));
  for (const Tree& c : t.children)
    out.children.push_back(pa_apply(c, t.label));
  return out;
}

inline Tree pa_undo(const Tree& t) {
  if (t.terminal || t.is_pos()) return t;
  auto ps = label::parse_annotated(t.label);
  if (!ps)
    throw TransformError("missing parent annotation on '" + t.label + "'");
  Tree out(ps->first);
  for (const Tree& c : t.children) out.children.push_back(pa_undo(c));
  return out;
}

// Annotates leftmost non-POS children with the label of the topmost node of
// the leftmost-child chain above them; the root and non-leftmost children
// stay bare.
inline Tree lca_apply(const Tree& t, bool leftmost,
                      const std::string& chain_top) {
  if (t.terminal || t.is_pos()) return t;
  // A leftmost child continues this node's chain; any other node is the top
  // of the chains that start at its own leftmost children.
  const std::string& own_top = leftmost ? chain_top : t.label;
  Tree out(leftmost ? label::annotated(t.label, chain_top) : t.label);
  for (std::size_t i = 0; i < t.children.size(); ++i)
    out.children.push_back(lca_apply(t.children[i], i == 0, own_top));
  return out;
}

inline Tree lca_undo(const Tree& t, bool leftmost) {
  if (t.terminal || t.is_pos()) return t;
  std::string base = t.label;
  if (leftmost) {
    auto ps = label::parse_annotated(t.label);
    if (!ps)
      throw TransformError("missing left-corner annotation on '" + t.label +
                           "'");
    base = ps->first;
  }
  Tree out(base);
  for (std::size_t i = 0; i < t.children.size(); ++i)
    out.children.push_back(lca_undo(t.children[i], i == 0));
  return out;
}

// ---------------------------------------------------------------------------
// Standalone ε-removal over LC/SLC images (dash separator).

inline Tree eps_remove_apply(const Tree& t) {
  if (t.terminal) return t;
  auto my_slash = label::parse_slash(t.label, '-');
  Tree out(t.label);
  for (const Tree& c : t.children) {
    if (!c.terminal && c.children.empty() && my_slash) {
      auto cs = label::parse_slash(c.label, '-');
      if (cs && cs->first == cs->second && cs->first == my_slash->first)
        continue;  // the ε terminator of this chain
    }
    out.children.push_back(eps_remove_apply(c));
  }
  return out;
}

inline Tree eps_remove_undo(const Tree& t) {
  if (t.terminal) return t;
  Tree out(t.label);
  for (const Tree& c : t.children) out.children.push_back(eps_remove_undo(c));
  auto ps = label::parse_slash(t.label, '-');
  if (ps) {
    bool has_tail = false;
    if (!out.children.empty() && !out.children.back().terminal) {
      auto cs = label::parse_slash(out.children.back().label, '-');
      has_tail = cs && cs->first == ps->first;
    }
    if (!has_tail)
      out.children.push_back(Tree(label::slash(ps->first, ps->first, '-')));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public entry points.

inline Tree apply(const TransformSpec& spec, const Tree& t) {
  switch (spec.kind) {
    case TransformKind::LF0: return detail::lf_apply(t, 0);
    case TransformKind::LF1: return detail::lf_apply(t, 1);
    case TransformKind::LF2: return detail::lf_apply(t, 2);
    case TransformKind::RF: return detail::rf_apply(t);
    case TransformKind::LC:
      return detail::slc_apply(t, SlcPredicate{}, '-', spec.eps_remove,
                               spec.annotate_parent);
    case TransformKind::SLC:
      return detail::slc_apply(t, spec.predicate, '-', spec.eps_remove,
                               spec.annotate_parent);
    case TransformKind::FLC: return detail::flc_apply(t, spec.category);
    case TransformKind::PA: return detail::pa_apply(t, spec.top_symbol);
    case TransformKind::LCA: return detail::lca_apply(t, false, "");
    case TransformKind::EPS_REMOVE: return detail::eps_remove_apply(t);
  }
  throw TransformError("unknown transform kind");
}

inline Tree detransform(const TransformSpec& spec, const Tree& t) {
  switch (spec.kind) {
    case TransformKind::LF0: return detail::lf_undo(t, 0);
    case TransformKind::LF1: return detail::lf_undo(t, 1);
    case TransformKind::LF2: return detail::lf_undo(t, 2);
    case TransformKind::RF: return detail::rf_undo(t);
    case TransformKind::LC:
      return detail::slc_undo(t, '-', spec.eps_remove, spec.annotate_parent);
    case TransformKind::SLC:
      return detail::slc_undo(t, '-', spec.eps_remove, spec.annotate_parent);
    case TransformKind::FLC: return detail::flc_undo(t, spec.category);
    case TransformKind::PA: return detail::pa_undo(t);
    case TransformKind::LCA: return detail::lca_undo(t, false);
    case TransformKind::EPS_REMOVE: return detail::eps_remove_undo(t);
  }
  throw TransformError("unknown transform kind");
}

// Compositions apply left-to-right; detransform runs right-to-left.
inline Tree apply(const std::vector<TransformSpec>& chain, const Tree& t) {
  Tree out = t;
  for (const TransformSpec& s : chain) out = apply(s, out);
  return out;
}

inline Tree detransform(const std::vector<TransformSpec>& chain,
                        const Tree& t) {
  Tree out = t;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    out = detransform(*it, out);
  return out;
}

// ---------------------------------------------------------------------------
// Left-child chain statistics.  A word's chain is the path of ancestors for
// which it is the structurally leftmost terminal; depth counts non-POS
// categories only.

struct ChainStats {
  // depth -> count, keyed separately for sentence-initial words and others.
  std::map<std::size_t, std::size_t> depth_initial, depth_other;
  // Same, restricted to chains containing a repeated non-POS category.
  std::map<std::size_t, std::size_t> recursive_initial, recursive_other;
  // category -> number of adjacent same-category (parent, leftmost child)
  // steps across all chains.
  std::map<std::string, std::size_t> consecutive_recursion;

  std::size_t over_one(bool initial) const {
    std::size_t n = 0;
    for (const auto& [d, c] : initial ? depth_initial : depth_other)
      if (d > 1) n += c;
    return n;
  }
};

namespace detail {

// Returns the number of words under t.  `path` holds the labels of the
// nodes for which the next word would be the structurally leftmost
// terminal; `initial` tracks linear sentence position, which diverges from
// structural leftmost-ness when an ε subtree precedes the word.
inline std::size_t chain_stats_walk(const Tree& t, bool initial,
                                    ChainStats& out,
                                    std::vector<const std::string*>& path) {
  if (t.terminal) return 1;
  path.push_back(&t.label);
  std::size_t words = 0;
  if (t.is_pos()) {
    std::size_t depth = path.size() - 1;  // non-POS categories only
    bool recursive = false;
    for (std::size_t i = 0; i < depth; ++i)
      for (std::size_t j = i + 1; j < depth; ++j)
        if (*path[i] == *path[j]) recursive = true;
    for (std::size_t i = 0; i + 1 < depth; ++i)
      if (*path[i] == *path[i + 1]) ++out.consecutive_recursion[*path[i]];
    ++(initial ? out.depth_initial : out.depth_other)[depth];
    if (recursive)
      ++(initial ? out.recursive_initial : out.recursive_other)[depth];
    words = 1;
  } else {
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      if (i == 0) {
        words += chain_stats_walk(t.children[i], initial, out, path);
      } else {
        std::vector<const std::string*> fresh;
        words += chain_stats_walk(t.children[i], initial && words == 0, out,
                                  fresh);
      }
    }
  }
  path.pop_back();
  return words;
}

}  // namespace detail

inline ChainStats corpus_chain_stats(const Corpus& c) {
  ChainStats out;
  for (const Tree& t : c.trees) {
    std::vector<const std::string*> path;
    detail::chain_stats_walk(t, true, out, path);
  }
  return out;
}

}  // namespace tdp
