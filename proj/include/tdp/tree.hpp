#pragma once

// Ordered labeled trees with a structural POS/terminal distinction, bracketed
// text I/O, and corpus-level utilities (tag normalization, punctuation
// stripping, deterministic partitioning).
//
// Conventions:
//   - A terminal is a leaf with terminal == true; its label is the word.
//   - A POS node (preterminal) has exactly one child and that child is a
//     terminal.  The test is structural, never a label list.
//   - An empty node (epsilon) is a nonterminal leaf: zero children,
//     terminal == false.  It serializes as "(LABEL )".

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tdp {

struct Tree {
  std::string label;
  std::vector<Tree> children;
  bool terminal = false;
  // Head child designation; assigned by head finding, ignored by equality
  // and serialization.
  std::optional<std::size_t> head_child;

  Tree() = default;
  explicit Tree(std::string lab) : label(std::move(lab)) {}
  Tree(std::string lab, std::vector<Tree> kids)
      : label(std::move(lab)), children(std::move(kids)) {}

  static Tree word(std::string w) {
    Tree t(std::move(w));
    t.terminal = true;
    return t;
  }

  bool is_terminal() const { return terminal; }
  bool is_pos() const {
    return !terminal && children.size() == 1 && children[0].terminal;
  }
  bool is_empty() const { return !terminal && children.empty(); }

  void yield_into(std::vector<std::string>& out) const {
    if (terminal) {
      out.push_back(label);
      return;
    }
    for (const Tree& c : children) c.yield_into(out);
  }
  std::vector<std::string> yield() const {
    std::vector<std::string> out;
    yield_into(out);
    return out;
  }

  std::size_t yield_size() const {
    if (terminal) return 1;
    std::size_t n = 0;
    for (const Tree& c : children) n += c.yield_size();
    return n;
  }

  std::size_t node_count() const {
    std::size_t n = 1;
    for (const Tree& c : children) n += c.node_count();
    return n;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const Tree& c : children) d = std::max(d, c.depth());
    return d + 1;
  }

  friend bool operator==(const Tree& a, const Tree& b) {
    return a.terminal == b.terminal && a.label == b.label &&
           a.children == b.children;
  }
  friend bool operator!=(const Tree& a, const Tree& b) { return !(a == b); }
};

// ---------------------------------------------------------------------------
// Bracketed I/O.

namespace detail {

inline bool needs_escape(char c) {
  return c == '(' || c == ')' || c == '\\' || c == ' ' || c == '\t' ||
         c == '\n' || c == '\r';
}

inline void write_token(std::string& out, const std::string& tok) {
  for (char c : tok) {
    if (needs_escape(c)) out.push_back('\\');
    out.push_back(c);
  }
}

}  // namespace detail

inline void write_bracketed_into(const Tree& t, std::string& out) {
  if (t.terminal) {
    detail::write_token(out, t.label);
    return;
  }
  out.push_back('(');
  detail::write_token(out, t.label);
  if (t.children.empty()) {
    // Epsilon: keep a space so "(X )" is distinct from a terminal token.
    out.push_back(' ');
  } else {
    for (const Tree& c : t.children) {
      out.push_back(' ');
      write_bracketed_into(c, out);
    }
  }
  out.push_back(')');
}

inline std::string write_bracketed(const Tree& t) {
  std::string out;
  write_bracketed_into(t, out);
  return out;
}

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(std::size_t off, const std::string& msg)
      : std::runtime_error("byte " + std::to_string(off) + ": " + msg),
        offset(off) {}
};

struct ParseOptions {
  // Reject nodes that mix a terminal child with subtree children.  Source
  // treebanks never mix them; transformed trees (left-corner images hoist
  // words under phrasal nodes) require the permissive mode.
  bool strict = true;
  // Delete empty-element subtrees (label below) and any ancestor left
  // childless by the deletion.
  bool delete_none = true;
  std::string none_label = "-NONE-";
};

namespace detail {

struct Lexer {
  const std::string& s;
  std::size_t pos = 0;

  explicit Lexer(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t' ||
                              s[pos] == '\n' || s[pos] == '\r'))
      ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return s[pos];
  }
  std::string token() {
    skip_ws();
    std::string tok;
    while (pos < s.size()) {
      char c = s[pos];
      if (c == '\\' && pos + 1 < s.size()) {
        tok.push_back(s[pos + 1]);
        pos += 2;
        continue;
      }
      if (c == '(' || c == ')' || c == ' ' || c == '\t' || c == '\n' ||
          c == '\r')
        break;
      tok.push_back(c);
      ++pos;
    }
    return tok;
  }
};

inline Tree parse_node(Lexer& lx, const ParseOptions& opt);

inline Tree parse_item(Lexer& lx, const ParseOptions& opt) {
  if (lx.peek() == '(') return parse_node(lx, opt);
  std::size_t at = lx.pos;
  std::string tok = lx.token();
  if (tok.empty()) throw ParseError(at, "expected token or '('");
  return Tree::word(std::move(tok));
}

inline Tree parse_node(Lexer& lx, const ParseOptions& opt) {
  std::size_t open_at = lx.pos;
  if (lx.eof() || lx.peek() != '(') throw ParseError(lx.pos, "expected '('");
  ++lx.pos;
  Tree node;
  lx.skip_ws();
  if (lx.pos < lx.s.size() && lx.s[lx.pos] != '(' && lx.s[lx.pos] != ')')
    node.label = lx.token();
  bool saw_terminal = false, saw_subtree = false;
  while (true) {
    if (lx.eof()) throw ParseError(open_at, "unbalanced '('");
    if (lx.peek() == ')') {
      ++lx.pos;
      break;
    }
    Tree child = parse_item(lx, opt);
    (child.terminal ? saw_terminal : saw_subtree) = true;
    node.children.push_back(std::move(child));
  }
  if (opt.strict && saw_terminal && saw_subtree)
    throw ParseError(open_at, "terminal mixed with subtrees under '" +
                                  node.label + "'");
  if (opt.strict && saw_terminal && node.children.size() > 1)
    throw ParseError(open_at,
                     "multiple terminals under '" + node.label + "'");
  return node;
}

// Returns false when the whole tree was deleted.
inline bool delete_none_nodes(Tree& t, const std::string& none_label) {
  if (t.terminal) return true;
  if (t.label == none_label) return false;
  std::vector<Tree> kept;
  kept.reserve(t.children.size());
  bool had_children = !t.children.empty();
  for (Tree& c : t.children)
    if (delete_none_nodes(c, none_label)) kept.push_back(std::move(c));
  t.children = std::move(kept);
  return !(had_children && t.children.empty());
}

}  // namespace detail

inline std::vector<Tree> parse_bracketed(const std::string& text,
                                         const ParseOptions& opt = {}) {
  detail::Lexer lx(text);
  std::vector<Tree> trees;
  while (!lx.eof()) {
    if (lx.peek() != '(')
      throw ParseError(lx.pos, "expected '(' at top level");
    Tree t = detail::parse_node(lx, opt);
    // A top-level wrapper "( (S ...) )" with no label is stripped.
    if (t.label.empty()) {
      if (t.children.size() != 1 || t.children[0].terminal)
        throw ParseError(lx.pos, "unlabeled wrapper must hold one tree");
      t = std::move(t.children[0]);
    }
    if (opt.delete_none) {
      if (!detail::delete_none_nodes(t, opt.none_label)) continue;
    }
    trees.push_back(std::move(t));
  }
  return trees;
}

// ---------------------------------------------------------------------------
// Corpus.

struct Corpus {
  std::vector<Tree> trees;
  std::map<std::string, std::size_t> vocabulary;  // terminal -> count
  std::set<std::string> nonterminals;

  static Corpus from_trees(std::vector<Tree> ts) {
    Corpus c;
    c.trees = std::move(ts);
    c.reindex();
    return c;
  }

  void reindex() {
    vocabulary.clear();
    nonterminals.clear();
    for (const Tree& t : trees) scan(t);
  }

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& [w, c] : vocabulary) n += c;
    return n;
  }

 private:
  void scan(const Tree& t) {
    if (t.terminal) {
      ++vocabulary[t.label];
      return;
    }
    nonterminals.insert(t.label);
    for (const Tree& c : t.children) scan(c);
  }
};

inline Corpus load_corpus(const std::string& path,
                          const ParseOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return Corpus::from_trees(parse_bracketed(ss.str(), opt));
}

inline void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const Tree& t : c.trees) out << write_bracketed(t) << "\n";
}

// ---------------------------------------------------------------------------
// Normalization and punctuation.

// Truncates a functional-tagged label at the first '-' or '=' ("NP-SBJ-1"
// -> "NP").  Labels that begin with '-' (e.g. "-NONE-", "-LRB-") are kept.
inline std::string base_label(const std::string& label) {
  if (label.empty() || label[0] == '-') return label;
  std::size_t cut = label.find_first_of("-=");
  return cut == std::string::npos ? label : label.substr(0, cut);
}

inline void normalize_tags(Tree& t) {
  if (!t.terminal) t.label = base_label(t.label);
  for (Tree& c : t.children) normalize_tags(c);
}

inline void normalize_tags(Corpus& c) {
  for (Tree& t : c.trees) normalize_tags(t);
  c.reindex();
}

inline const std::set<std::string>& default_punctuation() {
  static const std::set<std::string> s = {",",  ".",     ":",    "``",
                                          "''", "-LRB-", "-RRB-"};
  return s;
}

namespace detail {

inline bool strip_punct_node(Tree& t, const std::set<std::string>& punct) {
  if (t.terminal) return true;
  if (t.is_pos() && punct.count(t.label)) return false;
  std::vector<Tree> kept;
  kept.reserve(t.children.size());
  bool had_children = !t.children.empty();
  for (Tree& c : t.children)
    if (strip_punct_node(c, punct)) kept.push_back(std::move(c));
  t.children = std::move(kept);
  return !(had_children && t.children.empty());
}

}  // namespace detail

struct StripResult {
  Corpus corpus;
  std::size_t dropped_trees = 0;
};

inline StripResult strip_punctuation(
    const Corpus& in, const std::set<std::string>& punct = default_punctuation()) {
  StripResult r;
  for (const Tree& t : in.trees) {
    Tree copy = t;
    if (detail::strip_punct_node(copy, punct))
      r.corpus.trees.push_back(std::move(copy));
    else
      ++r.dropped_trees;
  }
  r.corpus.reindex();
  return r;
}

// ---------------------------------------------------------------------------
// Partitioning.

struct Partition {
  Corpus train, heldout, test;
};

// Ratio partition "a/b/c" over tree counts, in corpus order unless a seed is
// given (Fisher-Yates with a fixed engine, reproducible across runs).
inline Partition partition(const Corpus& c, std::size_t a, std::size_t b,
                           std::size_t d,
                           std::optional<std::uint64_t> seed = std::nullopt) {
  std::size_t total = a + b + d;
  if (total == 0) throw std::runtime_error("partition: zero ratio");
  std::vector<std::size_t> order(c.trees.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (seed) {
    std::mt19937_64 rng(*seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  std::size_t n = c.trees.size();
  std::size_t n_train = n * a / total;
  std::size_t n_held = n * b / total;
  Partition p;
  for (std::size_t i = 0; i < n; ++i) {
    const Tree& t = c.trees[order[i]];
    if (i < n_train)
      p.train.trees.push_back(t);
    else if (i < n_train + n_held)
      p.heldout.trees.push_back(t);
    else
      p.test.trees.push_back(t);
  }
  p.train.reindex();
  p.heldout.reindex();
  p.test.reindex();
  return p;
}

}  // namespace tdp
