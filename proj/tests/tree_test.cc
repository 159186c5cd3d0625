#include "tdp/tree.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace tdp;
using tdp::test::parse_one;

TEST(ParseBracketed, SimpleTree) {
  Tree t = parse_one("(S (NP (DT the) (NN moon)) (VP (V is)))");
  EXPECT_EQ(t.label, "S");
  ASSERT_EQ(t.children.size(), 2u);
  std::vector<std::string> y = {"the", "moon", "is"};
  EXPECT_EQ(t.yield(), y);
  EXPECT_TRUE(t.children[0].children[0].is_pos());
  EXPECT_FALSE(t.children[0].is_pos());
}

TEST(ParseBracketed, WrapperStripped) {
  Tree a = parse_one("( (S (NP (DT the) (NN cop))))");
  Tree b = parse_one("(S (NP (DT the) (NN cop)))");
  EXPECT_EQ(a, b);
}

TEST(ParseBracketed, MixedTerminalAndSubtreeIsStrictError) {
  EXPECT_THROW(parse_one("(NP (DT the (NN x)))"), ParseError);
  // Permissive mode admits the left-corner image shape.
  Tree t = parse_one("(S the (S-DT (NN man)))", /*strict=*/false);
  ASSERT_EQ(t.children.size(), 2u);
  EXPECT_TRUE(t.children[0].terminal);
}

TEST(ParseBracketed, UnbalancedReportsOffset) {
  try {
    parse_bracketed("(S (NP (DT the)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
    EXPECT_EQ(e.offset, 3u);
  }
}

TEST(ParseBracketed, WhitespaceInsensitive) {
  Tree a = parse_one("(S(NP(DT the)(NN moon))(VP(V is)))");
  Tree b = parse_one("(S\n  (NP (DT the)\n      (NN moon))\n  (VP (V is)))");
  EXPECT_EQ(a, b);
}

TEST(WriteBracketed, RoundTripFixture) {
  std::string src = "(S (NP (DT the) (NN moon)) (VP (V is)))";
  Tree t = parse_one(src);
  EXPECT_EQ(write_bracketed(t), src);
  EXPECT_EQ(parse_one(write_bracketed(t)), t);
}

TEST(WriteBracketed, EpsilonNode) {
  Tree eps("NP-DT,JJ,NN");
  EXPECT_EQ(write_bracketed(eps), "(NP-DT,JJ,NN )");
  EXPECT_EQ(parse_one("(NP-DT,JJ,NN )"), eps);
  EXPECT_TRUE(eps.is_empty());
}

TEST(WriteBracketed, SingleToken) {
  Tree t = parse_one("(NN dog)");
  EXPECT_EQ(write_bracketed(t), "(NN dog)");
}

TEST(WriteBracketed, EscapedCharactersRoundTrip) {
  Tree pos("A(B C");
  pos.children.push_back(Tree::word("wo rd)"));
  Tree root("R\\S", {pos});
  Tree back = parse_one(write_bracketed(root));
  EXPECT_EQ(back, root);
}

TEST(WriteBracketed, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  tdp::test::RandomTreeParams p;
  p.epsilon_prob = 0.05;
  for (int i = 0; i < 200; ++i) {
    Tree t = tdp::test::random_tree(rng, p);
    EXPECT_EQ(parse_one(write_bracketed(t)), t);
  }
}

TEST(Normalize, BaseLabels) {
  EXPECT_EQ(base_label("NP-SBJ"), "NP");
  EXPECT_EQ(base_label("NP-SBJ-1"), "NP");
  EXPECT_EQ(base_label("NP=2"), "NP");
  EXPECT_EQ(base_label("-NONE-"), "-NONE-");
  EXPECT_EQ(base_label("-LRB-"), "-LRB-");
  EXPECT_EQ(base_label("NP"), "NP");
}

TEST(Normalize, TreePass) {
  Tree t = parse_one("(S (NP-SBJ (DT the) (NN cop)) (VP-1 (VBD ran)))");
  normalize_tags(t);
  EXPECT_EQ(t.children[0].label, "NP");
  EXPECT_EQ(t.children[1].label, "VP");
  // Terminals are untouched even if dash-bearing.
  Tree w = parse_one("(NN co-op)");
  normalize_tags(w);
  EXPECT_EQ(w.children[0].label, "co-op");
}

TEST(ParseBracketed, NoneSubtreesDeletedAtLoad) {
  ParseOptions opt;
  auto trees = parse_bracketed(
      "(S (NP-SBJ (-NONE- *T*-1)) (VP (VBD ran)))", opt);
  ASSERT_EQ(trees.size(), 1u);
  // NP-SBJ lost its only child and is deleted with it.
  ASSERT_EQ(trees[0].children.size(), 1u);
  EXPECT_EQ(trees[0].children[0].label, "VP");
}

TEST(Corpus, VocabularyCounts) {
  Corpus c = Corpus::from_trees(parse_bracketed(
      "(S (NP (DT the) (NN moon)) (VP (V is) (NP (DT the) (NN sun))))"));
  EXPECT_EQ(c.vocabulary.at("the"), 2u);
  EXPECT_EQ(c.vocabulary.at("moon"), 1u);
  EXPECT_EQ(c.token_count(), 5u);
  EXPECT_TRUE(c.nonterminals.count("NP"));
  EXPECT_FALSE(c.nonterminals.count("the"));
}

TEST(StripPunctuation, SingleDeletion) {
  Corpus c = Corpus::from_trees(parse_bracketed(
      "(NP (NP (DT a) (NN thief)) (, ,) (PP (IN with) (NP (DT a) (NN "
      "gun))))"));
  StripResult r = strip_punctuation(c);
  ASSERT_EQ(r.corpus.trees.size(), 1u);
  EXPECT_EQ(r.corpus.trees[0].children.size(), 2u);
  EXPECT_EQ(r.dropped_trees, 0u);
  // No punctuation tokens remain anywhere in the vocabulary.
  EXPECT_EQ(r.corpus.vocabulary.count(","), 0u);
}

TEST(StripPunctuation, AllPunctTreeDropped) {
  Corpus c = Corpus::from_trees(parse_bracketed("(S (. .))"));
  StripResult r = strip_punctuation(c);
  EXPECT_EQ(r.corpus.trees.size(), 0u);
  EXPECT_EQ(r.dropped_trees, 1u);
}

TEST(StripPunctuation, TerminalOrderPreserved) {
  Corpus c = Corpus::from_trees(parse_bracketed(
      "(S (NP (DT the) (NN cop)) (, ,) (VP (VBD ran)) (. .))"));
  StripResult r = strip_punctuation(c);
  std::vector<std::string> y = {"the", "cop", "ran"};
  EXPECT_EQ(r.corpus.trees[0].yield(), y);
}

TEST(PartitionOp, RatioSizes) {
  std::vector<Tree> ts;
  for (int i = 0; i < 10; ++i) {
    Tree pos("NN");
    pos.children.push_back(Tree::word("w" + std::to_string(i)));
    ts.push_back(Tree("S", {pos}));
  }
  Corpus c = Corpus::from_trees(ts);
  Partition p = partition(c, 8, 1, 1);
  EXPECT_EQ(p.train.trees.size(), 8u);
  EXPECT_EQ(p.heldout.trees.size(), 1u);
  EXPECT_EQ(p.test.trees.size(), 1u);
  // Unseeded split preserves corpus order.
  EXPECT_EQ(p.train.trees[0], ts[0]);
}

TEST(PartitionOp, SeededSplitReproducible) {
  std::vector<Tree> ts;
  for (int i = 0; i < 20; ++i) {
    Tree pos("NN");
    pos.children.push_back(Tree::word("w" + std::to_string(i)));
    ts.push_back(Tree("S", {pos}));
  }
  Corpus c = Corpus::from_trees(ts);
  Partition a = partition(c, 8, 1, 1, 42);
  Partition b = partition(c, 8, 1, 1, 42);
  EXPECT_EQ(a.train.trees, b.train.trees);
  EXPECT_EQ(a.test.trees, b.test.trees);
  Partition d = partition(c, 8, 1, 1, 43);
  EXPECT_NE(a.train.trees, d.train.trees);
}

TEST(TreeType, StructuralPredicates) {
  Tree t = parse_one("(S (NP (DT the) (NN moon)) (X ))");
  EXPECT_FALSE(t.is_pos());
  EXPECT_TRUE(t.children[0].children[0].is_pos());
  EXPECT_TRUE(t.children[1].is_empty());
  EXPECT_EQ(t.yield_size(), 2u);
  EXPECT_EQ(t.depth(), 4u);
}
