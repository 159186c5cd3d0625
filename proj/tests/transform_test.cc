#include "tdp/transform.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "tdp/tree.hpp"
#include "test_util.hpp"

namespace {

using tdp::Tree;
using tdp::TransformKind;
using tdp::TransformSpec;
using tdp::test::parse_one;

Tree lc_source() {
  return parse_one(
      "(S (NP (DT the) (NN man)) (VP (VBD ate) (NP (PRP$ his) (NN lunch))))");
}

Tree ternary_source() {
  return parse_one("(S (NP (DT the) (JJ fat) (NN man)) (VP (VBD slept)))");
}

// ---------------------------------------------------------------------------
// Left factorization.

TEST(LeftFactor, NullaryChainShape) {
  Tree in = parse_one("(NP (DT the) (JJ fat) (NN cat))");
  Tree expect = parse_one(
      "(NP (DT the) (NP-DT (JJ fat) (NP-DT,JJ (NN cat) (NP-DT,JJ,NN ))))");
  Tree got = tdp::apply(TransformSpec::lf0(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lf0(), got), in);
}

TEST(LeftFactor, UnaryChainShape) {
  Tree in = parse_one("(NP (DT the) (JJ fat) (NN cat))");
  Tree expect =
      parse_one("(NP (DT the) (NP-DT (JJ fat) (NP-DT,JJ (NN cat))))");
  Tree got = tdp::apply(TransformSpec::lf1(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lf1(), got), in);
}

TEST(LeftFactor, BinaryChainShape) {
  Tree in = parse_one("(NP (DT the) (JJ fat) (NN cat))");
  Tree expect = parse_one("(NP (DT the) (NP-DT (JJ fat) (NN cat)))");
  Tree got = tdp::apply(TransformSpec::lf2(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lf2(), got), in);
}

TEST(LeftFactor, UnaryFactorsBinaryRulesVacuously) {
  Tree in = parse_one("(D (B x) (C y))");
  Tree expect = parse_one("(D (B x) (D-B (C y)))");
  EXPECT_EQ(tdp::apply(TransformSpec::lf1(), in), expect);
}

TEST(LeftFactor, MissingEpsilonStopErrors) {
  Tree img = tdp::apply(TransformSpec::lf0(),
                        parse_one("(NP (DT the) (JJ fat) (NN cat))"));
  // Drop the ε stop child at the end of the chain.
  img.children[1].children[1].children.pop_back();
  try {
    tdp::detransform(TransformSpec::lf0(), img);
    FAIL() << "expected a detransform error";
  } catch (const tdp::TransformError& e) {
    EXPECT_NE(std::string(e.what()).find("NP-DT,JJ"), std::string::npos);
  }
}

TEST(LeftFactor, NonImageErrors) {
  Tree in = parse_one("(NP (DT the) (JJ fat) (NN cat))");
  EXPECT_THROW(tdp::detransform(TransformSpec::lf0(), in),
               tdp::TransformError);
  EXPECT_THROW(tdp::detransform(TransformSpec::lf1(), in),
               tdp::TransformError);
}

// ---------------------------------------------------------------------------
// Right factorization.

TEST(RightFactor, GroupShape) {
  Tree in = parse_one("(NP (DT the) (JJ fat) (NN cat))");
  Tree expect = parse_one("(NP (DT+JJ (DT the) (JJ fat)) (NN cat))");
  Tree got = tdp::apply(TransformSpec::rf(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::rf(), got), in);
}

TEST(RightFactor, NestedGroups) {
  Tree in = parse_one("(X (A a) (B b) (C c) (D d))");
  Tree expect =
      parse_one("(X (A+B+C (A+B (A a) (B b)) (C c)) (D d))");
  Tree got = tdp::apply(TransformSpec::rf(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::rf(), got), in);
}

// ---------------------------------------------------------------------------
// Left-corner transform.

TEST(LeftCorner, TransformShape) {
  Tree expect = parse_one(
      "(S (DT the) (S-DT (NN man) (S-NP"
      " (VP (VBD ate) (VP-VBD"
      " (NP (PRP$ his) (NP-PRP$ (NN lunch) (NP-NP )))"
      " (VP-VP )))"
      " (S-S ))))");
  Tree got = tdp::apply(TransformSpec::lc(), lc_source());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lc(), got), lc_source());
}

TEST(LeftCorner, EpsilonRemovedShape) {
  Tree expect = parse_one(
      "(S (DT the) (S-DT (NN man) (S-NP"
      " (VP (VBD ate) (VP-VBD"
      " (NP (PRP$ his) (NP-PRP$ (NN lunch))))))))");
  Tree got = tdp::apply(TransformSpec::lc(true), lc_source());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lc(true), got), lc_source());
}

TEST(LeftCorner, TernarySiblingsStayFlat) {
  Tree expect = parse_one(
      "(S (DT the) (S-DT (JJ fat) (NN man) (S-NP"
      " (VP (VBD slept) (VP-VBD (VP-VP )))"
      " (S-S ))))");
  Tree got = tdp::apply(TransformSpec::lc(), ternary_source());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lc(), got), ternary_source());
}

TEST(LeftCorner, ComposedWithUnaryFactorization) {
  std::vector<TransformSpec> chain = {TransformSpec::lc(),
                                      TransformSpec::lf1()};
  Tree expect = parse_one(
      "(S (DT the) (S-DT (S-DT (JJ fat) (S-DT,JJ (NN man) (S-DT,JJ,NN"
      " (S-NP (VP (VBD slept) (VP-VBD (VP-VBD (VP-VP ))))"
      " (S-NP,VP (S-S ))))))))");
  Tree got = tdp::apply(chain, ternary_source());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(chain, got), ternary_source());
}

TEST(LeftCorner, AnnotatedComposition) {
  std::vector<TransformSpec> chain = {TransformSpec::lc(false, true),
                                      TransformSpec::lf1()};
  Tree expect = parse_one(
      "(S (DT the) (S-DT (S-DT^NP (JJ fat) (S-DT^NP,JJ (NN man)"
      " (S-DT^NP,JJ,NN"
      " (S-NP (VP (VBD slept) (VP-VBD (VP-VBD^VP (VP-VP ))))"
      " (S-NP,VP (S-S ))))))))");
  Tree got = tdp::apply(chain, ternary_source());
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(chain, got), ternary_source());
}

TEST(LeftCorner, MissingTerminatorErrors) {
  Tree img = tdp::apply(TransformSpec::lc(), ternary_source());
  // Drop the (S-S ) terminator from the outer chain.
  img.children[1].children[2].children.pop_back();
  EXPECT_THROW(tdp::detransform(TransformSpec::lc(), img),
               tdp::TransformError);
}

TEST(LeftCorner, NoImmediateLeftRecursionInImage) {
  std::mt19937_64 rng(2024);
  tdp::test::RandomTreeParams params;
  std::size_t tested = 0;
  for (int i = 0; i < 400; ++i) {
    Tree t = tdp::test::random_tree(rng, params);
    if (tdp::test::has_same_label_left_child(t)) continue;
    Tree img = tdp::apply(TransformSpec::lc(), t);
    EXPECT_FALSE(tdp::test::has_same_label_left_child(img))
        << tdp::write_bracketed(img);
    ++tested;
  }
  EXPECT_GE(tested, 50u);
}

// ---------------------------------------------------------------------------
// Selective and flattened left-corner transforms.

TEST(SelectiveLeftCorner, SlashChainShape) {
  Tree in = parse_one(
      "(NP (NP (NP (NNP Jim) (POS 's)) (NN dog))"
      " (PP (IN with) (NP (NN fleas))))");
  Tree expect = parse_one(
      "(NP (NNP Jim) (POS 's) (NP/NP (NN dog)"
      " (NP/NP (PP (IN with) (NP (NN fleas))) (NP/NP ))))");
  tdp::SlcPredicate pred{tdp::SlcPredicate::ParentChild, "NP", "NP"};
  Tree got = tdp::detail::slc_apply(in, pred, '/', false, false);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detail::slc_undo(got, '/', false, false), in);
}

TEST(SelectiveLeftCorner, LeftRecursivePredicate) {
  Tree in = parse_one(
      "(S (NP (NP (DT a) (NN dog)) (PP (IN of) (NP (NN war))))"
      " (VP (VBD barked)))");
  Tree expect = parse_one(
      "(S (NP (DT a) (NN dog) (NP-NP (PP (IN of) (NP (NN war))) (NP-NP )))"
      " (VP (VBD barked)))");
  TransformSpec spec = TransformSpec::slc(
      tdp::SlcPredicate{tdp::SlcPredicate::LeftRecursive, "", ""});
  Tree got = tdp::apply(spec, in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(spec, got), in);
}

TEST(FlattenedLeftCorner, FlatGroupShape) {
  Tree in = parse_one(
      "(NP (NP (NP (NNP Jim) (POS 's)) (NN dog))"
      " (PP (IN with) (NP (NN fleas))))");
  Tree expect = parse_one(
      "(NP (NNP Jim) (POS 's) (NP/NP (NN dog))"
      " (NP/NP (PP (IN with) (NP (NN fleas)))))");
  TransformSpec spec = TransformSpec::flc("NP");
  Tree got = tdp::apply(spec, in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(spec, got), in);
}

TEST(FlattenedLeftCorner, RemovesTargetLeftRecursion) {
  std::mt19937_64 rng(7);
  tdp::test::RandomTreeParams params;
  params.epsilon_prob = 0.0;
  TransformSpec spec = TransformSpec::flc("NP");
  for (int i = 0; i < 300; ++i) {
    Tree t = tdp::test::random_tree(rng, params);
    Tree img = tdp::apply(spec, t);
    EXPECT_FALSE(tdp::test::has_left_child_labeled(img, "NP", "NP"))
        << tdp::write_bracketed(img);
    EXPECT_EQ(tdp::detransform(spec, img), t);
  }
}

TEST(FlattenedLeftCorner, EmptyLeftCornerRejected) {
  Tree in = parse_one("(NP (NP ) (PP (IN of)))");
  EXPECT_THROW(tdp::apply(TransformSpec::flc("NP"), in),
               tdp::TransformError);
}

// ---------------------------------------------------------------------------
// Annotation transforms.

TEST(ParentAnnotation, SuffixShape) {
  Tree in = parse_one("(S (NP (DT the) (NN man)) (VP (VBD slept)))");
  Tree expect =
      parse_one("(S↑TOP (NP↑S (DT the) (NN man)) (VP↑S (VBD slept)))");
  Tree got = tdp::apply(TransformSpec::pa(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::pa(), got), in);
}

TEST(ParentAnnotation, MissingAnnotationErrors) {
  Tree in = parse_one("(S (NP (DT the) (NN man)) (VP (VBD slept)))");
  EXPECT_THROW(tdp::detransform(TransformSpec::pa(), in),
               tdp::TransformError);
}

TEST(LeftCornerAncestorAnnotation, LeftmostChainTops) {
  Tree in = parse_one(
      "(S (NP (NP (DT the) (NN dog)) (PP (IN of) (NP (NN war))))"
      " (VP (VBD barked)))");
  // Both NPs on the leftmost chain are annotated with the chain top S; the
  // NP under PP is not leftmost and the root stays bare.
  Tree expect = parse_one(
      "(S (NP↑S (NP↑S (DT the) (NN dog)) (PP (IN of) (NP (NN war))))"
      " (VP (VBD barked)))");
  Tree got = tdp::apply(TransformSpec::lca(), in);
  EXPECT_EQ(got, expect);
  EXPECT_EQ(tdp::detransform(TransformSpec::lca(), got), in);
}

// ---------------------------------------------------------------------------
// ε-removal as a standalone pass.

TEST(EpsilonRemoval, MatchesEagerMode) {
  std::mt19937_64 rng(11);
  tdp::test::RandomTreeParams params;
  for (int i = 0; i < 200; ++i) {
    Tree t = tdp::test::random_tree(rng, params);
    Tree img = tdp::apply(TransformSpec::lc(), t);
    Tree removed = tdp::apply(TransformSpec::eps_removal(), img);
    EXPECT_EQ(removed, tdp::apply(TransformSpec::lc(true), t));
    EXPECT_EQ(tdp::detransform(TransformSpec::eps_removal(), removed), img);
  }
}

// ---------------------------------------------------------------------------
// Randomized round trips and structural invariants.

TEST(RoundTrip, RandomizedAllKinds) {
  std::vector<std::pair<std::string, std::vector<TransformSpec>>> cases = {
      {"lf0", {TransformSpec::lf0()}},
      {"lf1", {TransformSpec::lf1()}},
      {"lf2", {TransformSpec::lf2()}},
      {"rf", {TransformSpec::rf()}},
      {"lc", {TransformSpec::lc()}},
      {"lc-eps", {TransformSpec::lc(true)}},
      {"lc-ann", {TransformSpec::lc(false, true)}},
      {"slc-leftrec",
       {TransformSpec::slc(
           tdp::SlcPredicate{tdp::SlcPredicate::LeftRecursive, "", ""})}},
      {"pa", {TransformSpec::pa()}},
      {"lca", {TransformSpec::lca()}},
      {"lc+lf1", {TransformSpec::lc(), TransformSpec::lf1()}},
      {"pa+lf0", {TransformSpec::pa(), TransformSpec::lf0()}},
      {"slc+lf0",
       {TransformSpec::slc(
            tdp::SlcPredicate{tdp::SlcPredicate::LeftRecursive, "", ""}),
        TransformSpec::lf0()}},
  };
  for (const auto& [name, chain] : cases) {
    std::mt19937_64 rng(99);
    tdp::test::RandomTreeParams params;
    params.epsilon_prob = 0.03;
    for (int i = 0; i < 300; ++i) {
      Tree t = tdp::test::random_tree(rng, params);
      Tree img = tdp::apply(chain, t);
      EXPECT_EQ(tdp::detransform(chain, img), t)
          << name << " on " << tdp::write_bracketed(t);
      // Terminal order is invariant under every transform.
      EXPECT_EQ(img.yield(), t.yield()) << name;
    }
  }
}

TEST(RoundTrip, SerializedImagesSurviveReload) {
  std::mt19937_64 rng(5);
  tdp::test::RandomTreeParams params;
  params.epsilon_prob = 0.05;
  for (int i = 0; i < 100; ++i) {
    Tree t = tdp::test::random_tree(rng, params);
    Tree img = tdp::apply(TransformSpec::lc(), t);
    auto reparsed = tdp::parse_bracketed(tdp::write_bracketed(img));
    ASSERT_EQ(reparsed.size(), 1u);
    EXPECT_EQ(reparsed[0], img);
    EXPECT_EQ(tdp::detransform(TransformSpec::lc(), reparsed[0]), t);
  }
}

TEST(Composition, AppliesLeftToRight) {
  Tree t = ternary_source();
  std::vector<TransformSpec> chain = {TransformSpec::lc(),
                                      TransformSpec::lf1()};
  EXPECT_EQ(tdp::apply(chain, t),
            tdp::apply(TransformSpec::lf1(),
                       tdp::apply(TransformSpec::lc(), t)));
}

// ---------------------------------------------------------------------------
// Left-child chain statistics.

TEST(ChainStats, HandCounts) {
  tdp::Corpus c = tdp::Corpus::from_trees({parse_one(
      "(S (NP (DT the) (NN cop)) (VP (VBD saw)"
      " (NP (NP (DT a) (NN thief))"
      " (PP (IN with) (NP (DT a) (NN wire))))))")});
  tdp::ChainStats st = tdp::corpus_chain_stats(c);
  EXPECT_EQ(st.depth_initial, (std::map<std::size_t, std::size_t>{{2, 1}}));
  EXPECT_EQ(st.depth_other,
            (std::map<std::size_t, std::size_t>{{0, 3}, {1, 3}, {2, 1}}));
  EXPECT_TRUE(st.recursive_initial.empty());
  EXPECT_EQ(st.recursive_other,
            (std::map<std::size_t, std::size_t>{{2, 1}}));
  EXPECT_EQ(st.consecutive_recursion,
            (std::map<std::string, std::size_t>{{"NP", 1}}));
  EXPECT_EQ(st.over_one(true), 1u);
  EXPECT_EQ(st.over_one(false), 1u);
}

TEST(ChainStats, LinearPositionTracksEpsilon) {
  tdp::Corpus c =
      tdp::Corpus::from_trees({parse_one("(S (NP ) (VP (VBD ran)))")});
  tdp::ChainStats st = tdp::corpus_chain_stats(c);
  // "ran" is sentence-initial linearly though not structurally leftmost.
  EXPECT_EQ(st.depth_initial, (std::map<std::size_t, std::size_t>{{1, 1}}));
  EXPECT_TRUE(st.depth_other.empty());
}

}  // namespace
