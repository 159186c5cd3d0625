#pragma once
// Look-ahead probability: an estimate of the chance that the categories
// still open in a candidate analysis derive a string beginning with the
// next input word.
//
// Each open level is summarized by a state: the category's label plus up to
// prev_depth already-placed children, closest first.  Per state the model
// holds a stop probability (the level derives nothing further) and, given
// continuation, a next-word distribution mixed from a direct word table and
// a next-POS table composed with a word-given-POS table.  Mass balances by
// construction: stop mass plus next-word mass over the whole vocabulary is
// one, so look-ahead values never exceed one.
//
// The end-of-string marker is generated only by running out of open levels;
// no table row ever contains it.

#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdp/interp.hpp"
#include "tdp/markov.hpp"
#include "tdp/tree.hpp"

namespace tdp {

inline const std::string kLapStop = "<eps>";
inline const std::string kLapCont = "<more>";

struct LapOptions {
  // Previously placed children distinguishing states of one category.
  int prev_depth = 0;
  double unk_max_count = 1;  // <= 0 disables the UNK mapping
  // Remove punctuation parts of speech from yields, so a state's look-ahead
  // skips over punctuation as if the nodes were empty.
  bool strip_punctuation = false;
  std::set<std::string> punctuation = default_punctuation();
  std::string start = "S†";
  std::string end_marker = "</s>";
  Bucketing bucketing = Bucketing::RawFrequency;
};

struct LapModel {
  LapOptions opt;
  InterpolatedModel stop;  // <eps> / <more> per state
  InterpolatedModel word;  // next word given continuation
  InterpolatedModel pos;   // next part of speech given continuation
  InterpolatedModel lex;   // word given its part of speech
  // Weight of the direct word table against the POS-composed path, bucketed
  // by the frequency of the state's category.
  InterpolationTable mix;
  std::map<std::string, double> vocab;

  const std::string& map_word(const std::string& w) const {
    if (opt.unk_max_count <= 0) return w;
    const auto it = vocab.find(w);
    return it != vocab.end() && it->second > opt.unk_max_count ? w
                                                               : kUnkToken;
  }

  double mix_lambda(const std::optional<std::string>& label) const {
    if (!label) return 0.0;
    const auto* s = stop.stats(1, CtxTuple{*label});
    return mix.get(0, s ? s->total : 0.0);
  }

  double stop_prob(const CtxTuple& state) const {
    return stop.prob(state, kLapStop);
  }

  // P(next word = w | the state continues).
  double next_word_given_continue(const CtxTuple& state,
                                  const std::string& w) const {
    const std::string& mw = map_word(w);
    const double lam = mix_lambda(state.empty() ? std::nullopt : state[0]);
    const double direct = lam > 0 ? word.prob(state, mw) : 0.0;
    double composed = 0;
    if (lam < 1) {
      for (const auto& [tag, c] : pos.alphabet())
        composed += pos.prob(state, tag) * lex.prob(CtxTuple{tag}, mw);
    }
    return lam * direct + (1 - lam) * composed;
  }

  double next_tag_given_continue(const CtxTuple& state,
                                 const std::string& tag) const {
    return pos.prob(state, tag);
  }
};

// One open level of a candidate analysis, innermost first in a spine.  A
// literal level is a terminal still to be matched; it never derives
// epsilon, so levels beneath it contribute nothing.
struct LapFrame {
  std::optional<std::string> literal;
  CtxTuple state;
};

// Look-ahead probability of the open levels deriving a string that starts
// with `next`.  With tag_mode the input is a part-of-speech sequence and
// only the POS table is consulted.  The end marker is reachable exactly
// when every level stops, so a fully closed spine gives 1 for it.
inline double lap_over(const LapModel& m, const std::vector<LapFrame>& frames,
                       const std::string& next, bool tag_mode = false) {
  const bool at_end = next == m.opt.end_marker;
  double acc = 0;
  double pass = 1;  // probability that every level so far derives epsilon
  for (const LapFrame& f : frames) {
    if (f.literal) {
      if (!at_end && *f.literal == next) acc += pass;
      pass = 0;
      break;
    }
    const double e = m.stop_prob(f.state);
    if (!at_end && e < 1) {
      const double cont = tag_mode
                              ? m.next_tag_given_continue(f.state, next)
                              : m.next_word_given_continue(f.state, next);
      acc += pass * (1 - e) * cont;
    }
    pass *= e;
    if (pass <= 0) break;
  }
  return at_end ? acc + pass : acc;
}

namespace detail {

// First word generated by the subtree, with its part of speech.  Empty
// nodes, and punctuation when stripping, yield nothing.
inline std::optional<std::pair<std::string, std::string>> lap_left_corner(
    const Tree& t, const LapOptions& opt) {
  if (t.is_pos()) {
    if (opt.strip_punctuation && opt.punctuation.count(t.label))
      return std::nullopt;
    return std::make_pair(t.children[0].label, t.label);
  }
  if (t.terminal) return std::make_pair(t.label, t.label);
  for (const Tree& c : t.children)
    if (auto lc = lap_left_corner(c, opt)) return lc;
  return std::nullopt;
}

// Emits one row per state of every constituent: the state tuple, the next
// word and POS when the state continues (nullopt when it stops), and
// whether this row is a POS node's own, which is where word-given-POS
// counts come from.
template <class Fn>
void lap_walk_node(const Tree& t, const LapOptions& opt, Fn& fn) {
  if (t.terminal) return;
  const std::size_t width = 1 + static_cast<std::size_t>(opt.prev_depth);
  if (t.is_pos()) {
    CtxTuple state(width);
    state[0] = t.label;
    fn(state, lap_left_corner(t, opt), true);
    return;
  }
  const std::size_t k = t.children.size();
  for (std::size_t j = 0; j <= k; ++j) {
    CtxTuple state(width);
    state[0] = t.label;
    for (std::size_t d = 0; d + 1 < width && d < j; ++d)
      state[1 + d] = t.children[j - 1 - d].label;
    std::optional<std::pair<std::string, std::string>> lc;
    for (std::size_t c = j; c < k && !lc; ++c)
      lc = lap_left_corner(t.children[c], opt);
    fn(state, lc, false);
  }
  for (const Tree& c : t.children) lap_walk_node(c, opt, fn);
}

template <class Fn>
void lap_walk(const Tree& t, const LapOptions& opt, Fn fn) {
  Tree wrapped(opt.start, {t});
  lap_walk_node(wrapped, opt, fn);
}

}  // namespace detail

struct LapTrainReport {
  LambdaReport stop, word, pos, lex;
  // Word-against-POS mixture estimation.
  int mix_iterations = 0;
  double mix_log_likelihood = 0;
  std::vector<std::string> mix_warnings;
  bool lambdas_estimated = false;
};

namespace detail {

// Two-component EM for the word-versus-POS mixture, one weight per
// category-frequency bucket.  Buckets never exercised keep the default.
inline void estimate_mix(LapModel& m, const std::vector<Tree>& heldout,
                         LapTrainReport& report) {
  struct Ev {
    std::size_t bucket;
    double direct;
    double composed;
  };
  std::vector<Ev> evs;
  for (const Tree& t : heldout) {
    lap_walk(t, m.opt, [&](const CtxTuple& state,
                           const std::optional<std::pair<std::string,
                                                         std::string>>& lc,
                           bool) {
      if (!lc || !state[0]) return;
      const auto* s = m.stop.stats(1, CtxTuple{*state[0]});
      const std::size_t b = m.mix.bucket_of(s ? s->total : 0.0);
      if (b == 0) return;  // unexercised weight is pinned to zero
      const std::string& mw = m.map_word(lc->first);
      Ev ev{b, m.word.prob(state, mw), 0.0};
      for (const auto& [tag, c] : m.pos.alphabet())
        ev.composed += m.pos.prob(state, tag) * m.lex.prob(CtxTuple{tag}, mw);
      if (ev.direct > 0 || ev.composed > 0) evs.push_back(ev);
    });
  }
  std::vector<double> lam(m.mix.bucket_count(), 0.5);
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<bool> touched(m.mix.bucket_count(), false);
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<double> resp(lam.size(), 0.0), tot(lam.size(), 0.0);
    double ll = 0;
    for (const Ev& ev : evs) {
      const double pw = lam[ev.bucket] * ev.direct;
      const double pt = (1 - lam[ev.bucket]) * ev.composed;
      if (pw + pt <= 0) continue;
      ll += std::log(pw + pt);
      resp[ev.bucket] += pw / (pw + pt);
      tot[ev.bucket] += 1;
    }
    for (std::size_t b = 0; b < lam.size(); ++b)
      if (tot[b] > 0) {
        lam[b] = resp[b] / tot[b];
        touched[b] = true;
      }
    report.mix_iterations = iter + 1;
    report.mix_log_likelihood = ll;
    if (ll - prev_ll < 1e-6 && iter > 0) break;
    prev_ll = ll;
  }
  for (std::size_t b = 1; b < touched.size(); ++b)
    if (!touched[b])
      report.mix_warnings.push_back("mixture bucket " + std::to_string(b) +
                                    " saw no events; weight kept at 0.5");
  m.mix.lambda.assign(1, lam);
}

}  // namespace detail

inline LapModel train_lap(const std::vector<std::pair<Tree, double>>& train,
                          const std::vector<Tree>* heldout,
                          LapOptions opt = {},
                          LapTrainReport* report = nullptr) {
  if (train.empty()) throw std::invalid_argument("empty training corpus");
  LapModel m;
  m.opt = std::move(opt);
  const std::size_t arity = 1 + static_cast<std::size_t>(m.opt.prev_depth);
  m.stop = InterpolatedModel(arity);
  m.word = InterpolatedModel(arity);
  m.pos = InterpolatedModel(arity);
  m.lex = InterpolatedModel(1);
  m.stop.table.bucketing = m.opt.bucketing;
  m.word.table.bucketing = m.opt.bucketing;
  m.pos.table.bucketing = m.opt.bucketing;
  m.lex.table.bucketing = m.opt.bucketing;

  for (const auto& [t, w] : train)
    if (w > 0) detail::count_words(t, w, m.vocab);

  for (const auto& [t, w] : train) {
    if (w <= 0) continue;
    detail::lap_walk(
        t, m.opt,
        [&](const CtxTuple& state,
            const std::optional<std::pair<std::string, std::string>>& lc,
            bool pos_row) {
          if (!lc) {
            m.stop.add(state, kLapStop, w);
            return;
          }
          const std::string& mw = m.map_word(lc->first);
          m.stop.add(state, kLapCont, w);
          m.word.add(state, mw, w);
          m.pos.add(state, lc->second, w);
          if (pos_row) m.lex.add(CtxTuple{lc->second}, mw, w);
        });
  }

  if (heldout && !heldout->empty()) {
    std::vector<InterpEvent> se, we, pe, le;
    for (const Tree& t : *heldout) {
      detail::lap_walk(
          t, m.opt,
          [&](const CtxTuple& state,
              const std::optional<std::pair<std::string, std::string>>& lc,
              bool pos_row) {
            if (!lc) {
              se.push_back({state, kLapStop, 1});
              return;
            }
            const std::string& mw = m.map_word(lc->first);
            se.push_back({state, kLapCont, 1});
            we.push_back({state, mw, 1});
            pe.push_back({state, lc->second, 1});
            if (pos_row) le.push_back({CtxTuple{lc->second}, mw, 1});
          });
    }
    LapTrainReport local;
    local.stop = m.stop.estimate_lambdas(se);
    local.word = m.word.estimate_lambdas(we);
    local.pos = m.pos.estimate_lambdas(pe);
    local.lex = m.lex.estimate_lambdas(le);
    detail::estimate_mix(m, *heldout, local);
    local.lambdas_estimated = true;
    if (report) *report = std::move(local);
  }
  return m;
}

inline LapModel train_lap(const Corpus& train, const Corpus* heldout,
                          LapOptions opt = {},
                          LapTrainReport* report = nullptr) {
  std::vector<std::pair<Tree, double>> weighted;
  weighted.reserve(train.trees.size());
  for (const Tree& t : train.trees) weighted.emplace_back(t, 1.0);
  std::vector<Tree> held;
  if (heldout) held = heldout->trees;
  return train_lap(weighted, heldout ? &held : nullptr, std::move(opt),
                   report);
}

// ---------------------------------------------------------------------------
// Serialization, in the same line-oriented format as the grammar models.

inline void save_lap(const LapModel& m, std::ostream& out) {
  out << "tdparse-lap 1\n";
  out << "prev-depth " << m.opt.prev_depth << "\n";
  out << "unk-max-count " << detail::fmt_count(m.opt.unk_max_count) << "\n";
  out << "strip-punctuation " << (m.opt.strip_punctuation ? 1 : 0) << "\n";
  out << "bucketing " << to_string(m.opt.bucketing) << "\n";
  out << "start " << m.opt.start << "\n";
  out << "end-marker " << m.opt.end_marker << "\n";
  for (const std::string& p : m.opt.punctuation) out << "punct\t" << p << "\n";
  for (const auto& [w, c] : m.vocab)
    out << "vocab\t" << w << "\t" << detail::fmt_count(c) << "\n";
  for (std::size_t j = 0; j < m.mix.lambda.size(); ++j)
    for (std::size_t b = 0; b < m.mix.lambda[j].size(); ++b)
      out << "mix\t" << b << "\t" << detail::fmt_count(m.mix.lambda[j][b])
          << "\n";
  detail::save_model(out, "stop", m.stop);
  detail::save_model(out, "word", m.word);
  detail::save_model(out, "pos", m.pos);
  detail::save_model(out, "lex", m.lex);
  out << "end\n";
}

inline LapModel load_lap(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "tdparse-lap 1")
    throw std::runtime_error("unrecognized look-ahead file header");
  LapModel m;
  m.opt.punctuation.clear();
  InterpolatedModel* cur = nullptr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "end") break;
    if (line.rfind("model ", 0) == 0) {
      std::istringstream row(line);
      std::string kw, name;
      std::size_t arity = 0;
      row >> kw >> name >> arity;
      if (name == "stop")
        cur = &m.stop;
      else if (name == "word")
        cur = &m.word;
      else if (name == "pos")
        cur = &m.pos;
      else if (name == "lex")
        cur = &m.lex;
      else
        throw std::runtime_error("unknown model section: " + name);
      *cur = InterpolatedModel(arity);
      cur->table.bucketing = m.opt.bucketing;
      continue;
    }
    const std::vector<std::string> f = detail::split_tabs(line);
    if (f[0] == "punct") {
      if (f.size() != 2) throw std::runtime_error("bad punct line");
      m.opt.punctuation.insert(f[1]);
      continue;
    }
    if (f[0] == "vocab") {
      if (f.size() != 3) throw std::runtime_error("bad vocab line");
      m.vocab[f[1]] = std::stod(f[2]);
      continue;
    }
    if (f[0] == "mix") {
      if (f.size() != 3) throw std::runtime_error("bad mix line");
      const std::size_t b = std::stoul(f[1]);
      if (m.mix.lambda.empty()) m.mix.lambda.resize(1);
      if (m.mix.lambda[0].size() <= b) m.mix.lambda[0].resize(b + 1, 0.5);
      m.mix.lambda[0][b] = std::stod(f[2]);
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
    std::istringstream row(line);
    std::string key, value;
    row >> key;
    std::getline(row, value);
    if (!value.empty() && value[0] == ' ') value.erase(0, 1);
    if (key == "prev-depth")
      m.opt.prev_depth = std::stoi(value);
    else if (key == "unk-max-count")
      m.opt.unk_max_count = std::stod(value);
    else if (key == "strip-punctuation")
      m.opt.strip_punctuation = value == "1";
    else if (key == "bucketing")
      m.opt.bucketing = value == "avgcount" ? Bucketing::AverageCount
                                            : Bucketing::RawFrequency;
    else if (key == "start")
      m.opt.start = value;
    else if (key == "end-marker")
      m.opt.end_marker = value;
    else
      throw std::runtime_error("unknown look-ahead file key: " + key);
  }
  return m;
}

}  // namespace tdp
