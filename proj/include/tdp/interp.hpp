#pragma once
// Recursive linear deleted interpolation over fixed-arity conditioning
// tuples.
//
// A model of arity K keeps counts at every prefix level: level j conditions
// the outcome on the first j tuple components (level 0 is the unconditioned
// outcome distribution). The smoothed probability mixes the deepest
// relative frequency with the next-shallower estimate,
//   P_j = lambda_j * rf_j + (1 - lambda_j) * P_{j-1},
// recursively down to level 0, which is used in full. Each lambda is a
// function of the level and of a bucketed score of the conditioning
// context; an unseen context forces lambda = 0 at that level, so deeper
// levels can only refine, never invent, mass.
//
// Tuple components may be absent (NULL); absence is a real value and is
// encoded in the context key, not skipped.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace tdp {

enum class Bucketing { RawFrequency, AverageCount };

inline const char* to_string(Bucketing b) {
  return b == Bucketing::RawFrequency ? "freq" : "avgcount";
}

struct InterpolationTable {
  Bucketing bucketing = Bucketing::RawFrequency;
  // Upper bucket edges; score <= boundaries[b] falls in bucket b, anything
  // larger in the final open bucket.
  std::vector<double> boundaries = {0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89};
  // lambda[level][bucket]; level 0 is unused (the base distribution has no
  // mixing weight of its own).
  std::vector<std::vector<double>> lambda;

  std::size_t bucket_count() const { return boundaries.size() + 1; }

  std::size_t bucket_of(double score) const {
    for (std::size_t b = 0; b < boundaries.size(); ++b)
      if (score <= boundaries[b]) return b;
    return boundaries.size();
  }

  // Default schedule when no heldout estimation has run: trust halves,
  // except that a zero-score context contributes nothing.
  double get(std::size_t level, double score) const {
    const std::size_t b = bucket_of(score);
    if (b == 0) return 0.0;
    if (level < lambda.size() && b < lambda[level].size())
      return lambda[level][b];
    return 0.5;
  }
};

using CtxTuple = std::vector<std::optional<std::string>>;

struct InterpEvent {
  CtxTuple context;
  std::string outcome;
  double weight = 1.0;
};

struct LambdaReport {
  int iterations = 0;
  double log_likelihood = 0;
  std::vector<std::string> warnings;
};

class InterpolatedModel {
 public:
  struct ContextStats {
    double total = 0;
    std::map<std::string, double> outcomes;
  };

  InterpolatedModel() = default;
  explicit InterpolatedModel(std::size_t arity) : levels_(arity + 1) {}

  std::size_t arity() const { return levels_.empty() ? 0 : levels_.size() - 1; }

  // Forces a lambda before table lookup; used for structural constraints.
  std::function<std::optional<double>(std::size_t level, const CtxTuple&)>
      lambda_override;

  InterpolationTable table;

  void add(const CtxTuple& ctx, const std::string& outcome, double w = 1.0) {
    for (std::size_t j = 0; j < levels_.size(); ++j) {
      ContextStats& s = levels_[j][key(ctx, j)];
      s.total += w;
      s.outcomes[outcome] += w;
    }
  }

  const ContextStats* stats(std::size_t level, const CtxTuple& ctx) const {
    const auto it = levels_[level].find(key(ctx, level));
    return it == levels_[level].end() ? nullptr : &it->second;
  }

  // Total count of the conditioning context divided by its number of
  // distinct outcomes; 0 for an unseen context.
  double average_count(std::size_t level, const CtxTuple& ctx) const {
    const ContextStats* s = stats(level, ctx);
    if (!s || s->outcomes.empty()) return 0;
    return s->total / static_cast<double>(s->outcomes.size());
  }

  double bucket_score(std::size_t level, const CtxTuple& ctx) const {
    if (table.bucketing == Bucketing::AverageCount)
      return average_count(level, ctx);
    const ContextStats* s = stats(level, ctx);
    return s ? s->total : 0;
  }

  // Effective mixing weight at a level, honoring overrides and the
  // unseen-context pin.
  double effective_lambda(std::size_t level, const CtxTuple& ctx) const {
    const ContextStats* s = stats(level, ctx);
    if (!s || s->total <= 0) return 0.0;
    if (lambda_override) {
      if (auto v = lambda_override(level, ctx)) return *v;
    }
    return table.get(level, bucket_score(level, ctx));
  }

  double prob(const CtxTuple& ctx, const std::string& outcome) const {
    double p = raw(0, ctx, outcome);
    for (std::size_t j = 1; j < levels_.size(); ++j) {
      const double lam = effective_lambda(j, ctx);
      if (lam > 0)
        p = lam * raw(j, ctx, outcome) + (1 - lam) * p;
    }
    return p;
  }

  // Outcomes observed anywhere; smoothing assigns every trained context a
  // distribution over exactly this set.
  const std::map<std::string, double>& alphabet() const {
    static const std::map<std::string, double> empty;
    if (levels_.empty()) return empty;
    const auto it = levels_[0].find("");
    return it == levels_[0].end() ? empty : it->second.outcomes;
  }

  // Per-bucket mixing weights maximizing heldout likelihood, by the
  // fixed-point ascent on mixture responsibilities. Buckets never exercised
  // by the heldout stream keep lambda = 0.5 and are reported.
  LambdaReport estimate_lambdas(const std::vector<InterpEvent>& heldout,
                                int max_iters = 100, double tol = 1e-6) {
    LambdaReport rep;
    const std::size_t K = arity();
    const std::size_t B = table.bucket_count();
    table.lambda.assign(K + 1, std::vector<double>(B, 0.5));
    for (auto& row : table.lambda) row[0] = 0.0;

    // Per event and level: bucket, relative frequency of the outcome, and
    // whether the lambda is structurally fixed.
    struct Slot {
      std::size_t bucket = 0;
      double rf = 0;
      bool seen = false;
      bool fixed = false;
      double fixed_value = 0;
    };
    std::vector<std::vector<Slot>> slots(heldout.size());
    std::vector<double> base(heldout.size(), 0);
    for (std::size_t e = 0; e < heldout.size(); ++e) {
      const InterpEvent& ev = heldout[e];
      base[e] = raw(0, ev.context, ev.outcome);
      slots[e].resize(K + 1);
      for (std::size_t j = 1; j <= K; ++j) {
        Slot& sl = slots[e][j];
        const ContextStats* s = stats(j, ev.context);
        sl.seen = s && s->total > 0;
        if (!sl.seen) continue;
        sl.bucket = table.bucket_of(bucket_score(j, ev.context));
        sl.rf = raw(j, ev.context, ev.outcome);
        if (lambda_override) {
          if (auto v = lambda_override(j, ev.context)) {
            sl.fixed = true;
            sl.fixed_value = *v;
          }
        }
      }
    }

    double prev_ll = -HUGE_VAL;
    std::vector<std::vector<double>> num(K + 1, std::vector<double>(B, 0));
    std::vector<std::vector<double>> den(K + 1, std::vector<double>(B, 0));
    std::vector<std::vector<bool>> touched(K + 1,
                                           std::vector<bool>(B, false));
    for (rep.iterations = 0; rep.iterations < max_iters; ++rep.iterations) {
      for (auto& row : num) row.assign(B, 0);
      for (auto& row : den) row.assign(B, 0);
      double ll = 0;
      for (std::size_t e = 0; e < heldout.size(); ++e) {
        const InterpEvent& ev = heldout[e];
        // Responsibilities over the level at which the mixture stops.
        std::vector<double> r(K + 1, 0);
        double reach = 1.0;
        for (std::size_t j = K; j >= 1; --j) {
          const Slot& sl = slots[e][j];
          double lam = 0;
          if (sl.seen)
            lam = sl.fixed ? sl.fixed_value
                           : table.lambda[j][sl.bucket];
          r[j] = reach * lam * sl.rf;
          reach *= (1 - lam);
        }
        r[0] = reach * base[e];
        double L = 0;
        for (double v : r) L += v;
        if (L <= 0) continue;  // outcome outside the training alphabet
        ll += ev.weight * std::log(L);
        // A level is reached iff every deeper level backed off, so its
        // posterior is the cumulative stop mass at or below it.
        double cum = r[0] / L;
        for (std::size_t j = 1; j <= K; ++j) {
          const Slot& sl = slots[e][j];
          cum += r[j] / L;
          if (!sl.seen || sl.fixed) continue;
          num[j][sl.bucket] += ev.weight * (r[j] / L);
          den[j][sl.bucket] += ev.weight * cum;
          touched[j][sl.bucket] = true;
        }
      }
      for (std::size_t j = 1; j <= K; ++j)
        for (std::size_t b = 1; b < B; ++b)
          if (den[j][b] > 0) table.lambda[j][b] = num[j][b] / den[j][b];
      rep.log_likelihood = ll;
      if (ll - prev_ll < tol && rep.iterations > 0) {
        ++rep.iterations;
        break;
      }
      prev_ll = ll;
    }

    for (std::size_t j = 1; j <= K; ++j)
      for (std::size_t b = 1; b < B; ++b)
        if (!touched[j][b]) {
          std::ostringstream w;
          w << "no heldout events for level " << j << " bucket " << b
            << "; lambda defaults to 0.5";
          rep.warnings.push_back(w.str());
        }
    return rep;
  }

  // Serialization hooks: levels exposed as stable key/outcome/count rows.
  const std::vector<std::map<std::string, ContextStats>>& levels() const {
    return levels_;
  }
  void add_raw(std::size_t level, const std::string& ctx_key,
               const std::string& outcome, double count) {
    ContextStats& s = levels_[level][ctx_key];
    s.total += count;
    s.outcomes[outcome] += count;
  }

  static constexpr char kSep = '\x1f';
  static constexpr char kNull = '\x1e';

  static std::string key(const CtxTuple& ctx, std::size_t level) {
    std::string k;
    for (std::size_t i = 0; i < level; ++i) {
      if (i) k += kSep;
      if (ctx[i])
        k += *ctx[i];
      else
        k += kNull;
    }
    return k;
  }

 private:
  double raw(std::size_t level, const CtxTuple& ctx,
             const std::string& outcome) const {
    const ContextStats* s = stats(level, ctx);
    if (!s || s->total <= 0) return 0;
    const auto it = s->outcomes.find(outcome);
    return it == s->outcomes.end() ? 0 : it->second / s->total;
  }

  std::vector<std::map<std::string, ContextStats>> levels_;
};

}  // namespace tdp
