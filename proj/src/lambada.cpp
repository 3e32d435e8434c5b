#include "lambada/lambada.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "lambada/random.hpp"

namespace lambada {

using json = nlohmann::json;

// ---------------------------------------------------------------- plan

std::size_t AugmentationPlan::total_target() const {
  return std::accumulate(per_class.begin(), per_class.end(), std::size_t{0});
}

void AugmentationPlan::validate() const {
  if (oversample_factor < 1) throw Error("oversample factor must be >= 1");
  generation.validate();
}

AugmentationPlan plan_balanced(const Dataset& d, std::size_t target_per_class) {
  AugmentationPlan plan;
  for (const auto n : d.class_counts()) plan.per_class.push_back(target_per_class > n ? target_per_class - n : 0);
  return plan;
}

AugmentationPlan plan_uniform(std::size_t num_classes, std::size_t per_class) {
  AugmentationPlan plan;
  plan.per_class.assign(num_classes, per_class);
  return plan;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pending: return "pending";
    case Verdict::retained: return "retained";
    case Verdict::label_mismatch: return "label_mismatch";
    case Verdict::low_rank: return "low_rank";
    case Verdict::duplicate: return "duplicate";
    case Verdict::truncated: return "truncated";
  }
  return "unknown";
}

std::size_t SynthesizedPool::count(ClassId y) const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [y](const Candidate& c) { return c.sentence.label == y; }));
}

// ---------------------------------------------------------------- report

std::size_t FilterReport::total_generated() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.generated;
  return n;
}

std::size_t FilterReport::total_retained() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.retained;
  return n;
}

std::string FilterReport::to_json() const {
  json j;
  j["total_generated"] = total_generated();
  j["total_retained"] = total_retained();
  json rows = json::array();
  for (const auto& c : classes) {
    json r = {{"label", c.name},
              {"class_id", c.label},
              {"target", c.target},
              {"generated", c.generated},
              {"mismatch", c.mismatch},
              {"duplicates", c.duplicates},
              {"truncated_excluded", c.truncated_excluded},
              {"ranked", c.ranked},
              {"retained", c.retained},
              {"shortfall", c.shortfall}};
    r["min_retained_confidence"] = c.min_confidence ? json(*c.min_confidence) : json(nullptr);
    r["max_retained_confidence"] = c.max_confidence ? json(*c.max_confidence) : json(nullptr);
    rows.push_back(std::move(r));
  }
  j["classes"] = std::move(rows);
  return j.dump(2);
}

FilterReport FilterReport::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    FilterReport r;
    for (const auto& row : j.at("classes")) {
      ClassFilterStats c;
      c.label = row.at("class_id").get<ClassId>();
      c.name = row.at("label").get<std::string>();
      c.target = row.at("target").get<std::size_t>();
      c.generated = row.at("generated").get<std::size_t>();
      c.mismatch = row.at("mismatch").get<std::size_t>();
      c.duplicates = row.at("duplicates").get<std::size_t>();
      c.truncated_excluded = row.at("truncated_excluded").get<std::size_t>();
      c.ranked = row.at("ranked").get<std::size_t>();
      c.retained = row.at("retained").get<std::size_t>();
      c.shortfall = row.at("shortfall").get<std::size_t>();
      if (!row.at("min_retained_confidence").is_null()) c.min_confidence = row["min_retained_confidence"].get<double>();
      if (!row.at("max_retained_confidence").is_null()) c.max_confidence = row["max_retained_confidence"].get<double>();
      r.classes.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("invalid filter report: ") + e.what());
  }
}

void write_pool_jsonl(std::ostream& out, const SynthesizedPool& pool) {
  for (const auto& c : pool.candidates) {
    json obj = {{"text", c.sentence.text},
                {"label", pool.labels.name(c.sentence.label)},
                {"truncated", c.truncated},
                {"gen_seed", c.gen_seed}};
    if (c.confidence) obj["confidence"] = *c.confidence;
    if (c.verdict != Verdict::pending) obj["verdict"] = to_string(c.verdict);
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------- steps

SynthesizedPool synthesize_pool(ConditionalGenerator& g, const LabelMap& labels, const AugmentationPlan& plan) {
  plan.validate();
  if (plan.per_class.size() != labels.size())
    throw Error("plan has " + std::to_string(plan.per_class.size()) + " class targets for " +
                std::to_string(labels.size()) + " classes");
  SynthesizedPool pool;
  pool.labels = labels;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto y = static_cast<ClassId>(c + 1);
    const std::size_t count = plan.oversample_factor * plan.per_class[c];
    if (count == 0) continue;
    if (!g.covers(y)) throw Error("class '" + labels.name(y) + "' is unknown to the generator");
    const std::uint64_t class_seed = derive_seed(plan.seed, {static_cast<std::uint64_t>(y)});
    auto sentences = g.generate(y, count, class_seed, plan.generation);
    if (sentences.size() != count) throw Error("generator returned the wrong number of sentences");
    for (std::size_t i = 0; i < count; ++i) {
      Candidate cand;
      cand.sentence.tokens = std::move(sentences[i].tokens);
      cand.sentence.text = detokenize(cand.sentence.tokens);
      cand.sentence.label = y;
      cand.truncated = sentences[i].truncated;
      cand.gen_seed = sentences[i].gen_seed;
      cand.index = i;
      pool.candidates.push_back(std::move(cand));
    }
  }
  return pool;
}

FilterOutcome filter_pool(const SynthesizedPool& pool, const ClassifierModel& h, const AugmentationPlan& plan,
                          const Dataset* train) {
  if (!(h.labels() == pool.labels)) throw Error("classifier and pool use different label maps");
  if (plan.per_class.size() != pool.labels.size()) throw Error("plan does not match the pool's class count");
  FilterOutcome out;
  out.pool = pool;
  out.synthesized.labels = pool.labels;

  std::set<std::string> seen;
  if (plan.filter.dedup && train)
    for (const auto& item : train->items) seen.insert(detokenize(item.tokens));

  auto& cands = out.pool.candidates;
  for (std::size_t c = 0; c < pool.labels.size(); ++c) {
    const auto y = static_cast<ClassId>(c + 1);
    ClassFilterStats stats;
    stats.label = y;
    stats.name = pool.labels.name(y);
    stats.target = plan.per_class[c];
    std::vector<std::size_t> ranked;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      auto& cand = cands[i];
      if (cand.sentence.label != y) continue;
      ++stats.generated;
      const Prediction pred = h.predict(cand.sentence.tokens);
      cand.predicted = pred.label.id;
      cand.confidence = pred.distribution(y - 1);
      if (plan.filter.exclude_truncated && cand.truncated) {
        cand.verdict = Verdict::truncated;
        ++stats.truncated_excluded;
      } else if (plan.filter.require_label_agreement && pred.label.id != y) {
        cand.verdict = Verdict::label_mismatch;
        ++stats.mismatch;
      } else if (plan.filter.dedup && !seen.insert(cand.sentence.text).second) {
        cand.verdict = Verdict::duplicate;
        ++stats.duplicates;
      } else {
        ranked.push_back(i);
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      if (*cands[a].confidence != *cands[b].confidence) return *cands[a].confidence > *cands[b].confidence;
      return cands[a].index < cands[b].index;
    });
    stats.ranked = ranked.size();
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      auto& cand = cands[ranked[r]];
      if (r < stats.target) {
        cand.verdict = Verdict::retained;
        const double conf = *cand.confidence;
        stats.min_confidence = stats.min_confidence ? std::min(*stats.min_confidence, conf) : conf;
        stats.max_confidence = stats.max_confidence ? std::max(*stats.max_confidence, conf) : conf;
      } else {
        cand.verdict = Verdict::low_rank;
      }
    }
    stats.retained = std::min(stats.target, ranked.size());
    stats.shortfall = stats.target - stats.retained;
    out.report.classes.push_back(std::move(stats));
  }
  for (const auto& cand : cands)
    if (cand.verdict == Verdict::retained) out.synthesized.items.push_back(cand.sentence);
  return out;
}

LambadaResult run_lambada(const Dataset& d, const ClassifierSpec& classifier, ConditionalGenerator& g,
                          const AugmentationPlan& plan) {
  if (d.empty()) throw StageError("input", "training set is empty");
  try {
    plan.validate();
  } catch (const Error& e) {
    throw StageError("plan", e.what());
  }
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };
  ClassifierModel h = stage("step 1 (baseline classifier)", [&] { return train_classifier(classifier, d); });
  if (plan.total_target() == 0) {
    LambadaResult r{Dataset{}, FilterReport{}, std::move(h), SynthesizedPool{}};
    r.synthesized.labels = d.labels;
    r.pool.labels = d.labels;
    for (std::size_t c = 0; c < d.labels.size(); ++c) {
      ClassFilterStats s;
      s.label = static_cast<ClassId>(c + 1);
      s.name = d.labels.names()[c];
      r.report.classes.push_back(std::move(s));
    }
    return r;
  }
  stage("step 2 (adapt generator)", [&] {
    g.fit(d);
    return 0;
  });
  SynthesizedPool pool = stage("step 3 (synthesize)", [&] { return synthesize_pool(g, d.labels, plan); });
  FilterOutcome filtered = stage("step 4 (filter)", [&] { return filter_pool(pool, h, plan, &d); });
  return {std::move(filtered.synthesized), std::move(filtered.report), std::move(h), std::move(filtered.pool)};
}

bool drift_detected(double previous, double current, double tolerance) { return current < previous - tolerance; }

IterateResult iterate(const Dataset& d, const Dataset& validation, const ClassifierSpec& classifier,
                      ConditionalGenerator& g, const AugmentationPlan& plan, const IterateOptions& opts) {
  if (opts.rounds < 1) throw Error("iterate needs rounds >= 1");
  IterateResult result;
  Dataset current = d;
  double previous = 0.0;
  for (int r = 1; r <= opts.rounds; ++r) {
    AugmentationPlan round_plan = plan;
    round_plan.seed = r == 1 ? plan.seed : derive_seed(plan.seed, {static_cast<std::uint64_t>(r)});
    LambadaResult lr = run_lambada(current, classifier, g, round_plan);
    if (r == 1) {
      previous = validation.empty() ? 0.0 : accuracy(lr.baseline, validation);
      result.baseline_validation_accuracy = previous;
    }
    Dataset augmented = concat(current, lr.synthesized);
    const ClassifierModel h_bar = train_classifier(classifier, augmented);
    const double acc = validation.empty() ? 0.0 : accuracy(h_bar, validation);
    result.rounds.push_back({r, std::move(lr.synthesized), std::move(lr.report), acc});
    current = std::move(augmented);
    if (!validation.empty() && drift_detected(previous, acc, opts.drift_tolerance)) {
      result.stopped_by_drift = true;
      break;
    }
    previous = acc;
  }
  return result;
}

}  // namespace lambada
