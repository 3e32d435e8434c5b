#include "toy_grammar.hpp"

#include <set>
#include <sstream>

#include "lambada/random.hpp"

namespace toy {

namespace {

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

Grammar build() {
  Grammar g;
  g.class_names = {"flight", "hotel", "weather"};
  const std::vector<std::string> heads = {"{V} {M} {N}", "{V} the {N}", "{M} {N}", "{V} a {M} {N}"};
  const std::vector<std::string> tails = {"", " on {DAY}", " in {CITY}"};
  for (const auto& h : heads)
    for (const auto& t : tails) g.templates.push_back(h + t);
  g.fillers = {
      {{"book", "reserve", "schedule", "arrange", "want", "need"},
       {"nonstop", "economy", "redeye", "direct", "oneway"},
       {"flight", "plane", "airfare", "ticket", "seat", "layover"}},
      {{"rent", "lease", "hold", "secure", "grab", "choose"},
       {"cheap", "quiet", "cozy", "luxury", "clean"},
       {"room", "suite", "bed", "hostel", "motel", "cabin"}},
      {{"forecast", "predict", "expect", "report", "show", "tell"},
       {"heavy", "light", "cold", "warm", "freezing"},
       {"rain", "snow", "wind", "storm", "fog", "hail"}},
  };
  g.cities = {"boston", "paris"};
  g.days = {"monday", "friday"};
  return g;
}

}  // namespace

const Grammar& grammar() {
  static const Grammar g = build();
  return g;
}

std::string Grammar::sample(std::size_t cls, std::uint64_t seed) const {
  lambada::Rng rng(seed);
  const auto& t = templates[rng.index(templates.size())];
  std::string out;
  for (const auto& w : words(t)) {
    std::string tok = w;
    if (w == "{V}") tok = fillers[cls][0][rng.index(fillers[cls][0].size())];
    else if (w == "{M}") tok = fillers[cls][1][rng.index(fillers[cls][1].size())];
    else if (w == "{N}") tok = fillers[cls][2][rng.index(fillers[cls][2].size())];
    else if (w == "{CITY}") tok = cities[rng.index(cities.size())];
    else if (w == "{DAY}") tok = days[rng.index(days.size())];
    out += (out.empty() ? "" : " ") + tok;
  }
  return out;
}

bool Grammar::member(const std::string& text, std::size_t cls) const {
  const auto toks = words(text);
  auto in = [](const std::vector<std::string>& set, const std::string& w) {
    for (const auto& s : set)
      if (s == w) return true;
    return false;
  };
  for (const auto& t : templates) {
    const auto slots = words(t);
    if (slots.size() != toks.size()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < slots.size() && ok; ++i) {
      const auto& s = slots[i];
      if (s == "{V}") ok = in(fillers[cls][0], toks[i]);
      else if (s == "{M}") ok = in(fillers[cls][1], toks[i]);
      else if (s == "{N}") ok = in(fillers[cls][2], toks[i]);
      else if (s == "{CITY}") ok = in(cities, toks[i]);
      else if (s == "{DAY}") ok = in(days, toks[i]);
      else ok = s == toks[i];
    }
    if (ok) return true;
  }
  return false;
}

std::vector<std::string> Grammar::vocabulary() const {
  std::set<std::string> v;
  for (const auto& t : templates)
    for (const auto& w : words(t))
      if (w.front() != '{') v.insert(w);
  for (const auto& cls : fillers)
    for (const auto& slot : cls) v.insert(slot.begin(), slot.end());
  v.insert(cities.begin(), cities.end());
  v.insert(days.begin(), days.end());
  return {v.begin(), v.end()};
}

lambada::Dataset make_dataset(std::size_t per_class, std::uint64_t seed) {
  const Grammar& g = grammar();
  lambada::Dataset d;
  for (const auto& name : g.class_names) d.labels.intern(name);
  for (std::size_t i = 0; i < per_class; ++i)
    for (std::size_t c = 0; c < g.class_names.size(); ++c)
      d.add(g.sample(c, lambada::derive_seed(seed, {c, i})), static_cast<lambada::ClassId>(c + 1));
  return d;
}

std::vector<std::string> make_prior(std::size_t n, std::uint64_t seed) {
  const Grammar& g = grammar();
  std::vector<std::string> out;
  lambada::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = rng.index(g.class_names.size());
    out.push_back(g.sample(c, rng.next()));
  }
  return out;
}

double label_fidelity(const lambada::Dataset& d) {
  if (d.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& it : d.items) ok += grammar().member(it.text, static_cast<std::size_t>(it.label - 1));
  return static_cast<double>(ok) / static_cast<double>(d.size());
}

}  // namespace toy
