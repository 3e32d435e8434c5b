#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lambada/corpus.hpp"

namespace toy {

/// Three-class slot grammar: every head followed by every tail. Slot
/// fillers {V}, {M}, {N} are class-specific, {CITY} and {DAY} are shared.
struct Grammar {
  std::vector<std::string> class_names;
  std::vector<std::string> templates;
  /// [class][slot] -> fillers, slot order V, M, N.
  std::vector<std::vector<std::vector<std::string>>> fillers;
  std::vector<std::string> cities;
  std::vector<std::string> days;

  std::string sample(std::size_t cls, std::uint64_t seed) const;
  /// True when `text` is produced by some template of class `cls`.
  bool member(const std::string& text, std::size_t cls) const;
  std::vector<std::string> vocabulary() const;
};

const Grammar& grammar();

/// n sentences per class, interleaved by class.
lambada::Dataset make_dataset(std::size_t per_class, std::uint64_t seed);
/// Unlabeled sentences drawn from every class, standing in for a pretraining corpus.
std::vector<std::string> make_prior(std::size_t n, std::uint64_t seed);

/// Fraction of items whose text belongs to their labeled class; 0 for empty input.
double label_fidelity(const lambada::Dataset& d);

}  // namespace toy
