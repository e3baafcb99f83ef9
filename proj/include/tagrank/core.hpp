#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagrank {

// Contract violation on inputs: bad dimensions, out-of-range indices,
// malformed files, invalid configuration values. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A computation produced a non-finite value. CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One annotated point: dense features plus the indices of its positive tags.
// labels are sorted ascending, distinct, each in [0, num_tags).
struct Example {
  std::vector<double> features;
  std::vector<int> labels;
};

struct Dataset {
  int num_tags = 0;  // c
  int dim = 0;       // d
  std::vector<std::string> tag_names;  // exactly num_tags entries
  std::vector<Example> examples;
};

// One score per tag, higher means more relevant.
using ScoreVector = std::vector<double>;

// Indicator form of an example's tag set.
struct LabelVector {
  std::vector<std::uint8_t> indicator;  // length num_tags, values 0/1
  int c_plus = 0;   // positives
  int c_minus = 0;  // negatives, c_plus + c_minus == num_tags
};

// Scalar loss value and its gradient with respect to the scores.
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

inline void validate_example(const Example& ex, int num_tags, int dim,
                             const std::string& where = "example") {
  if (static_cast<int>(ex.features.size()) != dim)
    throw ValidationError(where + ": feature count " +
                          std::to_string(ex.features.size()) +
                          " does not match dim " + std::to_string(dim));
  if (ex.labels.empty())
    throw ValidationError(where + ": empty label set");
  int prev = -1;
  for (int lbl : ex.labels) {
    if (lbl < 0 || lbl >= num_tags)
      throw ValidationError(where + ": label index " + std::to_string(lbl) +
                            " out of range [0, " + std::to_string(num_tags) +
                            ")");
    if (lbl == prev)
      throw ValidationError(where + ": duplicate label index " +
                            std::to_string(lbl));
    if (lbl < prev)
      throw ValidationError(where + ": labels not sorted ascending");
    prev = lbl;
  }
}

inline void validate(const Dataset& ds) {
  if (ds.num_tags < 1)
    throw ValidationError("dataset: num_tags must be >= 1, got " +
                          std::to_string(ds.num_tags));
  if (ds.dim < 1)
    throw ValidationError("dataset: dim must be >= 1, got " +
                          std::to_string(ds.dim));
  if (static_cast<int>(ds.tag_names.size()) != ds.num_tags)
    throw ValidationError("dataset: " + std::to_string(ds.tag_names.size()) +
                          " tag names for " + std::to_string(ds.num_tags) +
                          " tags");
  for (std::size_t i = 0; i < ds.examples.size(); ++i)
    validate_example(ds.examples[i], ds.num_tags, ds.dim,
                     "example " + std::to_string(i));
}

// Expands sorted label indices to a 0/1 indicator with positive and negative
// counts. Throws on any index violation so downstream code can trust it.
inline LabelVector label_vector_from(const Example& ex, int num_tags) {
  LabelVector lv;
  lv.indicator.assign(static_cast<std::size_t>(num_tags), 0);
  int prev = -1;
  for (int lbl : ex.labels) {
    if (lbl < 0 || lbl >= num_tags)
      throw ValidationError("label index " + std::to_string(lbl) +
                            " out of range [0, " + std::to_string(num_tags) +
                            ")");
    if (lbl <= prev)
      throw ValidationError("labels must be sorted ascending and distinct");
    lv.indicator[static_cast<std::size_t>(lbl)] = 1;
    prev = lbl;
  }
  lv.c_plus = static_cast<int>(ex.labels.size());
  lv.c_minus = num_tags - lv.c_plus;
  if (lv.c_plus == 0) throw ValidationError("empty label set");
  return lv;
}

}  // namespace tagrank
