#pragma once

#include <string>
#include <vector>

#include "pancap/errors.hpp"

namespace pancap {

// One scored item paired with its human judgment.
struct RatedSample {
  double machine_score = 0.0;
  double human_rating = 0.0;

  friend bool operator==(const RatedSample&, const RatedSample&) = default;
};

// Reads JSONL with {"machine_score": number, "human_rating": number} per
// line. Non-finite values are rejected.
std::vector<RatedSample> load_ratings(const std::string& path);

// Pearson product-moment correlation. Needs at least two samples and
// non-zero variance on both axes; otherwise DegenerateVariance.
double pcc(const std::vector<RatedSample>& samples);

// Coefficient of determination of the least-squares fit of human_rating on
// machine_score. Callers wanting the 1-R^2 convention subtract themselves.
double r_squared(const std::vector<RatedSample>& samples);

// Kendall's tau-b (tie-corrected). Throws AllTied when either axis has no
// untied pair to rank.
double kendall_tau(const std::vector<RatedSample>& samples);

}  // namespace pancap
