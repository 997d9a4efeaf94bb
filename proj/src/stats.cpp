#include "pancap/stats.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>

#include "pancap/core.hpp"

namespace pancap {

namespace {

double require_finite_number(const Json& line, const char* key,
                             const std::string& where) {
  if (!line.contains(key) || !line[key].is_number()) {
    throw PancapError(Errc::parse_error,
                      where + ": missing numeric \"" + key + "\"");
  }
  double value = line[key].get<double>();
  if (!std::isfinite(value)) {
    throw PancapError(Errc::parse_error,
                      where + ": non-finite \"" + key + "\"");
  }
  return value;
}

struct CenteredSums {
  std::size_t n = 0;
  double sxx = 0.0;  // sum of squared machine-score deviations
  double syy = 0.0;
  double sxy = 0.0;
};

CenteredSums centered_sums(const std::vector<RatedSample>& samples) {
  CenteredSums sums;
  sums.n = samples.size();
  if (sums.n < 2) {
    throw PancapError(Errc::degenerate_variance,
                      "need at least two rated samples");
  }
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const RatedSample& s : samples) {
    mean_x += s.machine_score;
    mean_y += s.human_rating;
  }
  mean_x /= double(sums.n);
  mean_y /= double(sums.n);
  for (const RatedSample& s : samples) {
    double dx = s.machine_score - mean_x;
    double dy = s.human_rating - mean_y;
    sums.sxx += dx * dx;
    sums.syy += dy * dy;
    sums.sxy += dx * dy;
  }
  return sums;
}

int sign_of(double delta) { return (delta > 0.0) - (delta < 0.0); }

}  // namespace

std::vector<RatedSample> load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PancapError(Errc::io_error, "cannot open ratings file " + path);
  }
  std::vector<RatedSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = path + ":" + std::to_string(line_no);
    Json parsed = Json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw PancapError(Errc::parse_error, where + ": expected a JSON object");
    }
    RatedSample sample;
    sample.machine_score = require_finite_number(parsed, "machine_score", where);
    sample.human_rating = require_finite_number(parsed, "human_rating", where);
    samples.push_back(sample);
  }
  return samples;
}

double pcc(const std::vector<RatedSample>& samples) {
  CenteredSums sums = centered_sums(samples);
  if (sums.sxx == 0.0 || sums.syy == 0.0) {
    throw PancapError(Errc::degenerate_variance,
                      "zero variance on an axis, correlation undefined");
  }
  return sums.sxy / std::sqrt(sums.sxx * sums.syy);
}

double r_squared(const std::vector<RatedSample>& samples) {
  CenteredSums sums = centered_sums(samples);
  if (sums.sxx == 0.0) {
    throw PancapError(Errc::degenerate_variance,
                      "constant machine scores, no regression line");
  }
  if (sums.syy == 0.0) {
    throw PancapError(Errc::degenerate_variance,
                      "constant human ratings, R^2 undefined");
  }
  double slope = sums.sxy / sums.sxx;
  double ss_res = sums.syy - slope * sums.sxy;
  if (ss_res < 0.0) ss_res = 0.0;  // centered algebra can land epsilon-negative
  return 1.0 - ss_res / sums.syy;
}

double kendall_tau(const std::vector<RatedSample>& samples) {
  std::size_t n = samples.size();
  if (n < 2) {
    throw PancapError(Errc::all_tied, "need at least two rated samples");
  }
  long long concordant = 0;
  long long discordant = 0;
  long long tied_x = 0;
  long long tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      int dx = sign_of(samples[i].machine_score - samples[j].machine_score);
      int dy = sign_of(samples[i].human_rating - samples[j].human_rating);
      if (dx == 0) ++tied_x;
      if (dy == 0) ++tied_y;
      if (dx != 0 && dy != 0) {
        if (dx == dy) ++concordant;
        else ++discordant;
      }
    }
  }
  long long total = (long long)(n) * (long long)(n - 1) / 2;
  if (tied_x == total || tied_y == total) {
    throw PancapError(Errc::all_tied, "an axis is fully tied, tau undefined");
  }
  double denom = std::sqrt(double(total - tied_x) * double(total - tied_y));
  return double(concordant - discordant) / denom;
}

}  // namespace pancap
