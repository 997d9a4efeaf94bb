#include "pancap/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "pancap/errors.hpp"
#include "pancap/text_util.hpp"

namespace pancap {

namespace {

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  std::size_t shared = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < shared; ++i) dot += a[i] * b[i];
  for (double x : a) na += x * x;
  for (double x : b) nb += x * x;
  if (na <= 0.0 || nb <= 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Min-cost perfect matching on a square matrix via shortest augmenting paths
// with potentials. Returns row -> column.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  int n = static_cast<int>(cost.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] >= 1) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

// Maximum total over perfect matchings of the zero-padded square problem.
// Rows/columns beyond the rectangle score 0.
double padded_max(const std::vector<std::vector<double>>& score, int rows,
                  int cols, std::vector<int>* row_to_col) {
  int n = std::max(rows, cols);
  if (n == 0) {
    if (row_to_col) row_to_col->clear();
    return 0.0;
  }
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) cost[i][j] = -score[i][j];
  }
  std::vector<int> assignment = min_cost_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < rows; ++i) {
    int j = assignment[i];
    if (j >= 0 && j < cols) total += score[i][j];
  }
  if (row_to_col) {
    row_to_col->assign(rows, -1);
    for (int i = 0; i < rows; ++i) {
      int j = assignment[i];
      if (j >= 0 && j < cols) (*row_to_col)[i] = j;
    }
  }
  return total;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
  long long ix1 = std::max(a.x1, b.x1);
  long long iy1 = std::max(a.y1, b.y1);
  long long ix2 = std::min(a.x2, b.x2);
  long long iy2 = std::min(a.y2, b.y2);
  long long inter = std::max(0LL, ix2 - ix1) * std::max(0LL, iy2 - iy1);
  long long uni = box_area(a) + box_area(b) - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void SynonymLexicon::add(const std::string& a, const std::string& b) {
  std::string la = to_lower(trim_view(a));
  std::string lb = to_lower(trim_view(b));
  if (la.empty() || lb.empty() || la == lb) return;
  entries_[la].insert(lb);
  entries_[lb].insert(la);
}

bool SynonymLexicon::synonyms(const std::string& a, const std::string& b) const {
  std::string la = to_lower(trim_view(a));
  std::string lb = to_lower(trim_view(b));
  auto it = entries_.find(la);
  if (it != entries_.end() && it->second.count(lb) > 0) return true;
  it = entries_.find(lb);
  return it != entries_.end() && it->second.count(la) > 0;
}

SynonymLexicon SynonymLexicon::from_json(const Json& doc) {
  if (!doc.is_object()) {
    throw PancapError(Errc::parse_error, "synonym lexicon must be a JSON object");
  }
  SynonymLexicon lexicon;
  for (const auto& [lemma, synonyms] : doc.items()) {
    if (!synonyms.is_array()) {
      throw PancapError(Errc::parse_error,
                        "lexicon entry '" + lemma + "' must be an array");
    }
    for (const auto& synonym : synonyms) {
      if (!synonym.is_string()) {
        throw PancapError(Errc::parse_error,
                          "lexicon entry '" + lemma + "' has a non-string synonym");
      }
      lexicon.add(lemma, synonym.get<std::string>());
    }
  }
  return lexicon;
}

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw PancapError(Errc::io_error,
                      "cannot open synonym lexicon " + file.string());
  }
  Json doc = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    throw PancapError(Errc::parse_error,
                      "invalid JSON in synonym lexicon " + file.string());
  }
  return from_json(doc);
}

Json SynonymLexicon::to_json() const {
  Json out = Json::object();
  for (const auto& [lemma, synonyms] : entries_) {
    Json list = Json::array();
    for (const auto& synonym : synonyms) list.push_back(synonym);
    out[lemma] = std::move(list);
  }
  return out;
}

SimilarityComponents combine_similarity(const std::string& t1,
                                        const std::string& t2,
                                        const SynonymLexicon& lexicon,
                                        double cosine_value, double mu) {
  SimilarityComponents out;
  out.s_eq = normalize_text(t1) == normalize_text(t2) ? 1.0 : 0.0;
  std::string h1 = head_token(t1);
  std::string h2 = head_token(t2);
  bool share = !h1.empty() && (h1 == h2 || lexicon.synonyms(h1, h2));
  out.s_sy = share ? 1.0 : 0.0;
  out.cos = clamp01(cosine_value);
  out.total = out.s_eq * mu * mu + out.s_sy * mu + out.cos;
  return out;
}

SimilarityComponents tag_similarity(const std::string& t1, const std::string& t2,
                                    const SynonymLexicon& lexicon,
                                    EmbeddingProvider& embedder, double mu) {
  if (trim_view(t1).empty() || trim_view(t2).empty()) {
    throw PancapError(Errc::empty_tag, "tag_similarity needs non-empty tags");
  }
  std::vector<double> e1 = embedder.embed(t1);
  std::vector<double> e2 = t1 == t2 ? e1 : embedder.embed(t2);
  return combine_similarity(t1, t2, lexicon, cosine(e1, e2), mu);
}

double solve_assignment(const std::vector<std::vector<double>>& score,
                        std::vector<int>& row_to_col) {
  int rows = static_cast<int>(score.size());
  int cols = rows > 0 ? static_cast<int>(score[0].size()) : 0;
  row_to_col.assign(rows, -1);
  if (rows == 0 || cols == 0) return 0.0;

  double best = padded_max(score, rows, cols, nullptr);
  double eps = 1e-9 * (1.0 + std::abs(best));

  // Canonicalize: rows in order take the lowest column (unmatched last, only
  // while dummy capacity remains) that still completes to the maximum total.
  std::vector<char> used(cols, 0);
  int dummies_left = std::max(0, rows - cols);
  double fixed = 0.0;
  for (int i = 0; i < rows; ++i) {
    int remaining_rows = rows - i - 1;
    int chosen = -2;
    double chosen_score = 0.0;
    for (int cand = 0; cand <= cols; ++cand) {
      bool unmatched = cand == cols;
      if (unmatched && dummies_left == 0) break;
      if (!unmatched && used[cand]) continue;
      double pair_score = unmatched ? 0.0 : score[i][cand];

      std::vector<std::vector<double>> sub;
      sub.reserve(remaining_rows);
      std::vector<int> free_cols;
      for (int j = 0; j < cols; ++j) {
        if (!used[j] && (unmatched || j != cand)) free_cols.push_back(j);
      }
      for (int r = i + 1; r < rows; ++r) {
        std::vector<double> row;
        row.reserve(free_cols.size());
        for (int j : free_cols) row.push_back(score[r][j]);
        sub.push_back(std::move(row));
      }
      double rest = padded_max(sub, remaining_rows,
                               static_cast<int>(free_cols.size()), nullptr);
      if (fixed + pair_score + rest >= best - eps) {
        chosen = unmatched ? -1 : cand;
        chosen_score = pair_score;
        break;
      }
    }
    if (chosen == -2) {
      // Numerical fallback: take the solver's own column for this row.
      std::vector<std::vector<double>> sub;
      std::vector<int> free_cols;
      for (int j = 0; j < cols; ++j) {
        if (!used[j]) free_cols.push_back(j);
      }
      for (int r = i; r < rows; ++r) {
        std::vector<double> row;
        for (int j : free_cols) row.push_back(score[r][j]);
        sub.push_back(std::move(row));
      }
      std::vector<int> sub_assignment;
      padded_max(sub, rows - i, static_cast<int>(free_cols.size()),
                 &sub_assignment);
      chosen = sub_assignment[0] >= 0 ? free_cols[sub_assignment[0]] : -1;
      chosen_score = chosen >= 0 ? score[i][chosen] : 0.0;
    }
    row_to_col[i] = chosen;
    if (chosen >= 0) {
      used[chosen] = 1;
      fixed += chosen_score;
    } else {
      --dummies_left;
    }
  }
  return best;
}

MatchResult match_instances(const std::vector<EntityInstance>& gt,
                            const std::vector<EntityInstance>& pred,
                            const EvalConfig& cfg, const SynonymLexicon& lexicon,
                            EmbeddingProvider& embedder) {
  MatchResult result;
  std::size_t n = gt.size();
  std::size_t m = pred.size();
  if (n == 0 || m == 0) {
    for (std::size_t i = 0; i < n; ++i) result.unmatched_gt.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < m; ++j) result.unmatched_pred.push_back(static_cast<int>(j));
    return result;
  }

  // Each distinct tag is embedded once per call.
  std::unordered_map<std::string, std::vector<double>> embeddings;
  auto embedding_of = [&](const std::string& tag) -> const std::vector<double>& {
    auto it = embeddings.find(tag);
    if (it == embeddings.end()) {
      it = embeddings.emplace(tag, embedder.embed(tag)).first;
    }
    return it->second;
  };
  for (const auto& instance : gt) embedding_of(instance.tag);
  for (const auto& instance : pred) embedding_of(instance.tag);

  std::vector<std::vector<SimilarityComponents>> sim(
      n, std::vector<SimilarityComponents>(m));
  std::vector<std::vector<double>> overlap(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> score(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double cos = cosine(embedding_of(gt[i].tag), embedding_of(pred[j].tag));
      sim[i][j] = combine_similarity(gt[i].tag, pred[j].tag, lexicon, cos, cfg.mu);
      overlap[i][j] = iou(gt[i].box, pred[j].box);
      score[i][j] = sim[i][j].total + overlap[i][j];
    }
  }

  std::vector<int> row_to_col;
  solve_assignment(score, row_to_col);

  std::vector<char> pred_used(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int j = row_to_col[i];
    if (j < 0) {
      result.unmatched_gt.push_back(static_cast<int>(i));
      continue;
    }
    pred_used[static_cast<std::size_t>(j)] = 1;
    PairMatch pair;
    pair.gt_index = static_cast<int>(i);
    pair.pred_index = j;
    pair.similarity = sim[i][static_cast<std::size_t>(j)].total;
    pair.iou = overlap[i][static_cast<std::size_t>(j)];
    pair.tag_consistent = pair.similarity >= cfg.delta_t;
    pair.loc_consistent = pair.tag_consistent && pair.iou >= cfg.delta_l;
    result.pairs.push_back(pair);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!pred_used[j]) result.unmatched_pred.push_back(static_cast<int>(j));
  }
  return result;
}

}  // namespace pancap
