#include "nirx/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "nirx/errors.hpp"
#include "nirx/snapshot.hpp"
#include "rng.hpp"
#include "text_util.hpp"

namespace nirx {

RankOrUnfound first_relevant_rank(std::span<const std::string> ranking, const Judgments& judgments,
                                  int threshold) {
  if (ranking.empty()) throw ContractViolation("first_relevant_rank: empty ranking");
  for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
    auto it = judgments.find(ranking[pos]);
    if (it != judgments.end() && it->second >= threshold) return static_cast<int>(pos + 1);
  }
  return std::nullopt;
}

std::optional<int> rank_delta(RankOrUnfound baseline, RankOrUnfound model) {
  if (!baseline || !model) return std::nullopt;
  return *baseline - *model;
}

std::optional<double> median_metric(std::span<const std::optional<double>> values) {
  if (values.empty()) throw ContractViolation("median_metric: empty list");
  std::vector<std::optional<double>> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (!a) return false;
    if (!b) return true;
    return *a < *b;
  });
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  const auto& lo = sorted[n / 2 - 1];
  const auto& hi = sorted[n / 2];
  if (!lo || !hi) return std::nullopt;
  return (*lo + *hi) / 2.0;
}

std::optional<double> median_metric(std::span<const RankOrUnfound> values) {
  std::vector<std::optional<double>> widened;
  widened.reserve(values.size());
  for (const auto& v : values) widened.push_back(v ? std::optional<double>(*v) : std::nullopt);
  return median_metric(std::span<const std::optional<double>>(widened));
}

std::optional<std::vector<double>> query_vector(std::span<const std::string> query,
                                                const EmbeddingTable& table) {
  if (query.empty()) throw ContractViolation("query_vector: empty query");
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t found = 0;
  for (const auto& term : query) {
    const auto* tv = table.lookup(term);
    if (!tv) continue;
    ++found;
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += tv->vector[c];
  }
  if (found == 0) return std::nullopt;
  double sq = 0.0;
  for (auto& x : sum) {
    x /= static_cast<double>(found);
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  // Terms that cancel out exactly leave no direction to cluster on.
  if (!(norm > 0.0)) return std::nullopt;
  for (auto& x : sum) x /= norm;
  return sum;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double within_cluster_cost(std::span<const std::vector<double>> points,
                           std::span<const int> assignment,
                           std::span<const std::vector<double>> centroids) {
  double cost = 0.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    cost += 1.0 - dot(points[p], centroids[static_cast<std::size_t>(assignment[p])]);
  }
  return cost;
}

KMeansResult spherical_kmeans(std::span<const std::vector<double>> points, std::size_t k,
                              std::uint64_t seed, int max_iterations) {
  if (k == 0) throw ContractViolation("spherical_kmeans: k must be >= 1");
  if (points.size() < k) {
    throw Error("cannot form " + std::to_string(k) + " clusters from " +
                std::to_string(points.size()) + " vectors");
  }
  const std::size_t n = points.size();
  detail::Rng rng(seed);
  KMeansResult r;

  // k-means++ seeding with squared cosine distance.
  r.centroids.push_back(points[rng.below(n)]);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (r.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double d = std::max(0.0, 1.0 - dot(points[p], r.centroids.back()));
      nearest[p] = std::min(nearest[p], d * d);
      total += nearest[p];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (nearest[p] <= 0.0) continue;
        acc += nearest[p];
        if (acc > target) {
          pick = p;
          break;
        }
      }
      while (nearest[pick] <= 0.0) --pick;  // rounding left target past the last mass
    } else {
      pick = rng.below(n);
    }
    r.centroids.push_back(points[pick]);
  }

  r.assignment.assign(n, -1);
  std::vector<int> next(n);
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t p = 0; p < n; ++p) {
      int best = 0;
      double best_sim = dot(points[p], r.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double s = dot(points[p], r.centroids[c]);
        if (s > best_sim) {
          best_sim = s;
          best = static_cast<int>(c);
        }
      }
      next[p] = best;
    }
    if (iter == 0) r.cost_history.push_back(within_cluster_cost(points, next, r.centroids));
    if (next == r.assignment) break;
    r.assignment = next;
    r.iterations = iter + 1;

    std::vector<std::size_t> sizes(k, 0);
    for (int a : r.assignment) ++sizes[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      // Reseed with the point farthest from its own centroid, taken from a
      // cluster that can spare it.
      std::size_t far = n;
      double far_dist = -1.0;
      for (std::size_t p = 0; p < n; ++p) {
        const auto a = static_cast<std::size_t>(r.assignment[p]);
        if (sizes[a] < 2) continue;
        const double d = 1.0 - dot(points[p], r.centroids[a]);
        if (d > far_dist) {
          far_dist = d;
          far = p;
        }
      }
      if (far == n) continue;
      --sizes[static_cast<std::size_t>(r.assignment[far])];
      r.assignment[far] = static_cast<int>(c);
      sizes[c] = 1;
      r.centroids[c] = points[far];
    }

    const std::size_t dim = points[0].size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    for (std::size_t p = 0; p < n; ++p) {
      auto& s = sums[static_cast<std::size_t>(r.assignment[p])];
      for (std::size_t d = 0; d < dim; ++d) s[d] += points[p][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double norm = std::sqrt(dot(sums[c], sums[c]));
      if (!(norm > 0.0)) continue;  // members cancel out; keep the previous centroid
      for (auto& x : sums[c]) x /= norm;
      r.centroids[c] = std::move(sums[c]);
    }
    r.cost_history.push_back(within_cluster_cost(points, r.assignment, r.centroids));
  }
  return r;
}

std::size_t default_cluster_count(std::size_t clusterable_queries) {
  if (clusterable_queries == 0) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(clusterable_queries / 2.0)));
  return std::min(std::max<std::size_t>(2, k), clusterable_queries);
}

std::vector<Cluster> cluster_queries(const std::map<std::string, std::vector<double>>& vectors,
                                     std::size_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> points;
  for (const auto& [id, v] : vectors) {
    ids.push_back(id);
    points.push_back(v);
  }
  const auto result = spherical_kmeans(points, k, seed);

  std::vector<std::vector<std::string>> members(k);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    members[static_cast<std::size_t>(result.assignment[p])].push_back(ids[p]);
  }
  // Ids are sorted, so each member list's front is its smallest id.
  std::erase_if(members, [](const auto& m) { return m.empty(); });
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  std::vector<Cluster> out;
  for (std::size_t c = 0; c < members.size(); ++c) {
    Cluster cl;
    cl.cluster_id = "c" + std::to_string(c);
    cl.member_query_ids = std::move(members[c]);
    out.push_back(std::move(cl));
  }
  return out;
}

const std::set<std::string, std::less<>>& stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",       "about",   "above",  "after",  "again",   "against", "all",    "am",
      "an",      "and",     "any",    "are",    "as",      "at",      "be",     "because",
      "been",    "before",  "being",  "below",  "between", "both",    "but",    "by",
      "can",     "could",   "did",    "do",     "does",    "doing",   "down",   "during",
      "each",    "few",     "for",    "from",   "further", "had",     "has",    "have",
      "having",  "he",      "her",    "here",   "hers",    "herself", "him",    "himself",
      "his",     "how",     "i",      "if",     "in",      "into",    "is",     "it",
      "its",     "itself",  "just",   "me",     "more",    "most",    "my",     "myself",
      "no",      "nor",     "not",    "now",    "of",      "off",     "on",     "once",
      "only",    "or",      "other",  "our",    "ours",    "out",     "over",   "own",
      "same",    "she",     "should", "so",     "some",    "such",    "than",   "that",
      "the",     "their",   "theirs", "them",   "then",    "there",   "these",  "they",
      "this",    "those",   "through", "to",    "too",     "under",   "until",  "up",
      "very",    "was",     "we",     "were",   "what",    "when",    "where",  "which",
      "while",   "who",     "whom",   "why",    "will",    "with",    "would",  "you",
      "your",    "yours",   "yourself", "define", "definition", "meaning", "mean", "s",
  };
  return words;
}

std::string auto_title(const Cluster& cluster,
                       const std::map<std::string, std::vector<std::string>>& query_terms,
                       const std::map<std::string, std::string>& overrides) {
  if (auto it = overrides.find(cluster.cluster_id); it != overrides.end()) return it->second;

  std::map<std::string, int> freq;
  const auto& stop = stopwords();
  for (const auto& qid : cluster.member_query_ids) {
    auto it = query_terms.find(qid);
    if (it == query_terms.end()) continue;
    for (const auto& t : it->second) {
      if (!stop.count(t)) ++freq[t];
    }
  }
  std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.empty()) return "cluster-" + cluster.cluster_id;
  std::string title;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i) {
    if (i) title += '-';
    title += ranked[i].first;
  }
  return title;
}

std::map<std::string, std::string> parse_title_overrides(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(source, line_no, "expected clusterId<TAB>title");
    }
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

void attach_cluster_medians(std::vector<Cluster>& clusters,
                            const std::map<std::string, QuerySummary>& summaries) {
  for (auto& c : clusters) {
    std::vector<std::optional<double>> ranks, deltas;
    for (const auto& qid : c.member_query_ids) {
      const auto& s = summaries.at(qid);
      ranks.push_back(s.first_relevant_rank ? std::optional<double>(*s.first_relevant_rank) : std::nullopt);
      deltas.push_back(s.delta ? std::optional<double>(*s.delta) : std::nullopt);
    }
    if (ranks.empty()) continue;
    c.median_first_relevant_rank = median_metric(std::span<const std::optional<double>>(ranks));
    c.median_delta = median_metric(std::span<const std::optional<double>>(deltas));
  }
}

KernelDiagnostics kernel_diagnostics(const RunSnapshot& snapshot) {
  const std::size_t kc = snapshot.bank.size();
  KernelDiagnostics d;
  for (const auto& k : snapshot.bank.kernels) d.mus.push_back(k.mu);
  d.mean_abs_contribution.assign(kc, 0.0);
  d.mean_within_query_variance.assign(kc, 0.0);

  std::size_t pairs = 0;
  std::size_t queries_with_candidates = 0;
  for (const auto& [qid, docs] : snapshot.reranked) {
    if (docs.empty()) continue;
    ++queries_with_candidates;
    pairs += docs.size();
    for (std::size_t k = 0; k < kc; ++k) {
      double sum = 0.0;
      bool constant = true;
      const double first = docs.front().breakdown.contribution[k];
      for (const auto& doc : docs) {
        const double c = doc.breakdown.contribution[k];
        d.mean_abs_contribution[k] += std::abs(c);
        sum += c;
        constant = constant && c == first;
      }
      double var = 0.0;
      if (!constant) {
        const double mean = sum / static_cast<double>(docs.size());
        for (const auto& doc : docs) {
          const double dev = doc.breakdown.contribution[k] - mean;
          var += dev * dev;
        }
        var /= static_cast<double>(docs.size());
      }
      d.mean_within_query_variance[k] += var;
    }

    const Judgments empty;
    auto jit = snapshot.qrels.find(qid);
    const Judgments& judged = jit == snapshot.qrels.end() ? empty : jit->second;
    std::optional<int> first_unjudged, first_relevant;
    for (const auto& doc : docs) {
      auto it = judged.find(doc.doc_id);
      if (it == judged.end()) {
        if (!first_unjudged) first_unjudged = doc.rank;
      } else if (it->second >= snapshot.relevance_threshold && !first_relevant) {
        first_relevant = doc.rank;
      }
    }
    if (first_unjudged && (!first_relevant || *first_unjudged < *first_relevant)) {
      ++d.unjudged_above_judged;
      d.flagged_queries.push_back(qid);
    }
  }
  for (std::size_t k = 0; k < kc; ++k) {
    if (pairs) d.mean_abs_contribution[k] /= static_cast<double>(pairs);
    if (queries_with_candidates) d.mean_within_query_variance[k] /= static_cast<double>(queries_with_candidates);
  }
  return d;
}

namespace {

std::optional<std::size_t> kernel_index(const KernelDiagnostics& d, double mu) {
  for (std::size_t k = 0; k < d.mus.size(); ++k) {
    if (std::abs(d.mus[k] - mu) < 1e-12) return k;
  }
  return std::nullopt;
}

}  // namespace

std::string diagnostics_to_text(const KernelDiagnostics& d) {
  std::ostringstream out;
  out << "kernel\tmu\tmean_abs_contribution\twithin_query_variance\n";
  for (std::size_t k = 0; k < d.mus.size(); ++k) {
    out << k << '\t' << detail::format_double(d.mus[k]) << '\t'
        << detail::format_double(d.mean_abs_contribution[k]) << '\t'
        << detail::format_double(d.mean_within_query_variance[k]) << '\n';
  }
  const auto exact = kernel_index(d, 1.0);
  const auto close = kernel_index(d, 0.9);
  if (exact && close) {
    const bool below = d.mean_within_query_variance[*exact] < d.mean_within_query_variance[*close];
    out << "exact-match kernel (mu=1) variance " << (below ? "<" : ">=")
        << " mu=0.9 kernel variance\n";
  }
  out << "unjudged_above_judged\t" << d.unjudged_above_judged << '\n';
  for (const auto& q : d.flagged_queries) out << "flagged\t" << q << '\n';
  return out.str();
}

std::string diagnostics_to_json(const KernelDiagnostics& d) {
  nlohmann::json j;
  j["kernels"] = nlohmann::json::array();
  for (std::size_t k = 0; k < d.mus.size(); ++k) {
    j["kernels"].push_back({{"index", k},
                            {"mu", d.mus[k]},
                            {"meanAbsContribution", d.mean_abs_contribution[k]},
                            {"withinQueryVariance", d.mean_within_query_variance[k]}});
  }
  j["unjudgedAboveJudged"] = d.unjudged_above_judged;
  j["flaggedQueries"] = d.flagged_queries;
  return j.dump(2) + "\n";
}

}  // namespace nirx
