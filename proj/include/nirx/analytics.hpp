#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nirx/embedding_store.hpp"

namespace nirx {

struct RunSnapshot;

/// A 1-based rank; std::nullopt means no relevant document was found.
using RankOrUnfound = std::optional<int>;

/// docId -> relevance grade for one query.
using Judgments = std::map<std::string, int>;

struct QuerySummary {
  std::string query_id;
  std::string text;
  RankOrUnfound first_relevant_rank;
  RankOrUnfound baseline_first_relevant_rank;
  std::optional<int> delta;  // baseline - model; positive means the model moved it up
  int judged_count = 0;
};

/// 1-based position of the first doc whose grade is >= threshold.
/// Throws ContractViolation on an empty ranking.
RankOrUnfound first_relevant_rank(std::span<const std::string> ranking, const Judgments& judgments,
                                  int threshold = 1);

/// Defined only when both ranks are found.
std::optional<int> rank_delta(RankOrUnfound baseline, RankOrUnfound model);

/// Median where missing values sort after every finite value. The median is
/// missing when a middle element is. Throws ContractViolation on empty input.
std::optional<double> median_metric(std::span<const std::optional<double>> values);
std::optional<double> median_metric(std::span<const RankOrUnfound> values);

/// Normalized mean of the in-vocabulary term vectors; nullopt when every term
/// is out of vocabulary.
std::optional<std::vector<double>> query_vector(std::span<const std::string> query,
                                                const EmbeddingTable& table);

struct KMeansResult {
  std::vector<int> assignment;               // point -> cluster
  std::vector<std::vector<double>> centroids;
  std::vector<double> cost_history;          // within-cluster cosine cost per step
  int iterations = 0;
};

/// Spherical k-means with k-means++ seeding on unit vectors. Deterministic for
/// a given input order and seed. Throws Error when there are fewer points than k.
KMeansResult spherical_kmeans(std::span<const std::vector<double>> points, std::size_t k,
                              std::uint64_t seed, int max_iterations = 100);

/// Sum over points of 1 - <point, centroid of its cluster>.
double within_cluster_cost(std::span<const std::vector<double>> points,
                           std::span<const int> assignment,
                           std::span<const std::vector<double>> centroids);

struct Cluster {
  std::string cluster_id;
  std::string title;
  std::vector<std::string> member_query_ids;
  std::optional<double> median_first_relevant_rank;
  std::optional<double> median_delta;
};

inline constexpr const char* kUnclusteredId = "unclustered";

/// max(2, ceil(sqrt(n / 2))), never more than n.
std::size_t default_cluster_count(std::size_t clusterable_queries);

/// Clusters query vectors (iterated in key order). Clusters are numbered
/// c0, c1, ... by their smallest member id. Titles and medians are left empty.
std::vector<Cluster> cluster_queries(const std::map<std::string, std::vector<double>>& vectors,
                                     std::size_t k, std::uint64_t seed);

/// The fixed English stopword list used for titles.
const std::set<std::string, std::less<>>& stopwords();

/// Override when present; otherwise the three most frequent non-stopword terms
/// of the member queries (frequency descending, then alphabetical) joined by
/// '-', or "cluster-<id>" when nothing is left.
std::string auto_title(const Cluster& cluster,
                       const std::map<std::string, std::vector<std::string>>& query_terms,
                       const std::map<std::string, std::string>& overrides = {});

/// Reads "clusterId<TAB>title" lines.
std::map<std::string, std::string> parse_title_overrides(std::istream& in,
                                                         const std::string& source = "<titles>");

/// Fills both medians of every cluster from the per-query summaries.
void attach_cluster_medians(std::vector<Cluster>& clusters,
                            const std::map<std::string, QuerySummary>& summaries);

struct KernelDiagnostics {
  std::vector<double> mus;
  std::vector<double> mean_abs_contribution;
  std::vector<double> mean_within_query_variance;
  int unjudged_above_judged = 0;
  std::vector<std::string> flagged_queries;
};

/// Per-kernel contribution statistics over all scored candidates, plus the
/// number of queries where an unjudged document outranks the best judged
/// relevant one. Queries with no judged relevant candidate count when they
/// have any unjudged candidate.
KernelDiagnostics kernel_diagnostics(const RunSnapshot& snapshot);

std::string diagnostics_to_text(const KernelDiagnostics& d);
std::string diagnostics_to_json(const KernelDiagnostics& d);

}  // namespace nirx
