#include "nirx/explorer_api.hpp"

#include <algorithm>
#include <charconv>
#include <vector>

#include "rng.hpp"
#include "text_util.hpp"

namespace nirx {

using nlohmann::json;

namespace {

json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json tokens_dto(const std::vector<Token>& tokens, const std::vector<bool>& oov) {
  json out = json::array();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.push_back({{"term", tokens[i].text},
                   {"begin", tokens[i].begin},
                   {"end", tokens[i].end},
                   {"oov", static_cast<bool>(oov[i])}});
  }
  return out;
}

json summary_fields(const QuerySummary& s) {
  return {{"queryId", s.query_id},
          {"text", s.text},
          {"firstRelevantRank", optional_json(s.first_relevant_rank)},
          {"baselineFirstRelevantRank", optional_json(s.baseline_first_relevant_rank)},
          {"delta", optional_json(s.delta)},
          {"judgedCount", s.judged_count}};
}

const Judgments& judgments_for(const RunSnapshot& s, const std::string& qid) {
  static const Judgments empty;
  auto it = s.qrels.find(qid);
  return it == s.qrels.end() ? empty : it->second;
}

ApiResponse error(int status, const std::string& message) {
  return {status, json{{"error", message}, {"status", status}}.dump()};
}

ApiResponse ok(const json& body) { return {200, body.dump()}; }

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t start = i;
    while (i < path.size() && path[i] != '/') ++i;
    if (i > start) out.push_back(path.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_int(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Orders present values by `less` in the requested direction, missing values last.
template <typename T>
int compare_optional(const std::optional<T>& a, const std::optional<T>& b, bool descending) {
  if (a && b) {
    if (*a == *b) return 0;
    const bool lt = *a < *b;
    return (lt != descending) ? -1 : 1;
  }
  if (a) return -1;
  if (b) return 1;
  return 0;
}

int compare_string(const std::string& a, const std::string& b, bool descending) {
  if (a == b) return 0;
  return ((a < b) != descending) ? -1 : 1;
}

bool matches_prefix(const RunSnapshot& s, const std::string& qid, const std::string& prefix) {
  if (prefix.empty()) return true;
  for (const auto& t : s.queries.at(qid).terms) {
    if (t.compare(0, prefix.size(), prefix) == 0) return true;
  }
  return false;
}

}  // namespace

json kernel_bank_dto(const KernelBank& bank) {
  json mus = json::array(), sigmas = json::array(), weights = json::array();
  for (const auto& k : bank.kernels) {
    mus.push_back(k.mu);
    sigmas.push_back(k.sigma);
    weights.push_back(k.weight);
  }
  return {{"mus", mus}, {"sigmas", sigmas}, {"weights", weights}, {"bias", bank.bias}};
}

json meta_dto(const RunSnapshot& s) {
  std::size_t unclustered = 0;
  for (const auto& c : s.clusters) {
    if (c.cluster_id == kUnclusteredId) unclustered = c.member_query_ids.size();
  }
  return {{"collection", s.collection},
          {"queryCount", s.queries.size()},
          {"documentCount", s.docs.size()},
          {"candidateDepth", s.candidate_depth},
          {"clusterCount", s.kmeans_cluster_count},
          {"unclusteredCount", unclustered},
          {"kernelBank", kernel_bank_dto(s.bank)},
          {"buildTimestamp", s.build_timestamp},
          {"seed", s.seed},
          {"relevanceThreshold", s.relevance_threshold},
          {"embeddingDimension", s.table ? s.table->dimension() : 0},
          {"vocabularySize", s.table ? s.table->size() : 0}};
}

json clusters_dto(const RunSnapshot& s, const ClusterQuery& q) {
  const bool desc = q.descending.value_or(q.sort == ClusterSort::kDelta);
  const std::string prefix = detail::ascii_lower(q.filter);

  struct Card {
    const Cluster* cluster;
    std::vector<const QuerySummary*> queries;
  };
  std::vector<Card> cards;
  for (const auto& c : s.clusters) {
    Card card{&c, {}};
    for (const auto& qid : c.member_query_ids) {
      if (matches_prefix(s, qid, prefix)) card.queries.push_back(&s.summaries.at(qid));
    }
    if (!card.queries.empty()) cards.push_back(std::move(card));
  }

  if (q.sort == ClusterSort::kRandom) {
    detail::Rng rng(q.seed);
    rng.shuffle(cards);
    for (auto& card : cards) rng.shuffle(card.queries);
  } else {
    auto cluster_cmp = [&](const Card& a, const Card& b) {
      int c = 0;
      switch (q.sort) {
        case ClusterSort::kMedian:
          c = compare_optional(a.cluster->median_first_relevant_rank, b.cluster->median_first_relevant_rank, desc);
          break;
        case ClusterSort::kDelta:
          c = compare_optional(a.cluster->median_delta, b.cluster->median_delta, desc);
          break;
        default:
          c = compare_string(a.cluster->title, b.cluster->title, desc);
      }
      if (c != 0) return c < 0;
      return a.cluster->cluster_id < b.cluster->cluster_id;
    };
    auto query_cmp = [&](const QuerySummary* a, const QuerySummary* b) {
      int c = 0;
      switch (q.sort) {
        case ClusterSort::kMedian:
          c = compare_optional(a->first_relevant_rank, b->first_relevant_rank, desc);
          break;
        case ClusterSort::kDelta:
          c = compare_optional(a->delta, b->delta, desc);
          break;
        default:
          c = compare_string(a->text, b->text, desc);
      }
      if (c != 0) return c < 0;
      return a->query_id < b->query_id;
    };
    std::sort(cards.begin(), cards.end(), cluster_cmp);
    for (auto& card : cards) std::sort(card.queries.begin(), card.queries.end(), query_cmp);
  }

  json out = json::array();
  for (const auto& card : cards) {
    json queries = json::array();
    for (const auto* qs : card.queries) queries.push_back(summary_fields(*qs));
    const std::size_t n = card.queries.size();
    out.push_back({{"clusterId", card.cluster->cluster_id},
                   {"title", card.cluster->title},
                   {"medianFirstRelevantRank", optional_json(card.cluster->median_first_relevant_rank)},
                   {"medianDelta", optional_json(card.cluster->median_delta)},
                   {"memberCount", card.cluster->member_query_ids.size()},
                   {"collapsedCount", n > kCollapsedVisible ? n - kCollapsedVisible : 0},
                   {"queries", std::move(queries)}});
  }
  return out;
}

json document_dto(const RunSnapshot& s, const std::string& qid, const ScoredDocument& d) {
  const auto& query = s.queries.at(qid);
  const auto& doc = s.docs.at(d.doc_id);
  const auto& judged = judgments_for(s, qid);

  const RunEntry* baseline = nullptr;
  for (const auto& e : s.baseline.at(qid)) {
    if (e.doc_id == d.doc_id) baseline = &e;
  }

  json per_kernel = json::array();
  for (std::size_t k = 0; k < s.bank.size(); ++k) {
    per_kernel.push_back({{"index", k},
                          {"mu", s.bank.kernels[k].mu},
                          {"phi", d.breakdown.phi[k]},
                          {"contribution", d.breakdown.contribution[k]}});
  }

  const auto matrix = build_similarity_matrix(query.terms, doc.terms, *s.table);
  const auto activations = apply_kernels(matrix, s.bank);
  const auto pooled = pool(activations);

  json rows = json::array();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < matrix.cols(); ++j) row.push_back(matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  json act = json::array();
  for (std::size_t k = 0; k < activations.kernel_count; ++k) {
    json per_query = json::array();
    for (std::size_t i = 0; i < activations.query_len; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < activations.doc_len; ++j) row.push_back(activations.at(i, j, k));
      per_query.push_back(std::move(row));
    }
    act.push_back(std::move(per_query));
  }
  json soft_tf = json::array();
  for (std::size_t i = 0; i < pooled.query_len; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < pooled.phi.size(); ++k) row.push_back(pooled.soft_tf_at(i, k));
    soft_tf.push_back(std::move(row));
  }

  auto jit = judged.find(d.doc_id);
  const bool is_judged = jit != judged.end();
  const auto first_rel = s.summaries.at(qid).first_relevant_rank;

  return {{"docId", d.doc_id},
          {"rank", d.rank},
          {"baselineRank", d.baseline_rank},
          {"baselineScore", baseline ? json(baseline->score) : json(nullptr)},
          {"overall", d.breakdown.overall},
          {"bias", d.breakdown.bias},
          {"perKernel", std::move(per_kernel)},
          {"judged", is_judged},
          {"grade", is_judged ? json(jit->second) : json(nullptr)},
          {"relevant", is_judged && jit->second >= s.relevance_threshold},
          {"unjudgedAboveFirstRelevant", !is_judged && (!first_rel || d.rank < *first_rel)},
          {"text", doc.text},
          {"tokens", tokens_dto(doc.tokens, matrix.doc_oov)},
          {"similarityMatrix", std::move(rows)},
          {"kernelActivations", {{"values", std::move(act)}, {"softTf", std::move(soft_tf)}}}};
}

std::optional<json> query_dto(const RunSnapshot& s, const std::string& qid, std::size_t offset,
                              std::size_t count) {
  auto it = s.reranked.find(qid);
  if (it == s.reranked.end()) return std::nullopt;
  const auto& docs = it->second;
  const auto& query = s.queries.at(qid);

  std::vector<bool> query_oov;
  for (const auto& t : query.terms) query_oov.push_back(!s.table->contains(t));

  json documents = json::array();
  const std::size_t begin = std::min(offset, docs.size());
  const std::size_t end = begin + std::min(count, docs.size() - begin);
  for (std::size_t r = begin; r < end; ++r) documents.push_back(document_dto(s, qid, docs[r]));

  json out = summary_fields(s.summaries.at(qid));
  out["queryTerms"] = tokens_dto(query.tokens, query_oov);
  out["totalDocuments"] = docs.size();
  out["offset"] = offset;
  out["count"] = count;
  out["kernelBank"] = kernel_bank_dto(s.bank);
  out["documents"] = std::move(documents);
  return out;
}

std::optional<json> compare_dto(const RunSnapshot& s, const std::string& qid, const std::string& left,
                                const std::string& right) {
  auto it = s.reranked.find(qid);
  if (it == s.reranked.end()) return std::nullopt;
  const ScoredDocument* l = nullptr;
  const ScoredDocument* r = nullptr;
  for (const auto& d : it->second) {
    if (d.doc_id == left) l = &d;
    if (d.doc_id == right) r = &d;
  }
  if (!l || !r) return std::nullopt;

  json pairs = json::array();
  for (std::size_t k = 0; k < s.bank.size(); ++k) {
    pairs.push_back({{"index", k},
                     {"mu", s.bank.kernels[k].mu},
                     {"leftPhi", l->breakdown.phi[k]},
                     {"rightPhi", r->breakdown.phi[k]},
                     {"leftContribution", l->breakdown.contribution[k]},
                     {"rightContribution", r->breakdown.contribution[k]}});
  }
  json out = summary_fields(s.summaries.at(qid));
  out["left"] = document_dto(s, qid, *l);
  out["right"] = document_dto(s, qid, *r);
  out["bias"] = s.bank.bias;
  out["perKernelPairs"] = std::move(pairs);
  out["kernelBank"] = kernel_bank_dto(s.bank);
  return out;
}

void ExplorerApi::publish(std::shared_ptr<const RunSnapshot> snapshot) {
  std::lock_guard lock(mutex_);
  snapshot_ = std::move(snapshot);
}

std::shared_ptr<const RunSnapshot> ExplorerApi::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

ApiResponse ExplorerApi::get(std::string_view path, const QueryParams& params) const {
  const auto parts = split_path(path);
  if (parts.empty() || parts[0] != "api") return error(404, "not found");
  const auto snap = snapshot();
  if (!snap) return error(503, "snapshot is still building");
  const auto& s = *snap;

  auto param = [&](const char* key) -> std::optional<std::string> {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
  };

  if (parts.size() == 2 && parts[1] == "meta") return ok(meta_dto(s));

  if (parts.size() == 2 && parts[1] == "clusters") {
    ClusterQuery q;
    const auto sort = param("sort").value_or("median");
    if (sort == "median") q.sort = ClusterSort::kMedian;
    else if (sort == "delta") q.sort = ClusterSort::kDelta;
    else if (sort == "alpha") q.sort = ClusterSort::kAlpha;
    else if (sort == "random") q.sort = ClusterSort::kRandom;
    else return error(400, "unknown sort key '" + sort + "'");
    if (auto order = param("order")) {
      if (*order == "asc") q.descending = false;
      else if (*order == "desc") q.descending = true;
      else return error(400, "order must be asc or desc");
    }
    q.filter = param("filter").value_or("");
    if (auto seed = param("seed")) {
      auto v = parse_int<std::uint64_t>(*seed);
      if (!v) return error(400, "seed must be a non-negative integer");
      q.seed = *v;
    }
    return ok(clusters_dto(s, q));
  }

  if (parts.size() == 3 && parts[1] == "query") {
    std::size_t paging[2] = {0, 10};
    const char* names[2] = {"offset", "count"};
    for (int i = 0; i < 2; ++i) {
      if (auto raw = param(names[i])) {
        auto v = parse_int<long long>(*raw);
        if (!v) return error(400, std::string(names[i]) + " must be an integer");
        if (*v < 0) return error(400, std::string(names[i]) + " must be non-negative");
        paging[i] = static_cast<std::size_t>(*v);
      }
    }
    auto dto = query_dto(s, std::string(parts[2]), paging[0], paging[1]);
    if (!dto) return error(404, "unknown query '" + std::string(parts[2]) + "'");
    return ok(*dto);
  }

  if (parts.size() == 5 && parts[1] == "compare") {
    const std::string qid(parts[2]);
    if (!s.reranked.count(qid)) return error(404, "unknown query '" + qid + "'");
    auto dto = compare_dto(s, qid, std::string(parts[3]), std::string(parts[4]));
    if (!dto) return error(404, "document is not a candidate for query '" + qid + "'");
    return ok(*dto);
  }

  return error(404, "not found");
}

}  // namespace nirx
