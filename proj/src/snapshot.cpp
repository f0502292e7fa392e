#include "nirx/snapshot.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "nirx/errors.hpp"

namespace nirx {

TextRecord make_text_record(std::string text) {
  TextRecord r;
  r.tokens = tokenize(text);
  r.terms = token_texts(r.tokens);
  r.text = std::move(text);
  return r;
}

namespace {

std::string resolve_timestamp(const std::string& requested) {
  if (!requested.empty()) return requested;
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

RunSnapshot build_snapshot(IngestInputs inputs, BuildOptions options) {
  if (options.candidate_depth < 1) throw BuildError("candidate depth must be >= 1");
  inputs.bank.validate();

  std::set<std::string> missing_queries, missing_docs;
  for (const auto& e : inputs.run) {
    if (!inputs.queries.count(e.query_id)) missing_queries.insert(e.query_id);
    if (!inputs.docs.count(e.doc_id)) missing_docs.insert(e.doc_id);
  }
  if (!missing_queries.empty() || !missing_docs.empty()) {
    std::string msg = "run references unknown ids;";
    if (!missing_queries.empty()) {
      msg += " queries:";
      for (const auto& q : missing_queries) msg += " " + q;
      msg += ";";
    }
    if (!missing_docs.empty()) {
      msg += " documents:";
      for (const auto& d : missing_docs) msg += " " + d;
    }
    throw BuildError(msg);
  }

  RunSnapshot snap;
  snap.collection = options.collection.empty() ? "collection" : options.collection;
  snap.build_timestamp = resolve_timestamp(options.build_timestamp);
  snap.candidate_depth = options.candidate_depth;
  snap.seed = options.seed;
  snap.relevance_threshold = options.relevance_threshold;
  snap.bank = inputs.bank;

  std::map<std::string, std::vector<RunEntry>> grouped;
  for (auto& e : inputs.run) grouped[e.query_id].push_back(std::move(e));

  for (auto& [qid, entries] : grouped) {
    auto query = make_text_record(inputs.queries.at(qid));
    if (query.terms.empty()) {
      snap.warnings.push_back("query " + qid + " has no tokens; dropped");
      continue;
    }
    std::sort(entries.begin(), entries.end(),
              [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    std::vector<RunEntry> kept;
    for (auto& e : entries) {
      if (kept.size() >= static_cast<std::size_t>(options.candidate_depth)) break;
      auto dit = snap.docs.find(e.doc_id);
      if (dit == snap.docs.end()) {
        dit = snap.docs.emplace(e.doc_id, make_text_record(inputs.docs.at(e.doc_id))).first;
      }
      if (dit->second.terms.empty()) {
        snap.warnings.push_back("document " + e.doc_id + " has no tokens; dropped from " + qid);
        continue;
      }
      kept.push_back(std::move(e));
    }
    if (kept.empty()) {
      snap.warnings.push_back("query " + qid + " has no usable candidates; dropped");
      continue;
    }
    snap.queries.emplace(qid, std::move(query));
    snap.baseline.emplace(qid, std::move(kept));
  }
  std::erase_if(snap.docs, [](const auto& kv) { return kv.second.terms.empty(); });

  for (auto& q : inputs.qrels) {
    if (snap.queries.count(q.query_id)) snap.qrels[q.query_id][q.doc_id] = q.relevance;
  }

  std::set<std::string> vocab;
  for (const auto& [_, r] : snap.queries) vocab.insert(r.terms.begin(), r.terms.end());
  for (const auto& [_, r] : snap.docs) vocab.insert(r.terms.begin(), r.terms.end());
  const std::vector<std::string> vocab_list(vocab.begin(), vocab.end());
  snap.table = std::make_shared<const EmbeddingTable>(inputs.table.restricted_to(vocab_list));
  const EmbeddingTable& table = *snap.table;

  std::vector<std::string> qids;
  for (const auto& [qid, _] : snap.baseline) qids.push_back(qid);
  std::vector<std::vector<ScoredDocument>> ranked(qids.size());
  parallel_for(qids.size(), options.threads, [&](std::size_t i) {
    const auto& entries = snap.baseline.at(qids[i]);
    std::vector<Candidate> candidates;
    candidates.reserve(entries.size());
    for (const auto& e : entries) candidates.push_back({e.doc_id, e.rank, snap.docs.at(e.doc_id).terms});
    ranked[i] = rerank(snap.queries.at(qids[i]).terms, candidates, table, snap.bank);
  });
  for (std::size_t i = 0; i < qids.size(); ++i) snap.reranked.emplace(qids[i], std::move(ranked[i]));

  const Judgments no_judgments;
  std::map<std::string, std::vector<double>> vectors;
  std::vector<std::string> unclustered;
  for (const auto& qid : qids) {
    auto jit = snap.qrels.find(qid);
    const Judgments& judged = jit == snap.qrels.end() ? no_judgments : jit->second;
    std::vector<std::string> model_order, baseline_order;
    for (const auto& d : snap.reranked.at(qid)) model_order.push_back(d.doc_id);
    for (const auto& e : snap.baseline.at(qid)) baseline_order.push_back(e.doc_id);

    QuerySummary s;
    s.query_id = qid;
    s.text = snap.queries.at(qid).text;
    s.first_relevant_rank = first_relevant_rank(model_order, judged, snap.relevance_threshold);
    s.baseline_first_relevant_rank = first_relevant_rank(baseline_order, judged, snap.relevance_threshold);
    s.delta = rank_delta(s.baseline_first_relevant_rank, s.first_relevant_rank);
    s.judged_count = static_cast<int>(judged.size());
    snap.summaries.emplace(qid, std::move(s));

    if (auto v = query_vector(snap.queries.at(qid).terms, table)) {
      vectors.emplace(qid, std::move(*v));
    } else {
      unclustered.push_back(qid);
    }
  }

  if (!vectors.empty()) {
    const std::size_t k = options.clusters_k.value_or(default_cluster_count(vectors.size()));
    snap.clusters = cluster_queries(vectors, k, options.seed);
  }
  snap.kmeans_cluster_count = snap.clusters.size();
  if (!unclustered.empty()) {
    Cluster bucket;
    bucket.cluster_id = kUnclusteredId;
    bucket.member_query_ids = std::move(unclustered);
    snap.clusters.push_back(std::move(bucket));
  }

  std::map<std::string, std::vector<std::string>> query_terms;
  for (const auto& [qid, r] : snap.queries) query_terms.emplace(qid, r.terms);
  for (auto& c : snap.clusters) {
    if (c.cluster_id == kUnclusteredId && !options.title_overrides.count(c.cluster_id)) {
      c.title = kUnclusteredId;
    } else {
      c.title = auto_title(c, query_terms, options.title_overrides);
    }
  }
  attach_cluster_medians(snap.clusters, snap.summaries);
  return snap;
}

RunSnapshot build_snapshot(const InputFiles& files, BuildOptions options) {
  IngestInputs inputs;
  inputs.queries = parse_tsv_texts_file(files.queries);
  inputs.docs = parse_tsv_texts_file(files.docs);
  inputs.run = parse_run_file(files.run);
  inputs.qrels = parse_qrels_file(files.qrels);
  inputs.table = load_embeddings_file(files.embeddings);
  inputs.bank = load_kernel_bank_file(files.model_config);
  if (!files.titles_override.empty()) {
    std::ifstream in(files.titles_override, std::ios::binary);
    if (!in) throw ParseError(files.titles_override, 0, "cannot open file");
    auto overrides = parse_title_overrides(in, files.titles_override);
    for (auto& [id, title] : overrides) options.title_overrides[id] = std::move(title);
  }
  if (options.collection.empty()) {
    auto name = files.docs;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    if (auto dot = name.find('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    options.collection = name;
  }
  return build_snapshot(std::move(inputs), std::move(options));
}

}  // namespace nirx
