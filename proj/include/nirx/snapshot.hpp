#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nirx/analytics.hpp"
#include "nirx/embedding_store.hpp"
#include "nirx/kernel_scoring.hpp"
#include "nirx/run_ingest.hpp"

namespace nirx {

struct TextRecord {
  std::string text;
  std::vector<Token> tokens;
  std::vector<std::string> terms;  // token texts
};

TextRecord make_text_record(std::string text);

/// Everything the explorer serves, fully precomputed. Immutable once built.
struct RunSnapshot {
  std::string collection;
  std::string build_timestamp;
  int candidate_depth = 100;
  std::uint64_t seed = 0;
  int relevance_threshold = 1;

  std::map<std::string, TextRecord> queries;
  std::map<std::string, TextRecord> docs;
  std::map<std::string, std::vector<RunEntry>> baseline;   // by rank, capped at candidate_depth
  std::map<std::string, Judgments> qrels;
  std::map<std::string, std::vector<ScoredDocument>> reranked;
  std::map<std::string, QuerySummary> summaries;
  std::vector<Cluster> clusters;  // k-means clusters, then the unclustered bucket if nonempty
  std::size_t kmeans_cluster_count = 0;

  KernelBank bank;
  std::shared_ptr<const EmbeddingTable> table;  // restricted to the snapshot vocabulary

  /// Non-fatal notes from the build (dropped empty texts etc.). Not persisted.
  std::vector<std::string> warnings;
};

struct BuildOptions {
  std::optional<std::size_t> clusters_k;
  std::uint64_t seed = 42;
  int candidate_depth = 100;
  int relevance_threshold = 1;
  std::map<std::string, std::string> title_overrides;
  std::string collection;
  /// Empty: SOURCE_DATE_EPOCH when set, else the current UTC time.
  std::string build_timestamp;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Parsed inputs of a build.
struct IngestInputs {
  std::map<std::string, std::string> queries;
  std::map<std::string, std::string> docs;
  std::vector<RunEntry> run;
  std::vector<QrelEntry> qrels;
  EmbeddingTable table;
  KernelBank bank;
};

struct InputFiles {
  std::string queries;
  std::string docs;
  std::string run;
  std::string qrels;
  std::string embeddings;
  std::string model_config;
  std::string titles_override;  // optional
};

/// Tokenizes, re-ranks every query, computes metrics and clusters.
/// Throws BuildError listing every dangling query or document id.
RunSnapshot build_snapshot(IngestInputs inputs, BuildOptions options);

/// Parses every file and builds. Parse errors carry the file and line.
RunSnapshot build_snapshot(const InputFiles& files, BuildOptions options);

/// Single-file binary cache: "NIRX1" magic, then the snapshot fields.
void save_snapshot(const RunSnapshot& snapshot, std::ostream& out);
RunSnapshot load_snapshot(std::istream& in, const std::string& source = "<snapshot>");
void save_snapshot_file(const RunSnapshot& snapshot, const std::string& path);
RunSnapshot load_snapshot_file(const std::string& path);

}  // namespace nirx
