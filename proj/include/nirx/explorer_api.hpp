#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nirx/snapshot.hpp"

namespace nirx {

using QueryParams = std::map<std::string, std::string>;

struct ApiResponse {
  int status = 200;
  std::string body;
};

enum class ClusterSort { kMedian, kDelta, kAlpha, kRandom };

/// Parameters of /api/clusters. `descending` unset means the key's default
/// direction (descending for delta, ascending otherwise).
struct ClusterQuery {
  ClusterSort sort = ClusterSort::kMedian;
  std::optional<bool> descending;
  std::string filter;
  std::uint64_t seed = 0;
};

/// Queries shown on a collapsed cluster card.
inline constexpr std::size_t kCollapsedVisible = 3;

nlohmann::json kernel_bank_dto(const KernelBank& bank);
nlohmann::json meta_dto(const RunSnapshot& snapshot);
nlohmann::json clusters_dto(const RunSnapshot& snapshot, const ClusterQuery& query);

/// Full payload of one re-ranked document of `query_id`: scores, judgment,
/// tokens, similarity matrix and kernel activations.
nlohmann::json document_dto(const RunSnapshot& snapshot, const std::string& query_id,
                            const ScoredDocument& doc);

/// Nullopt when the query is unknown.
std::optional<nlohmann::json> query_dto(const RunSnapshot& snapshot, const std::string& query_id,
                                        std::size_t offset, std::size_t count);

/// Nullopt when the query is unknown or either document is not one of its candidates.
std::optional<nlohmann::json> compare_dto(const RunSnapshot& snapshot, const std::string& query_id,
                                          const std::string& left, const std::string& right);

/// Read-only request router over a published snapshot. Until a snapshot is
/// published every endpoint answers 503. Thread-safe.
class ExplorerApi {
 public:
  ExplorerApi() = default;
  explicit ExplorerApi(std::shared_ptr<const RunSnapshot> snapshot) : snapshot_(std::move(snapshot)) {}

  void publish(std::shared_ptr<const RunSnapshot> snapshot);
  std::shared_ptr<const RunSnapshot> snapshot() const;
  bool ready() const { return snapshot() != nullptr; }

  /// `path` is the decoded URL path, e.g. "/api/query/q1".
  ApiResponse get(std::string_view path, const QueryParams& params = {}) const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const RunSnapshot> snapshot_;
};

}  // namespace nirx
