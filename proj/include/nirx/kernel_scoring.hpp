#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "nirx/embedding_store.hpp"

namespace nirx {

/// Gaussian kernel over cosine similarity.
struct Kernel {
  double mu = 0.0;     // center, in [-1, 1]
  double sigma = 0.1;  // width, > 0
  double weight = 0.0;
};

/// Ordered kernels (strictly decreasing mu) plus the scoring bias.
struct KernelBank {
  std::vector<Kernel> kernels;
  double bias = 0.0;

  std::size_t size() const noexcept { return kernels.size(); }

  /// Throws ContractViolation when the bank breaks its invariants.
  void validate() const;
};

/// The usual eleven-kernel layout: an exact-match kernel at 1.0 (sigma 0.001)
/// and ten kernels from 0.9 down to -0.9 in steps of 0.2 (sigma 0.1).
/// Weights are zero and must come from a model config.
KernelBank default_kernel_bank();

/// Reads a model config: a JSON object `{"kernels": [{"mu", "sigma", "weight"}...], "bias"}`.
/// Unknown fields are rejected with a ParseError naming the field.
KernelBank load_kernel_bank(std::istream& in, const std::string& source = "<model-config>");
KernelBank load_kernel_bank_file(const std::string& path);

/// Query-term x document-term cosine similarities, row-major.
struct SimilarityMatrix {
  std::vector<std::string> query_terms;
  std::vector<std::string> doc_terms;
  std::vector<double> values;
  std::vector<bool> query_oov;
  std::vector<bool> doc_oov;

  std::size_t rows() const noexcept { return query_terms.size(); }
  std::size_t cols() const noexcept { return doc_terms.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
};

/// Entry (i, j) is the cosine of the two term vectors, or 0 when either term is
/// out of vocabulary. Throws ContractViolation on an empty query or document.
SimilarityMatrix build_similarity_matrix(std::span<const std::string> query,
                                         std::span<const std::string> doc,
                                         const EmbeddingTable& table);

/// exp(-(u - mu)^2 / (2 sigma^2))
double kernel_value(double u, const Kernel& kernel);

/// Activation of every kernel on every matrix cell, laid out [k][i][j].
struct KernelActivations {
  std::size_t query_len = 0;
  std::size_t doc_len = 0;
  std::size_t kernel_count = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(k * query_len + i) * doc_len + j];
  }
};

KernelActivations apply_kernels(const SimilarityMatrix& matrix, const KernelBank& bank);

/// Floor applied before taking the log of a soft-TF sum.
inline constexpr double kSoftTfFloor = 1e-10;

/// Soft-TF pooling output. `soft_tf` is [i][k]: the activation mass of kernel k
/// summed over the document for query term i. `phi[k]` sums the clamped logs
/// over query terms.
struct PooledFeatures {
  std::size_t query_len = 0;
  std::vector<double> soft_tf;
  std::vector<double> phi;

  double soft_tf_at(std::size_t i, std::size_t k) const { return soft_tf[i * phi.size() + k]; }
};

PooledFeatures pool(const KernelActivations& activations);

/// Additive per-kernel decomposition of a document score:
/// overall = bias + sum_k contribution[k], contribution[k] = weight_k * phi[k].
struct ScoreBreakdown {
  double overall = 0.0;
  double bias = 0.0;
  std::vector<double> phi;
  std::vector<double> contribution;
};

/// Throws ContractViolation when the feature count differs from the bank size.
ScoreBreakdown score(std::span<const double> phi, const KernelBank& bank);

/// One re-ranking candidate. `baseline_rank` breaks score ties.
struct Candidate {
  std::string doc_id;
  int baseline_rank = 0;
  std::vector<std::string> tokens;
};

struct ScoredDocument {
  std::string doc_id;
  int rank = 0;
  int baseline_rank = 0;
  ScoreBreakdown breakdown;
};

/// Scores one document through the full pipeline.
ScoreBreakdown score_document(std::span<const std::string> query, std::span<const std::string> doc,
                              const EmbeddingTable& table, const KernelBank& bank);

/// Scores every candidate and orders them by overall score descending, then
/// baseline rank ascending, then doc id. Ranks are assigned 1..N.
/// Throws ContractViolation on an empty candidate list or an empty document.
std::vector<ScoredDocument> rerank(std::span<const std::string> query,
                                   std::span<const Candidate> candidates,
                                   const EmbeddingTable& table, const KernelBank& bank);

}  // namespace nirx
