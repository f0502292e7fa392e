#include "nirx/kernel_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "nirx/errors.hpp"

namespace nirx {

void KernelBank::validate() const {
  if (kernels.empty()) throw ContractViolation("kernel bank must hold at least one kernel");
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const auto& kn = kernels[k];
    if (!(kn.sigma > 0.0) || !std::isfinite(kn.sigma)) {
      throw ContractViolation("kernel " + std::to_string(k) + ": sigma must be > 0");
    }
    if (!(kn.mu >= -1.0 && kn.mu <= 1.0)) {
      throw ContractViolation("kernel " + std::to_string(k) + ": mu must lie in [-1, 1]");
    }
    if (!std::isfinite(kn.weight)) {
      throw ContractViolation("kernel " + std::to_string(k) + ": weight must be finite");
    }
    if (k > 0 && !(kn.mu < kernels[k - 1].mu)) {
      throw ContractViolation("kernel mus must be strictly decreasing");
    }
  }
  if (!std::isfinite(bias)) throw ContractViolation("bias must be finite");
}

KernelBank default_kernel_bank() {
  KernelBank bank;
  bank.kernels.push_back({1.0, 0.001, 0.0});
  for (double mu : {0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9}) {
    bank.kernels.push_back({mu, 0.1, 0.0});
  }
  return bank;
}

namespace {

using nlohmann::json;

double require_number(const json& obj, const char* key, const std::string& source,
                      const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, 0, where + ": missing field '" + key + "'");
  if (!it->is_number()) throw ParseError(source, 0, where + ": field '" + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

KernelBank load_kernel_bank(std::istream& in, const std::string& source) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(source, 0, "model config must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "kernels" && key != "bias") throw ParseError(source, 0, "unknown field '" + key + "'");
  }
  auto kit = doc.find("kernels");
  if (kit == doc.end() || !kit->is_array()) {
    throw ParseError(source, 0, "field 'kernels' must be an array");
  }

  KernelBank bank;
  bank.bias = require_number(doc, "bias", source, "model config");
  for (std::size_t k = 0; k < kit->size(); ++k) {
    const auto& entry = (*kit)[k];
    const std::string where = "kernels[" + std::to_string(k) + "]";
    if (!entry.is_object()) throw ParseError(source, 0, where + " must be an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "mu" && key != "sigma" && key != "weight") {
        throw ParseError(source, 0, where + ": unknown field '" + key + "'");
      }
    }
    bank.kernels.push_back({require_number(entry, "mu", source, where),
                            require_number(entry, "sigma", source, where),
                            require_number(entry, "weight", source, where)});
  }
  try {
    bank.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(source, 0, e.what());
  }
  return bank;
}

KernelBank load_kernel_bank_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return load_kernel_bank(in, path);
}

SimilarityMatrix build_similarity_matrix(std::span<const std::string> query,
                                         std::span<const std::string> doc,
                                         const EmbeddingTable& table) {
  if (query.empty()) throw ContractViolation("similarity matrix: empty query");
  if (doc.empty()) throw ContractViolation("similarity matrix: empty document");

  SimilarityMatrix m;
  m.query_terms.assign(query.begin(), query.end());
  m.doc_terms.assign(doc.begin(), doc.end());
  m.values.assign(query.size() * doc.size(), 0.0);

  std::vector<const TermVector*> qv(query.size()), dv(doc.size());
  m.query_oov.resize(query.size());
  m.doc_oov.resize(doc.size());
  for (std::size_t i = 0; i < query.size(); ++i) {
    qv[i] = table.lookup(query[i]);
    m.query_oov[i] = qv[i] == nullptr;
  }
  for (std::size_t j = 0; j < doc.size(); ++j) {
    dv[j] = table.lookup(doc[j]);
    m.doc_oov[j] = dv[j] == nullptr;
  }
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (!qv[i]) continue;
    for (std::size_t j = 0; j < doc.size(); ++j) {
      if (dv[j]) m.values[i * doc.size() + j] = cosine(*qv[i], *dv[j]);
    }
  }
  return m;
}

double kernel_value(double u, const Kernel& kernel) {
  const double diff = u - kernel.mu;
  return std::exp(-(diff * diff) / (2.0 * kernel.sigma * kernel.sigma));
}

KernelActivations apply_kernels(const SimilarityMatrix& matrix, const KernelBank& bank) {
  KernelActivations a;
  a.query_len = matrix.rows();
  a.doc_len = matrix.cols();
  a.kernel_count = bank.size();
  a.values.resize(a.kernel_count * a.query_len * a.doc_len);
  for (std::size_t k = 0; k < a.kernel_count; ++k) {
    for (std::size_t i = 0; i < a.query_len; ++i) {
      for (std::size_t j = 0; j < a.doc_len; ++j) {
        a.values[(k * a.query_len + i) * a.doc_len + j] = kernel_value(matrix.at(i, j), bank.kernels[k]);
      }
    }
  }
  return a;
}

PooledFeatures pool(const KernelActivations& activations) {
  const std::size_t n = activations.query_len;
  const std::size_t m = activations.doc_len;
  const std::size_t kc = activations.kernel_count;
  PooledFeatures out;
  out.query_len = n;
  out.soft_tf.assign(n * kc, 0.0);
  out.phi.assign(kc, 0.0);
  // Fixed summation order: document terms, then query terms, per kernel.
  for (std::size_t k = 0; k < kc; ++k) {
    double phi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += activations.at(i, j, k);
      out.soft_tf[i * kc + k] = s;
      phi += std::log(std::max(s, kSoftTfFloor));
    }
    out.phi[k] = phi;
  }
  return out;
}

ScoreBreakdown score(std::span<const double> phi, const KernelBank& bank) {
  if (phi.size() != bank.size()) throw ContractViolation("score: feature count differs from kernel count");
  ScoreBreakdown b;
  b.bias = bank.bias;
  b.phi.assign(phi.begin(), phi.end());
  b.contribution.resize(phi.size());
  double total = bank.bias;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    b.contribution[k] = bank.kernels[k].weight * phi[k];
    total += b.contribution[k];
  }
  b.overall = total;
  return b;
}

ScoreBreakdown score_document(std::span<const std::string> query, std::span<const std::string> doc,
                              const EmbeddingTable& table, const KernelBank& bank) {
  const auto matrix = build_similarity_matrix(query, doc, table);
  const auto features = pool(apply_kernels(matrix, bank));
  return score(features.phi, bank);
}

std::vector<ScoredDocument> rerank(std::span<const std::string> query,
                                   std::span<const Candidate> candidates,
                                   const EmbeddingTable& table, const KernelBank& bank) {
  if (candidates.empty()) throw ContractViolation("rerank: empty candidate list");
  std::vector<ScoredDocument> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back({c.doc_id, 0, c.baseline_rank, score_document(query, c.tokens, table, bank)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.breakdown.overall != b.breakdown.overall) return a.breakdown.overall > b.breakdown.overall;
    if (a.baseline_rank != b.baseline_rank) return a.baseline_rank < b.baseline_rank;
    return a.doc_id < b.doc_id;
  });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].rank = static_cast<int>(r + 1);
  return out;
}

}  // namespace nirx
