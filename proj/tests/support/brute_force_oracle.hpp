#pragma once

// Direct-formula scorer used as an independent check of the kernel-pooling
// pipeline. Works on raw (unnormalized) vectors and shares no code with the
// library: cosine = <u,v> / (|u||v|), Gaussian kernel, per-query-term sum over
// the document, clamped log, weighted sum plus bias.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct OracleKernel {
  double mu;
  double sigma;
  double weight;
};

using RawVectors = std::map<std::string, std::vector<double>>;

inline double raw_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline double term_similarity(const RawVectors& vecs, const std::string& q, const std::string& d) {
  auto qi = vecs.find(q);
  auto di = vecs.find(d);
  if (qi == vecs.end() || di == vecs.end()) return 0.0;
  return raw_cosine(qi->second, di->second);
}

inline std::vector<double> features(const RawVectors& vecs, const std::vector<std::string>& query,
                                    const std::vector<std::string>& doc,
                                    const std::vector<OracleKernel>& kernels) {
  std::vector<double> phi;
  for (const auto& k : kernels) {
    double total = 0.0;
    for (const auto& q : query) {
      double soft_tf = 0.0;
      for (const auto& d : doc) {
        const double u = term_similarity(vecs, q, d);
        soft_tf += std::exp(-std::pow(u - k.mu, 2) / (2 * k.sigma * k.sigma));
      }
      total += std::log(soft_tf < 1e-10 ? 1e-10 : soft_tf);
    }
    phi.push_back(total);
  }
  return phi;
}

inline double score(const RawVectors& vecs, const std::vector<std::string>& query,
                    const std::vector<std::string>& doc, const std::vector<OracleKernel>& kernels,
                    double bias) {
  const auto phi = features(vecs, query, doc, kernels);
  double s = bias;
  for (std::size_t k = 0; k < kernels.size(); ++k) s += kernels[k].weight * phi[k];
  return s;
}

struct OracleRanked {
  std::string doc_id;
  double score;
  int baseline_rank;
};

/// Scores and orders candidates (doc_id, baseline_rank, tokens) by score
/// descending, baseline rank, then doc id.
inline std::vector<OracleRanked> rank(
    const RawVectors& vecs, const std::vector<std::string>& query,
    const std::vector<std::tuple<std::string, int, std::vector<std::string>>>& candidates,
    const std::vector<OracleKernel>& kernels, double bias) {
  std::vector<OracleRanked> out;
  for (const auto& [id, base, toks] : candidates) out.push_back({id, score(vecs, query, toks, kernels, bias), base});
  std::sort(out.begin(), out.end(), [](const OracleRanked& a, const OracleRanked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.baseline_rank != b.baseline_rank) return a.baseline_rank < b.baseline_rank;
    return a.doc_id < b.doc_id;
  });
  return out;
}

}  // namespace oracle
