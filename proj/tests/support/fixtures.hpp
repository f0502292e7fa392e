#pragma once

#include <string>

#include "nirx/snapshot.hpp"

#ifndef NIRX_FIXTURE_DIR
#error "NIRX_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace fixtures {

inline std::string path(const std::string& relative) {
  return std::string(NIRX_FIXTURE_DIR) + "/" + relative;
}

inline nirx::InputFiles files(const std::string& set) {
  nirx::InputFiles f;
  f.queries = path(set + "/queries.tsv");
  f.docs = path(set + "/docs.tsv");
  f.run = path(set + "/run.bm25.txt");
  f.qrels = path(set + "/qrels.txt");
  f.embeddings = path(set + "/embeddings.txt");
  f.model_config = path(set + "/model.json");
  return f;
}

inline nirx::BuildOptions options() {
  nirx::BuildOptions o;
  o.build_timestamp = "2024-01-01T00:00:00Z";
  return o;
}

inline nirx::RunSnapshot build(const std::string& set) { return nirx::build_snapshot(files(set), options()); }

}  // namespace fixtures
