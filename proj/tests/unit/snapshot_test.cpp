#include <algorithm>
#include <cmath>
#include <sstream>

#include "gtest/gtest.h"

#include "../support/fixtures.hpp"
#include "nirx/analytics.hpp"
#include "nirx/errors.hpp"
#include "nirx/snapshot.hpp"

namespace nirx {
namespace {

class DeskSnapshot : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { snap_ = new RunSnapshot(fixtures::build("desk")); }
  static void TearDownTestSuite() {
    delete snap_;
    snap_ = nullptr;
  }
  static const RunSnapshot& snap() { return *snap_; }

 private:
  static RunSnapshot* snap_;
};
RunSnapshot* DeskSnapshot::snap_ = nullptr;

TEST_F(DeskSnapshot, Shape) {
  EXPECT_EQ(snap().collection, "docs");
  EXPECT_EQ(snap().queries.size(), 20u);
  EXPECT_EQ(snap().docs.size(), 100u);
  EXPECT_EQ(snap().reranked.size(), 20u);
  for (const auto& [qid, docs] : snap().reranked) {
    ASSERT_EQ(docs.size(), 100u) << qid;
    for (std::size_t r = 0; r < docs.size(); ++r) EXPECT_EQ(docs[r].rank, static_cast<int>(r + 1));
  }
  EXPECT_EQ(snap().table->dimension(), 50u);
  EXPECT_TRUE(snap().warnings.empty());
}

TEST_F(DeskSnapshot, ScoresDecompose) {
  for (const auto& [qid, docs] : snap().reranked) {
    for (const auto& d : docs) {
      double sum = d.breakdown.bias;
      for (double c : d.breakdown.contribution) sum += c;
      EXPECT_NEAR(d.breakdown.overall, sum, 1e-9);
    }
  }
}

TEST_F(DeskSnapshot, RerankOrderFollowsScores) {
  for (const auto& [qid, docs] : snap().reranked) {
    for (std::size_t r = 1; r < docs.size(); ++r) {
      const auto& a = docs[r - 1];
      const auto& b = docs[r];
      EXPECT_TRUE(a.breakdown.overall > b.breakdown.overall ||
                  (a.breakdown.overall == b.breakdown.overall && a.baseline_rank < b.baseline_rank))
          << qid << " rank " << r;
    }
  }
}

TEST_F(DeskSnapshot, SummariesAndEdgeQueries) {
  const auto& q07 = snap().summaries.at("Q07");
  EXPECT_FALSE(q07.first_relevant_rank);
  EXPECT_FALSE(q07.delta);
  EXPECT_EQ(q07.judged_count, 2);
  const auto& q20 = snap().summaries.at("Q20");
  EXPECT_EQ(q20.judged_count, 0);
  EXPECT_FALSE(q20.first_relevant_rank);
  const auto& q01 = snap().summaries.at("Q01");
  ASSERT_TRUE(q01.first_relevant_rank);
  ASSERT_TRUE(q01.baseline_first_relevant_rank);
  EXPECT_EQ(*q01.delta, *q01.baseline_first_relevant_rank - *q01.first_relevant_rank);
}

TEST_F(DeskSnapshot, EveryQueryInExactlyOneCluster) {
  std::map<std::string, int> seen;
  for (const auto& c : snap().clusters)
    for (const auto& q : c.member_query_ids) ++seen[q];
  EXPECT_EQ(seen.size(), 20u);
  for (const auto& [q, n] : seen) EXPECT_EQ(n, 1) << q;
  ASSERT_FALSE(snap().clusters.empty());
  const auto& last = snap().clusters.back();
  EXPECT_EQ(last.cluster_id, kUnclusteredId);
  EXPECT_EQ(last.member_query_ids, std::vector<std::string>{"Q20"});
  EXPECT_EQ(snap().kmeans_cluster_count, default_cluster_count(19));
}

TEST_F(DeskSnapshot, SaveLoadSaveIsByteIdentical) {
  std::ostringstream first;
  save_snapshot(snap(), first);
  std::istringstream in(first.str());
  const auto loaded = load_snapshot(in);
  std::ostringstream second;
  save_snapshot(loaded, second);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(loaded.summaries.at("Q03").first_relevant_rank, snap().summaries.at("Q03").first_relevant_rank);
  EXPECT_EQ(loaded.reranked.at("Q05")[0].breakdown.overall, snap().reranked.at("Q05")[0].breakdown.overall);
}

TEST(SnapshotIo, RejectsCorruptCaches) {
  const auto snap = fixtures::build("poolbias");
  std::ostringstream out;
  save_snapshot(snap, out);
  const std::string bytes = out.str();

  std::istringstream bad_magic("NIRX0" + bytes.substr(5));
  EXPECT_THROW(load_snapshot(bad_magic), ParseError);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_snapshot(truncated), ParseError);
  std::istringstream trailing(bytes + "x");
  EXPECT_THROW(load_snapshot(trailing), ParseError);
}

TEST(Build, TitleOverrideApplies) {
  auto files = fixtures::files("desk");
  files.titles_override = fixtures::path("desk/titles.tsv");
  const auto snap = build_snapshot(files, fixtures::options());
  EXPECT_EQ(snap.clusters.at(0).cluster_id, "c0");
  EXPECT_EQ(snap.clusters.at(0).title, "ranking models");
}

TEST(Build, SeedAndKAreRespected) {
  auto opts = fixtures::options();
  opts.clusters_k = 5;
  opts.seed = 3;
  const auto a = build_snapshot(fixtures::files("desk"), opts);
  const auto b = build_snapshot(fixtures::files("desk"), opts);
  EXPECT_EQ(a.kmeans_cluster_count, 5u);
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  for (std::size_t i = 0; i < a.clusters.size(); ++i)
    EXPECT_EQ(a.clusters[i].member_query_ids, b.clusters[i].member_query_ids);
}

IngestInputs tiny_inputs() {
  IngestInputs in;
  in.queries = {{"q1", "alpha beta"}, {"q2", "gamma"}};
  in.docs = {{"d1", "alpha gamma"}, {"d2", "beta"}, {"d3", "?!"}};
  in.run = {{"q1", "d1", 1, 2.0, "t"}, {"q1", "d2", 2, 1.0, "t"}, {"q1", "d3", 3, 0.5, "t"},
            {"q2", "d2", 1, 1.0, "t"}};
  in.qrels = {{"q1", "d2", 1}};
  std::istringstream vec("alpha 1 0 0\nbeta 0 1 0\ngamma 0 0 1\n");
  in.table = load_embeddings(vec);
  in.bank = default_kernel_bank();
  in.bank.kernels[1].weight = 1.0;
  return in;
}

TEST(Build, DanglingIdsAreListed) {
  auto in = tiny_inputs();
  in.run.push_back({"q9", "d1", 1, 1.0, "t"});
  in.run.push_back({"q1", "d77", 9, 1.0, "t"});
  in.run.push_back({"q1", "d78", 10, 1.0, "t"});
  try {
    build_snapshot(std::move(in), fixtures::options());
    FAIL();
  } catch (const BuildError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q9"), std::string::npos);
    EXPECT_NE(msg.find("d77"), std::string::npos);
    EXPECT_NE(msg.find("d78"), std::string::npos);
  }
}

TEST(Build, EmptyDocumentsAreDroppedWithWarning) {
  const auto snap = build_snapshot(tiny_inputs(), fixtures::options());
  EXPECT_EQ(snap.reranked.at("q1").size(), 2u);
  ASSERT_EQ(snap.warnings.size(), 1u);
  EXPECT_NE(snap.warnings[0].find("d3"), std::string::npos);
}

TEST(Build, CandidateDepthCapsTheBaseline) {
  auto opts = fixtures::options();
  opts.candidate_depth = 1;
  const auto snap = build_snapshot(tiny_inputs(), opts);
  EXPECT_EQ(snap.reranked.at("q1").size(), 1u);
  EXPECT_EQ(snap.reranked.at("q1")[0].doc_id, "d1");
  opts.candidate_depth = 0;
  EXPECT_THROW(build_snapshot(tiny_inputs(), opts), BuildError);
}

TEST(Build, ParseErrorsCarryFileAndLine) {
  auto files = fixtures::files("desk");
  files.qrels = fixtures::path("desk/queries.tsv");
  try {
    build_snapshot(files, fixtures::options());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("queries.tsv:1"), std::string::npos);
  }
}

TEST(Build, TimestampFromSourceDateEpoch) {
  setenv("SOURCE_DATE_EPOCH", "86400", 1);
  BuildOptions opts;
  const auto snap = build_snapshot(tiny_inputs(), opts);
  unsetenv("SOURCE_DATE_EPOCH");
  EXPECT_EQ(snap.build_timestamp, "1970-01-02T00:00:00Z");
}

TEST(Diagnostics, PoolBiasFixture) {
  const auto snap = fixtures::build("poolbias");
  const auto d = kernel_diagnostics(snap);
  ASSERT_EQ(d.mus.size(), 11u);
  EXPECT_EQ(d.mus[0], 1.0);
  EXPECT_EQ(d.mean_within_query_variance[0], 0.0);
  EXPECT_GT(d.mean_within_query_variance[1], 0.0);
  EXPECT_EQ(d.unjudged_above_judged, 1);
  EXPECT_EQ(d.flagged_queries, std::vector<std::string>{"P3"});

  const auto text = diagnostics_to_text(d);
  EXPECT_NE(text.find("exact-match kernel (mu=1) variance < mu=0.9 kernel variance"), std::string::npos);
  EXPECT_NE(text.find("unjudged_above_judged\t1"), std::string::npos);
  EXPECT_NE(text.find("flagged\tP3"), std::string::npos);
  EXPECT_NE(diagnostics_to_json(d).find("\"flaggedQueries\""), std::string::npos);
}

TEST(Diagnostics, MeanAbsContributionMatchesDirectAverage) {
  const auto snap = fixtures::build("poolbias");
  const auto d = kernel_diagnostics(snap);
  for (std::size_t k = 0; k < d.mus.size(); ++k) {
    double total = 0;
    int n = 0;
    for (const auto& [q, docs] : snap.reranked)
      for (const auto& doc : docs) {
        total += std::abs(doc.breakdown.contribution[k]);
        ++n;
      }
    EXPECT_NEAR(d.mean_abs_contribution[k], total / n, 1e-12);
  }
}

}  // namespace
}  // namespace nirx
