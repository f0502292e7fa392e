// Binary snapshot cache. Layout: the five magic bytes "NIRX1", then every
// field in declaration order. Integers are little-endian fixed width, doubles
// are their IEEE-754 bit patterns, strings and sequences are length-prefixed
// with a u64. Token lists are not stored; they are re-derived from the text.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nirx/errors.hpp"
#include "nirx/snapshot.hpp"

namespace nirx {

static_assert(std::endian::native == std::endian::little, "snapshot cache assumes a little-endian host");

namespace {

constexpr char kMagic[] = {'N', 'I', 'R', 'X', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void boolean(bool v) { out_.put(v ? 1 : 0); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void opt_int(const std::optional<int>& v) {
    boolean(v.has_value());
    if (v) i64(*v);
  }
  void opt_f64(const std::optional<double>& v) {
    boolean(v.has_value());
    if (v) f64(*v);
  }
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    raw(&v, sizeof v);
    return v;
  }
  int i32() { return static_cast<int>(i64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool boolean() {
    char c;
    raw(&c, 1);
    if (c != 0 && c != 1) fail("corrupt boolean");
    return c == 1;
  }
  std::size_t count() {
    const auto n = u64();
    if (n > (std::uint64_t{1} << 40)) fail("implausible length");
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(), '\0');
    raw(s.data(), s.size());
    return s;
  }
  std::optional<int> opt_int() {
    if (!boolean()) return std::nullopt;
    return i32();
  }
  std::optional<double> opt_f64() {
    if (!boolean()) return std::nullopt;
    return f64();
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated snapshot");
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  [[noreturn]] void fail(const std::string& what) { throw ParseError(source_, 0, what); }

 private:
  std::istream& in_;
  std::string source_;
};

void write_breakdown(Writer& w, const ScoreBreakdown& b) {
  w.f64(b.overall);
  w.f64(b.bias);
  w.u64(b.phi.size());
  for (double x : b.phi) w.f64(x);
  for (double x : b.contribution) w.f64(x);
}

ScoreBreakdown read_breakdown(Reader& r) {
  ScoreBreakdown b;
  b.overall = r.f64();
  b.bias = r.f64();
  const auto k = r.count();
  b.phi.resize(k);
  b.contribution.resize(k);
  for (auto& x : b.phi) x = r.f64();
  for (auto& x : b.contribution) x = r.f64();
  return b;
}

}  // namespace

void save_snapshot(const RunSnapshot& s, std::ostream& out) {
  Writer w(out);
  w.raw(kMagic, sizeof kMagic);
  w.str(s.collection);
  w.str(s.build_timestamp);
  w.i64(s.candidate_depth);
  w.u64(s.seed);
  w.i64(s.relevance_threshold);
  w.u64(s.kmeans_cluster_count);

  w.u64(s.bank.size());
  for (const auto& k : s.bank.kernels) {
    w.f64(k.mu);
    w.f64(k.sigma);
    w.f64(k.weight);
  }
  w.f64(s.bank.bias);

  const EmbeddingTable empty_table;
  const EmbeddingTable& table = s.table ? *s.table : empty_table;
  w.u64(table.dimension());
  const auto terms = table.terms();
  w.u64(terms.size());
  for (const auto& t : terms) {
    const auto* tv = table.lookup(t);
    w.str(tv->term);
    w.f64(tv->norm);
    for (double x : tv->vector) w.f64(x);
  }

  for (const auto* texts : {&s.queries, &s.docs}) {
    w.u64(texts->size());
    for (const auto& [id, rec] : *texts) {
      w.str(id);
      w.str(rec.text);
    }
  }

  w.u64(s.baseline.size());
  for (const auto& [qid, entries] : s.baseline) {
    w.str(qid);
    w.u64(entries.size());
    for (const auto& e : entries) {
      w.str(e.doc_id);
      w.i64(e.rank);
      w.f64(e.score);
      w.str(e.tag);
    }
  }

  w.u64(s.qrels.size());
  for (const auto& [qid, judged] : s.qrels) {
    w.str(qid);
    w.u64(judged.size());
    for (const auto& [doc, grade] : judged) {
      w.str(doc);
      w.i64(grade);
    }
  }

  w.u64(s.reranked.size());
  for (const auto& [qid, docs] : s.reranked) {
    w.str(qid);
    w.u64(docs.size());
    for (const auto& d : docs) {
      w.str(d.doc_id);
      w.i64(d.rank);
      w.i64(d.baseline_rank);
      write_breakdown(w, d.breakdown);
    }
  }

  w.u64(s.summaries.size());
  for (const auto& [qid, q] : s.summaries) {
    w.str(qid);
    w.str(q.text);
    w.opt_int(q.first_relevant_rank);
    w.opt_int(q.baseline_first_relevant_rank);
    w.opt_int(q.delta);
    w.i64(q.judged_count);
  }

  w.u64(s.clusters.size());
  for (const auto& c : s.clusters) {
    w.str(c.cluster_id);
    w.str(c.title);
    w.u64(c.member_query_ids.size());
    for (const auto& m : c.member_query_ids) w.str(m);
    w.opt_f64(c.median_first_relevant_rank);
    w.opt_f64(c.median_delta);
  }
  if (!out) throw Error("failed writing snapshot");
}

RunSnapshot load_snapshot(std::istream& in, const std::string& source) {
  Reader r(in, source);
  char magic[sizeof kMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.fail("not a snapshot file (bad magic)");

  RunSnapshot s;
  s.collection = r.str();
  s.build_timestamp = r.str();
  s.candidate_depth = r.i32();
  s.seed = r.u64();
  s.relevance_threshold = r.i32();
  s.kmeans_cluster_count = r.count();

  const auto kc = r.count();
  for (std::size_t k = 0; k < kc; ++k) {
    Kernel kn;
    kn.mu = r.f64();
    kn.sigma = r.f64();
    kn.weight = r.f64();
    s.bank.kernels.push_back(kn);
  }
  s.bank.bias = r.f64();
  try {
    s.bank.validate();
  } catch (const ContractViolation& e) {
    r.fail(std::string("invalid kernel bank: ") + e.what());
  }

  const auto dim = r.count();
  EmbeddingTable table(dim);
  const auto n_terms = r.count();
  for (std::size_t t = 0; t < n_terms; ++t) {
    TermVector tv;
    tv.term = r.str();
    tv.norm = r.f64();
    tv.vector.resize(dim);
    for (auto& x : tv.vector) x = r.f64();
    if (!table.insert(std::move(tv))) r.fail("duplicate term in snapshot");
  }
  s.table = std::make_shared<const EmbeddingTable>(std::move(table));

  for (auto* texts : {&s.queries, &s.docs}) {
    const auto n = r.count();
    for (std::size_t i = 0; i < n; ++i) {
      auto id = r.str();
      texts->emplace(std::move(id), make_text_record(r.str()));
    }
  }

  auto n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    auto qid = r.str();
    auto& entries = s.baseline[qid];
    const auto m = r.count();
    for (std::size_t j = 0; j < m; ++j) {
      RunEntry e;
      e.query_id = qid;
      e.doc_id = r.str();
      e.rank = r.i32();
      e.score = r.f64();
      e.tag = r.str();
      entries.push_back(std::move(e));
    }
  }

  n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    auto& judged = s.qrels[r.str()];
    const auto m = r.count();
    for (std::size_t j = 0; j < m; ++j) {
      auto doc = r.str();
      judged[doc] = r.i32();
    }
  }

  n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    auto& docs = s.reranked[r.str()];
    const auto m = r.count();
    for (std::size_t j = 0; j < m; ++j) {
      ScoredDocument d;
      d.doc_id = r.str();
      d.rank = r.i32();
      d.baseline_rank = r.i32();
      d.breakdown = read_breakdown(r);
      docs.push_back(std::move(d));
    }
  }

  n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    QuerySummary q;
    q.query_id = r.str();
    q.text = r.str();
    q.first_relevant_rank = r.opt_int();
    q.baseline_first_relevant_rank = r.opt_int();
    q.delta = r.opt_int();
    q.judged_count = r.i32();
    s.summaries.emplace(q.query_id, std::move(q));
  }

  n = r.count();
  for (std::size_t i = 0; i < n; ++i) {
    Cluster c;
    c.cluster_id = r.str();
    c.title = r.str();
    const auto m = r.count();
    for (std::size_t j = 0; j < m; ++j) c.member_query_ids.push_back(r.str());
    c.median_first_relevant_rank = r.opt_f64();
    c.median_delta = r.opt_f64();
    s.clusters.push_back(std::move(c));
  }
  if (!r.at_end()) r.fail("trailing bytes after snapshot");
  return s;
}

void save_snapshot_file(const RunSnapshot& snapshot, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write snapshot to " + path);
  save_snapshot(snapshot, out);
}

RunSnapshot load_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return load_snapshot(in, path);
}

}  // namespace nirx
