#include "nirx/embedding_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "nirx/errors.hpp"
#include "text_util.hpp"

namespace nirx {

const TermVector* EmbeddingTable::lookup(std::string_view term) const {
  auto it = entries_.find(term);
  return it == entries_.end() ? nullptr : &it->second;
}

bool EmbeddingTable::insert(TermVector entry) {
  if (entry.vector.size() != dimension_) {
    throw ContractViolation("embedding dimension mismatch for term '" + entry.term + "'");
  }
  std::string key = entry.term;
  return entries_.emplace(std::move(key), std::move(entry)).second;
}

std::vector<std::string> EmbeddingTable::terms() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [term, _] : entries_) out.push_back(term);
  std::sort(out.begin(), out.end());
  return out;
}

EmbeddingTable EmbeddingTable::restricted_to(std::span<const std::string> terms) const {
  EmbeddingTable out(dimension_);
  for (const auto& t : terms) {
    if (const auto* v = lookup(t)) out.insert(*v);
  }
  return out;
}

namespace {

bool parse_integer(std::string_view s, long long& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

// Vectors whose length already rounds to one are kept verbatim, so a dump of
// a normalized table reloads bit for bit.
constexpr double kUnitSlack = 1e-12;

}  // namespace

EmbeddingTable load_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dimension = 0;
  std::size_t declared_count = 0;
  bool have_header = false;
  bool first_content_line = true;
  std::size_t duplicates = 0;
  std::size_t rows = 0;
  EmbeddingTable table;

  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    auto fields = detail::split_whitespace(line);
    if (fields.empty()) continue;

    if (first_content_line) {
      first_content_line = false;
      long long v = 0, d = 0;
      if (fields.size() == 2 && parse_integer(fields[0], v) && parse_integer(fields[1], d)) {
        if (v < 0 || d <= 0) throw ParseError(source, line_no, "invalid header");
        have_header = true;
        declared_count = static_cast<std::size_t>(v);
        dimension = static_cast<std::size_t>(d);
        table = EmbeddingTable(dimension);
        continue;
      }
    }

    if (fields.size() < 2) throw ParseError(source, line_no, "expected a term followed by components");
    const std::size_t dim = fields.size() - 1;
    if (dimension == 0) {
      dimension = dim;
      table = EmbeddingTable(dimension);
    } else if (dim != dimension) {
      throw ParseError(source, line_no,
                       "dimension mismatch: expected " + std::to_string(dimension) + ", got " +
                           std::to_string(dim));
    }
    ++rows;

    TermVector tv;
    tv.term = detail::ascii_lower(fields[0]);
    tv.vector.resize(dimension);
    double sq = 0.0;
    for (std::size_t c = 0; c < dimension; ++c) {
      auto f = fields[c + 1];
      double x = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(x)) {
        throw ParseError(source, line_no, "bad component '" + std::string(f) + "'");
      }
      tv.vector[c] = x;
      sq += x * x;
    }
    tv.norm = std::sqrt(sq);
    if (!(tv.norm > 0.0)) throw ParseError(source, line_no, "zero vector for term '" + tv.term + "'");
    if (std::abs(tv.norm - 1.0) > kUnitSlack) {
      for (auto& x : tv.vector) x /= tv.norm;
    }
    if (!table.insert(std::move(tv))) ++duplicates;
  }

  if (rows == 0) throw ParseError(source, 0, "no embedding vectors");
  if (have_header && declared_count != rows) {
    throw ParseError(source, 1,
                     "header declares " + std::to_string(declared_count) + " vectors, found " +
                         std::to_string(rows));
  }
  table.set_duplicate_count(duplicates);
  return table;
}

EmbeddingTable load_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return load_embeddings(in, path);
}

void dump_embeddings(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << ' ' << table.dimension() << '\n';
  for (const auto& term : table.terms()) {
    const auto* tv = table.lookup(term);
    out << term;
    for (double x : tv->vector) out << ' ' << detail::format_double(x);
    out << '\n';
  }
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ContractViolation("cosine: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot, -1.0, 1.0);
}

}  // namespace nirx
