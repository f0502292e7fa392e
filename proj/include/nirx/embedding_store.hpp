#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nirx {

/// A term and its unit-length embedding. `norm` is the length of the vector
/// as it appeared in the source file.
struct TermVector {
  std::string term;
  std::vector<double> vector;
  double norm = 0.0;
};

/// Immutable term -> unit vector map. Out-of-vocabulary terms have no entry;
/// callers treat them as similarity 0 to everything.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Null when `term` is out of vocabulary.
  const TermVector* lookup(std::string_view term) const;
  bool contains(std::string_view term) const { return lookup(term) != nullptr; }

  /// Inserts an already-normalized entry. Returns false (and keeps the
  /// existing entry) when the term is present.
  bool insert(TermVector entry);

  /// Terms in lexicographic order.
  std::vector<std::string> terms() const;

  /// Number of duplicate terms skipped while loading.
  std::size_t duplicate_count() const noexcept { return duplicates_; }
  void set_duplicate_count(std::size_t n) noexcept { duplicates_ = n; }

  /// Copy restricted to `terms` (unknown terms are ignored).
  EmbeddingTable restricted_to(std::span<const std::string> terms) const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dimension_ = 0;
  std::unordered_map<std::string, TermVector, Hash, std::equal_to<>> entries_;
  std::size_t duplicates_ = 0;
};

/// Parses the word-vector text format: an optional "V d" header line followed
/// by lines "term c1 ... cd". Terms are lowercased; vectors are normalized to
/// unit length. The first occurrence of a duplicate term wins.
/// Throws ParseError on dimension mismatch, zero or non-finite vectors, or an
/// empty stream.
EmbeddingTable load_embeddings(std::istream& in, const std::string& source = "<embeddings>");
EmbeddingTable load_embeddings_file(const std::string& path);

/// Writes the table in the same text format (header line, then one term per
/// line in lexicographic order, components at full round-trip precision).
/// Reloading the dump reproduces every lookup bit for bit.
void dump_embeddings(const EmbeddingTable& table, std::ostream& out);

/// Dot product of two unit vectors clamped to [-1, 1].
/// Throws ContractViolation on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);
inline double cosine(const TermVector& u, const TermVector& v) {
  return cosine(u.vector, v.vector);
}

}  // namespace nirx
