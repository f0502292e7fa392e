#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nirx {

/// A lowercased token and its byte range [begin, end) in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Lowercases ASCII letters and splits on every maximal run of characters
/// that are not ASCII letters or digits. Bytes >= 0x80 are kept inside tokens
/// so multi-byte UTF-8 words stay whole.
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);

/// One line of a TREC run file.
struct RunEntry {
  std::string query_id;
  std::string doc_id;
  int rank = 0;
  double score = 0.0;
  std::string tag;
};

/// One line of a qrels file.
struct QrelEntry {
  std::string query_id;
  std::string doc_id;
  int relevance = 0;
};

/// Reads "queryId Q0 docId rank score tag" lines. Blank lines are skipped.
/// Throws ParseError on malformed lines or a repeated rank within a query.
std::vector<RunEntry> parse_run(std::istream& in, const std::string& source = "<run>");

/// Reads "queryId 0 docId relevance" lines. Throws ParseError on malformed
/// lines, negative grades and duplicate (query, doc) pairs.
std::vector<QrelEntry> parse_qrels(std::istream& in, const std::string& source = "<qrels>");

/// Reads "id<TAB>text" lines; further tabs stay part of the text.
/// Throws ParseError on a missing tab or a repeated id.
std::map<std::string, std::string> parse_tsv_texts(std::istream& in,
                                                   const std::string& source = "<tsv>");

std::vector<RunEntry> parse_run_file(const std::string& path);
std::vector<QrelEntry> parse_qrels_file(const std::string& path);
std::map<std::string, std::string> parse_tsv_texts_file(const std::string& path);

}  // namespace nirx
