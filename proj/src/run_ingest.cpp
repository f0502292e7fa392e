#include "nirx/run_ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <utility>

#include "nirx/errors.hpp"
#include "text_util.hpp"

namespace nirx {

namespace {

bool is_token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_token_char(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back({detail::ascii_lower(text.substr(start, i - start)), start, i});
  }
  return out;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::vector<RunEntry> parse_run(std::istream& in, const std::string& source) {
  std::vector<RunEntry> out;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    auto f = detail::split_whitespace(line);
    if (f.empty()) continue;
    if (f.size() != 6) {
      throw ParseError(source, line_no, "expected 6 fields (qid Q0 docid rank score tag), got " +
                                            std::to_string(f.size()));
    }
    RunEntry e;
    e.query_id = std::string(f[0]);
    e.doc_id = std::string(f[2]);
    if (!parse_number(f[3], e.rank) || e.rank < 1) {
      throw ParseError(source, line_no, "rank must be a positive integer");
    }
    if (!parse_number(f[4], e.score) || !std::isfinite(e.score)) {
      throw ParseError(source, line_no, "score must be a finite number");
    }
    e.tag = std::string(f[5]);
    if (!seen.emplace(e.query_id, e.rank).second) {
      throw ParseError(source, line_no,
                       "duplicate rank " + std::to_string(e.rank) + " for query " + e.query_id);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<QrelEntry> parse_qrels(std::istream& in, const std::string& source) {
  std::vector<QrelEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    auto f = detail::split_whitespace(line);
    if (f.empty()) continue;
    if (f.size() != 4) {
      throw ParseError(source, line_no, "expected 4 fields (qid 0 docid relevance), got " +
                                            std::to_string(f.size()));
    }
    QrelEntry e{std::string(f[0]), std::string(f[2]), 0};
    if (!parse_number(f[3], e.relevance)) throw ParseError(source, line_no, "relevance must be an integer");
    if (e.relevance < 0) throw ParseError(source, line_no, "negative relevance");
    if (!seen.emplace(e.query_id, e.doc_id).second) {
      throw ParseError(source, line_no, "duplicate judgment for " + e.query_id + " " + e.doc_id);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::map<std::string, std::string> parse_tsv_texts(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, line_no, "missing tab separator");
    std::string id = line.substr(0, tab);
    if (id.empty()) throw ParseError(source, line_no, "empty id");
    if (out.count(id)) throw ParseError(source, line_no, "duplicate id " + id);
    out.emplace(std::move(id), line.substr(tab + 1));
  }
  return out;
}

std::vector<RunEntry> parse_run_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_run(in, path);
}

std::vector<QrelEntry> parse_qrels_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_qrels(in, path);
}

std::map<std::string, std::string> parse_tsv_texts_file(const std::string& path) {
  auto in = open_or_throw(path);
  return parse_tsv_texts(in, path);
}

}  // namespace nirx
