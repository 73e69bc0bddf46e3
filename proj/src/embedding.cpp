#include "fdembed/embedding.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <system_error>

#include "fdembed/error.hpp"

namespace fdembed {
namespace {

void append_double(std::string& out, double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, end);
}

template <typename T>
T parse_token(std::string_view tok, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("bad number '" + std::string(tok) + "'", line);
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

void write_embedding(std::ostream& out, const Embedding& e,
                     std::span<const std::uint64_t> original_ids) {
  if (original_ids.size() != e.num_nodes())
    throw std::invalid_argument("id map length does not match embedding");
  std::string line;
  line = std::to_string(e.num_nodes()) + " " + std::to_string(e.dim()) + "\n";
  out << line;
  for (std::size_t j = 0; j < e.num_nodes(); ++j) {
    line = std::to_string(original_ids[j]);
    for (Eigen::Index i = 0; i < e.values.rows(); ++i) {
      line.push_back(' ');
      append_double(line, e.values(i, static_cast<Eigen::Index>(j)));
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw DataError("failed writing embedding");
}

void save_embedding(const std::string& path, const Embedding& e,
                    std::span<const std::uint64_t> original_ids) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  write_embedding(out, e, original_ids);
}

LoadedEmbedding read_embedding(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t n = 0, k = 0;
  bool header = false;
  LoadedEmbedding out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2) throw ParseError("expected header 'n k'", lineno);
      n = parse_token<std::size_t>(tok[0], lineno);
      k = parse_token<std::size_t>(tok[1], lineno);
      out.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
      out.original_ids.reserve(n);
      header = true;
      continue;
    }
    if (row >= n) throw ParseError("more rows than the header announces", lineno);
    if (tok.size() != k + 1)
      throw ParseError("expected " + std::to_string(k + 1) + " fields", lineno);
    out.original_ids.push_back(parse_token<std::uint64_t>(tok[0], lineno));
    for (std::size_t i = 0; i < k; ++i)
      out.vectors(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(i)) =
          parse_token<double>(tok[i + 1], lineno);
    ++row;
  }
  if (!header) throw DataError("empty embedding file");
  if (row != n) throw DataError("embedding file is truncated");
  return out;
}

LoadedEmbedding load_embedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_embedding(in);
}

}  // namespace fdembed
