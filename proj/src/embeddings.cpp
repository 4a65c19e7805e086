#include "dsforge/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dsforge {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t b = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is available in libstdc++ 11.
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool is_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

WordVectorStore WordVectorStore::parse(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && split_ws(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw SchemaError("vector file: missing header");

  const auto header = split_ws(lines.front());
  long long count = 0;
  int dim = 0;
  if (header.size() != 2 ||
      std::from_chars(header[0].data(), header[0].data() + header[0].size(), count).ec != std::errc() ||
      std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec != std::errc() ||
      count < 0 || dim < 1)
    throw SchemaError("vector file: malformed header '" + std::string(lines.front()) +
                      "' (expected \"<count> <dimension>\")");

  WordVectorStore store;
  store.dimension_ = dim;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_ws(lines[li]);
    if (fields.empty()) throw SchemaError("vector file: blank line " + std::to_string(li + 1));
    std::string token = to_lower(fields[0]);
    if (static_cast<int>(fields.size()) - 1 != dim)
      throw SchemaError("vector file: token '" + token + "' has " + std::to_string(fields.size() - 1) +
                        " components, expected " + std::to_string(dim));
    std::vector<double> v(dim);
    for (int k = 0; k < dim; ++k)
      if (!parse_double(fields[k + 1], v[k]))
        throw SchemaError("vector file: token '" + token + "' has a non-numeric component '" +
                          std::string(fields[k + 1]) + "'");
    if (is_zero(v)) throw SchemaError("vector file: token '" + token + "' is the zero vector");
    if (store.entries_.count(token)) throw SchemaError("vector file: duplicate token '" + token + "'");
    store.entries_.emplace(std::move(token), std::move(v));
  }
  if (static_cast<long long>(store.entries_.size()) != count)
    throw SchemaError("vector file: header declares " + std::to_string(count) + " words but " +
                      std::to_string(store.entries_.size()) + " were found");
  return store;
}

WordVectorStore WordVectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vector file '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse(text);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

WordVectorStore WordVectorStore::from_entries(int dimension,
                                              std::map<std::string, std::vector<double>> entries) {
  if (dimension < 1) throw SchemaError("vector store: dimension must be positive");
  WordVectorStore store;
  store.dimension_ = dimension;
  for (auto& [tok, v] : entries) {
    auto key = to_lower(tok);
    if (static_cast<int>(v.size()) != dimension)
      throw SchemaError("vector store: token '" + key + "' has wrong arity");
    if (is_zero(v)) throw SchemaError("vector store: token '" + key + "' is the zero vector");
    if (!store.entries_.emplace(key, std::move(v)).second)
      throw SchemaError("vector store: duplicate token '" + key + "'");
  }
  return store;
}

bool WordVectorStore::contains(std::string_view token) const {
  return entries_.find(to_lower(token)) != entries_.end();
}

std::span<const double> WordVectorStore::vector(std::string_view token) const {
  auto it = entries_.find(to_lower(token));
  if (it == entries_.end()) throw UnknownToken(to_lower(token));
  return it->second;
}

std::vector<double> WordVectorStore::resolve(std::string_view phrase) const {
  const std::string lowered = to_lower(phrase);
  if (auto it = entries_.find(lowered); it != entries_.end()) return it->second;

  std::vector<std::string> parts;
  std::string cur;
  for (char ch : lowered) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  if (parts.empty()) throw UnknownToken(lowered);

  std::string joined;
  for (std::size_t i = 0; i < parts.size(); ++i) joined += (i ? "_" : "") + parts[i];
  if (auto it = entries_.find(joined); it != entries_.end()) return it->second;

  std::vector<double> mean(dimension_, 0.0);
  for (const auto& p : parts) {
    auto it = entries_.find(p);
    if (it == entries_.end()) throw UnknownToken(p);
    for (int k = 0; k < dimension_; ++k) mean[k] += it->second[k];
  }
  for (auto& v : mean) v /= static_cast<double>(parts.size());
  if (is_zero(mean)) throw UnknownToken(lowered + " (constituents average to the zero vector)");
  return mean;
}

WordVectorStore WordVectorStore::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("scale factor must be positive");
  WordVectorStore out = *this;
  for (auto& [tok, v] : out.entries_)
    for (auto& x : v) x *= factor;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  // sqrt(na)*sqrt(nb) is commutative, so swapping a and b yields identical bits.
  const double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom == 0.0) throw InvalidArgument("cosine of a zero vector");
  return std::clamp(dot / denom, -1.0, 1.0);
}

double cosine(const WordVectorStore& store, std::string_view a, std::string_view b) {
  return cosine_similarity(store.vector(a), store.vector(b));
}

}  // namespace dsforge
