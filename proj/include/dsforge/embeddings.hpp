#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsforge/error.hpp"

namespace dsforge {

class UnknownToken : public InvalidArgument {
 public:
  explicit UnknownToken(std::string token)
      : InvalidArgument("unknown token '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

/// Immutable word-vector table. Tokens are stored and looked up lowercased.
class WordVectorStore {
 public:
  /// Parses the plain-text word2vec format: "<count> <dimension>" then one
  /// "<token> <v1> ... <vd>" per line. Throws SchemaError on malformed input.
  static WordVectorStore load(const std::filesystem::path& path);
  static WordVectorStore parse(std::string_view text);
  /// Validates the same invariants as load().
  static WordVectorStore from_entries(int dimension, std::map<std::string, std::vector<double>> entries);

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(std::string_view token) const;

  /// Throws UnknownToken.
  std::span<const double> vector(std::string_view token) const;

  /// Vector for a possibly multi-word label: the token itself, then the underscore-joined
  /// form, then the mean of the constituent words (split on spaces, '_' and '-').
  /// Throws UnknownToken naming the first unresolvable constituent.
  std::vector<double> resolve(std::string_view phrase) const;

  /// Copy with every vector multiplied by `factor` (> 0).
  WordVectorStore scaled(double factor) const;

 private:
  int dimension_ = 0;
  std::map<std::string, std::vector<double>, std::less<>> entries_;
};

/// dot(a,b) / (|a| |b|), clamped to [-1, 1]. Symmetric bit-for-bit.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Cosine between two stored tokens; throws UnknownToken naming the missing one.
double cosine(const WordVectorStore& store, std::string_view a, std::string_view b);

std::string to_lower(std::string_view s);

}  // namespace dsforge
