#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace maskvd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

/// Selected token embeddings and their row-major grid locations.
struct TokenSet {
  std::vector<int> locations;  // strictly increasing
  Matrix embeddings;           // locations.size() x L

  int size() const { return static_cast<int>(locations.size()); }
  void validate(int num_tokens) const;
};

/// Rows of `tensor` at `locations`.
TokenSet gather(const Matrix& tensor, std::span<const int> locations);

/// Copy of `base` with the token rows written at their locations.
Matrix scatter(const TokenSet& tokens, const Matrix& base);

/// In-place variant of scatter.
void scatter_into(const TokenSet& tokens, Matrix& base);

inline void TokenSet::validate(int num_tokens) const {
  if (static_cast<Eigen::Index>(locations.size()) != embeddings.rows()) {
    throw std::invalid_argument("token set has " + std::to_string(locations.size()) +
                                " locations but " + std::to_string(embeddings.rows()) +
                                " embedding rows");
  }
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i] < 0 || locations[i] >= num_tokens) {
      throw std::out_of_range("token location " + std::to_string(locations[i]) +
                              " outside [0, " + std::to_string(num_tokens) + ")");
    }
    if (i > 0 && locations[i] <= locations[i - 1]) {
      throw std::invalid_argument("token locations must be strictly increasing");
    }
  }
}

inline TokenSet gather(const Matrix& tensor, std::span<const int> locations) {
  TokenSet out;
  out.locations.assign(locations.begin(), locations.end());
  out.embeddings.resize(static_cast<Eigen::Index>(locations.size()), tensor.cols());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i] < 0 || locations[i] >= tensor.rows()) {
      throw std::out_of_range("gather location " + std::to_string(locations[i]) +
                              " outside [0, " + std::to_string(tensor.rows()) + ")");
    }
    out.embeddings.row(static_cast<Eigen::Index>(i)) = tensor.row(locations[i]);
  }
  return out;
}

inline void scatter_into(const TokenSet& tokens, Matrix& base) {
  if (tokens.embeddings.cols() != base.cols() && !tokens.locations.empty()) {
    throw std::invalid_argument("scatter width mismatch");
  }
  tokens.validate(static_cast<int>(base.rows()));
  for (std::size_t i = 0; i < tokens.locations.size(); ++i) {
    base.row(tokens.locations[i]) = tokens.embeddings.row(static_cast<Eigen::Index>(i));
  }
}

inline Matrix scatter(const TokenSet& tokens, const Matrix& base) {
  Matrix out = base;
  scatter_into(tokens, out);
  return out;
}

}  // namespace maskvd
