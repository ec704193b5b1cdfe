#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "graphdiff/error.hpp"

namespace graphdiff {

// Number of unordered node pairs, M = n(n-1)/2.
constexpr std::uint64_t pair_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Index of the first pair (i, i+1) of row i in the upper-triangular order.
constexpr std::uint64_t row_offset(std::uint64_t i, std::uint64_t n) {
  return i * (2 * n - i - 1) / 2;
}

constexpr std::uint64_t pair_index(std::uint64_t i, std::uint64_t j, std::uint64_t n) {
  if (i > j) std::swap(i, j);
  return row_offset(i, n) + (j - i - 1);
}

// Bit set over the unordered pairs of an n-node graph. Symmetry and the empty
// diagonal hold by construction.
class PairBits {
 public:
  PairBits() = default;
  explicit PairBits(std::uint64_t n)
      : n_(n), pairs_(pair_count(n)), words_((pairs_ + 63) / 64, 0) {}

  std::uint64_t nodes() const { return n_; }
  std::uint64_t size() const { return pairs_; }

  bool test(std::uint64_t idx) const { return (words_[idx >> 6] >> (idx & 63)) & 1ULL; }
  void set(std::uint64_t idx) { words_[idx >> 6] |= 1ULL << (idx & 63); }
  void flip(std::uint64_t idx) { words_[idx >> 6] ^= 1ULL << (idx & 63); }

  bool test(std::uint64_t i, std::uint64_t j) const {
    return i != j && test(pair_index(i, j, n_));
  }

  void fill() {
    std::fill(words_.begin(), words_.end(), ~0ULL);
    clear_tail();
  }

  void complement() {
    for (auto& w : words_) w = ~w;
    clear_tail();
  }

  std::uint64_t count() const {
    std::uint64_t c = 0;
    for (auto w : words_) c += static_cast<std::uint64_t>(std::popcount(w));
    return c;
  }

  // Number of pairs on which the two sets differ.
  std::uint64_t count_differences(const PairBits& other) const {
    detail::require(other.n_ == n_, "pair sets have different node counts");
    std::uint64_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      c += static_cast<std::uint64_t>(std::popcount(words_[k] ^ other.words_[k]));
    return c;
  }

  // Calls fn(idx) for every set pair index in increasing order.
  template <class Fn>
  void for_each_set(Fn&& fn) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w != 0) {
        const int b = std::countr_zero(w);
        fn(static_cast<std::uint64_t>(k) * 64 + static_cast<std::uint64_t>(b));
        w &= w - 1;
      }
    }
  }

  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const PairBits&, const PairBits&) = default;

 private:
  void clear_tail() {
    if (pairs_ % 64 != 0) words_.back() &= (1ULL << (pairs_ % 64)) - 1;
  }

  std::uint64_t n_ = 0;
  std::uint64_t pairs_ = 0;
  std::vector<std::uint64_t> words_;
};

// Undirected simple graph. Immutable once built.
class Graph {
 public:
  explicit Graph(PairBits adjacency)
      : adjacency_(std::move(adjacency)), edges_(adjacency_.count()) {
    detail::require(adjacency_.nodes() >= 1, "graph needs at least one node");
  }

  static Graph empty(std::uint64_t n) { return Graph(PairBits(n)); }

  static Graph complete(std::uint64_t n) {
    PairBits bits(n);
    bits.fill();
    return Graph(std::move(bits));
  }

  std::uint64_t nodes() const { return adjacency_.nodes(); }
  std::uint64_t pairs() const { return adjacency_.size(); }
  std::uint64_t edge_count() const { return edges_; }

  // p0 = edge_count / M; an edgeless single node has density 0.
  double density() const {
    return pairs() == 0 ? 0.0 : static_cast<double>(edges_) / static_cast<double>(pairs());
  }

  bool has_edge(std::uint64_t i, std::uint64_t j) const { return adjacency_.test(i, j); }
  const PairBits& adjacency() const { return adjacency_; }

  // Calls fn(i, j) with i < j for every edge.
  template <class Fn>
  void for_each_edge(Fn&& fn) const {
    const std::uint64_t n = nodes();
    std::uint64_t row = 0;
    std::uint64_t next_row_start = row_offset(1, n);
    adjacency_.for_each_set([&](std::uint64_t idx) {
      while (idx >= next_row_start) {
        ++row;
        next_row_start = row_offset(row + 1, n);
      }
      fn(row, row + 1 + (idx - row_offset(row, n)));
    });
  }

  std::vector<std::uint64_t> degrees() const {
    std::vector<std::uint64_t> deg(nodes(), 0);
    for_each_edge([&](std::uint64_t i, std::uint64_t j) {
      ++deg[i];
      ++deg[j];
    });
    return deg;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.adjacency_ == b.adjacency_; }

 private:
  PairBits adjacency_;
  std::uint64_t edges_ = 0;
};

// Dense row-major n x d real matrix used for node features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace graphdiff
