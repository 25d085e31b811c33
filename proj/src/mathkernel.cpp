#include "hypekit/mathkernel.hpp"

#include <string>

#include "hypekit/error.hpp"

namespace hypekit {

double dotsum(std::span<const std::span<const double>> vectors) {
  if (vectors.empty()) throw DimensionError("dotsum: needs at least one vector");
  const std::size_t len = vectors[0].size();
  for (std::size_t j = 1; j < vectors.size(); ++j) {
    if (vectors[j].size() != len) {
      throw DimensionError("dotsum: vector " + std::to_string(j) + " has length " +
                           std::to_string(vectors[j].size()) + ", expected " +
                           std::to_string(len));
    }
  }
  double total = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    double prod = vectors[0][t];
    for (std::size_t j = 1; j < vectors.size(); ++j) prod *= vectors[j][t];
    total += prod;
  }
  return total;
}

double dotsum(std::initializer_list<std::span<const double>> vectors) {
  return dotsum(std::span<const std::span<const double>>(vectors.begin(), vectors.size()));
}

Vec circshift(std::span<const double> v, std::size_t shift) {
  const std::size_t n = v.size();
  Vec out(n);
  if (n == 0) return out;
  const std::size_t x = shift % n;
  for (std::size_t t = 0; t < n; ++t) out[t] = v[(t + x) % n];
  return out;
}

std::size_t feature_map_size(std::size_t input_len, std::size_t filter_len,
                             std::size_t stride) {
  if (stride == 0) throw ConfigError("conv1d: stride must be positive");
  if (filter_len == 0) throw DimensionError("conv1d: filter must be nonempty");
  if (filter_len > input_len) {
    throw DimensionError("conv1d: filter length " + std::to_string(filter_len) +
                         " exceeds input length " + std::to_string(input_len));
  }
  return (input_len - filter_len) / stride + 1;
}

Vec conv1d(std::span<const double> v, std::span<const double> w, std::size_t stride) {
  const std::size_t q = feature_map_size(v.size(), w.size(), stride);
  Vec out(q, 0.0);
  for (std::size_t t = 0; t < q; ++t) {
    const std::size_t base = t * stride;
    double acc = 0.0;
    for (std::size_t u = 0; u < w.size(); ++u) acc += v[base + u] * w[u];
    out[t] = acc;
  }
  return out;
}

Vec finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> x, double eps) {
  Vec probe(x.begin(), x.end());
  Vec grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace hypekit
