#include "semrel/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "semrel/error.hpp"
#include "semrel/io.hpp"
#include "semrel/random.hpp"

namespace semrel {

std::string_view to_string(Pooling pooling) {
  switch (pooling) {
    case Pooling::kCls:
      return "cls";
    case Pooling::kAverage:
      return "avg";
    case Pooling::kMax:
      return "max";
    case Pooling::kMin:
      return "min";
  }
  return "avg";
}

Pooling parse_pooling(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cls") return Pooling::kCls;
  if (lower == "avg" || lower == "average" || lower == "mean") return Pooling::kAverage;
  if (lower == "max") return Pooling::kMax;
  if (lower == "min") return Pooling::kMin;
  throw InvalidArgument("unknown pooling '" + std::string(name) + "' (expected cls, avg, max or min)");
}

Eigen::VectorXd pool(const EmbeddingMatrix& embeddings, Pooling pooling) {
  const auto& m = embeddings.vectors;
  if (embeddings.validity_mask.size() != static_cast<std::size_t>(m.rows())) {
    throw InvalidArgument("validity mask length does not match embedding rows");
  }
  const auto valid = std::count(embeddings.validity_mask.begin(),
                                embeddings.validity_mask.end(), true);
  if (valid == 0) throw InvalidArgument("cannot pool: no valid positions");

  if (pooling == Pooling::kCls) return m.row(0).transpose();

  Eigen::VectorXd acc;
  bool first = true;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!embeddings.validity_mask[static_cast<std::size_t>(r)]) continue;
    const Eigen::VectorXd row = m.row(r).transpose();
    if (first) {
      acc = row;
      first = false;
      continue;
    }
    switch (pooling) {
      case Pooling::kAverage:
        acc += row;
        break;
      case Pooling::kMax:
        acc = acc.cwiseMax(row);
        break;
      case Pooling::kMin:
        acc = acc.cwiseMin(row);
        break;
      case Pooling::kCls:
        break;
    }
  }
  if (pooling == Pooling::kAverage) acc /= static_cast<double>(valid);
  return acc;
}

}  // namespace semrel
