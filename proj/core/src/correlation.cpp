#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/error.hpp"

namespace bridgerole::analysis {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = mid;
    i = j;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::kInvalidArgument, "spearman: unequal lengths");
  const std::size_t n = xs.size();
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "spearman: need at least 3 observations");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kConstantInput, "spearman: constant input");
  SpearmanResult out;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double one_minus = 1.0 - out.r * out.r;
  if (one_minus <= 0.0) {
    out.p = 0.0;
  } else {
    const double t = std::abs(out.r) * std::sqrt(df / one_minus);
    boost::math::students_t dist(df);
    out.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
  }
  return out;
}

std::vector<CorrelationRow> latent_correlation_scan(const Matrix& embeddings, std::span<const double> target) {
  if (static_cast<std::size_t>(embeddings.rows()) != target.size()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding rows and target length differ");
  }
  std::vector<CorrelationRow> rows;
  std::vector<double> column(target.size());
  for (Eigen::Index d = 0; d < embeddings.cols(); ++d) {
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) column[static_cast<std::size_t>(i)] = embeddings(i, d);
    CorrelationRow row;
    row.dim = static_cast<int>(d);
    try {
      const auto s = spearman(column, target);
      row.spearman_r = s.r;
      row.p_value = s.p;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kConstantInput && e.code() != ErrorCode::kInvalidArgument) throw;
      row.defined = false;
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CorrelationRow& a, const CorrelationRow& b) {
    return std::abs(a.spearman_r) > std::abs(b.spearman_r);
  });
  return rows;
}

}  // namespace bridgerole::analysis
