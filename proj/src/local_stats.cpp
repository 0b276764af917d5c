#include "mmtrace/local_stats.hpp"

#include <algorithm>

namespace mmtrace {

LocalStats local_stats(std::span<const double> values, std::span<const std::uint32_t> members,
                       std::span<const double> weights) {
  StatsWorkspace ws;
  return ws.compute(values, members, weights);
}

double StatsWorkspace::mean(std::span<const double> values, std::span<const std::uint32_t> members,
                            std::span<const double> weights) {
  double w = 0.0, s = 0.0;
  for (auto m : members) {
    w += weights[m];
    s += weights[m] * values[m];
  }
  return w > 0.0 ? s / w : 0.0;
}

LocalStats StatsWorkspace::compute(std::span<const double> values, std::span<const std::uint32_t> members,
                                   std::span<const double> weights) {
  LocalStats st;
  buf_.clear();
  double total = 0.0, first = 0.0;
  for (auto m : members) {
    buf_.emplace_back(values[m], weights[m]);
    total += weights[m];
    first += weights[m] * values[m];
  }
  st.mass = total;
  if (total <= 0.0) return st;
  st.mean = first / total;
  std::sort(buf_.begin(), buf_.end());

  double below = 0.0, dev = 0.0, osc = 0.0;
  bool median_set = false;
  for (std::size_t i = 0; i + 1 < buf_.size(); ++i) {
    below += buf_[i].second;
    if (!median_set && 2.0 * below >= total) {
      st.median = buf_[i].first;
      median_set = true;
    }
    const double gap = buf_[i + 1].first - buf_[i].first;
    if (gap == 0.0) continue;
    const double above = total - below;
    dev += gap * std::min(below, above);
    osc += gap * below * above;
  }
  if (!median_set) st.median = buf_.back().first;
  st.best_dev = dev / total;
  st.osc = 2.0 * osc / (total * total);
  return st;
}

double StatsWorkspace::cross_average(std::span<const double> values_a, std::span<const std::uint32_t> members_a,
                                     std::span<const double> weights_a, std::span<const double> values_b,
                                     std::span<const std::uint32_t> members_b,
                                     std::span<const double> weights_b) {
  buf_.clear();
  buf_b_.clear();
  for (auto m : members_a) buf_.emplace_back(values_a[m], weights_a[m]);
  for (auto m : members_b) buf_b_.emplace_back(values_b[m], weights_b[m]);
  std::sort(buf_.begin(), buf_.end());
  std::sort(buf_b_.begin(), buf_b_.end());
  return cross_sorted(buf_, buf_b_);
}

double StatsWorkspace::cross_sorted(std::span<const Entry> a, std::span<const Entry> b) {
  double wa = 0.0, wb = 0.0;
  for (const auto& e : a) wa += e.second;
  for (const auto& e : b) wb += e.second;
  if (wa <= 0.0 || wb <= 0.0) return 0.0;

  // Merge walk: each gap between consecutive merged values separates
  // (A below, B above) and (B below, A above) pairs.
  double la = 0.0, lb = 0.0, sum = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  bool started = false;
  while (i < a.size() || j < b.size()) {
    const bool take_a = j == b.size() || (i < a.size() && a[i].first <= b[j].first);
    const double v = take_a ? a[i].first : b[j].first;
    if (started && v > prev) sum += (v - prev) * (la * (wb - lb) + lb * (wa - la));
    prev = v;
    started = true;
    if (take_a) {
      la += a[i].second;
      ++i;
    } else {
      lb += b[j].second;
      ++j;
    }
  }
  return sum / (wa * wb);
}

}  // namespace mmtrace
