#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "skyherd/errors.hpp"
#include "skyherd/harness.hpp"
#include "skyherd/text.hpp"

namespace skyherd {

Metrics compute_metrics(const MissionRecord& record) {
  const auto path = record.path();
  const std::set<GridPos> distinct(path.begin(), path.end());
  Metrics m;
  m.coverage_fraction = static_cast<double>(distinct.size()) / record.config.cells();
  m.iterations = static_cast<int>(record.steps.size());
  m.recovered = record.recovered;
  m.targets_per_move = m.iterations == 0 ? 0.0 : static_cast<double>(m.recovered) / m.iterations;
  m.wall_budget_s = m.iterations * record.iteration_seconds;
  return m;
}

Statistic summarize(std::vector<double> values) {
  if (values.empty()) throw DomainError("cannot summarize an empty set");
  Statistic s;
  const std::size_t n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  s.median = *mid;
  return s;
}

Aggregate aggregate(const std::vector<Metrics>& metrics) {
  if (metrics.empty()) throw DomainError("cannot aggregate zero missions");
  auto column = [&](auto field) {
    std::vector<double> v;
    for (const auto& m : metrics) v.push_back(static_cast<double>(field(m)));
    return summarize(std::move(v));
  };
  Aggregate a;
  a.count = metrics.size();
  a.coverage_fraction = column([](const Metrics& m) { return m.coverage_fraction; });
  a.iterations = column([](const Metrics& m) { return m.iterations; });
  a.recovered = column([](const Metrics& m) { return m.recovered; });
  a.targets_per_move = column([](const Metrics& m) { return m.targets_per_move; });
  return a;
}

void write_metrics_csv(std::ostream& out, const std::vector<Metrics>& metrics) {
  out << "episode,coverage,iterations,recovered,targets_per_move,wall_budget_s\n";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    out << i << ',' << format_real(m.coverage_fraction) << ',' << m.iterations << ','
        << m.recovered << ',' << format_real(m.targets_per_move) << ','
        << format_real(m.wall_budget_s) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const std::string& label, const Aggregate& agg,
                         bool header) {
  if (header) out << "label,metric,count,median,mean,sd\n";
  auto row = [&](const char* name, const Statistic& s) {
    out << label << ',' << name << ',' << agg.count << ',' << format_real(s.median) << ','
        << format_real(s.mean) << ',' << format_real(s.sd) << '\n';
  };
  row("coverage", agg.coverage_fraction);
  row("iterations", agg.iterations);
  row("recovered", agg.recovered);
  row("targets_per_move", agg.targets_per_move);
}

}  // namespace skyherd
