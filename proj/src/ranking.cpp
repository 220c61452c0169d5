#include <algorithm>
#include <cmath>
#include <numeric>

#include "connecto/eval.hpp"

namespace connecto::eval {

std::vector<int> min_rank(const std::vector<double>& values, bool ascending) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError("cannot rank a non-finite value");
  }
  std::vector<int> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    int better = 0;
    for (double other : values) {
      if (ascending ? other < values[i] : other > values[i]) ++better;
    }
    ranks[i] = better + 1;
  }
  return ranks;
}

namespace {

// Ranks are small integers, so sums and products are exact; comparing them
// is the same as comparing means or geometric means.
double aggregate(const int* ranks, int count, Aggregator aggregator) {
  double acc = aggregator == Aggregator::mean ? 0.0 : 1.0;
  for (int i = 0; i < count; ++i) {
    acc = aggregator == Aggregator::mean ? acc + ranks[i] : acc * ranks[i];
  }
  return acc;
}

}  // namespace

std::vector<RankRow> rank_table_from_local_ranks(const std::vector<std::string>& teams,
                                                 const std::vector<std::array<int, 3>>& mae_local,
                                                 const std::vector<std::array<int, 3>>& pcc_local,
                                                 Aggregator aggregator) {
  const std::size_t n = teams.size();
  if (mae_local.size() != n || pcc_local.size() != n) throw ShapeError("one local-rank triple per team");
  std::vector<RankRow> rows(n);
  std::vector<double> mae_agg(n);
  std::vector<double> pcc_agg(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].team = teams[i];
    for (int c = 0; c < 3; ++c) {
      if (mae_local[i][c] < 1 || pcc_local[i][c] < 1) throw DataError("local ranks must be >= 1");
      rows[i].mae.local[c] = mae_local[i][c];
      rows[i].pcc.local[c] = pcc_local[i][c];
    }
    mae_agg[i] = aggregate(rows[i].mae.local, 3, aggregator);
    pcc_agg[i] = aggregate(rows[i].pcc.local, 3, aggregator);
  }
  const auto mae_rank = min_rank(mae_agg, true);
  const auto pcc_rank = min_rank(pcc_agg, true);
  std::vector<double> final_agg(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].mae.measure = mae_rank[i];
    rows[i].pcc.measure = pcc_rank[i];
    const int both[2] = {mae_rank[i], pcc_rank[i]};
    final_agg[i] = aggregate(both, 2, aggregator);
  }
  const auto final_rank = min_rank(final_agg, true);
  for (std::size_t i = 0; i < n; ++i) rows[i].final_rank = final_rank[i];
  return rows;
}

std::vector<RankRow> compute_rank_table(const std::vector<TeamScores>& scores, Aggregator aggregator) {
  const std::size_t n = scores.size();
  std::vector<std::string> teams;
  std::vector<double> cols[6];
  for (const auto& s : scores) {
    const std::optional<double>* fields[6] = {&s.mae_public, &s.mae_private, &s.mae_cv,
                                              &s.pcc_public, &s.pcc_private, &s.pcc_cv};
    static const char* names[6] = {"public MAE", "private MAE", "CV MAE", "public PCC", "private PCC", "CV PCC"};
    for (int c = 0; c < 6; ++c) {
      if (!fields[c]->has_value()) throw DataError("team '" + s.team + "' is missing its " + names[c] + " score");
      cols[c].push_back(**fields[c]);
    }
    teams.push_back(s.team);
  }
  std::vector<std::array<int, 3>> mae_local(n);
  std::vector<std::array<int, 3>> pcc_local(n);
  for (int c = 0; c < 3; ++c) {
    const auto m = min_rank(cols[c], true);
    const auto p = min_rank(cols[c + 3], false);
    for (std::size_t i = 0; i < n; ++i) {
      mae_local[i][c] = m[i];
      pcc_local[i][c] = p[i];
    }
  }
  return rank_table_from_local_ranks(teams, mae_local, pcc_local, aggregator);
}

}  // namespace connecto::eval
