#include "cps/assignment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cps/hash.hpp"

namespace cps {

namespace {

constexpr double kNoBest = std::numeric_limits<double>::infinity();

// Everything both solvers share: the drop matrix D[i][a] (subsystem i,
// catalog entry a, evaluated at that entry's recovery time), catalog costs,
// and the id-sorted visit order that makes cost ties deterministic.
struct SearchContext {
  int n = 0;
  int j = 0;
  double c = 0.0;
  std::vector<DegradationProfile> profiles;
  std::vector<std::vector<double>> drop;
  std::vector<double> cost;
  std::vector<int> by_id;
};

SearchContext make_context(const Model& m, const SciTable& sci, SlopeOrder order) {
  if (sci.subsystems() != m.N())
    throw std::invalid_argument("assignment: rate table rows != subsystem count");
  if (sci.delta <= 0.0)
    throw std::invalid_argument("assignment: rate table has no band width");

  SearchContext ctx;
  ctx.n = m.N();
  ctx.j = static_cast<int>(m.architectures.size());
  ctx.c = m.c;
  for (int i = 0; i < ctx.n; ++i)
    ctx.profiles.push_back(profile_from_segments(sci.delta, sci.rates(i), order));

  ctx.drop.assign(ctx.n, std::vector<double>(ctx.j));
  ctx.cost.resize(ctx.j);
  for (int a = 0; a < ctx.j; ++a) {
    const Architecture& arch = m.architectures[a];
    ctx.cost[a] = arch.cost;
    for (int i = 0; i < ctx.n; ++i)
      ctx.drop[i][a] = ctx.profiles[i].value(arch.recovery_time);
  }

  ctx.by_id.resize(ctx.j);
  std::iota(ctx.by_id.begin(), ctx.by_id.end(), 0);
  std::sort(ctx.by_id.begin(), ctx.by_id.end(), [&](int a, int b) {
    const auto& ids = m.architectures;
    return ids[a].id != ids[b].id ? ids[a].id < ids[b].id : a < b;
  });
  return ctx;
}

Assignment finish(const Model& m, const SearchContext& ctx, SlopeOrder order,
                  bool found, const std::vector<int>& map, long long nodes) {
  Assignment out;
  out.order = order;
  out.nodes = nodes;
  out.found = found;
  if (!found) {
    out.verdict.safe = false;
    out.verdict.margin = -kInf;
    out.verdict.notes.push_back("no feasible mapping");
    return out;
  }
  out.arch_of = map;
  std::vector<double> times(ctx.n);
  for (int i = 0; i < ctx.n; ++i) {
    times[i] = m.architectures[map[i]].recovery_time;
    out.total_cost += ctx.cost[map[i]];
    out.contributions.push_back(ctx.drop[i][map[i]]);
  }
  out.verdict = check_segmented_bound(ctx.c, ctx.profiles, times);
  return out;
}

struct Incumbent {
  bool found = false;
  double cost = kNoBest;
  std::vector<int> map;

  // Candidates are visited in id order at every depth, so the first strict
  // improvement is automatically the lexicographically smallest tie.
  void offer(double margin, double cost_here, const std::vector<int>& cur) {
    if (margin >= 0.0 && cost_here < cost) {
      found = true;
      cost = cost_here;
      map = cur;
    }
  }
};

void enumerate_dfs(const SearchContext& ctx, bool injective, int d, double margin,
                   double cost, std::vector<int>& cur, std::vector<char>& used,
                   Incumbent& best, long long& nodes) {
  if (d == ctx.n) {
    best.offer(margin, cost, cur);
    return;
  }
  for (int a : ctx.by_id) {
    if (injective && used[a]) continue;
    ++nodes;
    cur[d] = a;
    used[a] = 1;
    enumerate_dfs(ctx, injective, d + 1, margin + ctx.drop[d][a],
                  cost + ctx.cost[a], cur, used, best, nodes);
    used[a] = 0;
  }
}

struct BnbSearch {
  const SearchContext& ctx;
  bool injective;
  std::vector<std::vector<int>> cand;  // per subsystem, id order
  std::vector<double> best_drop;       // least damaging candidate per subsystem
  std::vector<double> suffix_best;     // sum of best_drop from depth d on
  std::vector<int> cur;
  std::vector<char> used;
  Incumbent best;
  long long nodes = 0;

  explicit BnbSearch(const SearchContext& c, bool inj) : ctx(c), injective(inj) {
    cand.resize(ctx.n);
    for (int i = 0; i < ctx.n; ++i) {
      for (int a : ctx.by_id)
        if (injective || !dominated(i, a)) cand[i].push_back(a);
    }
    best_drop.resize(ctx.n);
    for (int i = 0; i < ctx.n; ++i) {
      double b = -kInf;
      for (int a : cand[i]) b = std::max(b, ctx.drop[i][a]);
      best_drop[i] = b;
    }
    suffix_best.assign(ctx.n + 1, 0.0);
    for (int i = ctx.n - 1; i >= 0; --i)
      suffix_best[i] = suffix_best[i + 1] + best_drop[i];
    cur.resize(ctx.n);
    used.assign(ctx.j, 0);
  }

  // b is never part of the returned mapping if some a is no more expensive,
  // no more damaging, and (on equal cost) earlier in id order. Reuse makes
  // the swap always available, so this only runs in the unrestricted mode.
  bool dominated(int i, int b) const {
    for (int a : ctx.by_id) {
      if (a == b) break;  // a earlier in id order
      if (ctx.cost[a] <= ctx.cost[b] && ctx.drop[i][a] >= ctx.drop[i][b])
        return true;
    }
    for (int a = 0; a < ctx.j; ++a)
      if (ctx.cost[a] < ctx.cost[b] && ctx.drop[i][a] >= ctx.drop[i][b])
        return true;
    return false;
  }

  // Additive relaxation: each remaining subsystem pays at least the
  // cheapest entry that fits the margin left over when every other
  // remaining subsystem takes its least damaging option.
  bool prune(int d, double margin, double cost) const {
    double bound = cost;
    for (int i = d; i < ctx.n; ++i) {
      double budget = margin + (suffix_best[d] - best_drop[i]);
      double cheapest = kNoBest;
      for (int a : cand[i])
        if (ctx.drop[i][a] >= -budget - 1e-12)
          cheapest = std::min(cheapest, ctx.cost[a]);
      if (cheapest == kNoBest) return true;
      bound += cheapest;
    }
    return best.found && bound >= best.cost;
  }

  void dfs(int d, double margin, double cost) {
    if (d == ctx.n) {
      best.offer(margin, cost, cur);
      return;
    }
    if (prune(d, margin, cost)) return;
    for (int a : cand[d]) {
      if (injective && used[a]) continue;
      if (ctx.drop[d][a] == -kInf) continue;  // nothing below can recover
      ++nodes;
      cur[d] = a;
      used[a] = 1;
      dfs(d + 1, margin + ctx.drop[d][a], cost + ctx.cost[a]);
      used[a] = 0;
    }
  }
};

}  // namespace

Assignment enumerate_optimal(const Model& m, const SciTable& sci,
                             const AssignOptions& opts) {
  SearchContext ctx = make_context(m, sci, opts.order);
  if (ctx.j > 0 && std::pow(static_cast<double>(ctx.j), ctx.n) > 1e8)
    throw std::runtime_error(
        "enumerate_optimal: catalog admits more than 1e8 mappings; "
        "use branch_and_bound");

  Incumbent best;
  long long nodes = 0;
  if (ctx.j > 0) {
    std::vector<int> cur(ctx.n);
    std::vector<char> used(ctx.j, 0);
    enumerate_dfs(ctx, opts.injective, 0, ctx.c, 0.0, cur, used, best, nodes);
  }
  return finish(m, ctx, opts.order, best.found, best.map, nodes);
}

Assignment branch_and_bound(const Model& m, const SciTable& sci,
                            const AssignOptions& opts) {
  SearchContext ctx = make_context(m, sci, opts.order);
  if (ctx.j == 0) return finish(m, ctx, opts.order, false, {}, 0);

  BnbSearch search(ctx, opts.injective);
  bool hopeless = std::any_of(search.best_drop.begin(), search.best_drop.end(),
                              [](double b) { return b == -kInf; });
  if (!hopeless) search.dfs(0, ctx.c, 0.0);
  return finish(m, ctx, opts.order, search.best.found, search.best.map,
                search.nodes);
}

nlohmann::json to_json(const Assignment& a, const Model& m, const SciTable& sci) {
  std::string blob = format_double(sci.delta);
  blob += "|" + std::to_string(sci.subsystems()) + "x" +
          std::to_string(sci.segments());
  for (const auto& row : sci.rows)
    for (const auto& r : row) {
      blob += "|" + format_double(r.rho) + ";" + r.engine + ";" +
              format_double(r.margin);
    }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, fnv1a64(blob));

  nlohmann::json j;
  j["found"] = a.found;
  j["order"] = a.order == SlopeOrder::sorted ? "sorted" : "listed";
  j["nodes"] = a.nodes;
  j["sci_fingerprint"] = hex;
  j["safe"] = a.verdict.safe;
  if (!a.found) return j;

  std::vector<std::string> ids;
  for (int idx : a.arch_of) ids.push_back(m.architectures.at(idx).id);
  j["mapping"] = ids;
  j["cost"] = a.total_cost;
  j["margin"] = a.verdict.margin;
  j["contributions"] = a.contributions;
  return j;
}

}  // namespace cps
