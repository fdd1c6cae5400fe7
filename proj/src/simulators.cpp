#include "iuq/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "iuq/errors.hpp"
#include "iuq/parallel.hpp"

namespace iuq {

// ---------------------------------------------------------------------------
// SAN

SanConfig SanConfig::default_network() {
  // Nodes a..i; arcs follow the 13-activity SimOpt network.
  static constexpr std::pair<char, char> kArcs[] = {
      {'a', 'b'}, {'a', 'c'}, {'b', 'c'}, {'b', 'd'}, {'b', 'f'}, {'c', 'f'}, {'d', 'e'},
      {'d', 'g'}, {'e', 'f'}, {'e', 'h'}, {'f', 'i'}, {'g', 'h'}, {'h', 'i'},
  };
  std::ostringstream edges;
  for (const auto& [from, to] : kArcs) edges << from << ' ' << to << '\n';
  std::istringstream in(edges.str());
  return from_edge_list(in, "a", "i", {"d", "f"}, 2.4);
}

SanConfig SanConfig::from_edge_list(std::istream& in, std::string_view source, std::string_view sink,
                                    const std::vector<std::string>& condition_nodes, double threshold) {
  SanConfig cfg;
  cfg.threshold = threshold;
  auto intern = [&cfg](const std::string& name) {
    const auto it = std::find(cfg.nodes.begin(), cfg.nodes.end(), name);
    if (it != cfg.nodes.end()) return static_cast<std::size_t>(it - cfg.nodes.begin());
    cfg.nodes.push_back(name);
    return cfg.nodes.size() - 1;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string from;
    std::string to;
    if (!(fields >> from)) continue;
    std::string extra;
    if (!(fields >> to) || (fields >> extra)) {
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected `src dst`");
    }
    cfg.arcs.emplace_back(intern(from), intern(to));
  }
  if (cfg.arcs.empty()) throw ConfigError("edge list has no arcs");

  cfg.source = cfg.node_index(source);
  cfg.sink = cfg.node_index(sink);
  for (const auto& name : condition_nodes) cfg.condition_nodes.push_back(cfg.node_index(name));
  if (cfg.condition_nodes.empty()) throw ConfigError("SAN needs at least one conditioning node");
  return cfg;
}

SanConfig SanConfig::from_edge_list_file(const std::string& path, std::string_view source, std::string_view sink,
                                         const std::vector<std::string>& condition_nodes, double threshold) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open SAN topology file " + path);
  return from_edge_list(in, source, sink, condition_nodes, threshold);
}

std::size_t SanConfig::node_index(std::string_view name) const {
  const auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) throw ConfigError("unknown SAN node " + std::string(name));
  return static_cast<std::size_t>(it - nodes.begin());
}

SanSimulator::SanSimulator(SanConfig cfg)
    : cfg_(std::move(cfg)), model_(InputModel::independent_exponentials(std::max<std::size_t>(cfg_.arcs.size(), 1))) {
  const std::size_t n = cfg_.nodes.size();
  if (cfg_.arcs.empty()) throw ConfigError("SAN has no arcs");
  incoming_.assign(n, {});
  std::vector<std::vector<std::size_t>> outgoing(n);
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < cfg_.arcs.size(); ++i) {
    const auto [from, to] = cfg_.arcs[i];
    if (from >= n || to >= n) throw ConfigError("SAN arc references an unknown node");
    if (from == to) throw ConfigError("SAN arc is a self-loop");
    incoming_[to].push_back(i);
    outgoing[from].push_back(i);
    ++indegree[to];
  }

  // Kahn's algorithm, smallest node index first for a stable order.
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    const auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t v = *it;
    ready.erase(it);
    order_.push_back(v);
    for (std::size_t arc : outgoing[v])
      if (--indegree[cfg_.arcs[arc].second] == 0) ready.push_back(cfg_.arcs[arc].second);
  }
  if (order_.size() != n) throw ConfigError("SAN graph contains a cycle");

  // Every arc must lie on a source -> sink path.
  std::vector<bool> from_source(n, false);
  std::vector<bool> to_sink(n, false);
  from_source[cfg_.source] = true;
  for (std::size_t v : order_)
    if (from_source[v])
      for (std::size_t arc : outgoing[v]) from_source[cfg_.arcs[arc].second] = true;
  to_sink[cfg_.sink] = true;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it)
    for (std::size_t arc : outgoing[*it])
      if (to_sink[cfg_.arcs[arc].second]) to_sink[*it] = true;
  for (const auto& [from, to] : cfg_.arcs) {
    if (!from_source[from] || !to_sink[to]) {
      throw ConfigError("SAN arc " + cfg_.nodes[from] + "->" + cfg_.nodes[to] + " is not on a source-sink path");
    }
  }
  for (std::size_t v : cfg_.condition_nodes)
    if (!from_source[v]) throw ConfigError("SAN conditioning node unreachable from the source");
  if (!(cfg_.threshold > 0.0)) throw ConfigError("SAN threshold must be positive");
}

SanTimes SanSimulator::evaluate(std::span<const double> durations) const {
  std::vector<double> finish(cfg_.nodes.size(), 0.0);
  for (std::size_t v : order_) {
    double t = 0.0;
    for (std::size_t arc : incoming_[v]) t = std::max(t, finish[cfg_.arcs[arc].first] + durations[arc]);
    finish[v] = t;
  }
  SanTimes times;
  times.completion = finish[cfg_.sink];
  for (std::size_t v : cfg_.condition_nodes) times.condition = std::max(times.condition, finish[v]);
  return times;
}

SimRun SanSimulator::run_with(std::span<const double> durations) const {
  if (durations.size() != cfg_.arcs.size()) throw ConfigError("need one duration per SAN arc");
  SimRun out;
  out.trace = InputTrace(1);
  for (std::size_t i = 0; i < durations.size(); ++i) out.trace.push(i, durations[i]);
  const SanTimes times = evaluate(durations);
  out.a = times.condition < cfg_.threshold ? 1.0 : 0.0;
  out.y = times.completion * out.a;
  return out;
}

SimRun SanSimulator::run(const ParamVector& theta, Rng& rng) const {
  model_.require_support(theta);
  std::vector<double> durations(cfg_.arcs.size());
  for (std::size_t i = 0; i < durations.size(); ++i) durations[i] = std::exponential_distribution<double>(theta[i])(rng);
  return run_with(durations);
}

// ---------------------------------------------------------------------------
// Queue

QueueSimulator::QueueSimulator(QueueConfig cfg) : cfg_(cfg), model_(InputModel::independent_exponentials(2)) {
  if (cfg_.capacity < 1) throw ConfigError("queue capacity must be at least 1");
  if (cfg_.arrival_index > 1 || cfg_.service_index > 1 || cfg_.arrival_index == cfg_.service_index) {
    throw ConfigError("queue rate indices must be a permutation of {0, 1}");
  }
}

namespace {

struct RandomQueueSource {
  Rng& rng;
  std::exponential_distribution<double> arrivals;
  std::exponential_distribution<double> services;
  double interarrival() { return arrivals(rng); }
  double service() { return services(rng); }
};

}  // namespace

SimRun QueueSimulator::run(const ParamVector& theta, Rng& rng) const {
  model_.require_support(theta);
  RandomQueueSource source{rng, std::exponential_distribution<double>(theta[cfg_.arrival_index]),
                           std::exponential_distribution<double>(theta[cfg_.service_index])};
  return run_with(source);
}

double queue_stationary_mean(double arrival_rate, double service_rate, int capacity) {
  // pi_n proportional to rho^n, n = 0..capacity
  const double rho = arrival_rate / service_rate;
  double weight = 1.0;
  double total = 0.0;
  double first_moment = 0.0;
  for (int n = 0; n <= capacity; ++n) {
    total += weight;
    first_moment += n * weight;
    weight *= rho;
  }
  return first_moment / total;
}

// ---------------------------------------------------------------------------
// Options

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double bs_price(OptionKind kind, double spot, double strike, double rate, double vol, double ttm) {
  if (!(spot > 0.0) || !(strike > 0.0)) throw DomainError("Black-Scholes needs positive spot and strike");
  if (ttm < 0.0) throw DomainError("Black-Scholes needs a nonnegative time to maturity");
  if (ttm == 0.0) return kind == OptionKind::Call ? std::max(spot - strike, 0.0) : std::max(strike - spot, 0.0);
  if (!(vol > 0.0)) throw DomainError("Black-Scholes needs a positive volatility");

  const double sd = vol * std::sqrt(ttm);
  const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * ttm) / sd;
  const double d2 = d1 - sd;
  const double discount = strike * std::exp(-rate * ttm);
  if (kind == OptionKind::Call) return spot * normal_cdf(d1) - discount * normal_cdf(d2);
  return discount * normal_cdf(-d2) - spot * normal_cdf(-d1);
}

Eigen::MatrixXd ErmConfig::covariance() const {
  const auto n = static_cast<Eigen::Index>(stocks());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      cov(i, j) = vol[static_cast<std::size_t>(i)] * vol[static_cast<std::size_t>(j)] * (i == j ? 1.0 : correlation);
  return cov;
}

double ErmConfig::quantile_threshold(const ParamVector& theta, double level) const {
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), level);
  double total = 0.0;
  for (std::size_t l = 0; l < stocks(); ++l) {
    const double drift = (theta[l] - 0.5 * vol[l] * vol[l]) * horizon;
    total += spot0[l] * std::exp(drift + vol[l] * std::sqrt(horizon) * z);
  }
  return total;
}

void ErmConfig::validate() const {
  if (stocks() == 0 || vol.size() != stocks()) throw ConfigError("portfolio needs one volatility per stock");
  if (!(horizon > 0.0 && horizon < expiry)) throw ConfigError("portfolio horizon must lie in (0, expiry)");
  for (double v : vol)
    if (!(v > 0.0)) throw ConfigError("volatilities must be positive");
  for (double s : spot0)
    if (!(s > 0.0)) throw ConfigError("initial prices must be positive");
  if (call_strikes.size() != 5 || put_strikes.size() != 5) throw ConfigError("each stock carries 5 calls and 5 puts");
  if (Eigen::LLT<Eigen::MatrixXd>(covariance()).info() != Eigen::Success) {
    throw ConfigError("stock correlation matrix is not positive definite");
  }
}

namespace {

InputModel log_return_model(const ErmConfig& cfg) {
  cfg.validate();
  Eigen::VectorXd offset(static_cast<Eigen::Index>(cfg.stocks()));
  for (std::size_t l = 0; l < cfg.stocks(); ++l)
    offset[static_cast<Eigen::Index>(l)] = -0.5 * cfg.vol[l] * cfg.vol[l] * cfg.horizon;
  return InputModel::normal_affine_mean(cfg.horizon * cfg.covariance(), cfg.horizon, offset);
}

}  // namespace

ErmSimulator::ErmSimulator(ErmConfig cfg, const ParamVector& reference_drift)
    : cfg_(std::move(cfg)), trace_model_(log_return_model(cfg_)) {
  if (std::isnan(cfg_.threshold)) cfg_.threshold = cfg_.quantile_threshold(reference_drift, 0.05);
}

double ErmSimulator::portfolio_value(std::span<const double> prices) const {
  const double ttm = cfg_.expiry - cfg_.horizon;
  double value = 0.0;
  for (std::size_t l = 0; l < cfg_.stocks(); ++l) {
    for (double k : cfg_.call_strikes) value += bs_price(OptionKind::Call, prices[l], k, cfg_.rate, cfg_.vol[l], ttm);
    for (double k : cfg_.put_strikes) value += bs_price(OptionKind::Put, prices[l], k, cfg_.rate, cfg_.vol[l], ttm);
  }
  return value;
}

SimRun ErmSimulator::run_with(std::span<const double> log_returns) const {
  SimRun out;
  out.trace = InputTrace(cfg_.stocks());
  out.trace.push(log_returns);
  std::vector<double> prices(cfg_.stocks());
  double total = 0.0;
  for (std::size_t l = 0; l < prices.size(); ++l) {
    prices[l] = cfg_.spot0[l] * std::exp(log_returns[l]);
    total += prices[l];
  }
  out.a = total < cfg_.threshold ? 1.0 : 0.0;
  out.y = out.a > 0.0 ? portfolio_value(prices) : 0.0;
  return out;
}

SimRun ErmSimulator::run(const ParamVector& theta, Rng& rng) const {
  return run_with(trace_model_.sample(theta, rng));
}

// ---------------------------------------------------------------------------
// Testbeds and oracle

ModelId parse_model_id(std::string_view name) {
  if (name == "san") return ModelId::San;
  if (name == "mm1") return ModelId::Queue;
  if (name == "erm") return ModelId::Erm;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected san, mm1 or erm)");
}

std::string_view model_name(ModelId id) {
  switch (id) {
    case ModelId::San: return "san";
    case ModelId::Queue: return "mm1";
    case ModelId::Erm: return "erm";
  }
  return "?";
}

namespace {

// Pinned reference values from `iuq oracle --budget 10000000 --seed 1`.
constexpr double kSanReferenceEta = 4.482244279868424;
constexpr double kSanReferenceSe = 0.0017194772768801875;
constexpr double kErmReferenceEta = 284.4047179817313;
constexpr double kErmReferenceSe = 0.0036388037784109953;
// Mean r over `iuq pilot --model erm --repeats 1000 --seed 1`.
constexpr std::size_t kErmDefaultR = 343;

}  // namespace

Testbed make_testbed(ModelId id, const std::string& san_topology) {
  switch (id) {
    case ModelId::San: {
      const bool custom = !san_topology.empty();
      SanConfig cfg = custom ? SanConfig::from_edge_list_file(san_topology, "a", "i", {"d", "f"}, 2.4)
                             : SanConfig::default_network();
      auto sim = std::make_shared<const SanSimulator>(std::move(cfg));
      const std::size_t d = sim->arc_count();
      return Testbed{id,
                     sim,
                     InputModel::independent_exponentials(d),
                     ParamVector(d, 1.0),
                     99,
                     custom ? std::numeric_limits<double>::quiet_NaN() : kSanReferenceEta,
                     custom ? std::numeric_limits<double>::quiet_NaN() : kSanReferenceSe};
    }
    case ModelId::Queue: {
      auto sim = std::make_shared<const QueueSimulator>();
      return Testbed{id, sim, InputModel::independent_exponentials(2), ParamVector{0.5, 1.5}, 7,
                     queue_stationary_mean(0.5, 1.5, 10), 0.0};
    }
    case ModelId::Erm: {
      ErmConfig cfg;
      const ParamVector truth{0.05, 0.1};
      const Eigen::MatrixXd cov = cfg.covariance();
      auto sim = std::make_shared<const ErmSimulator>(std::move(cfg), truth);
      return Testbed{id, sim, InputModel::normal_known_cov(cov), truth, kErmDefaultR, kErmReferenceEta,
                     kErmReferenceSe};
    }
  }
  throw ConfigError("unknown model id");
}

OracleResult true_eta_oracle(const Simulator& sim, const ParamVector& theta, std::size_t budget, std::uint64_t seed) {
  constexpr std::size_t kChunk = 10000;
  const std::size_t chunks = (budget + kChunk - 1) / kChunk;
  struct Moments {
    double y = 0, a = 0, yy = 0, aa = 0, ya = 0;
  };
  std::vector<Moments> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng = make_stream(seed, {tag(Phase::Oracle), c});
    const std::size_t count = std::min(kChunk, budget - c * kChunk);
    Moments m;
    for (std::size_t i = 0; i < count; ++i) {
      const SimRun run = sim.run(theta, rng);
      m.y += run.y;
      m.a += run.a;
      m.yy += run.y * run.y;
      m.aa += run.a * run.a;
      m.ya += run.y * run.a;
    }
    partial[c] = m;
  });

  Moments total;
  for (const auto& m : partial) {
    total.y += m.y;
    total.a += m.a;
    total.yy += m.yy;
    total.aa += m.aa;
    total.ya += m.ya;
  }
  if (total.a == 0.0) throw EstimationError("oracle: every run had A = 0");
  const double n = static_cast<double>(budget);
  OracleResult out;
  out.runs = budget;
  out.mean_y = total.y / n;
  out.mean_a = total.a / n;
  out.eta = out.mean_y / out.mean_a;
  const double var_y = total.yy / n - out.mean_y * out.mean_y;
  const double var_a = total.aa / n - out.mean_a * out.mean_a;
  const double cov_ya = total.ya / n - out.mean_y * out.mean_a;
  const double var_ratio = (var_y - 2.0 * out.eta * cov_ya + out.eta * out.eta * var_a) / (out.mean_a * out.mean_a);
  out.se = std::sqrt(std::max(var_ratio, 0.0) / n);
  return out;
}

}  // namespace iuq
