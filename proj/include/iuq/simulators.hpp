#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iuq/input_models.hpp"
#include "iuq/param.hpp"
#include "iuq/rng.hpp"

namespace iuq {

/// Outputs (Y, A) of one replication or regenerative cycle together with the
/// inputs it consumed.
struct SimRun {
  double y = 0.0;
  double a = 0.0;
  InputTrace trace;
};

/// A stochastic simulation model driven by a parametric input model.
class Simulator {
 public:
  virtual ~Simulator() = default;

  /// Law of the entries recorded in SimRun::trace; used for likelihood ratios.
  virtual const InputModel& trace_model() const = 0;
  virtual SimRun run(const ParamVector& theta, Rng& rng) const = 0;
};

// ---------------------------------------------------------------------------
// Stochastic activity network

/// A DAG of activities. Arc i has an exponential duration with rate theta[i].
/// V is the longest path from the source to the sink; T is the largest
/// longest-path time from the source to any node of the conditioning set.
struct SanConfig {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> arcs;  // indices into nodes
  std::size_t source = 0;
  std::size_t sink = 0;
  std::vector<std::size_t> condition_nodes;
  double threshold = 2.4;

  /// 13-arc, 9-node network a..i with V from a to i and T up to nodes d and f.
  static SanConfig default_network();

  /// Reads `src dst` lines (node names; blank lines and `#` comments ignored).
  /// Source, sink and conditioning nodes are given by name.
  static SanConfig from_edge_list(std::istream& in, std::string_view source, std::string_view sink,
                                  const std::vector<std::string>& condition_nodes, double threshold);
  static SanConfig from_edge_list_file(const std::string& path, std::string_view source, std::string_view sink,
                                       const std::vector<std::string>& condition_nodes, double threshold);

  std::size_t node_index(std::string_view name) const;
};

struct SanTimes {
  double completion = 0.0;  // V
  double condition = 0.0;   // T
};

class SanSimulator final : public Simulator {
 public:
  explicit SanSimulator(SanConfig cfg);

  const InputModel& trace_model() const override { return model_; }
  SimRun run(const ParamVector& theta, Rng& rng) const override;

  /// Longest-path times for given arc durations.
  SanTimes evaluate(std::span<const double> durations) const;
  /// Outputs for given arc durations (trace holds the durations).
  SimRun run_with(std::span<const double> durations) const;

  const SanConfig& config() const { return cfg_; }
  std::size_t arc_count() const { return cfg_.arcs.size(); }

 private:
  SanConfig cfg_;
  InputModel model_;
  std::vector<std::size_t> order_;                 // topological order of nodes
  std::vector<std::vector<std::size_t>> incoming_;  // arc indices ending at each node
};

// ---------------------------------------------------------------------------
// M/M/1/K queue, one regenerative cycle per run

struct QueueConfig {
  int capacity = 10;
  std::size_t arrival_index = 0;  // position of the arrival rate in theta
  std::size_t service_index = 1;  // position of the service rate in theta
};

/// A cycle starts with an arrival to an empty system and ends at the next
/// arrival to an empty system. A is the cycle length, Y the integral of the
/// number in system over the cycle. Blocked arrivals draw no service time.
class QueueSimulator final : public Simulator {
 public:
  explicit QueueSimulator(QueueConfig cfg = {});

  const InputModel& trace_model() const override { return model_; }
  SimRun run(const ParamVector& theta, Rng& rng) const override;

  /// Runs a cycle with draws taken from `source`, which must provide
  /// `double interarrival()` and `double service()`.
  template <class Source>
  SimRun run_with(Source& source) const;

  const QueueConfig& config() const { return cfg_; }

 private:
  QueueConfig cfg_;
  InputModel model_;
};

/// Stationary mean number in system of an M/M/1/capacity queue.
double queue_stationary_mean(double arrival_rate, double service_rate, int capacity);

// ---------------------------------------------------------------------------
// Option portfolio conditioned on low stock prices

enum class OptionKind { Call, Put };

/// Black-Scholes value of a European option. ttm == 0 gives the intrinsic value.
double bs_price(OptionKind kind, double spot, double strike, double rate, double vol, double ttm);

struct ErmConfig {
  std::vector<double> spot0{100.0, 100.0};
  std::vector<double> vol{0.15, 0.35};
  double correlation = 0.5;
  double rate = 0.02;
  double expiry = 2.0;
  double horizon = 4.0 / 52.0;
  std::vector<double> call_strikes{80.0, 90.0, 100.0, 110.0, 120.0};
  std::vector<double> put_strikes{80.0, 90.0, 100.0, 110.0, 120.0};
  /// Threshold on the summed stock prices; +inf makes A = 1 always.
  double threshold = std::numeric_limits<double>::quiet_NaN();

  std::size_t stocks() const { return spot0.size(); }
  /// Annualised covariance [vol_i vol_j rho_ij].
  Eigen::MatrixXd covariance() const;
  /// Sum over stocks of the quantile of the marginal law of S_horizon at drift theta.
  double quantile_threshold(const ParamVector& theta, double level) const;
  void validate() const;
};

class ErmSimulator final : public Simulator {
 public:
  /// A NaN threshold in cfg is replaced by the 5% quantile threshold at `reference_drift`.
  ErmSimulator(ErmConfig cfg, const ParamVector& reference_drift);

  const InputModel& trace_model() const override { return trace_model_; }
  SimRun run(const ParamVector& theta, Rng& rng) const override;

  /// Outputs for a given log-return vector Z.
  SimRun run_with(std::span<const double> log_returns) const;
  double portfolio_value(std::span<const double> prices) const;

  const ErmConfig& config() const { return cfg_; }

 private:
  ErmConfig cfg_;
  InputModel trace_model_;  // Z ~ N((theta - vol^2/2) horizon, horizon * cov)
};

// ---------------------------------------------------------------------------
// Testbeds

enum class ModelId { San, Queue, Erm };

ModelId parse_model_id(std::string_view name);
std::string_view model_name(ModelId id);

/// Everything needed to run an experiment on one of the shipped models.
struct Testbed {
  ModelId id;
  std::shared_ptr<const Simulator> simulator;
  InputModel data_model;  // law of the observed input data
  ParamVector true_param;
  std::size_t default_r;
  double reference_eta;     // eta at true_param
  double reference_eta_se;  // Monte Carlo SE of reference_eta (0 when exact)
};

/// Builds a testbed. For San, `san_topology` (edge-list path) overrides the
/// default network; the reference eta is then unknown (NaN) until an oracle
/// run pins it.
Testbed make_testbed(ModelId id, const std::string& san_topology = {});

struct OracleResult {
  double eta = 0.0;
  double se = 0.0;  // delta-method standard error
  std::size_t runs = 0;
  double mean_y = 0.0;
  double mean_a = 0.0;
};

/// Brute-force eta(theta) = mean(Y) / mean(A) over `budget` independent runs.
OracleResult true_eta_oracle(const Simulator& sim, const ParamVector& theta, std::size_t budget, std::uint64_t seed);

// ---------------------------------------------------------------------------

template <class Source>
SimRun QueueSimulator::run_with(Source& source) const {
  SimRun out;
  out.trace = InputTrace(1);
  const auto arr = cfg_.arrival_index;
  const auto svc = cfg_.service_index;
  constexpr double kNever = std::numeric_limits<double>::infinity();

  // Customer arriving to the empty system at t = 0 starts service at once.
  int in_system = 1;
  double now = 0.0;
  double area = 0.0;
  double service = source.service();
  out.trace.push(svc, service);
  double departure = service;
  double gap = source.interarrival();
  out.trace.push(arr, gap);
  double arrival = gap;

  for (;;) {
    if (arrival <= departure) {
      area += in_system * (arrival - now);
      now = arrival;
      if (in_system == 0) break;  // arrival to an empty system: regeneration
      if (in_system < cfg_.capacity) ++in_system;
      gap = source.interarrival();
      out.trace.push(arr, gap);
      arrival = now + gap;
    } else {
      area += in_system * (departure - now);
      now = departure;
      --in_system;
      if (in_system > 0) {
        service = source.service();
        out.trace.push(svc, service);
        departure = now + service;
      } else {
        departure = kNever;
      }
    }
  }
  out.y = area;
  out.a = now;
  return out;
}

}  // namespace iuq
