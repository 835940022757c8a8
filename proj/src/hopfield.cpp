#include "glassmem/hopfield.hpp"

#include <algorithm>
#include <set>

#include "glassmem/error.hpp"
#include "glassmem/parallel.hpp"

namespace glassmem {

PatternSet::PatternSet(std::vector<SpinConfig> patterns) : patterns_(std::move(patterns)) {
  if (patterns_.empty()) throw ValidationError("PatternSet: need at least one pattern");
  const std::size_t n = patterns_.front().size();
  for (const auto& p : patterns_) {
    if (p.size() != n) throw SizeError("PatternSet: inconsistent pattern lengths");
    if (!p.is_binary()) throw ValidationError("PatternSet: patterns must be binary");
  }
}

PatternSet PatternSet::random(std::size_t n, std::size_t P, RandomSource& rng) {
  std::vector<SpinConfig> out;
  out.reserve(P);
  for (std::size_t p = 0; p < P; ++p) out.push_back(SpinConfig::random_binary(n, rng));
  return PatternSet(std::move(out));
}

CouplingMatrix hebbian(const PatternSet& patterns) {
  const std::size_t n = patterns.length();
  std::vector<double> e(n * n, 0.0);
  for (const auto& xi : patterns.patterns()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) e[i * n + j] += xi[i] * xi[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) e[j * n + i] = e[i * n + j];
  }
  return CouplingMatrix(n, std::move(e), DiagonalPolicy::Zeroed);
}

std::size_t stored_memory_count(const PatternSet& patterns, RandomSource& rng, const HopfieldOptions& opts) {
  if (opts.trials == 0) throw ValidationError("stored_memory_count: trials must be >= 1");
  if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) {
    throw ValidationError("stored_memory_count: threshold must lie in (0, 1)");
  }
  const auto J = hebbian(patterns);
  std::set<SpinConfig> distinct(patterns.patterns().begin(), patterns.patterns().end());
  std::size_t stored = 0;
  for (const auto& xi : distinct) {
    if (recall_probability(J, xi, 1, opts.trials, opts.kind, rng) > opts.threshold) ++stored;
  }
  return stored;
}

CapacitySweep capacity_sweep(std::size_t n, const std::vector<std::size_t>& P_range, std::size_t realizations,
                             const RandomSource& rng, const HopfieldOptions& opts, std::size_t threads) {
  if (P_range.empty()) throw ValidationError("capacity_sweep: empty P range");
  if (realizations == 0) throw ValidationError("capacity_sweep: realizations must be >= 1");
  if (n < 1) throw ValidationError("capacity_sweep: n must be >= 1");
  CapacitySweep out;
  for (std::size_t P : P_range) {
    if (P == 0) throw ValidationError("capacity_sweep: P must be >= 1");
    const auto counts = parallel_map<double>(realizations, threads, [&](std::size_t r) {
      RandomSource stream = rng.split(n * 1000003 + P, r);
      const auto patterns = PatternSet::random(n, P, stream);
      return static_cast<double>(stored_memory_count(patterns, stream, opts));
    });
    CapacityRow row{n, P, stats::mean(counts), stats::stddev(counts), realizations};
    if (out.rows.empty() || row.mean > out.max_mean) {
      out.max_mean = row.mean;
      out.argmax_P = P;
    }
    out.rows.push_back(row);
  }
  return out;
}

ScalingResult capacity_scaling(const std::vector<std::size_t>& ns, const std::vector<std::size_t>& P_range,
                               std::size_t realizations, const RandomSource& rng, const HopfieldOptions& opts,
                               std::size_t threads) {
  if (ns.size() < 2) throw ValidationError("capacity_scaling: need at least two sizes");
  ScalingResult out;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t n : ns) {
    const auto sweep = capacity_sweep(n, P_range, realizations, rng, opts, threads);
    out.points.push_back({n, sweep.argmax_P, sweep.max_mean});
    xs.push_back(static_cast<double>(n));
    ys.push_back(sweep.max_mean);
  }
  out.fit = stats::fit_line(xs, ys);
  return out;
}

}  // namespace glassmem
