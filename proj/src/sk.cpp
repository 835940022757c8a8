#include "glassmem/sk.hpp"

#include "glassmem/error.hpp"
#include "glassmem/parallel.hpp"
#include "glassmem/stats.hpp"

namespace glassmem {

SKRealization sample_sk(std::size_t n, RandomSource& rng) {
  if (n < 2) throw ValidationError("sample_sk: n must be >= 2");
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) e[i * n + j] = e[j * n + i] = rng.normal();
  }
  return {CouplingMatrix(n, std::move(e), DiagonalPolicy::Zeroed), n, rng.seed()};
}

SKAnalysis analyze_realization(const CouplingMatrix& J, const SKOptions& opts, RandomSource& rng) {
  if (J.size() > kMaxExhaustiveSize && J.size() <= opts.exhaustive_limit) {
    throw ValidationError("analyze_realization: exhaustive mode refused beyond n = 24");
  }
  SKAnalysis out;
  out.minima = J.size() <= opts.exhaustive_limit ? enumerate_minima(J)
                                                 : enumerate_minima_restart(J, opts.starts, opts.kind, rng);
  out.recall.reserve(out.minima.size());
  for (const auto& m : out.minima) {
    std::optional<double> p;
    if (J.size() <= 64) p = exact_single_flip_recall(J, m, opts.kind, opts.scoring);
    if (!p) p = recall_probability(J, m, 1, opts.trials, opts.kind, rng, opts.scoring);
    out.recall.push_back(*p);
    if (*p > opts.threshold) ++out.memories;
  }
  return out;
}

SKSummary sk_statistics(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts,
                        std::size_t threads) {
  if (realizations == 0) throw ValidationError("sk_statistics: realizations must be >= 1");
  struct Row {
    double memories = 0.0;
    double fraction = 0.0;
    double minima = 0.0;
  };
  const auto rows = parallel_map<Row>(realizations, threads, [&](std::size_t r) {
    RandomSource stream = rng.split(n, r);
    const auto sk = sample_sk(n, stream);
    const auto a = analyze_realization(sk.J, opts, stream);
    return Row{static_cast<double>(a.memories), a.fraction(), static_cast<double>(a.minima.size())};
  });
  std::vector<double> caps, fracs, mins;
  for (const auto& row : rows) {
    caps.push_back(row.memories);
    fracs.push_back(row.fraction);
    mins.push_back(row.minima);
  }
  SKSummary s;
  s.n = n;
  s.realizations = realizations;
  s.capacity_mean = stats::mean(caps);
  s.capacity_std = stats::stddev(caps);
  s.capacity_stderr = stats::standard_error(caps);
  s.fraction_mean = stats::mean(fracs);
  s.fraction_stderr = stats::standard_error(fracs);
  s.minima_mean = stats::mean(mins);
  return s;
}

MeanErr memory_fraction(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts,
                        std::size_t threads) {
  const auto s = sk_statistics(n, realizations, rng, opts, threads);
  return {s.fraction_mean, s.fraction_stderr};
}

MeanErr sk_capacity(std::size_t n, std::size_t realizations, const RandomSource& rng, const SKOptions& opts,
                    std::size_t threads) {
  const auto s = sk_statistics(n, realizations, rng, opts, threads);
  return {s.capacity_mean, s.capacity_std};
}

}  // namespace glassmem
