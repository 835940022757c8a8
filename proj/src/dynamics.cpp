#include "glassmem/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <set>
#include <unordered_map>

#include "glassmem/error.hpp"
#include "glassmem/io.hpp"

namespace glassmem {

std::string to_string(DynamicsKind kind) {
  std::string out;
  switch (kind.variant) {
    case DynamicsVariant::MH: out = "MH"; break;
    case DynamicsVariant::SD: out = "SD"; break;
    case DynamicsVariant::SDRate: out = "SD_RATE"; break;
  }
  if (kind.tie_break == TieBreak::LowestIndex) out += "/lowest";
  return out;
}

DynamicsKind parse_dynamics_kind(std::string_view text) {
  DynamicsKind kind;
  std::string_view base = text;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto tb = text.substr(slash + 1);
    if (tb == "lowest") {
      kind.tie_break = TieBreak::LowestIndex;
    } else if (tb == "uniform") {
      kind.tie_break = TieBreak::Uniform;
    } else {
      throw ValidationError("unknown tie-break '" + std::string(tb) + "'");
    }
    base = text.substr(0, slash);
  }
  if (base == "MH") {
    kind.variant = DynamicsVariant::MH;
  } else if (base == "SD") {
    kind.variant = DynamicsVariant::SD;
  } else if (base == "SD_RATE") {
    kind.variant = DynamicsVariant::SDRate;
  } else {
    throw ValidationError("unknown dynamics '" + std::string(base) + "'");
  }
  return kind;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryStep> steps) {
  out << "step,site,delta_energy,energy\n";
  for (const auto& st : steps) {
    out << st.step << ',' << st.site << ',' << io::format_double(st.delta_energy) << ','
        << io::format_double(st.energy) << '\n';
  }
}

LocalFieldState::LocalFieldState(const CouplingMatrix& J) : J_(&J), s_(J.size(), 1.0), h_(J.size(), 0.0) {}

void LocalFieldState::assign(std::span<const double> spins) {
  const std::size_t n = s_.size();
  if (spins.size() != n) throw SizeError("LocalFieldState::assign: size mismatch");
  std::copy(spins.begin(), spins.end(), s_.begin());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = J_->row(i);
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) h += row[j] * s_[j];
    }
    h_[i] = h;
  }
}

void LocalFieldState::flip(std::size_t k) {
  const double step = -2.0 * s_[k];
  const auto col = J_->row(k);  // symmetric
  const std::size_t n = s_.size();
  for (std::size_t j = 0; j < n; ++j) h_[j] += col[j] * step;
  h_[k] -= col[k] * step;
  s_[k] = -s_[k];
}

bool LocalFieldState::is_local_min() const noexcept {
  for (std::size_t k = 0; k < s_.size(); ++k) {
    if (delta(k) < 0.0) return false;
  }
  return true;
}

bool LocalFieldState::same_spins(const SpinConfig& other) const noexcept {
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if ((s_[i] < 0.0) != (other[i] < 0.0)) return false;
  }
  return true;
}

bool LocalFieldState::same_spins_negated(const SpinConfig& other) const noexcept {
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if ((s_[i] < 0.0) == (other[i] < 0.0)) return false;
  }
  return true;
}

std::uint64_t LocalFieldState::bits() const noexcept {
  std::uint64_t b = 0;
  for (std::size_t i = 0; i < s_.size(); ++i) {
    if (s_[i] < 0.0) b |= (std::uint64_t{1} << i);
  }
  return b;
}

namespace {

// Chooses the next site to flip, or returns n if the state is a local minimum.
std::size_t choose_flip(const LocalFieldState& st, DynamicsKind kind, RandomSource& rng,
                        std::vector<std::size_t>& scratch) {
  const std::size_t n = st.size();
  scratch.clear();
  switch (kind.variant) {
    case DynamicsVariant::MH: {
      for (std::size_t k = 0; k < n; ++k) {
        if (st.delta(k) < 0.0) scratch.push_back(k);
      }
      if (scratch.empty()) return n;
      return scratch.size() == 1 ? scratch.front() : scratch[rng.index(scratch.size())];
    }
    case DynamicsVariant::SD: {
      double best = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = st.delta(k);
        if (d < best) {
          best = d;
          scratch.clear();
          scratch.push_back(k);
        } else if (d == best && d < 0.0) {
          scratch.push_back(k);
        }
      }
      if (scratch.empty()) return n;
      if (scratch.size() == 1 || kind.tie_break == TieBreak::LowestIndex) return scratch.front();
      return scratch[rng.index(scratch.size())];
    }
    case DynamicsVariant::SDRate: {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = st.delta(k);
        if (d < 0.0) {
          scratch.push_back(k);
          total -= d;
        }
      }
      if (scratch.empty()) return n;
      if (scratch.size() == 1) return scratch.front();
      double u = rng.uniform() * total;
      for (std::size_t k : scratch) {
        u += st.delta(k);
        if (u < 0.0) return k;
      }
      return scratch.back();
    }
  }
  return n;
}

}  // namespace

std::size_t relax_in_place(LocalFieldState& state, DynamicsKind kind, RandomSource& rng,
                           std::vector<TrajectoryStep>* trajectory) {
  std::vector<std::size_t> scratch;
  scratch.reserve(state.size());
  double energy = 0.0;
  if (trajectory) {
    const auto s = state.spins();
    const auto h = state.fields();
    for (std::size_t i = 0; i < s.size(); ++i) energy -= 0.5 * s[i] * h[i];
  }
  std::size_t flips = 0;
  for (;;) {
    const std::size_t k = choose_flip(state, kind, rng, scratch);
    if (k == state.size()) break;
    const double d = state.delta(k);
    state.flip(k);
    ++flips;
    if (trajectory) {
      energy += d;
      trajectory->push_back({flips, k, d, energy});
    }
  }
  return flips;
}

SpinConfig relax(const CouplingMatrix& J, const SpinConfig& s0, DynamicsKind kind, RandomSource& rng,
                 std::vector<TrajectoryStep>* trajectory) {
  if (J.size() != s0.size()) throw SizeError("relax: size mismatch");
  if (!s0.is_binary()) throw ValidationError("relax: initial configuration must be binary");
  LocalFieldState st(J);
  st.assign(s0.values());
  relax_in_place(st, kind, rng, trajectory);
  return SpinConfig(std::vector<double>(st.spins().begin(), st.spins().end()));
}

bool is_local_min(const CouplingMatrix& J, const SpinConfig& s) {
  if (J.size() != s.size()) throw SizeError("is_local_min: size mismatch");
  if (!s.is_binary()) throw ValidationError("is_local_min: configuration must be binary");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (delta_energy(J, s, k) < 0.0) return false;
  }
  return true;
}

std::vector<SpinConfig> enumerate_minima(const CouplingMatrix& J) {
  const std::size_t n = J.size();
  if (n > kMaxExhaustiveSize) {
    throw ValidationError("enumerate_minima: exhaustive mode refused for n > " + std::to_string(kMaxExhaustiveSize));
  }
  // Spin 0 stays +1; the remaining n-1 spins are walked in Gray-code order so each
  // step is a single O(n) flip.
  LocalFieldState st(J);
  st.assign(std::vector<double>(n, 1.0));
  std::vector<std::uint64_t> found;
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  for (std::uint64_t i = 0;; ++i) {
    if (st.is_local_min()) found.push_back(st.bits());
    if (i + 1 == count) break;
    st.flip(static_cast<std::size_t>(std::countr_zero(i + 1)) + 1);
  }
  std::sort(found.begin(), found.end());
  std::vector<SpinConfig> out;
  out.reserve(found.size());
  for (auto b : found) out.push_back(SpinConfig::from_bits(b, n));
  return out;
}

std::vector<SpinConfig> enumerate_minima_restart(const CouplingMatrix& J, std::size_t starts, DynamicsKind kind,
                                                 RandomSource& rng) {
  const std::size_t n = J.size();
  LocalFieldState st(J);
  std::set<SpinConfig> found;
  std::vector<double> s(n);
  for (std::size_t r = 0; r < starts; ++r) {
    for (auto& v : s) v = rng.sign();
    st.assign(s);
    relax_in_place(st, kind, rng);
    found.insert(SpinConfig(std::vector<double>(st.spins().begin(), st.spins().end())).canonical());
  }
  std::vector<SpinConfig> out(found.begin(), found.end());
  if (n <= 64) {
    std::sort(out.begin(), out.end(), [](const SpinConfig& a, const SpinConfig& b) { return a.bits() < b.bits(); });
  }
  return out;
}

double recall_probability(const CouplingMatrix& J, const SpinConfig& memory, std::size_t errors, std::size_t trials,
                          DynamicsKind kind, RandomSource& rng, RecallScoring scoring) {
  const std::size_t n = J.size();
  if (memory.size() != n) throw SizeError("recall_probability: size mismatch");
  if (!memory.is_binary()) throw ValidationError("recall_probability: memory must be binary");
  if (errors > n) throw ValidationError("recall_probability: error count exceeds network size");
  if (trials == 0) throw ValidationError("recall_probability: trials must be >= 1");

  LocalFieldState base(J);
  base.assign(memory.values());
  LocalFieldState st = base;
  std::size_t successes = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    st = base;
    for (std::size_t k : choose_error_sites(n, errors, rng)) st.flip(k);
    relax_in_place(st, kind, rng);
    if (st.same_spins(memory) || (scoring == RecallScoring::TwinTolerant && st.same_spins_negated(memory))) {
      ++successes;
    }
  }
  return static_cast<double>(successes) / static_cast<double>(trials);
}

namespace {

class ExactRecallSolver {
 public:
  ExactRecallSolver(const CouplingMatrix& J, const SpinConfig& memory, DynamicsKind kind, RecallScoring scoring,
                    std::size_t max_states)
      : J_(J), kind_(kind), max_states_(max_states), target_(memory.bits()) {
    const std::uint64_t mask = J.size() == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << J.size()) - 1);
    twin_ = scoring == RecallScoring::TwinTolerant ? (~target_ & mask) : target_;
  }

  bool overflowed() const noexcept { return overflow_; }

  double probability(const LocalFieldState& st) {
    const std::uint64_t key = st.bits();
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= max_states_) {
      overflow_ = true;
      return 0.0;
    }
    const std::size_t n = st.size();
    std::vector<std::pair<std::size_t, double>> moves;
    double best = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = st.delta(k);
      if (d >= 0.0) continue;
      switch (kind_.variant) {
        case DynamicsVariant::MH:
          moves.emplace_back(k, 1.0);
          total += 1.0;
          break;
        case DynamicsVariant::SDRate:
          moves.emplace_back(k, -d);
          total -= d;
          break;
        case DynamicsVariant::SD:
          if (d < best) {
            best = d;
            moves.clear();
            moves.emplace_back(k, 1.0);
          } else if (d == best) {
            moves.emplace_back(k, 1.0);
          }
          break;
      }
    }
    if (kind_.variant == DynamicsVariant::SD) {
      if (kind_.tie_break == TieBreak::LowestIndex && moves.size() > 1) moves.resize(1);
      total = static_cast<double>(moves.size());
    }
    double p = 0.0;
    if (moves.empty()) {
      p = (key == target_ || key == twin_) ? 1.0 : 0.0;
    } else {
      for (const auto& [k, w] : moves) {
        LocalFieldState next = st;
        next.flip(k);
        p += w * probability(next);
        if (overflow_) return 0.0;
      }
      p /= total;
    }
    memo_.emplace(key, p);
    return p;
  }

 private:
  const CouplingMatrix& J_;
  DynamicsKind kind_;
  std::size_t max_states_;
  std::uint64_t target_;
  std::uint64_t twin_;
  bool overflow_ = false;
  std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace

std::optional<double> exact_single_flip_recall(const CouplingMatrix& J, const SpinConfig& memory, DynamicsKind kind,
                                               RecallScoring scoring, std::size_t max_states) {
  const std::size_t n = J.size();
  if (memory.size() != n) throw SizeError("exact_single_flip_recall: size mismatch");
  if (!memory.is_binary()) throw ValidationError("exact_single_flip_recall: memory must be binary");
  if (n > 64) throw ValidationError("exact_single_flip_recall: n > 64");
  ExactRecallSolver solver(J, memory, kind, scoring, max_states);
  LocalFieldState base(J);
  base.assign(memory.values());
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    LocalFieldState st = base;
    st.flip(k);
    sum += solver.probability(st);
    if (solver.overflowed()) return std::nullopt;
  }
  return sum / static_cast<double>(n);
}

}  // namespace glassmem
