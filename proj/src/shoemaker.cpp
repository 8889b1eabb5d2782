#include "pilotwave/shoemaker.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

namespace pw::shoemaker {

namespace {

std::int64_t whole_days(double value, const char* what) {
  const double rounded = std::nearbyint(value);
  if (!(std::abs(value - rounded) < 1e-9))
    throw InvalidArgument(std::string(what) + " must be a whole number of days");
  return static_cast<std::int64_t>(rounded);
}

// Observation key for the visible-only scan: ledgers and flags, no clock.
using VisibleKey = std::array<std::int64_t, 6>;

VisibleKey visible_key(const State& s) {
  return {s.guilds[0].shoes,  s.guilds[1].shoes,  s.guilds[2].shoes,
          s.guilds[0].resting, s.guilds[1].resting, s.guilds[2].resting};
}

template <typename Key>
std::optional<Witness> scan_for_witness(const std::vector<State>& trace,
                                        Key&& key_of) {
  using K = std::decay_t<decltype(key_of(trace.front()))>;
  std::map<K, std::size_t> first_seen;  // key -> earliest index with a successor
  for (std::size_t j = 0; j + 1 < trace.size(); ++j) {
    const auto key = key_of(trace[j]);
    auto [it, inserted] = first_seen.emplace(key, j);
    if (inserted) continue;
    const std::size_t i = it->second;
    if (key_of(trace[i + 1]) != key_of(trace[j + 1]))
      return Witness{i, j, trace[i], trace[j], trace[i + 1], trace[j + 1]};
  }
  return std::nullopt;
}

}  // namespace

std::int64_t State::day_index() const { return whole_days(q, "clock value"); }

std::int64_t State::year() const { return 1 + day_index() / kDaysPerYear; }

int State::day() const { return 1 + static_cast<int>(day_index() % kDaysPerYear); }

bool resting_in_year(std::int64_t year, int guild) {
  return year % kRestPeriods.at(static_cast<std::size_t>(guild)) == 0;
}

bool full_rest_year(std::int64_t year) {
  return resting_in_year(year, 0) && resting_in_year(year, 1) &&
         resting_in_year(year, 2);
}

State initial_state(double q0) {
  if (whole_days(q0, "initial clock") < 0)
    throw InvalidArgument("initial clock must be nonnegative");
  State s;
  s.q = q0;
  for (int i = 0; i < 3; ++i) s.guilds[i].resting = resting_in_year(s.year(), i);
  return s;
}

State step(const State& s, double dt) {
  const std::int64_t days = whole_days(dt, "step length");
  if (days < 1) throw InvalidArgument("step length must be at least one day");
  State next = s;
  for (std::int64_t d = 0; d < days; ++d) {
    const std::int64_t year_lived = next.year();
    next.q += 1.0;  // the clock never consults the ledgers
    for (int i = 0; i < 3; ++i)
      if (!resting_in_year(year_lived, i)) next.guilds[i].shoes += 1;
    for (int i = 0; i < 3; ++i)
      next.guilds[i].resting = resting_in_year(next.year(), i);
  }
  return next;
}

std::vector<State> run_trace(std::int64_t days, double q0) {
  if (days < 0) throw InvalidArgument("trace length must be nonnegative");
  std::vector<State> trace;
  trace.reserve(static_cast<std::size_t>(days) + 1);
  trace.push_back(initial_state(q0));
  for (std::int64_t d = 0; d < days; ++d) trace.push_back(step(trace.back()));
  return trace;
}

std::string Witness::describe() const {
  auto ledger = [](const State& s) {
    std::ostringstream o;
    o << "shoes (" << s.guilds[0].shoes << "," << s.guilds[1].shoes << ","
      << s.guilds[2].shoes << ") resting (" << s.guilds[0].resting << ","
      << s.guilds[1].resting << "," << s.guilds[2].resting << ")";
    return o.str();
  };
  std::ostringstream out;
  out << "observed state at step " << first_index << " (year " << first.year()
      << ", day " << first.day() << ") recurs at step " << second_index
      << " (year " << second.year() << ", day " << second.day()
      << ") with a different successor: " << ledger(first_successor)
      << " versus " << ledger(second_successor);
  return out.str();
}

std::optional<Witness> non_markov_witness(std::int64_t horizon_years,
                                          double q0) {
  if (horizon_years < 1) throw InvalidArgument("horizon must be at least one year");
  const auto trace = run_trace(horizon_years * kDaysPerYear, q0);
  return scan_for_witness(trace, [](const State& s) { return visible_key(s); });
}

std::optional<Witness> augmented_witness(std::int64_t horizon_years,
                                         double q0) {
  if (horizon_years < 1) throw InvalidArgument("horizon must be at least one year");
  const auto trace = run_trace(horizon_years * kDaysPerYear, q0);
  return scan_for_witness(trace, [](const State& s) {
    return std::make_pair(visible_key(s), s.q);
  });
}

std::size_t check_deterministic(const std::vector<State>& trace) {
  std::map<std::pair<VisibleKey, double>, State> successor_of;
  std::size_t checked = 0;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    if (!(step(trace[k]) == trace[k + 1]) || !(step(trace[k]) == step(trace[k])))
      throw NumericError("transition is not reproducible");
    const auto key = std::make_pair(visible_key(trace[k]), trace[k].q);
    auto [it, inserted] = successor_of.emplace(key, trace[k + 1]);
    if (!inserted && !(it->second == trace[k + 1]))
      throw NumericError("equal augmented states with different successors");
    ++checked;
  }
  return checked;
}

std::vector<std::int64_t> full_rest_years_in(const std::vector<State>& trace) {
  // Tally shoes finished per fully covered calendar year.
  std::map<std::int64_t, std::int64_t> made;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    std::int64_t delta = 0;
    for (int i = 0; i < 3; ++i)
      delta += trace[k + 1].guilds[i].shoes - trace[k].guilds[i].shoes;
    made[trace[k].year()] += delta;
  }
  std::vector<std::int64_t> rest;
  for (const auto& [year, total] : made) {
    // Skip years the trace only partially covers.
    const bool starts_inside = year == trace.front().year() &&
                               trace.front().day() != 1;
    const bool ends_inside = year == trace[trace.size() - 2].year() &&
                             trace[trace.size() - 2].day() != kDaysPerYear;
    if (starts_inside || ends_inside) continue;
    if (total == 0) rest.push_back(year);
  }
  return rest;
}

void write_trace_csv(std::ostream& out, const std::vector<State>& trace) {
  out << "step,q,year,day,shoes_a,resting_a,shoes_b,resting_b,shoes_c,resting_c\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const State& s = trace[k];
    out << k << ',' << s.q << ',' << s.year() << ',' << s.day();
    for (int i = 0; i < 3; ++i)
      out << ',' << s.guilds[i].shoes << ',' << (s.guilds[i].resting ? 1 : 0);
    out << '\n';
  }
}

}  // namespace pw::shoemaker
