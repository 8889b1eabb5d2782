#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pilotwave/errors.hpp"

namespace pw::shoemaker {

// A minimal hidden-state machine: three shoemaker guilds each finish one shoe
// per working day, but guild i rests for every calendar year divisible by its
// period (3, 4, or 5). The guilds' ledgers (shoe counts and resting flags) are
// the visible process; it is not Markov on its own, because every year
// divisible by 60 the whole universe rests and the frozen ledger carries no
// hint of when work resumes. One steadily growing clock q restores a
// deterministic transition law.

inline constexpr int kDaysPerYear = 365;
inline constexpr std::array<int, 3> kRestPeriods{3, 4, 5};

struct Guild {
  std::int64_t shoes = 0;  // finished shoes, never decreases
  bool resting = false;    // true during the guild's rest years

  friend bool operator==(const Guild&, const Guild&) = default;
};

// The full state is (visible ledgers, latent clock). The calendar is derived
// from q, so the pair (visible, q) determines the successor.
struct State {
  std::array<Guild, 3> guilds{};
  double q = 0.0;  // latent clock in days; dq/dt = 1

  std::int64_t day_index() const;  // whole days since q = 0
  std::int64_t year() const;       // 1-based calendar year
  int day() const;                 // 1..365 within the year

  friend bool operator==(const State&, const State&) = default;
};

bool resting_in_year(std::int64_t year, int guild);
bool full_rest_year(std::int64_t year);

// q0 must be a nonnegative whole number of days.
State initial_state(double q0 = 0.0);

// Advances dt days (a positive whole number). The clock always advances by
// exactly dt; a guild's ledger grows one shoe per day lived outside its rest
// years. Whether the clock or calendar advances never depends on the ledgers.
State step(const State& s, double dt = 1.0);

// States at the end of day 0, 1, ..., days (day 0 is the initial state).
std::vector<State> run_trace(std::int64_t days, double q0 = 0.0);

// Two trace times with identical observed states whose successors differ.
// Existence proves the observed process is not Markov.
struct Witness {
  std::size_t first_index = 0;   // steps since the start of the trace
  std::size_t second_index = 0;  // later time with the same observation
  State first;                   // full states, for reporting
  State second;
  State first_successor;
  State second_successor;

  std::string describe() const;
};

// Scans the visible-only trace (ledgers, without the clock) over the horizon.
// A witness is guaranteed once the horizon covers a full rest year plus the
// following day; shorter horizons may find none.
std::optional<Witness> non_markov_witness(std::int64_t horizon_years,
                                          double q0 = 0.0);

// Same scan on the augmented observation (ledgers plus clock). The clock
// never repeats, so no witness can exist at any horizon.
std::optional<Witness> augmented_witness(std::int64_t horizon_years,
                                         double q0 = 0.0);

// Replays every transition in the trace and checks that equal augmented
// states always map to equal successors and that step() is reproducible.
// Returns the number of transitions checked.
std::size_t check_deterministic(const std::vector<State>& trace);

// Calendar years inside the trace during which no guild finished a shoe.
std::vector<std::int64_t> full_rest_years_in(const std::vector<State>& trace);

// step,q,year,day,shoes_a,resting_a,shoes_b,resting_b,shoes_c,resting_c
void write_trace_csv(std::ostream& out, const std::vector<State>& trace);

}  // namespace pw::shoemaker
