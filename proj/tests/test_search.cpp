#include <doctest.h>

#include "logres/sim/campaign.hpp"
#include "logres/sim/search.hpp"

using namespace logres;
using namespace logres::sim;

namespace {

bool has_failure(const SearchReport& r, const std::string& property) {
  for (const auto& v : r.samples) {
    for (const auto& verdict : v.failed) {
      if (verdict.property == property) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("exhaustive search finds nothing against the protocol") {
  SearchOptions opts;
  const auto r = exhaustive_search(opts);
  MESSAGE("leaves " << r.leaves << ", expanded " << r.expanded << ", memo hits " << r.memo_hits << ", " << r.seconds << " s");
  CHECK(r.fault_sets == 4);
  CHECK(r.input_vectors > 0);
  CHECK(r.leaves > 0);
  CHECK(r.violations == 0);
}

TEST_CASE("one round short admits an agreement violation") {
  SearchOptions opts;
  opts.params.replication_rounds = 1;
  opts.stop_at_first = true;
  const auto r = exhaustive_search(opts);
  REQUIRE(r.violations >= 1);
  REQUIRE_FALSE(r.samples.empty());
  const auto& v = r.samples.front();
  CHECK(v.trace.valid);
  CHECK(has_failure(r, "thread-agreement"));
  // The sample replays to the same run.
  const auto replay = replay_trace(dump_trace(v.trace));
  CHECK(replay.matches);
}

TEST_CASE("unbound signatures admit a violation") {
  SearchOptions opts;
  opts.params.binding = VoteBinding::unbound;
  opts.stop_at_first = true;
  const auto r = exhaustive_search(opts);
  CHECK(r.violations >= 1);
}

TEST_CASE("zero forge budget reduces to crashes") {
  SearchOptions opts;
  opts.budget = 0;
  const auto r = exhaustive_search(opts);
  CHECK(r.violations == 0);
  CHECK(r.leaves > 0);
}

TEST_CASE("search limits") {
  SearchOptions opts;
  opts.n = 7;
  opts.f = 3;
  CHECK_THROWS_AS(exhaustive_search(opts), std::invalid_argument);
  opts.n = 3;
  opts.f = 1;
  opts.domain = {"a", "b", "c", "d"};
  CHECK_THROWS_AS(exhaustive_search(opts), std::invalid_argument);
}

TEST_CASE("fixed fault set search") {
  SearchOptions opts;
  opts.faulty = NodeSet{NodeId{1}};
  const auto r = exhaustive_search(opts);
  CHECK(r.fault_sets == 1);
  CHECK(r.violations == 0);
}
