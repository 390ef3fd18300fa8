#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>

#include "octforest/transport.hpp"

using namespace octforest;

TEST_CASE("allgather and prefix sums match the definition") {
  for (Schedule s : {Schedule::roundrobin, Schedule::threads}) {
    run_ranks(3, s, [](Comm& c) {
      uint64_t vals[3] = {2, 5, 1};
      auto g = c.allgather(vals[c.rank()]);
      REQUIRE(g.size() == 3);
      CHECK(g[0] == 2);
      CHECK(g[1] == 5);
      CHECK(g[2] == 1);
      auto t = prefix_sums(g);
      CHECK(t == std::vector<uint64_t>({0, 2, 7}));
    });
  }
  run_ranks(1, Schedule::roundrobin, [](Comm& c) {
    auto g = c.allgather(42);
    CHECK(g == std::vector<uint64_t>({42}));
    CHECK(prefix_sums(g) == std::vector<uint64_t>({0}));
  });
}

TEST_CASE("pairwise channels are FIFO") {
  for (Schedule s : {Schedule::roundrobin, Schedule::threads}) {
    run_ranks(2, s, [](Comm& c) {
      if (c.rank() == 0) {
        c.send_value<int>(1, 10);
        c.send_value<int>(1, 20);
        c.send_value<int>(1, 30);
      } else {
        CHECK(c.recv_value<int>(0) == 10);
        CHECK(c.recv_value<int>(0) == 20);
        CHECK(c.recv_value<int>(0) == 30);
      }
    });
  }
}

TEST_CASE("ring exchange works under both schedules") {
  for (Schedule s : {Schedule::roundrobin, Schedule::threads}) {
    run_ranks(4, s, [](Comm& c) {
      int next = (c.rank() + 1) % c.size();
      int prev = (c.rank() + c.size() - 1) % c.size();
      c.send_value<int>(next, c.rank());
      CHECK(c.recv_value<int>(prev) == prev);
      c.barrier();
    });
  }
}

TEST_CASE("traces are deterministic and schedule independent") {
  auto run_traced = [](Schedule s) {
    RankGroup g(3, s);
    g.set_trace(true);
    g.run([](Comm& c) {
      auto sums = c.allgather(uint64_t(c.rank()) + 7);
      for (int q = 0; q < c.size(); ++q) {
        if (q != c.rank()) c.send_value<uint64_t>(q, sums[size_t(q)] * 3);
      }
      for (int q = 0; q < c.size(); ++q) {
        if (q != c.rank()) CHECK(c.recv_value<uint64_t>(q) == (uint64_t(c.rank()) + 7) * 3);
      }
    });
    return g.trace_hash();
  };
  uint64_t h1 = run_traced(Schedule::roundrobin);
  uint64_t h2 = run_traced(Schedule::roundrobin);
  uint64_t h3 = run_traced(Schedule::threads);
  CHECK(h1 == h2);
  CHECK(h1 == h3);
  CHECK(h1 != 0);
}

TEST_CASE("deadlock is detected, not hung") {
  CHECK_THROWS_AS(run_ranks(2, Schedule::roundrobin,
                            [](Comm& c) {
                              if (c.rank() == 0) (void)c.recv(1);  // nobody sends
                            }),
                  transport_error);
  // mismatched collective participation
  CHECK_THROWS_AS(run_ranks(2, Schedule::roundrobin,
                            [](Comm& c) {
                              if (c.rank() == 0) c.barrier();
                            }),
                  transport_error);
}

TEST_CASE("rank exceptions propagate out of run") {
  CHECK_THROWS_AS(run_ranks(2, Schedule::roundrobin,
                            [](Comm& c) {
                              if (c.rank() == 1) throw std::runtime_error("boom");
                              c.barrier();
                            }),
                  std::runtime_error);
}

TEST_CASE("collectives appear in stats") {
  RankGroup g(2, Schedule::roundrobin);
  g.run([](Comm& c) {
    c.allgather(1);
    c.barrier();
    if (c.rank() == 0) c.send_value<int>(1, 5);
    if (c.rank() == 1) (void)c.recv_value<int>(0);
  });
  TransportStats st = g.stats();
  CHECK(st.allgathers == 2);  // one per rank
  CHECK(st.barriers == 2);
  CHECK(st.sends == 1);
}
