#ifndef OCTFOREST_TRANSPORT_HPP
#define OCTFOREST_TRANSPORT_HPP

#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "octforest/common.hpp"

namespace octforest {

/// Thrown when the harness detects that no rank can make progress or a peer
/// rank failed.
class transport_error : public std::runtime_error {
 public:
  explicit transport_error(const std::string& what) : std::runtime_error(what) {}
};

enum class Schedule { roundrobin, threads };

struct TraceRecord {
  uint64_t seq;  // sender-local operation ordinal
  int from;
  int to;
  uint64_t bytes;
  uint64_t checksum;
};

struct TransportStats {
  uint64_t sends = 0;
  uint64_t bytes_sent = 0;
  uint64_t allgathers = 0;
  uint64_t barriers = 0;
};

class Comm;

/// A fixed group of simulated ranks communicating through in-process
/// mailboxes.  Ranks run as cooperatively scheduled tasks (round-robin,
/// switching at blocking operations) or on free-running threads; all
/// collectives and pairwise channels behave identically in both modes.
class RankGroup {
 public:
  explicit RankGroup(int num_ranks, Schedule schedule = Schedule::roundrobin);
  ~RankGroup();

  int size() const { return num_ranks_; }
  Schedule schedule() const { return schedule_; }

  /// Execute fn(comm) on every rank; returns when all finish.  The first
  /// rank exception is rethrown after the group is shut down.
  void run(const std::function<void(Comm&)>& fn);

  void set_trace(bool enabled);
  void clear_trace();
  /// Records in canonical (from, to, seq) order, identical across schedules.
  std::vector<TraceRecord> trace() const;
  uint64_t trace_hash() const;
  std::string trace_json() const;
  TransportStats stats() const;
  void clear_stats();

 private:
  friend class Comm;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int num_ranks_;
  Schedule schedule_;
};

/// Per-rank communication handle.  send is buffered and never blocks; recv
/// blocks until the matching pairwise-FIFO message arrives.
class Comm {
 public:
  int rank() const { return rank_; }
  int size() const;

  void send(int to, std::span<const std::byte> bytes);
  std::vector<std::byte> recv(int from);

  /// Rank-ordered gather of one fixed-size value per rank, identical on all
  /// ranks.
  std::vector<std::byte> allgather_bytes(std::span<const std::byte> value);
  std::vector<uint64_t> allgather(uint64_t value);
  void barrier();

  template <class T>
  void send_value(int to, const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    send(to, std::as_bytes(std::span<const T>(&v, 1)));
  }
  template <class T>
  T recv_value(int from) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto bytes = recv(from);
    OF_CHECK(bytes.size() == sizeof(T));
    T v;
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
  }
  template <class T>
  void send_vector(int to, const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    send(to, std::as_bytes(std::span<const T>(v.data(), v.size())));
  }
  template <class T>
  std::vector<T> recv_vector(int from) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto bytes = recv(from);
    OF_CHECK(bytes.size() % sizeof(T) == 0);
    std::vector<T> v(bytes.size() / sizeof(T));
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
  }

 private:
  friend class RankGroup;
  Comm(RankGroup* g, int rank) : group_(g), rank_(rank) {}
  RankGroup* group_;
  int rank_;
};

/// Exclusive prefix sums with a leading zero; same length as the input.
std::vector<uint64_t> prefix_sums(const std::vector<uint64_t>& values);

/// Convenience wrapper: build a group, run fn on every rank.
void run_ranks(int num_ranks, Schedule schedule, const std::function<void(Comm&)>& fn);

}  // namespace octforest

#endif
