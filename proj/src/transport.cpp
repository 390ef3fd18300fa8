#include "octforest/transport.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "json.hpp"

namespace octforest {

namespace {
constexpr auto kThreadTimeout = std::chrono::seconds(60);
}

struct RankGroup::Impl {
  int P;
  Schedule schedule;

  std::mutex mu;
  std::condition_variable cv;

  // pairwise FIFO mailboxes, indexed from * P + to
  std::vector<std::deque<std::vector<std::byte>>> queues;
  // per-pair send sequence numbers for canonical trace ordering
  std::vector<uint64_t> pair_seq;

  enum class St { ready, running, blocked, done };
  std::vector<St> state;
  std::vector<std::function<bool()>> pred;  // valid while blocked
  std::vector<std::exception_ptr> errors;
  int floor = 0;  // cooperative mode: rank allowed to run
  bool aborted = false;
  std::string abort_reason;

  // collective rendezvous
  uint64_t coll_gen = 0;
  int coll_arrived = 0;
  std::vector<std::vector<std::byte>> coll_slots;
  std::vector<std::byte> coll_result;
  size_t coll_value_size = 0;

  bool tracing = false;
  std::vector<TraceRecord> records;
  TransportStats stats;

  explicit Impl(int num_ranks, Schedule s) : P(num_ranks), schedule(s) {
    queues.resize(size_t(P) * size_t(P));
    pair_seq.assign(size_t(P) * size_t(P), 0);
    state.assign(size_t(P), St::ready);
    pred.resize(size_t(P));
    errors.resize(size_t(P));
    coll_slots.resize(size_t(P));
  }

  [[noreturn]] void abort_locked(std::unique_lock<std::mutex>& lk, const std::string& why) {
    if (!aborted) {
      aborted = true;
      abort_reason = why;
    }
    cv.notify_all();
    lk.unlock();
    throw transport_error(abort_reason);
  }

  // Cooperative: hand the floor to the next rank that can run.  Returns
  // false when no rank can be resumed; if that leaves live ranks stuck, the
  // group is flagged aborted (throwing is left to the blocked ranks).
  bool pass_floor(int self) {
    for (int i = 1; i <= P; ++i) {
      int cand = (self + i) % P;
      if (state[size_t(cand)] == St::ready) {
        floor = cand;
        cv.notify_all();
        return true;
      }
      if (state[size_t(cand)] == St::blocked && pred[size_t(cand)] && pred[size_t(cand)]()) {
        floor = cand;
        cv.notify_all();
        return true;
      }
    }
    bool all_done = true;
    std::string blocked_set;
    for (int r = 0; r < P; ++r) {
      if (state[size_t(r)] != St::done) {
        if (r != self) all_done = false;
        if (state[size_t(r)] == St::blocked) blocked_set += " " + std::to_string(r);
      }
    }
    if (!all_done && !aborted) {
      aborted = true;
      abort_reason = "deadlock: no rank can make progress; blocked ranks:" + blocked_set;
      cv.notify_all();
    }
    return false;
  }

  // Block the calling rank until p() holds (mutex held on entry and exit).
  template <class Pred>
  void block_until(std::unique_lock<std::mutex>& lk, int self, Pred&& p) {
    if (aborted) abort_locked(lk, abort_reason);
    if (p()) return;
    if (schedule == Schedule::roundrobin) {
      state[size_t(self)] = St::blocked;
      pred[size_t(self)] = p;
      if (!pass_floor(self)) {
        abort_locked(lk, aborted ? abort_reason
                                 : "deadlock: rank " + std::to_string(self) +
                                       " blocked after all other ranks finished");
      }
      cv.wait(lk, [&] { return aborted || (floor == self && p()); });
      if (aborted) abort_locked(lk, abort_reason);
      pred[size_t(self)] = nullptr;
      state[size_t(self)] = St::running;
    } else {
      if (!cv.wait_for(lk, kThreadTimeout, [&] { return aborted || p(); })) {
        abort_locked(lk, "deadlock: rank " + std::to_string(self) + " timed out");
      }
      if (aborted) abort_locked(lk, abort_reason);
    }
  }

  void rank_main(int self, const std::function<void(Comm&)>& fn, RankGroup* group) {
    {
      std::unique_lock<std::mutex> lk(mu);
      if (schedule == Schedule::roundrobin) {
        cv.wait(lk, [&] { return aborted || floor == self; });
        if (aborted) {
          state[size_t(self)] = St::done;
          cv.notify_all();
          return;
        }
      }
      state[size_t(self)] = St::running;
    }
    Comm comm(group, self);
    try {
      fn(comm);
    } catch (...) {
      std::unique_lock<std::mutex> lk(mu);
      errors[size_t(self)] = std::current_exception();
      state[size_t(self)] = St::done;
      if (!aborted) {
        aborted = true;
        abort_reason = "rank " + std::to_string(self) + " failed";
      }
      cv.notify_all();
      return;
    }
    std::unique_lock<std::mutex> lk(mu);
    state[size_t(self)] = St::done;
    if (schedule == Schedule::roundrobin && !aborted) {
      pass_floor(self);
    }
    cv.notify_all();
  }
};

RankGroup::RankGroup(int num_ranks, Schedule schedule)
    : impl_(new Impl(num_ranks, schedule)), num_ranks_(num_ranks), schedule_(schedule) {
  OF_CHECK(num_ranks >= 1);
}

RankGroup::~RankGroup() = default;

void RankGroup::run(const std::function<void(Comm&)>& fn) {
  Impl& im = *impl_;
  {
    std::unique_lock<std::mutex> lk(im.mu);
    im.aborted = false;
    im.abort_reason.clear();
    for (int r = 0; r < num_ranks_; ++r) {
      im.state[size_t(r)] = Impl::St::ready;
      im.errors[size_t(r)] = nullptr;
      im.pred[size_t(r)] = nullptr;
    }
    im.floor = 0;
  }
  std::vector<std::thread> threads;
  threads.reserve(size_t(num_ranks_));
  for (int r = 0; r < num_ranks_; ++r) {
    threads.emplace_back([this, r, &fn] { impl_->rank_main(r, fn, this); });
  }
  for (auto& t : threads) t.join();
  for (int r = 0; r < num_ranks_; ++r) {
    if (impl_->errors[size_t(r)]) std::rethrow_exception(impl_->errors[size_t(r)]);
  }
  std::unique_lock<std::mutex> lk(impl_->mu);
  if (impl_->aborted) throw transport_error(impl_->abort_reason);
}

void RankGroup::set_trace(bool enabled) {
  std::unique_lock<std::mutex> lk(impl_->mu);
  impl_->tracing = enabled;
}

void RankGroup::clear_trace() {
  std::unique_lock<std::mutex> lk(impl_->mu);
  impl_->records.clear();
}

std::vector<TraceRecord> RankGroup::trace() const {
  std::unique_lock<std::mutex> lk(impl_->mu);
  std::vector<TraceRecord> out = impl_->records;
  std::sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) {
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
    return a.seq < b.seq;
  });
  return out;
}

uint64_t RankGroup::trace_hash() const {
  uint64_t h = fnv1a(nullptr, 0);
  for (const TraceRecord& r : trace()) {
    h = hash_combine(h, uint64_t(r.from));
    h = hash_combine(h, uint64_t(r.to));
    h = hash_combine(h, r.seq);
    h = hash_combine(h, r.bytes);
    h = hash_combine(h, r.checksum);
  }
  return h;
}

std::string RankGroup::trace_json() const {
  std::string out;
  for (const TraceRecord& r : trace()) {
    nlohmann::ordered_json j;
    j["seq"] = r.seq;
    j["from"] = r.from;
    j["to"] = r.to;
    j["bytes"] = r.bytes;
    j["checksum"] = r.checksum;
    out += j.dump();
    out += '\n';
  }
  return out;
}

TransportStats RankGroup::stats() const {
  std::unique_lock<std::mutex> lk(impl_->mu);
  return impl_->stats;
}

void RankGroup::clear_stats() {
  std::unique_lock<std::mutex> lk(impl_->mu);
  impl_->stats = TransportStats{};
}

int Comm::size() const { return group_->size(); }

void Comm::send(int to, std::span<const std::byte> bytes) {
  OF_CHECK(0 <= to && to < size());
  RankGroup::Impl& im = *group_->impl_;
  std::unique_lock<std::mutex> lk(im.mu);
  if (im.aborted) im.abort_locked(lk, im.abort_reason);
  size_t slot = size_t(rank_) * size_t(im.P) + size_t(to);
  im.queues[slot].emplace_back(bytes.begin(), bytes.end());
  im.stats.sends++;
  im.stats.bytes_sent += bytes.size();
  if (im.tracing) {
    im.records.push_back(TraceRecord{im.pair_seq[slot], rank_, to, bytes.size(),
                                     fnv1a(bytes.data(), bytes.size())});
  }
  im.pair_seq[slot]++;
  im.cv.notify_all();
}

std::vector<std::byte> Comm::recv(int from) {
  OF_CHECK(0 <= from && from < size());
  RankGroup::Impl& im = *group_->impl_;
  std::unique_lock<std::mutex> lk(im.mu);
  size_t slot = size_t(from) * size_t(im.P) + size_t(rank_);
  im.block_until(lk, rank_, [&] { return !im.queues[slot].empty(); });
  std::vector<std::byte> msg = std::move(im.queues[slot].front());
  im.queues[slot].pop_front();
  return msg;
}

std::vector<std::byte> Comm::allgather_bytes(std::span<const std::byte> value) {
  RankGroup::Impl& im = *group_->impl_;
  std::unique_lock<std::mutex> lk(im.mu);
  if (im.aborted) im.abort_locked(lk, im.abort_reason);
  uint64_t my_gen = im.coll_gen;
  if (im.coll_arrived == 0) im.coll_value_size = value.size();
  if (im.coll_value_size != value.size()) {
    im.abort_locked(lk, "collective value size mismatch at rank " + std::to_string(rank_));
  }
  im.coll_slots[size_t(rank_)].assign(value.begin(), value.end());
  im.coll_arrived++;
  im.stats.allgathers++;
  if (im.coll_arrived == im.P) {
    im.coll_result.clear();
    for (int r = 0; r < im.P; ++r) {
      im.coll_result.insert(im.coll_result.end(), im.coll_slots[size_t(r)].begin(),
                            im.coll_slots[size_t(r)].end());
    }
    im.coll_arrived = 0;
    im.coll_gen++;
    im.cv.notify_all();
    return im.coll_result;
  }
  im.block_until(lk, rank_, [&] { return im.coll_gen > my_gen; });
  return im.coll_result;
}

std::vector<uint64_t> Comm::allgather(uint64_t value) {
  auto bytes = allgather_bytes(std::as_bytes(std::span<const uint64_t>(&value, 1)));
  std::vector<uint64_t> out(static_cast<size_t>(size()), 0);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

void Comm::barrier() {
  RankGroup::Impl& im = *group_->impl_;
  allgather_bytes({});
  std::unique_lock<std::mutex> lk(im.mu);
  im.stats.allgathers--;
  im.stats.barriers++;
}

std::vector<uint64_t> prefix_sums(const std::vector<uint64_t>& values) {
  std::vector<uint64_t> out(values.size());
  uint64_t acc = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    out[i] = acc;
    acc += values[i];
  }
  return out;
}

void run_ranks(int num_ranks, Schedule schedule, const std::function<void(Comm&)>& fn) {
  RankGroup group(num_ranks, schedule);
  group.run(fn);
}

}  // namespace octforest
