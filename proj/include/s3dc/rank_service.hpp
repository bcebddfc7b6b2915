#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "s3dc/image.hpp"

namespace httplib {
class Server;
}

namespace s3dc {

inline constexpr std::string_view kRankPrompt =
    "In a virtual world, which of the compressed objects would you prefer?";

struct RankCandidate {
  std::string label;  // hidden method label, never sent to participants
  std::vector<std::uint8_t> render_png;
};

struct Submission {
  std::string participant_id;
  std::vector<int> ranking;    // candidate indices, best to worst
  std::vector<int> presented;  // order the participant was shown
  std::int64_t unix_time = 0;
};

struct RankSession {
  std::string session_id;
  std::string object_label;
  std::vector<std::string> labels;
  std::vector<Submission> submissions;  // journal order
  std::map<std::string, std::size_t, std::less<>> by_participant;
};

// What a participant sees: the prompt plus anonymous candidates in a
// participant-specific order.
struct ParticipantView {
  std::string session_id;
  std::string prompt;
  std::vector<int> candidate_ids;
  std::vector<std::string> image_urls;
};

struct SessionResults {
  std::vector<std::string> labels;
  std::vector<double> mean_ranks;
  std::size_t submissions = 0;
};

// Deterministic presentation order derived from (session, participant).
std::vector<int> presentation_order(std::string_view session_id, std::string_view participant_id,
                                    std::size_t count);

/// Sessions persisted under `data_dir`: one manifest.json plus PNG renders per
/// session, and a shared append-only journal.jsonl of submissions. Writes
/// are serialized; reads work on immutable snapshots without locking.
class RankStore {
 public:
  explicit RankStore(std::filesystem::path data_dir);
  ~RankStore();
  RankStore(const RankStore&) = delete;
  RankStore& operator=(const RankStore&) = delete;

  std::string create_session(const std::string& object_label, const std::vector<RankCandidate>& candidates);
  ParticipantView view(std::string_view session_id, std::string_view participant_id) const;
  // Returns the session's submission count after storing.
  std::size_t submit(std::string_view session_id, const std::string& participant_id,
                     const std::vector<int>& ranking);
  SessionResults results(std::string_view session_id) const;
  std::vector<std::uint8_t> image(std::string_view session_id, int candidate) const;
  std::shared_ptr<const RankSession> session(std::string_view session_id) const;

  const std::filesystem::path& data_dir() const { return dir_; }

 private:
  using Snapshot = std::map<std::string, std::shared_ptr<const RankSession>, std::less<>>;

  std::shared_ptr<const Snapshot> snapshot() const;
  std::shared_ptr<const RankSession> find(std::string_view session_id) const;
  void load();

  std::filesystem::path dir_;
  std::mutex writer_;
  std::shared_ptr<const Snapshot> state_;
  int journal_fd_ = -1;
};

/// HTTP JSON front end:
///   POST /sessions                     {"object_label", "candidates": [{"label", "png_base64"}]}
///   GET  /sessions/{id}?participant=p  anonymized, shuffled candidates + prompt
///   POST /sessions/{id}/rankings       {"participant_id", "ranking": [ids best..worst]}
///   GET  /sessions/{id}/results        per-label mean ranks
///   GET  /sessions/{id}/images/{k}.png
/// Status codes: 404 unknown session, 409 repeat participant or no results
/// yet, 422 invalid ranking or session data, 400 malformed JSON.
class RankServer {
 public:
  explicit RankServer(RankStore& store, const std::filesystem::path& static_dir = {});
  ~RankServer();

  // Binds to `host`; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();
  void wait_until_ready();

 private:
  RankStore& store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace s3dc
