#include "s3dc/rank_service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "s3dc/backends.hpp"
#include "s3dc/error.hpp"
#include "s3dc/evalkit.hpp"
#include "s3dc/geometry.hpp"

namespace s3dc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::size_t kMaxParticipantId = 128;

bool valid_session_id(std::string_view id) {
  if (id.size() != 32) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::string new_session_id() {
  std::random_device rd;
  std::ostringstream out;
  for (int i = 0; i < 4; ++i) {
    out << std::hex;
    out.width(8);
    out.fill('0');
    out << static_cast<std::uint32_t>(rd());
  }
  return out.str();
}

void write_atomically(const fs::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

void validate_ranking(const std::vector<int>& ranking, std::size_t m) {
  require(ranking.size() == m, ErrorKind::kValidation,
          "ranking must list all " + std::to_string(m) + " candidates");
  std::vector<bool> seen(m, false);
  for (int k : ranking) {
    require(k >= 0 && static_cast<std::size_t>(k) < m, ErrorKind::kValidation,
            "ranking names unknown candidate " + std::to_string(k));
    require(!seen[k], ErrorKind::kValidation, "ranking repeats candidate " + std::to_string(k));
    seen[k] = true;
  }
}

json submission_record(std::string_view session_id, const Submission& s) {
  return {{"session", session_id},
          {"participant", s.participant_id},
          {"ranking", s.ranking},
          {"presented", s.presented},
          {"time", s.unix_time}};
}

}  // namespace

std::vector<int> presentation_order(std::string_view session_id, std::string_view participant_id,
                                    std::size_t count) {
  std::vector<int> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<int>(i);
  Rng rng(fnv1a(std::string(session_id) + '\n' + std::string(participant_id)));
  // Fisher-Yates with our own bounded draw keeps the order platform-independent.
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

RankStore::RankStore(fs::path data_dir) : dir_(std::move(data_dir)) {
  fs::create_directories(dir_ / "sessions");
  load();
  journal_fd_ = ::open((dir_ / "journal.jsonl").c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  require(journal_fd_ >= 0, ErrorKind::kIo, "cannot open journal in " + dir_.string());
}

RankStore::~RankStore() {
  if (journal_fd_ >= 0) ::close(journal_fd_);
}

void RankStore::load() {
  auto sessions = std::make_shared<Snapshot>();
  for (const auto& entry : fs::directory_iterator(dir_ / "sessions")) {
    const auto manifest_path = entry.path() / "manifest.json";
    if (!entry.is_directory() || !fs::exists(manifest_path)) continue;
    std::ifstream in(manifest_path);
    auto manifest = json::parse(in, nullptr, false);
    require(!manifest.is_discarded(), ErrorKind::kParse, "corrupt manifest " + manifest_path.string());
    auto s = std::make_shared<RankSession>();
    s->session_id = manifest.at("session_id").get<std::string>();
    s->object_label = manifest.at("object_label").get<std::string>();
    for (const auto& c : manifest.at("candidates")) s->labels.push_back(c.at("label").get<std::string>());
    (*sessions)[s->session_id] = s;
  }

  const auto journal = dir_ / "journal.jsonl";
  if (fs::exists(journal)) {
    auto bytes = read_file(journal);
    // A crash mid-append can leave a torn final line; drop it so the next
    // append starts on a clean line.
    std::size_t end = bytes.size();
    while (end > 0 && bytes[end - 1] != '\n') --end;
    if (end != bytes.size()) fs::resize_file(journal, end);
    std::string text(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(end));
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      auto record = json::parse(line, nullptr, false);
      if (record.is_discarded()) continue;
      auto it = sessions->find(record.value("session", std::string()));
      if (it == sessions->end()) continue;
      auto s = std::const_pointer_cast<RankSession>(it->second);
      Submission sub;
      sub.participant_id = record.value("participant", std::string());
      sub.ranking = record.value("ranking", std::vector<int>());
      sub.presented = record.value("presented", std::vector<int>());
      sub.unix_time = record.value("time", std::int64_t{0});
      try {
        validate_ranking(sub.ranking, s->labels.size());
      } catch (const Error&) {
        continue;
      }
      if (sub.participant_id.empty() || s->by_participant.count(sub.participant_id)) continue;
      s->by_participant[sub.participant_id] = s->submissions.size();
      s->submissions.push_back(std::move(sub));
    }
  }
  std::atomic_store(&state_, std::shared_ptr<const Snapshot>(std::move(sessions)));
}

std::shared_ptr<const RankStore::Snapshot> RankStore::snapshot() const { return std::atomic_load(&state_); }

std::shared_ptr<const RankSession> RankStore::find(std::string_view session_id) const {
  auto snap = snapshot();
  auto it = snap->find(session_id);
  require(it != snap->end(), ErrorKind::kNotFound, "unknown session " + std::string(session_id));
  return it->second;
}

std::shared_ptr<const RankSession> RankStore::session(std::string_view session_id) const {
  return find(session_id);
}

std::string RankStore::create_session(const std::string& object_label,
                                      const std::vector<RankCandidate>& candidates) {
  require(candidates.size() >= 2, ErrorKind::kValidation, "a session needs at least 2 candidates");
  std::set<std::string> labels;
  for (const auto& c : candidates) {
    require(!c.label.empty(), ErrorKind::kValidation, "candidate label is empty");
    require(labels.insert(c.label).second, ErrorKind::kValidation, "duplicate candidate label");
    try {
      decode_image(c.render_png);
    } catch (const Error&) {
      fail(ErrorKind::kValidation, "candidate render is not a decodable image");
    }
  }

  auto s = std::make_shared<RankSession>();
  s->session_id = new_session_id();
  s->object_label = object_label;
  const auto session_dir = dir_ / "sessions" / s->session_id;
  fs::create_directories(session_dir);
  json manifest = {{"session_id", s->session_id},
                   {"object_label", object_label},
                   {"prompt", kRankPrompt},
                   {"created", std::chrono::duration_cast<std::chrono::seconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count()},
                   {"candidates", json::array()}};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto name = std::to_string(k) + ".png";
    write_file(session_dir / name, candidates[k].render_png);
    manifest["candidates"].push_back({{"label", candidates[k].label}, {"image", name}});
    s->labels.push_back(candidates[k].label);
  }
  write_atomically(session_dir / "manifest.json", as_bytes(manifest.dump(2)));

  std::lock_guard lock(writer_);
  auto next = std::make_shared<Snapshot>(*snapshot());
  (*next)[s->session_id] = s;
  std::atomic_store(&state_, std::shared_ptr<const Snapshot>(std::move(next)));
  return s->session_id;
}

ParticipantView RankStore::view(std::string_view session_id, std::string_view participant_id) const {
  auto s = find(session_id);
  ParticipantView v;
  v.session_id = s->session_id;
  v.prompt = std::string(kRankPrompt);
  v.candidate_ids = presentation_order(session_id, participant_id, s->labels.size());
  for (int k : v.candidate_ids) {
    v.image_urls.push_back("/sessions/" + s->session_id + "/images/" + std::to_string(k) + ".png");
  }
  return v;
}

std::size_t RankStore::submit(std::string_view session_id, const std::string& participant_id,
                              const std::vector<int>& ranking) {
  require(!participant_id.empty() && participant_id.size() <= kMaxParticipantId, ErrorKind::kValidation,
          "participant id must be 1-128 characters");
  std::lock_guard lock(writer_);
  auto current = find(session_id);
  validate_ranking(ranking, current->labels.size());
  require(!current->by_participant.count(participant_id), ErrorKind::kConflict,
          "participant already submitted a ranking");

  Submission sub;
  sub.participant_id = participant_id;
  sub.ranking = ranking;
  sub.presented = presentation_order(session_id, participant_id, ranking.size());
  sub.unix_time = std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();

  const auto line = submission_record(session_id, sub).dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    auto n = ::write(journal_fd_, line.data() + written, line.size() - written);
    require(n > 0, ErrorKind::kIo, "journal write failed");
    written += static_cast<std::size_t>(n);
  }
  require(::fsync(journal_fd_) == 0, ErrorKind::kIo, "journal fsync failed");

  auto updated = std::make_shared<RankSession>(*current);
  updated->by_participant[participant_id] = updated->submissions.size();
  updated->submissions.push_back(std::move(sub));
  auto next = std::make_shared<Snapshot>(*snapshot());
  (*next)[updated->session_id] = updated;
  const auto count = updated->submissions.size();
  std::atomic_store(&state_, std::shared_ptr<const Snapshot>(std::move(next)));
  return count;
}

SessionResults RankStore::results(std::string_view session_id) const {
  auto s = find(session_id);
  require(!s->submissions.empty(), ErrorKind::kConflict, "no submissions yet");
  std::vector<std::vector<int>> rankings;
  for (const auto& sub : s->submissions) rankings.push_back(sub.ranking);
  return {s->labels, mean_rank(rankings), s->submissions.size()};
}

std::vector<std::uint8_t> RankStore::image(std::string_view session_id, int candidate) const {
  auto s = find(session_id);
  require(candidate >= 0 && static_cast<std::size_t>(candidate) < s->labels.size(), ErrorKind::kNotFound,
          "unknown candidate");
  return read_file(dir_ / "sessions" / s->session_id / (std::to_string(candidate) + ".png"));
}

namespace {

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kValidation: return 422;
    case ErrorKind::kParse: return 400;
    default: return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    reply(res, status_for(e.kind()), {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  auto body = json::parse(req.body, nullptr, false);
  require(!body.is_discarded() && body.is_object(), ErrorKind::kParse, "request body must be a JSON object");
  return body;
}

std::string session_param(const httplib::Request& req) {
  std::string id = req.matches[1];
  require(valid_session_id(id), ErrorKind::kNotFound, "unknown session " + id);
  return id;
}

}  // namespace

RankServer::RankServer(RankStore& store, const fs::path& static_dir)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  if (!static_dir.empty()) srv.set_mount_point("/ui", static_dir.string());

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_body(req);
      std::vector<RankCandidate> candidates;
      for (const auto& c : body.at("candidates")) {
        std::vector<std::uint8_t> png;
        try {
          png = base64_decode(c.at("png_base64").get<std::string>());
        } catch (const Error&) {
          fail(ErrorKind::kValidation, "candidate png_base64 is not valid base64");
        }
        candidates.push_back({c.at("label").get<std::string>(), std::move(png)});
      }
      auto id = store_.create_session(body.value("object_label", std::string()), candidates);
      reply(res, 201, {{"session_id", id}, {"candidates", candidates.size()}});
    });
  });

  srv.Get(R"(/sessions/([0-9a-zA-Z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto v = store_.view(session_param(req), req.get_param_value("participant"));
      json list = json::array();
      for (std::size_t i = 0; i < v.candidate_ids.size(); ++i) {
        list.push_back({{"id", v.candidate_ids[i]}, {"image_url", v.image_urls[i]}});
      }
      reply(res, 200, {{"session_id", v.session_id}, {"prompt", v.prompt}, {"candidates", list}});
    });
  });

  srv.Post(R"(/sessions/([0-9a-zA-Z]+)/rankings)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = session_param(req);
      store_.session(id);  // 404 before body validation
      auto body = parse_body(req);
      require(body.contains("participant_id") && body["participant_id"].is_string(), ErrorKind::kValidation,
              "participant_id is required");
      require(body.contains("ranking") && body["ranking"].is_array(), ErrorKind::kValidation,
              "ranking must be an array of candidate ids");
      std::vector<int> ranking;
      for (const auto& k : body["ranking"]) {
        require(k.is_number_integer(), ErrorKind::kValidation, "ranking entries must be integers");
        ranking.push_back(k.get<int>());
      }
      auto count = store_.submit(id, body["participant_id"].get<std::string>(), ranking);
      reply(res, 201, {{"submissions", count}});
    });
  });

  srv.Get(R"(/sessions/([0-9a-zA-Z]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto r = store_.results(session_param(req));
      json rows = json::array();
      for (std::size_t k = 0; k < r.labels.size(); ++k) {
        rows.push_back({{"label", r.labels[k]}, {"mean_rank", r.mean_ranks[k]}});
      }
      reply(res, 200, {{"submissions", r.submissions}, {"results", rows}});
    });
  });

  srv.Get(R"(/sessions/([0-9a-zA-Z]+)/images/(\d+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = session_param(req);
      const std::string k = req.matches[2];
      require(k.size() < 6, ErrorKind::kNotFound, "unknown candidate");
      auto bytes = store_.image(id, std::stoi(k));
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    });
  });
}

RankServer::~RankServer() = default;

int RankServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port = server_->bind_to_any_port(host);
    require(port > 0, ErrorKind::kIo, "cannot bind " + host);
    return port;
  }
  require(server_->bind_to_port(host, port), ErrorKind::kIo,
          "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void RankServer::listen() { server_->listen_after_bind(); }
void RankServer::stop() { server_->stop(); }
void RankServer::wait_until_ready() { server_->wait_until_ready(); }

}  // namespace s3dc
