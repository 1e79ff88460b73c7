#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "semrel/candidate_store.hpp"

namespace semrel {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

// Transport-independent request handlers behind the review HTTP API.
// Errors come back as {"error": kind, "detail": message} with 400, 404,
// 409 or 500.
class ReviewApi {
 public:
  explicit ReviewApi(CandidateStore& store) : store_(store) {}

  // GET /api/candidates?status=&limit=&offset= ; empty strings mean
  // "not given" (status pending, limit 50, offset 0, status=all for every
  // status).
  HttpResponse list_candidates(const std::string& status, const std::string& limit,
                               const std::string& offset) const;
  // GET /api/candidates/{id}
  HttpResponse get_candidate(const std::string& candidate_id) const;
  // POST /api/candidates/{id}/decision with body {verdict, note, reviewer}
  HttpResponse submit_decision(const std::string& candidate_id, const std::string& body);
  // GET /api/stats
  HttpResponse stats() const;

 private:
  CandidateStore& store_;
};

struct ReviewServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;  // built review UI, served at /
};

// cpp-httplib server routing the API above.
class ReviewServer {
 public:
  ReviewServer(CandidateStore& store, ReviewServerOptions options);
  ~ReviewServer();

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // Binds the socket and returns the bound port. Throws IoError.
  int bind();
  // Serves until stop(); bind() first.
  void listen();
  // bind() + listen() on a background thread; returns the bound port.
  int start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semrel
