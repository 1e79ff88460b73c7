#include "semrel/review_service.hpp"

#include <httplib.h>

#include <json.hpp>

#include "semrel/error.hpp"
#include "semrel/io.hpp"

namespace semrel {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kDefaultPageSize = 50;
constexpr std::size_t kMaxPageSize = 1000;

HttpResponse error_response(int status, std::string_view kind, std::string_view detail) {
  ordered_json j;
  j["error"] = kind;
  j["detail"] = detail;
  return HttpResponse{status, j.dump()};
}

HttpResponse from_exception(const std::exception& e) {
  if (const auto* nf = dynamic_cast<const NotFound*>(&e)) {
    return error_response(404, nf->kind(), nf->what());
  }
  if (const auto* c = dynamic_cast<const Conflict*>(&e)) {
    return error_response(409, c->kind(), c->what());
  }
  if (const auto* ia = dynamic_cast<const InvalidArgument*>(&e)) {
    return error_response(400, ia->kind(), ia->what());
  }
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return error_response(500, err->kind(), err->what());
  }
  return error_response(500, "internal_error", e.what());
}

ordered_json candidate_json(const AugmentationCandidate& c) {
  return ordered_json::parse(to_json_line(c));
}

std::size_t parse_count(const std::string& text, std::size_t fallback, const char* name) {
  if (text.empty()) return fallback;
  std::size_t value = 0;
  std::size_t used = 0;
  try {
    if (text.front() == '-') throw std::invalid_argument(name);
    value = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) {
    throw InvalidArgument(std::string(name) + " must be a non-negative integer");
  }
  return value;
}

template <typename F>
HttpResponse guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return from_exception(e);
  }
}

}  // namespace

HttpResponse ReviewApi::list_candidates(const std::string& status, const std::string& limit,
                                        const std::string& offset) const {
  return guarded([&] {
    std::optional<CandidateStatus> filter = CandidateStatus::kPending;
    if (status == "all") {
      filter.reset();
    } else if (!status.empty()) {
      filter = parse_candidate_status(status);
    }
    const auto lim = parse_count(limit, kDefaultPageSize, "limit");
    if (lim > kMaxPageSize) throw InvalidArgument("limit must not exceed 1000");
    const auto off = parse_count(offset, 0, "offset");
    const auto page = store_.list(filter, lim, off);
    ordered_json items = ordered_json::array();
    for (const auto& c : page.items) items.push_back(candidate_json(c));
    ordered_json j;
    j["items"] = std::move(items);
    j["total"] = page.total;
    j["limit"] = lim;
    j["offset"] = off;
    return HttpResponse{200, j.dump()};
  });
}

HttpResponse ReviewApi::get_candidate(const std::string& candidate_id) const {
  return guarded([&] {
    const auto c = store_.get(candidate_id);
    if (!c) throw NotFound("no candidate '" + candidate_id + "'");
    return HttpResponse{200, candidate_json(*c).dump()};
  });
}

HttpResponse ReviewApi::submit_decision(const std::string& candidate_id, const std::string& body) {
  return guarded([&] {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception&) {
      throw InvalidArgument("request body is not valid JSON");
    }
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    if (!j.contains("verdict") || !j["verdict"].is_string()) {
      throw InvalidArgument("'verdict' (accept or reject) is required");
    }
    if (!j.contains("reviewer") || !j["reviewer"].is_string() ||
        j["reviewer"].get<std::string>().empty()) {
      throw InvalidArgument("'reviewer' is required");
    }
    Decision d;
    d.candidate_id = candidate_id;
    d.verdict = parse_verdict(j["verdict"].get<std::string>());
    d.reviewer = j["reviewer"].get<std::string>();
    if (j.contains("note") && !j["note"].is_null()) {
      if (!j["note"].is_string()) throw InvalidArgument("'note' must be a string");
      d.note = j["note"].get<std::string>();
    }
    return HttpResponse{200, candidate_json(store_.decide(d, io::utc_timestamp_now())).dump()};
  });
}

HttpResponse ReviewApi::stats() const {
  return guarded([&] {
    const auto counts = store_.stats();
    ordered_json j;
    std::size_t total = 0;
    for (const auto& [status, n] : counts) {
      j[std::string(to_string(status))] = n;
      total += n;
    }
    j["total"] = total;
    return HttpResponse{200, j.dump()};
  });
}

struct ReviewServer::Impl {
  ReviewApi api;
  ReviewServerOptions options;
  httplib::Server server;
  std::thread thread;
  int bound_port = -1;

  Impl(CandidateStore& store, ReviewServerOptions opts) : api(store), options(std::move(opts)) {}
};

namespace {

void reply(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

std::string param(const httplib::Request& req, const char* key) {
  return req.has_param(key) ? req.get_param_value(key) : std::string();
}

}  // namespace

ReviewServer::ReviewServer(CandidateStore& store, ReviewServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  auto& s = impl_->server;
  auto* api = &impl_->api;
  s.Get("/api/candidates", [api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api->list_candidates(param(req, "status"), param(req, "limit"), param(req, "offset")));
  });
  s.Get(R"(/api/candidates/([^/]+))", [api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api->get_candidate(req.matches[1]));
  });
  s.Post(R"(/api/candidates/([^/]+)/decision)",
         [api](const httplib::Request& req, httplib::Response& res) {
           reply(res, api->submit_decision(req.matches[1], req.body));
         });
  s.Get("/api/stats", [api](const httplib::Request&, httplib::Response& res) {
    reply(res, api->stats());
  });

  const auto& dir = impl_->options.static_dir;
  std::error_code ec;
  if (!dir.empty() && std::filesystem::is_directory(dir, ec)) {
    s.set_mount_point("/", dir.string());
  } else {
    s.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><title>semrel review</title><p>The review UI bundle is not "
          "installed. The JSON API is available under <code>/api/</code>.</p>",
          "text/html");
    });
  }
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) {
      reply(res, error_response(404, "not_found", "no such route"));
    }
  });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  auto& i = *impl_;
  if (i.options.port == 0) {
    i.bound_port = i.server.bind_to_any_port(i.options.host);
  } else {
    i.bound_port = i.server.bind_to_port(i.options.host, i.options.port) ? i.options.port : -1;
  }
  if (i.bound_port < 0) {
    throw IoError("cannot bind " + i.options.host + ":" + std::to_string(i.options.port));
  }
  return i.bound_port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

int ReviewServer::start() {
  const int port = bind();
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return port;
}

void ReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace semrel
