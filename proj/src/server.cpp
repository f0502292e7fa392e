#include "nirx/server.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>

namespace nirx {

namespace {

constexpr const char* kLandingPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>Neural re-ranking explorer</title></head>
<body>
<h1>Neural re-ranking explorer</h1>
<p>The browser client is not bundled with this server. Start it with
<code>--static-dir</code> pointing at the built UI, or use the JSON API directly:</p>
<ul>
<li><a href="/api/meta">/api/meta</a></li>
<li><a href="/api/clusters">/api/clusters</a></li>
<li>/api/query/{queryId}?offset=0&amp;count=10</li>
<li>/api/compare/{queryId}/{docA}/{docB}</li>
</ul>
</body></html>
)";

}  // namespace

struct ExplorerServer::Impl {
  Impl(const ExplorerApi& a, ServerOptions o) : api(a), options(std::move(o)) {}

  const ExplorerApi& api;
  ServerOptions options;
  httplib::Server http;
  int bound_port = -1;
  std::atomic<bool> started{false};
  std::atomic<bool> stop_requested{false};
  std::atomic<bool> finished{false};
};

ExplorerServer::ExplorerServer(const ExplorerApi& api, ServerOptions options)
    : impl_(std::make_unique<Impl>(api, std::move(options))) {
  auto& http = impl_->http;
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  // Without SO_REUSEPORT so a second server cannot silently share the port.
  http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  http.Get(R"(/api(/.*)?)", [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams params;
    for (const auto& [key, value] : req.params) params.emplace(key, value);
    const auto out = impl_->api.get(req.path, params);
    res.status = out.status;
    res.set_content(out.body, "application/json; charset=utf-8");
  });
  if (!impl_->options.static_dir.empty()) {
    http.set_mount_point("/", impl_->options.static_dir);
  }
  http.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(kLandingPage, "text/html; charset=utf-8");
  });
}

ExplorerServer::~ExplorerServer() { stop(); }

bool ExplorerServer::bind() {
  auto& o = impl_->options;
  if (o.port == 0) {
    impl_->bound_port = impl_->http.bind_to_any_port(o.host);
    return impl_->bound_port > 0;
  }
  if (!impl_->http.bind_to_port(o.host, o.port)) return false;
  impl_->bound_port = o.port;
  return true;
}

int ExplorerServer::port() const { return impl_->bound_port; }

bool ExplorerServer::run() {
  impl_->started = true;
  bool ok = true;
  if (!impl_->stop_requested) ok = impl_->http.listen_after_bind();
  impl_->finished = true;
  return ok;
}

void ExplorerServer::stop() {
  if (!impl_ || impl_->stop_requested.exchange(true) || !impl_->started) return;
  // A concurrent run() may not be accepting yet; a stop issued before then is lost.
  while (!impl_->http.is_running() && !impl_->finished) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  impl_->http.stop();
}

}  // namespace nirx
