#pragma once

#include <memory>
#include <string>

#include "nirx/explorer_api.hpp"

namespace nirx {

struct ServerOptions {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 binds an ephemeral port
  std::string static_dir;  // UI assets served under "/" when set
};

/// HTTP/1.1 front for an ExplorerApi: JSON endpoints under /api, static UI
/// assets (or a landing page) under /.
class ExplorerServer {
 public:
  ExplorerServer(const ExplorerApi& api, ServerOptions options);
  ~ExplorerServer();
  ExplorerServer(const ExplorerServer&) = delete;
  ExplorerServer& operator=(const ExplorerServer&) = delete;

  /// False when the address is unavailable (e.g. port in use).
  bool bind();
  int port() const;
  /// Blocks until stop() is called.
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nirx
