#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "gtest/gtest.h"

#include "../support/fixtures.hpp"
#include "nirx/explorer_api.hpp"
#include "nirx/server.hpp"

namespace nirx {
namespace {

struct Running {
  ExplorerServer server;
  std::thread thread;

  Running(const ExplorerApi& api, ServerOptions opts) : server(api, std::move(opts)) {
    if (!server.bind()) throw std::runtime_error("bind failed");
    thread = std::thread([this] { server.run(); });
  }
  ~Running() {
    server.stop();
    thread.join();
  }
};

ServerOptions loopback() {
  ServerOptions o;
  o.host = "127.0.0.1";
  o.port = 0;
  return o;
}

TEST(Server, ServesApiOverHttp) {
  ExplorerApi api;
  Running running(api, loopback());
  httplib::Client client("127.0.0.1", running.server.port());
  client.set_connection_timeout(std::chrono::seconds(5));

  auto r = client.Get("/api/meta");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 503);

  api.publish(std::make_shared<const RunSnapshot>(fixtures::build("poolbias")));
  r = client.Get("/api/meta");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type").rfind("application/json", 0), 0u);
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(r->body, api.get("/api/meta").body);

  r = client.Get("/api/query/P3?offset=1&count=2");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, api.get("/api/query/P3", {{"offset", "1"}, {"count", "2"}}).body);

  r = client.Get("/api/clusters?sort=bogus");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);

  r = client.Get("/");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
}

TEST(Server, ServesStaticAssets) {
  const auto dir = std::filesystem::temp_directory_path() / "nirx_static_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>ui</html>";
  ExplorerApi api;
  auto opts = loopback();
  opts.static_dir = dir.string();
  Running running(api, opts);
  httplib::Client client("127.0.0.1", running.server.port());
  auto r = client.Get("/index.html");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, "<html>ui</html>");
  r = client.Get("/");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->body, "<html>ui</html>");
  std::filesystem::remove_all(dir);
}

TEST(Server, PortInUseFailsToBind) {
  ExplorerApi api;
  Running first(api, loopback());
  auto opts = loopback();
  opts.port = first.server.port();
  ExplorerServer second(api, opts);
  EXPECT_FALSE(second.bind());
}

TEST(Server, StopBeforeRunIsSafe) {
  ExplorerApi api;
  ExplorerServer server(api, loopback());
  ASSERT_TRUE(server.bind());
  server.stop();
}

}  // namespace
}  // namespace nirx
