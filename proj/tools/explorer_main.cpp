// explorer: build a snapshot from a batched run, serve it over HTTP, or print
// kernel diagnostics.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>

#include "nirx/analytics.hpp"
#include "nirx/errors.hpp"
#include "nirx/explorer_api.hpp"
#include "nirx/server.hpp"
#include "nirx/snapshot.hpp"

namespace {

struct InputFlags {
  nirx::InputFiles files;
  std::string snapshot;
  std::size_t clusters_k = 0;
  std::uint64_t seed = 42;
  int candidate_depth = 100;
  std::string collection;
};

void add_build_flags(CLI::App& cmd, InputFlags& f, bool required) {
  auto req = [&](CLI::Option* o) {
    if (required) o->required();
    return o;
  };
  req(cmd.add_option("--queries", f.files.queries, "queries file (id<TAB>text)"));
  req(cmd.add_option("--docs", f.files.docs, "documents file (id<TAB>text)"));
  req(cmd.add_option("--run", f.files.run, "baseline TREC run file"));
  req(cmd.add_option("--qrels", f.files.qrels, "qrels file"));
  req(cmd.add_option("--embeddings", f.files.embeddings, "word-vector text file"));
  req(cmd.add_option("--model-config", f.files.model_config, "kernel bank JSON"));
  cmd.add_option("--clusters-k", f.clusters_k, "number of query clusters (default: sqrt heuristic)");
  cmd.add_option("--seed", f.seed, "clustering seed")->capture_default_str();
  cmd.add_option("--candidate-depth", f.candidate_depth, "candidates re-ranked per query")
      ->capture_default_str();
  cmd.add_option("--titles-override", f.files.titles_override, "clusterId<TAB>title file");
  cmd.add_option("--collection", f.collection, "collection name shown by the service");
}

nirx::BuildOptions build_options(const InputFlags& f) {
  nirx::BuildOptions o;
  if (f.clusters_k > 0) o.clusters_k = f.clusters_k;
  o.seed = f.seed;
  o.candidate_depth = f.candidate_depth;
  o.collection = f.collection;
  return o;
}

bool has_all_build_inputs(const InputFlags& f) {
  const auto& x = f.files;
  return !x.queries.empty() && !x.docs.empty() && !x.run.empty() && !x.qrels.empty() &&
         !x.embeddings.empty() && !x.model_config.empty();
}

std::shared_ptr<const nirx::RunSnapshot> obtain_snapshot(const InputFlags& f) {
  if (!f.snapshot.empty()) {
    return std::make_shared<const nirx::RunSnapshot>(nirx::load_snapshot_file(f.snapshot));
  }
  auto snap = nirx::build_snapshot(f.files, build_options(f));
  for (const auto& w : snap.warnings) std::cerr << "warning: " << w << '\n';
  return std::make_shared<const nirx::RunSnapshot>(std::move(snap));
}

int run_build(const InputFlags& f, const std::string& out) {
  auto snap = nirx::build_snapshot(f.files, build_options(f));
  for (const auto& w : snap.warnings) std::cerr << "warning: " << w << '\n';
  nirx::save_snapshot_file(snap, out);
  std::cerr << "wrote " << out << ": " << snap.queries.size() << " queries, " << snap.docs.size()
            << " documents, " << snap.clusters.size() << " clusters\n";
  return 0;
}

int run_diag(const InputFlags& f, const std::string& format, const std::string& out) {
  const auto snap = obtain_snapshot(f);
  const auto diag = nirx::kernel_diagnostics(*snap);
  const std::string report =
      format == "json" ? nirx::diagnostics_to_json(diag) : nirx::diagnostics_to_text(diag);
  if (out.empty()) {
    std::cout << report;
  } else {
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    if (!file) throw nirx::Error("cannot write " + out);
    file << report;
  }
  return 0;
}

int run_serve(const InputFlags& f, nirx::ServerOptions options) {
  // Signals are taken synchronously by a dedicated thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  nirx::ExplorerApi api;
  nirx::ExplorerServer server(api, options);
  if (!server.bind()) {
    std::cerr << "error: cannot bind " << options.host << ":" << options.port << " (port in use?)\n";
    return 2;
  }
  std::cerr << "listening on http://" << options.host << ":" << server.port() << '\n';

  std::atomic<bool> signalled{false};
  std::jthread http([&] { server.run(); });
  std::jthread signal_waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    server.stop();
  });
  auto release_waiter = [&] {
    if (!signalled.exchange(true)) pthread_kill(signal_waiter.native_handle(), SIGTERM);
  };

  try {
    api.publish(obtain_snapshot(f));
    std::cerr << "snapshot ready\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    server.stop();
    release_waiter();
    return 1;
  }
  http.join();
  release_waiter();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explore neural re-ranking results"};
  app.require_subcommand(1);

  InputFlags build_flags, serve_flags, diag_flags;
  std::string out = "snapshot.nirx";
  auto* build = app.add_subcommand("build", "ingest inputs, re-rank, and write a snapshot cache");
  add_build_flags(*build, build_flags, true);
  build->add_option("--out", out, "snapshot output path")->capture_default_str();

  nirx::ServerOptions server_options;
  auto* serve = app.add_subcommand("serve", "serve the explorer API (and UI assets)");
  serve->add_option("--snapshot", serve_flags.snapshot, "snapshot cache written by build");
  add_build_flags(*serve, serve_flags, false);
  serve->add_option("--port", server_options.port, "listen port")
      ->envname("EXPLORER_PORT")
      ->capture_default_str();
  serve->add_option("--host", server_options.host, "listen address")->capture_default_str();
  serve->add_option("--static-dir", server_options.static_dir, "built UI assets served under /");

  std::string diag_format = "text";
  std::string diag_out;
  auto* diag = app.add_subcommand("diag", "print per-kernel contribution statistics and pool-bias counts");
  diag->add_option("--snapshot", diag_flags.snapshot, "snapshot cache written by build");
  add_build_flags(*diag, diag_flags, false);
  diag->add_option("--format", diag_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  diag->add_option("--out", diag_out, "write the report to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return run_build(build_flags, out);
    for (auto [cmd, flags] : {std::pair{serve, &serve_flags}, std::pair{diag, &diag_flags}}) {
      if (*cmd && flags->snapshot.empty() && !has_all_build_inputs(*flags)) {
        std::cerr << "error: pass --snapshot or all of --queries --docs --run --qrels "
                     "--embeddings --model-config\n";
        return 1;
      }
    }
    if (*serve) return run_serve(serve_flags, server_options);
    if (*diag) return run_diag(diag_flags, diag_format, diag_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
