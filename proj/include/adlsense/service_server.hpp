#pragma once

#include "adlsense/error.hpp"
#include "adlsense/service_api.hpp"

#include <httplib.h>

#include <charconv>
#include <string>
#include <utility>

namespace adlsense {

/// "host:port" -> (host, port).
inline std::pair<std::string, int> parse_listen(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) fail(ErrorCode::Config, "listen address must be HOST:PORT, got '" + addr + "'");
  int port = 0;
  const char* b = addr.data() + colon + 1;
  const char* e = addr.data() + addr.size();
  auto r = std::from_chars(b, e, port);
  if (r.ec != std::errc{} || r.ptr != e || port < 0 || port > 65535) {
    fail(ErrorCode::Config, "bad port in listen address '" + addr + "'");
  }
  return {addr.substr(0, colon), port};
}

/// httplib front end over a SnapshotHolder. All routing lives in handle().
class ApiServer {
 public:
  explicit ApiServer(const SnapshotHolder& holder) : holder_(holder) {
    auto fn = [this](const httplib::Request& req, httplib::Response& res) { serve(req, res); };
    server_.Get(".*", fn);
    server_.Options(".*", fn);
    server_.Post(".*", fn);
    server_.Put(".*", fn);
    server_.Delete(".*", fn);
  }

  /// Binds without serving; returns the bound port (useful with port 0).
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  /// Blocks until stop().
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }

 private:
  void serve(const httplib::Request& req, httplib::Response& res) {
    ApiRequest ar;
    ar.method = req.method;
    ar.path = req.path;
    for (const auto& [k, v] : req.params) ar.params[k] = v;
    auto snap = holder_.get();
    ApiResponse out = handle(snap.get(), ar);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    if (!out.content_type.empty()) res.set_content(out.body, out.content_type);
  }

  const SnapshotHolder& holder_;
  httplib::Server server_;
};

}  // namespace adlsense
