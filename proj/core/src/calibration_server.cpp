#include <httplib.h>

#include "gradeforge/calibration.hpp"
#include "gradeforge/error.hpp"

namespace gradeforge {

struct CalibrationServer::Impl {
  CalibrationService service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Workspace ws) : service(std::move(ws)) {}
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json; charset=utf-8");
}

}  // namespace

CalibrationServer::CalibrationServer(Workspace workspace, std::string static_dir)
    : impl_(std::make_unique<Impl>(std::move(workspace))) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  srv.Get("/api/snapshot", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.get_snapshot()); });
  srv.Post("/api/preview",
           [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.preview(req.body)); });
  srv.Get("/api/audit", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.audit()); });
  srv.Post("/api/policy",
           [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.persist(req.body)); });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    ServiceResponse r{500, {{"error", "internal"}, {"message", "unexpected failure"}}};
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      r = {http_status_for(e.kind()), {{"error", to_string(e.kind())}, {"message", e.what()}}};
    } catch (const std::exception& e) {
      r.body["message"] = e.what();
    }
    reply(res, r);
  });
  if (!static_dir.empty() && !srv.set_mount_point("/", static_dir)) {
    throw Error(ErrorKind::Io, "cannot serve static files from " + static_dir);
  }
}

CalibrationServer::~CalibrationServer() { stop(); }

int CalibrationServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void CalibrationServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void CalibrationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace gradeforge
