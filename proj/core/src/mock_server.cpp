#include "mstp/mock_server.hpp"

#include <httplib.h>

#include "mstp/log.hpp"
#include "mstp/protocol.hpp"

namespace mstp {
namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& reason) {
  reply(res, status, protocol::error_body(code, reason));
}

// Parses the body and runs `fn`; maps failures onto 4xx/5xx answers so a bad
// request never takes the server down.
template <typename Fn>
void guarded(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    reply_error(res, 400, "ProtocolError", std::string("body is not valid JSON: ") + e.what());
    return;
  }
  try {
    reply(res, 200, fn(body));
  } catch (const Error& e) {
    const int status = e.code() == Errc::ProtocolError ? 400 : 422;
    reply_error(res, status, to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, "InternalError", e.what());
  }
}

}  // namespace

MockServer::MockServer(std::shared_ptr<const LevelSchema> schema, DecisionStack stack,
                       std::shared_ptr<Generator> generator, unsigned worker_threads)
    : schema_(std::move(schema)),
      stack_(std::move(stack)),
      generator_(std::move(generator)),
      server_(std::make_unique<httplib::Server>()) {
  if (stack_.agents.size() != schema_->depth()) {
    throw Error(Errc::InvalidArgument, "decision stack needs one agent per schema level");
  }
  const unsigned threads = std::max(1u, worker_threads);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // httplib also sets SO_REUSEPORT, which lets a second server share the
  // port silently instead of failing to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  install_routes();
}

MockServer::~MockServer() { stop(); }

std::string MockServer::endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }

void MockServer::install_routes() {
  auto check_header = [this](const protocol::Header& h) {
    if (h.schema_digest != schema_->digest()) {
      throw Error(Errc::ProtocolError, "schema digest " + h.schema_digest + " does not match " + schema_->digest());
    }
  };

  server_->Get(std::string(protocol::kHealthPath), [this](const httplib::Request&, httplib::Response& res) {
    ++requests_;
    reply(res, 200, {{"status", "ok"}, {"protocol_version", protocol::kVersion}});
  });

  server_->Post(std::string(protocol::kStcPath), [this, check_header](const httplib::Request& req,
                                                                      httplib::Response& res) {
    ++requests_;
    guarded(req, res, [&](const nlohmann::json& body) {
      auto r = protocol::decode_stc_request(body);
      check_header(r.header);
      const auto image = protocol::decode_image(r.image);
      const auto decision = stack_.controller->decide({r.header.clip_id, r.header.step_k}, r.state, image);
      return protocol::stc_response(decision, r.header.request_id);
    });
  });

  server_->Post(std::string(protocol::kPredictPrefix) + R"((\d+))", [this, check_header](const httplib::Request& req,
                                                                                       httplib::Response& res) {
    ++requests_;
    guarded(req, res, [&](const nlohmann::json& body) {
      const auto level = std::stoul(req.matches[1].str());
      if (level < 1 || level > schema_->depth()) {
        throw Error(Errc::ProtocolError, "level " + std::to_string(level) + " is outside the schema");
      }
      auto r = protocol::decode_predict_request(body, level);
      check_header(r.header);
      const auto image = protocol::decode_image(r.image);
      const auto label = stack_.agents[level - 1]->predict({r.header.clip_id, r.header.step_k}, level,
                                                           r.partial_state, r.allowed_labels, image);
      return protocol::predict_response(label, r.header.request_id);
    });
  });

  server_->Post(std::string(protocol::kGeneratePath), [this, check_header](const httplib::Request& req,
                                                                           httplib::Response& res) {
    ++requests_;
    guarded(req, res, [&](const nlohmann::json& body) {
      auto r = protocol::decode_generate_request(body);
      check_header(r.header);
      auto image = std::make_shared<const ImageBuffer>(protocol::decode_image(r.image));
      const auto next = generate_next(*generator_, {r.header.clip_id, r.header.step_k}, r.state, image);
      return protocol::generate_response(protocol::encode_image(*next), r.header.request_id);
    });
  });
}

void MockServer::start(const std::string& host, int port) {
  if (running_) throw Error(Errc::InvalidState, "server already running");
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) {
    throw Error(Errc::BindError, "cannot bind " + host + ":" + std::to_string(port));
  }
  running_ = true;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  log::info("mock server listening on " + endpoint());
}

void MockServer::stop() {
  if (!running_.exchange(false)) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace mstp
