#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>

#include "ssd/chat.hpp"
#include "ssd/errors.hpp"

namespace ssd {

HttpChatClient::HttpChatClient(HttpChatOptions options) : options_(std::move(options)) {
  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("model endpoint '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("model endpoint '" + url + "': only http and https are supported");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  Json body;
  body["model"] = request.model;
  body["messages"] = Json::array({Json{{"role", "system"}, {"content", request.system}},
                                  Json{{"role", "user"}, {"content", request.user}}});
  for (auto& [k, v] : request.options.items()) body[k] = v;

  httplib::Client cli(scheme_host_);
  cli.set_connection_timeout(std::chrono::seconds(30));
  cli.set_read_timeout(options_.timeout);
  cli.set_write_timeout(std::chrono::seconds(60));
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  const auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!res) throw TransportError("model endpoint: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("model endpoint: HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
  }
  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw TransportError(std::string("model endpoint: reply is not JSON: ") + e.what());
  }
  ChatResponse out;
  out.text = chat_reply_text(reply);
  out.usage = reply.value("usage", Json::object());
  out.latency_seconds = latency;
  return out;
}

}  // namespace ssd
