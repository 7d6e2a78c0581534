#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "ssd/trace.hpp"

namespace ssd {

struct ChatRequest {
  std::string system;
  std::string user;
  std::string model;
  Json options = Json::object();  // sampling parameters, passed through verbatim
};

struct ChatResponse {
  std::string text;
  Json usage = Json::object();
  double latency_seconds = 0.0;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Throws TransportError on network or protocol failure.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Replays the regular files of a directory in name order, one per request,
// repeating the last file once they run out. Every request is kept.
class MockChatClient final : public ChatClient {
 public:
  explicit MockChatClient(const std::filesystem::path& dir);
  explicit MockChatClient(std::vector<std::string> responses);

  ChatResponse complete(const ChatRequest& request) override;

  const std::vector<ChatRequest>& requests() const { return requests_; }
  const std::vector<std::string>& responses() const { return responses_; }

 private:
  std::vector<std::string> responses_;
  std::vector<ChatRequest> requests_;
  std::size_t next_ = 0;
  std::mutex mu_;
};

struct HttpChatOptions {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string api_key;   // sent as a bearer token when nonempty
  std::chrono::seconds timeout{600};
};

// Reads SSD_MODEL_ENDPOINT and SSD_MODEL_API_KEY. Throws ConfigError when
// the endpoint is unset.
HttpChatOptions http_chat_options_from_env();

// Minimal chat-completion client. Posts
//   {"model", "messages": [{"role": "system"}, {"role": "user"}], ...options}
// and accepts either choices[0].message.content or a content[] list of text
// blocks in the reply.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatOptions options);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  HttpChatOptions options_;
  std::string scheme_host_;
  std::string path_;
};

// Text of the reply body, for both supported response shapes.
std::string chat_reply_text(const Json& body);

}  // namespace ssd
