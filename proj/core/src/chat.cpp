#include "ssd/chat.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ssd/errors.hpp"

namespace ssd {

MockChatClient::MockChatClient(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("mock responses: '" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    responses_.push_back(ss.str());
  }
  if (responses_.empty()) throw ConfigError("mock responses: '" + dir.string() + "' has no files");
}

MockChatClient::MockChatClient(std::vector<std::string> responses) : responses_(std::move(responses)) {
  if (responses_.empty()) throw ConfigError("mock responses: empty list");
}

ChatResponse MockChatClient::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  requests_.push_back(request);
  const std::size_t i = std::min(next_, responses_.size() - 1);
  ++next_;
  ChatResponse r;
  r.text = responses_[i];
  r.usage = Json{{"mock_index", i}};
  return r;
}

HttpChatOptions http_chat_options_from_env() {
  HttpChatOptions o;
  const char* endpoint = std::getenv("SSD_MODEL_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ConfigError("SSD_MODEL_ENDPOINT is not set (use --mock for offline runs)");
  }
  o.endpoint = endpoint;
  if (const char* key = std::getenv("SSD_MODEL_API_KEY")) o.api_key = key;
  return o;
}

std::string chat_reply_text(const Json& body) {
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty()) {
    const Json& msg = body["choices"][0].value("message", Json::object());
    if (msg.contains("content") && msg["content"].is_string()) return msg["content"].get<std::string>();
  }
  if (body.contains("content") && body["content"].is_array()) {
    std::string text;
    for (const Json& block : body["content"]) {
      if (block.value("type", "") == "text") text += block.value("text", "");
    }
    return text;
  }
  throw TransportError("chat reply has neither choices[0].message.content nor content[] text");
}

}  // namespace ssd
