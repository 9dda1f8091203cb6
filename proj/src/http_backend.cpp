#include <httplib.h>

#include "slidetutor/error.hpp"
#include "slidetutor/gateway.hpp"

namespace slidetutor {

std::atomic<std::uint64_t> HttpBackend::connection_attempts_{0};

HttpBackend::HttpBackend(std::map<Profile, EndpointConfig> endpoints) : endpoints_(std::move(endpoints)) {}

std::uint64_t HttpBackend::connection_attempts() { return connection_attempts_.load(); }

json HttpBackend::wire_body(const ModelRequest& request, const EndpointConfig& endpoint) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    if (m.images.empty()) {
      messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    if (!m.text.empty()) parts.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.images) {
      std::string url = img.url.empty() ? "data:" + img.mime + ";base64," + digest::base64(img.data) : img.url;
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", std::move(parts)}});
  }
  json body = to_json(request.params);
  if (!endpoint.model.empty()) body["model"] = endpoint.model;
  body["messages"] = std::move(messages);
  return body;
}

ModelCompletion HttpBackend::parse_reply(const std::string& body) {
  try {
    json reply = json::parse(body);
    const json& choice = reply.at("choices").at(0);
    ModelCompletion c;
    const json& content = choice.at("message").at("content");
    c.text = content.is_null() ? std::string() : content.get<std::string>();
    c.finish_reason = choice.value("finish_reason", std::string("stop"));
    if (reply.contains("usage") && reply["usage"].is_object()) {
      c.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
      c.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(Errc::BackendRejected, std::string("unreadable completion: ") + e.what());
  }
}

ModelCompletion HttpBackend::send(const ModelRequest& request, std::chrono::milliseconds timeout) {
  auto it = endpoints_.find(request.profile);
  if (it == endpoints_.end() || it->second.base_url.empty()) {
    throw Error(Errc::BackendRejected, "no endpoint configured for profile " + to_string(request.profile));
  }
  const EndpointConfig& endpoint = it->second;

  httplib::Client client(endpoint.base_url);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!endpoint.api_key.empty()) client.set_bearer_token_auth(endpoint.api_key);

  ++connection_attempts_;
  auto result = client.Post(endpoint.path, wire_body(request, endpoint).dump(), "application/json");
  if (!result) {
    auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw Error(Errc::Timeout, "backend did not answer: " + httplib::to_string(err));
    }
    throw Error(Errc::TransientBackend, "backend unreachable: " + httplib::to_string(err));
  }
  int status = result->status;
  if (status == 429 || status >= 500) {
    throw Error(Errc::TransientBackend, "backend returned HTTP " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw Error(Errc::BackendRejected, "backend returned HTTP " + std::to_string(status) + ": " +
                                           result->body.substr(0, 300));
  }
  return parse_reply(result->body);
}

}  // namespace slidetutor
