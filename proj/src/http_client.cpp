#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fsner/error.hpp"
#include "fsner/provider.hpp"

namespace fsner {
namespace {

struct Attempt {
  enum class Outcome { success, retryable, fatal };
  Outcome outcome;
  std::string text_or_reason;
  std::chrono::milliseconds retry_after{0};
};

void split_endpoint(const std::string& url, std::string& base, std::string& path) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("model: endpoint must start with http:// or https://");
  const std::string proto = url.substr(0, scheme);
  if (proto != "http" && proto != "https") throw ConfigError("model: unsupported endpoint scheme \"" + proto + "\"");
  const auto slash = url.find('/', scheme + 3);
  base = url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path = prefix + "/v1/chat/completions";
}

std::string snippet(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

Attempt classify(const httplib::Result& res) {
  if (!res) {
    return {Attempt::Outcome::retryable, "transport error: " + httplib::to_string(res.error())};
  }
  const int status = res->status;
  if (status == 429 || status >= 500) {
    Attempt a{Attempt::Outcome::retryable, "HTTP " + std::to_string(status)};
    if (res->has_header("Retry-After")) {
      char* end = nullptr;
      const std::string v = res->get_header_value("Retry-After");
      const double secs = std::strtod(v.c_str(), &end);
      if (end != v.c_str() && secs > 0) {
        a.retry_after = std::chrono::milliseconds(static_cast<long long>(std::min(secs, 60.0) * 1000));
      }
    }
    return a;
  }
  if (status < 200 || status >= 300) {
    return {Attempt::Outcome::fatal, "HTTP " + std::to_string(status) + ": " + snippet(res->body)};
  }
  const auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) return {Attempt::Outcome::fatal, "malformed payload: response is not JSON"};
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) return {Attempt::Outcome::fatal, "malformed payload: message content is not a string"};
    return {Attempt::Outcome::success, content.get<std::string>()};
  } catch (const nlohmann::json::exception&) {
    return {Attempt::Outcome::fatal, "malformed payload: missing choices[0].message.content"};
  }
}

}  // namespace

HttpChatClient::HttpChatClient(ModelConfig config)
    : config_(std::move(config)), gate_(config_.max_in_flight, config_.max_requests_per_second) {
  config_.validate();
  if (config_.endpoint_url.empty()) throw ConfigError("model: endpoint_url is required for live requests");
  split_endpoint(config_.endpoint_url, base_, path_);
  if (!config_.credential_ref.empty()) {
    const char* value = std::getenv(config_.credential_ref.c_str());
    if (!value || !*value) {
      throw ConfigError("model: credential variable " + config_.credential_ref + " is not set");
    }
    credential_ = value;
  }
}

std::string HttpChatClient::request_body(const Prompt& prompt) const {
  nlohmann::ordered_json body{
      {"model", config_.model_name},
      {"messages", nlohmann::ordered_json::array({{{"role", "system"}, {"content", prompt.system_text}},
                                                  {{"role", "user"}, {"content", prompt.user_text}}})},
      {"temperature", config_.temperature}};
  if (config_.max_output_units > 0) body["max_tokens"] = config_.max_output_units;
  return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

RawResponse HttpChatClient::complete(const Prompt& prompt) {
  RawResponse out;
  out.request_fingerprint = prompt.fingerprint;
  out.model_name = config_.model_name;
  const auto started = std::chrono::steady_clock::now();
  std::string last_reason;

  try {
    const std::string body = request_body(prompt);
    httplib::Headers headers;
    if (!credential_.empty()) headers.emplace("Authorization", "Bearer " + credential_);

    const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      Attempt result;
      {
        auto ticket = gate_.acquire();
        httplib::Client client(base_);
        client.set_connection_timeout(timeout_us);
        client.set_read_timeout(timeout_us);
        client.set_write_timeout(timeout_us);
        result = classify(client.Post(path_, headers, body, "application/json"));
      }
      if (result.outcome == Attempt::Outcome::success) {
        out.text = std::move(result.text_or_reason);
        out.status = attempt == 0 ? TransportStatus::ok() : TransportStatus::retried(attempt);
        break;
      }
      last_reason = result.text_or_reason;
      if (result.outcome == Attempt::Outcome::fatal) {
        out.status = TransportStatus::failed(last_reason);
        break;
      }
      if (attempt == config_.max_retries) {
        out.status = TransportStatus::failed("retries exhausted after " + std::to_string(attempt + 1) +
                                             " attempt(s): " + last_reason);
        break;
      }
      auto delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(config_.backoff_initial.count()) * std::pow(config_.backoff_factor, attempt)));
      std::this_thread::sleep_for(std::max(delay, result.retry_after));
    }
  } catch (const std::exception& e) {
    out.text.reset();
    out.status = TransportStatus::failed(std::string("client error: ") + e.what());
  }
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace fsner
