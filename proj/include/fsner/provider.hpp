#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "fsner/promptgen.hpp"

namespace fsner {

/// Chat-completion endpoint settings. The credential itself is never stored
/// here, only the name of the environment variable that holds it.
struct ModelConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_output_units = 0;  // 0 leaves max_tokens unset
  double timeout_seconds = 60.0;
  int max_retries = 2;
  std::string credential_ref;
  std::chrono::milliseconds backoff_initial{500};
  double backoff_factor = 2.0;
  std::size_t max_in_flight = 4;
  double max_requests_per_second = 0.0;  // 0 = unlimited

  /// Throws ConfigError on negative temperature, negative retries and the like.
  void validate() const;
};

class TransportStatus {
 public:
  enum class Kind { ok, retried, failed };

  static TransportStatus ok() { return {Kind::ok, 0, {}}; }
  static TransportStatus retried(int n) { return {Kind::retried, n, {}}; }
  static TransportStatus failed(std::string reason) { return {Kind::failed, 0, std::move(reason)}; }

  Kind kind() const { return kind_; }
  int retries() const { return retries_; }
  const std::string& reason() const { return reason_; }
  bool succeeded() const { return kind_ != Kind::failed; }

  /// "ok", "retried(2)" or "failed(<reason>)".
  std::string to_string() const;

  friend bool operator==(const TransportStatus&, const TransportStatus&) = default;

 private:
  TransportStatus(Kind k, int n, std::string reason) : kind_(k), retries_(n), reason_(std::move(reason)) {}

  Kind kind_;
  int retries_;
  std::string reason_;
};

struct RawResponse {
  std::optional<std::string> text;  // present iff status succeeded
  double latency_ms = 0.0;
  std::string request_fingerprint;
  std::string model_name;
  TransportStatus status = TransportStatus::ok();
};

/// Anything that turns a prompt into raw model text. Implementations never
/// throw from complete(); failures land in RawResponse::status.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual RawResponse complete(const Prompt& prompt) = 0;
};

/// Bounds the number of concurrent requests and spaces request starts.
class AdmissionGate {
 public:
  AdmissionGate(std::size_t max_in_flight, double max_per_second);

  class Ticket {
   public:
    explicit Ticket(AdmissionGate* gate) : gate_(gate) {}
    Ticket(Ticket&& other) noexcept : gate_(std::exchange(other.gate_, nullptr)) {}
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    Ticket& operator=(Ticket&&) = delete;
    ~Ticket() {
      if (gate_) gate_->release();
    }

   private:
    AdmissionGate* gate_;
  };

  [[nodiscard]] Ticket acquire();
  std::size_t in_flight() const;
  std::size_t peak_in_flight() const;

 private:
  void release();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
  std::chrono::nanoseconds min_interval_{0};
  std::chrono::steady_clock::time_point next_start_{};
};

/// OpenAI-compatible chat-completions client: POST <endpoint>/v1/chat/completions.
/// Retries timeouts, 429 and 5xx with exponential backoff.
class HttpChatClient : public CompletionProvider {
 public:
  /// Resolves the credential from the environment; throws ConfigError if
  /// credential_ref names an unset variable.
  explicit HttpChatClient(ModelConfig config);

  RawResponse complete(const Prompt& prompt) override;

  const ModelConfig& config() const { return config_; }
  AdmissionGate& gate() { return gate_; }

  /// Request body for a prompt; exposed for inspection in tests.
  std::string request_body(const Prompt& prompt) const;

 private:
  ModelConfig config_;
  std::string credential_;
  std::string base_;   // scheme://host[:port]
  std::string path_;   // prefix + /v1/chat/completions
  AdmissionGate gate_;
};

/// Directory of recorded responses, one file per prompt fingerprint plus
/// index.json mapping fingerprints to model name and record time.
class FixtureStore {
 public:
  explicit FixtureStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  /// Stores `text` under `fingerprint`, overwriting any previous entry.
  void put(const std::string& fingerprint, const std::string& text, const std::string& model_name);

  std::optional<std::string> get(const std::string& fingerprint) const;

  /// Throws FixtureError naming the fingerprint on a miss, or when the store
  /// directory does not exist.
  RawResponse replay(const Prompt& prompt) const;

  /// Throws FixtureError unless the response carries text.
  void record(const Prompt& prompt, const RawResponse& response);

  std::size_t size() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

void record_fixture(const Prompt& prompt, const RawResponse& response, const std::filesystem::path& store);
RawResponse replay(const Prompt& prompt, const std::filesystem::path& store);

/// One live request through a fresh client.
RawResponse complete(const Prompt& prompt, const ModelConfig& config);

/// Answers from a fixture store; a miss becomes a failed response.
class ReplayProvider : public CompletionProvider {
 public:
  explicit ReplayProvider(std::filesystem::path store) : store_(std::move(store)) {}
  RawResponse complete(const Prompt& prompt) override;

 private:
  FixtureStore store_;
};

/// Live requests whose successful responses are written to a fixture store.
class RecordingProvider : public CompletionProvider {
 public:
  RecordingProvider(ModelConfig config, std::filesystem::path store);
  RawResponse complete(const Prompt& prompt) override;

 private:
  HttpChatClient client_;
  FixtureStore store_;
};

}  // namespace fsner
