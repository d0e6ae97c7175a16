#include "fsner/provider.hpp"

#include <thread>

#include "fsner/error.hpp"

namespace fsner {

void ModelConfig::validate() const {
  if (temperature < 0) throw ConfigError("model: temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("model: max_retries must be >= 0");
  if (max_output_units < 0) throw ConfigError("model: max_output_units must be >= 0");
  if (!(timeout_seconds > 0)) throw ConfigError("model: timeout must be positive");
  if (max_in_flight == 0) throw ConfigError("model: concurrency limit must be at least 1");
  if (backoff_initial.count() < 0 || backoff_factor < 1.0) throw ConfigError("model: invalid backoff settings");
  if (max_requests_per_second < 0) throw ConfigError("model: rate budget must be >= 0");
}

std::string TransportStatus::to_string() const {
  switch (kind_) {
    case Kind::ok: return "ok";
    case Kind::retried: return "retried(" + std::to_string(retries_) + ")";
    case Kind::failed: return "failed(" + reason_ + ")";
  }
  return "failed(unknown)";
}

AdmissionGate::AdmissionGate(std::size_t max_in_flight, double max_per_second)
    : limit_(max_in_flight == 0 ? 1 : max_in_flight) {
  if (max_per_second > 0) {
    min_interval_ = std::chrono::nanoseconds(static_cast<long long>(1e9 / max_per_second));
  }
}

AdmissionGate::Ticket AdmissionGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
  if (min_interval_.count() > 0) {
    const auto now = std::chrono::steady_clock::now();
    const auto start = std::max(now, next_start_);
    next_start_ = start + min_interval_;
    lock.unlock();
    std::this_thread::sleep_until(start);
  }
  return Ticket(this);
}

void AdmissionGate::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

std::size_t AdmissionGate::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

std::size_t AdmissionGate::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_;
}

RawResponse complete(const Prompt& prompt, const ModelConfig& config) {
  try {
    HttpChatClient client(config);
    return client.complete(prompt);
  } catch (const std::exception& e) {
    RawResponse r;
    r.request_fingerprint = prompt.fingerprint;
    r.model_name = config.model_name;
    r.status = TransportStatus::failed(e.what());
    return r;
  }
}

void record_fixture(const Prompt& prompt, const RawResponse& response, const std::filesystem::path& store) {
  FixtureStore(store).record(prompt, response);
}

RawResponse replay(const Prompt& prompt, const std::filesystem::path& store) {
  return FixtureStore(store).replay(prompt);
}

RawResponse ReplayProvider::complete(const Prompt& prompt) {
  try {
    return store_.replay(prompt);
  } catch (const std::exception& e) {
    RawResponse r;
    r.request_fingerprint = prompt.fingerprint;
    r.status = TransportStatus::failed(e.what());
    return r;
  }
}

RecordingProvider::RecordingProvider(ModelConfig config, std::filesystem::path store)
    : client_(std::move(config)), store_(std::move(store)) {
  std::filesystem::create_directories(store_.dir());
}

RawResponse RecordingProvider::complete(const Prompt& prompt) {
  RawResponse r = client_.complete(prompt);
  if (r.text) {
    try {
      store_.record(prompt, r);
    } catch (const std::exception& e) {
      r.text.reset();
      r.status = TransportStatus::failed(std::string("recording failed: ") + e.what());
    }
  }
  return r;
}

}  // namespace fsner
