#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fsner/error.hpp"
#include "fsner/provider.hpp"

namespace fsner {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kIndexFile = "index.json";

bool is_fingerprint(const std::string& s) {
  return !s.empty() && s.size() <= 128 &&
         s.find_first_not_of("0123456789abcdef") == std::string::npos;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FixtureError("fixture store: cannot write " + tmp.string());
    out << content;
    if (!out) throw FixtureError("fixture store: write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw FixtureError("fixture store: cannot replace " + path.string() + ": " + ec.message());
}

json read_index(const fs::path& dir) {
  const fs::path p = dir / kIndexFile;
  if (!fs::exists(p)) return json::object();
  json j = json::parse(read_file(p), nullptr, false);
  return j.is_object() ? j : json::object();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

FixtureStore::FixtureStore(fs::path dir) : dir_(std::move(dir)) {}

void FixtureStore::put(const std::string& fingerprint, const std::string& text, const std::string& model_name) {
  if (!is_fingerprint(fingerprint)) throw FixtureError("fixture store: invalid fingerprint \"" + fingerprint + "\"");
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw FixtureError("fixture store: cannot create " + dir_.string() + ": " + ec.message());
  write_atomically(dir_ / fingerprint, text);
  json index = read_index(dir_);
  index[fingerprint] = {{"model_name", model_name}, {"timestamp", utc_timestamp()}};
  write_atomically(dir_ / kIndexFile, index.dump(2) + "\n");
}

std::optional<std::string> FixtureStore::get(const std::string& fingerprint) const {
  if (!is_fingerprint(fingerprint)) return std::nullopt;
  const fs::path p = dir_ / fingerprint;
  if (!fs::is_regular_file(p)) return std::nullopt;
  return read_file(p);
}

RawResponse FixtureStore::replay(const Prompt& prompt) const {
  if (!fs::is_directory(dir_)) throw FixtureError("fixture store: " + dir_.string() + " does not exist");
  auto text = get(prompt.fingerprint);
  if (!text) throw FixtureError("fixture store: no fixture for fingerprint " + prompt.fingerprint);
  RawResponse r;
  r.text = std::move(text);
  r.request_fingerprint = prompt.fingerprint;
  const json index = read_index(dir_);
  if (index.contains(prompt.fingerprint)) r.model_name = index[prompt.fingerprint].value("model_name", std::string{});
  r.latency_ms = 0;
  r.status = TransportStatus::ok();
  return r;
}

void FixtureStore::record(const Prompt& prompt, const RawResponse& response) {
  if (!response.status.succeeded() || !response.text) {
    throw FixtureError("fixture store: refusing to record a failed response (" + response.status.to_string() + ")");
  }
  put(prompt.fingerprint, *response.text, response.model_name);
}

std::size_t FixtureStore::size() const {
  if (!fs::is_directory(dir_)) return 0;
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (entry.is_regular_file() && is_fingerprint(entry.path().filename().string())) ++n;
  }
  return n;
}

}  // namespace fsner
