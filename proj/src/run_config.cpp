#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fsner/cli.hpp"
#include "fsner/error.hpp"

namespace fsner {

namespace pt = boost::property_tree;

std::string_view to_string(ProviderMode m) {
  switch (m) {
    case ProviderMode::live: return "live";
    case ProviderMode::replay: return "replay";
    case ProviderMode::record: return "record";
  }
  return "replay";
}

ProviderMode provider_mode_from_string(std::string_view name) {
  if (name == "live") return ProviderMode::live;
  if (name == "replay") return ProviderMode::replay;
  if (name == "record") return ProviderMode::record;
  throw ConfigError("unknown provider mode \"" + std::string(name) + "\" (expected live, replay or record)");
}

void RunConfig::validate() const {
  if (corpus.empty()) throw ConfigError("config: corpus path is required");
  if (output.empty()) throw ConfigError("config: output directory is required");
  if ((mode == ProviderMode::replay || mode == ProviderMode::record) && fixtures.empty()) {
    throw ConfigError("config: " + std::string(to_string(mode)) + " mode requires a fixture store path");
  }
  if ((mode == ProviderMode::live || mode == ProviderMode::record) && model.endpoint_url.empty()) {
    throw ConfigError("config: " + std::string(to_string(mode)) + " mode requires a model endpoint");
  }
  if (concurrency == 0) throw ConfigError("config: concurrency must be at least 1");
  if (exemplar_count == 0) throw ConfigError("config: at least one exemplar is required");
  if (!exemplar_ids.empty() && exemplar_ids.size() != exemplar_count) {
    throw ConfigError("config: " + std::to_string(exemplar_ids.size()) + " exemplar ids given for " +
                      std::to_string(exemplar_count) + " exemplars");
  }
  if (!(echo_threshold > 0.0 && echo_threshold <= 1.0)) throw ConfigError("config: echo_threshold must be in (0, 1]");
  model.validate();
}

nlohmann::ordered_json RunConfig::to_json() const {
  return nlohmann::ordered_json{
      {"corpus", corpus.string()},
      {"exemplar_corpus", exemplar_corpus.string()},
      {"labels", labels.string()},
      {"templates", templates.string()},
      {"granularity", to_string(granularity)},
      {"exemplar_ids", exemplar_ids},
      {"exemplar_count", exemplar_count},
      {"mode", to_string(mode)},
      {"fixtures", fixtures.string()},
      {"output", output.string()},
      {"concurrency", concurrency},
      {"repair_mode", to_string(repair_mode)},
      {"echo_threshold", echo_threshold},
      {"model",
       {{"endpoint", model.endpoint_url},
        {"name", model.model_name},
        {"temperature", model.temperature},
        {"max_output_units", model.max_output_units},
        {"timeout", model.timeout_seconds},
        {"max_retries", model.max_retries},
        {"credential_ref", model.credential_ref},
        {"backoff_ms", model.backoff_initial.count()},
        {"rate_limit", model.max_requests_per_second}}}};
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(pos, comma - pos);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& ini_path) {
  pt::ptree tree;
  try {
    pt::read_ini(ini_path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
  RunConfig c;
  const auto base = ini_path.parent_path();
  auto path_of = [&](const char* key) -> std::filesystem::path {
    auto v = tree.get_optional<std::string>(key);
    if (!v || v->empty()) return {};
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base / p;
  };
  try {
    c.corpus = path_of("run.corpus");
    c.exemplar_corpus = path_of("run.exemplar_corpus");
    c.labels = path_of("run.labels");
    c.templates = path_of("run.templates");
    c.fixtures = path_of("run.fixtures");
    c.output = path_of("run.output");
    if (auto v = tree.get_optional<std::string>("run.granularity")) c.granularity = granularity_from_string(*v);
    if (auto v = tree.get_optional<std::string>("run.exemplar_id")) c.exemplar_ids = split_list(*v);
    c.exemplar_count = tree.get<std::size_t>("run.exemplars", c.exemplar_ids.empty() ? 1 : c.exemplar_ids.size());
    if (auto v = tree.get_optional<std::string>("run.mode")) c.mode = provider_mode_from_string(*v);
    c.concurrency = tree.get<std::size_t>("run.concurrency", c.concurrency);
    if (auto v = tree.get_optional<std::string>("run.repair_mode")) c.repair_mode = repair_mode_from_string(*v);
    c.echo_threshold = tree.get<double>("run.echo_threshold", c.echo_threshold);

    c.model.endpoint_url = tree.get<std::string>("model.endpoint", "");
    c.model.model_name = tree.get<std::string>("model.name", "");
    c.model.temperature = tree.get<double>("model.temperature", c.model.temperature);
    c.model.max_output_units = tree.get<int>("model.max_output_units", c.model.max_output_units);
    c.model.timeout_seconds = tree.get<double>("model.timeout", c.model.timeout_seconds);
    c.model.max_retries = tree.get<int>("model.max_retries", c.model.max_retries);
    c.model.credential_ref = tree.get<std::string>("model.credential_ref", "");
    c.model.backoff_initial = std::chrono::milliseconds(tree.get<long long>("model.backoff_ms", c.model.backoff_initial.count()));
    c.model.max_requests_per_second = tree.get<double>("model.rate_limit", 0.0);
  } catch (const pt::ptree_error& e) {
    throw ConfigError("config: " + ini_path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError("config: " + ini_path.string() + ": " + e.what());
  }
  c.model.max_in_flight = c.concurrency;
  return c;
}

}  // namespace fsner
