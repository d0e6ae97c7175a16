#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fsner/outparse.hpp"
#include "fsner/promptgen.hpp"
#include "fsner/provider.hpp"

namespace fsner {

enum class ProviderMode { live, replay, record };

std::string_view to_string(ProviderMode m);
ProviderMode provider_mode_from_string(std::string_view name);

/// Everything needed to re-run an extraction. Loaded from an INI file with
/// [run] and [model] sections; command-line flags override file values.
struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path exemplar_corpus;  // empty: exemplars come from `corpus`
  std::filesystem::path labels;           // empty: built-in label set
  std::filesystem::path templates;        // empty: built-in templates
  Granularity granularity = Granularity::span_level;
  std::vector<std::string> exemplar_ids;  // empty: first full-coverage documents
  std::size_t exemplar_count = 1;
  ModelConfig model;
  ProviderMode mode = ProviderMode::replay;
  std::filesystem::path fixtures;
  std::filesystem::path output;
  std::size_t concurrency = 4;
  RepairMode repair_mode = RepairMode::with_regrounded;
  double echo_threshold = kDefaultEchoThreshold;

  /// Throws ConfigError describing the first violated requirement.
  void validate() const;

  /// Snapshot for the run manifest. Never contains a credential value.
  nlohmann::ordered_json to_json() const;
};

RunConfig load_run_config(const std::filesystem::path& ini_path);

/// Entry point of the `fsner` tool. Exit codes: 0 success (possibly with
/// per-document failures), 1 usage error, 2 environment/config/data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fsner
