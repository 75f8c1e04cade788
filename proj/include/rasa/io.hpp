#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rasa/attention.hpp"
#include "rasa/graph.hpp"
#include "rasa/train.hpp"

namespace rasa {

// Files carry full precision; the console rounds to 4 significant digits.
std::string format_full(double v);     // %.17g
std::string format_console(double v);  // %.4g

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);
void write_metrics_csv(const std::string& path, const MetricsRecord& rec);
// layer,entropy_nats,normalized,n rows plus a trailing `mean` row.
void write_entropy_csv(const std::string& path, const EntropyReport& report);
void write_ablation_csv(const std::string& path, const AblationReport& report);
void write_search_space_json(const std::string& path, const SearchSpaceReport& report);

// FNV-1a 64 over the raw bytes, hex string; cheap content fingerprint for
// run manifests.
std::string content_hash_hex(const std::string& path);

}  // namespace rasa
