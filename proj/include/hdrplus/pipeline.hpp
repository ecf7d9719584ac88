// Copyright (c) 2026 The hdrplus-burst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hdrplus/align.hpp"
#include "hdrplus/burst_io.hpp"
#include "hdrplus/finish.hpp"
#include "hdrplus/merge.hpp"
#include "hdrplus/pyramid.hpp"
#include "hdrplus/thread_pool.hpp"

namespace hdrplus {

struct PipelineConfig {
    AlignmentConfig align;
    MergeConfig merge;
    FinishConfig finish;
    NoiseParams baseline{1e-4, 1e-6};  // ISO 100, normalized units
    std::optional<int> ref_index;
    unsigned threads = 0;  // 0 = all cores
    bool dump_intermediates = false;
};

void validate(const PipelineConfig& cfg);

/// Setting names accepted by apply_setting, in the order used by
/// to_config_text.
const std::vector<std::string>& config_keys();

/// Parses and stores one `key = value` setting. Throws on unknown keys and
/// invalid values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Defaults, then the config file (if any), then `overrides` in order.
PipelineConfig parse_config(const std::optional<std::filesystem::path>& file,
                            const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Flat `key = value` text that parse_config reads back to the same config.
std::string to_config_text(const PipelineConfig& cfg);

/// Reference index actually used: override, else metadata, else 0.
int resolve_reference(const RawBurst& burst, const PipelineConfig& cfg);

struct AlignMergeResult {
    int reference = 0;
    NoiseParams noise;
    std::vector<Pyramid> pyramids;                      // reference first
    std::vector<std::vector<MotionField>> level_fields;  // per alternate, coarsest first
    std::vector<MotionField> fields;                    // finest level, alternates in burst order
    BayerFrame merged;
};

/// Grayscale conversion, pyramids, alignment and merging.
AlignMergeResult align_and_merge(const RawBurst& burst, const PipelineConfig& cfg, ThreadPool* pool = nullptr);

}  // namespace hdrplus
