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

#include "hdrplus/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace hdrplus {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw Error("invalid value for '" + key + "': '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "inf" || v == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || std::isnan(d)) {
            bad_value(key, value);
        }
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, value);
    }
}

int parse_int(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        bad_value(key, value);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    bad_value(key, value);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int(key, item));
    }
    if (out.empty()) {
        bad_value(key, value);
    }
    return out;
}

std::array<double, 3> parse_triple(const std::string& key, const std::string& value) {
    std::array<double, 3> out{};
    std::stringstream ss(value);
    std::string item;
    size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i == 3) {
            bad_value(key, value);
        }
        out[i++] = parse_double(key, item);
    }
    if (i != 3) {
        bad_value(key, value);
    }
    return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double d) {
    if (std::isinf(d)) {
        return d > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, d);
    return {buf, res.ptr};
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        s += (i ? "," : "") + std::to_string(v[i]);
    }
    return s;
}

std::string join(const std::array<double, 3>& v) {
    return fmt(v[0]) + "," + fmt(v[1]) + "," + fmt(v[2]);
}

struct Setting {
    std::string key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

const std::vector<Setting>& settings() {
    static const std::vector<Setting> table = {
        {"ref-index",
         [](PipelineConfig& c, const std::string& v) {
             const std::string t = trim(v);
             if (t == "auto" || t.empty()) {
                 c.ref_index.reset();
             } else {
                 c.ref_index = parse_int("ref-index", t);
             }
         },
         [](const PipelineConfig& c) { return c.ref_index ? std::to_string(*c.ref_index) : std::string("auto"); }},
        {"factors",
         [](PipelineConfig& c, const std::string& v) { c.align.factors = parse_int_list("factors", v); },
         [](const PipelineConfig& c) { return join(c.align.factors); }},
        {"tile-sizes",
         [](PipelineConfig& c, const std::string& v) {
             c.align.tile_sizes = parse_int_list("tile-sizes", v);
             c.merge.tile_size = c.align.tile_sizes.back();
         },
         [](const PipelineConfig& c) { return join(c.align.tile_sizes); }},
        {"tile-size",
         [](PipelineConfig& c, const std::string& v) {
             const int n = parse_int("tile-size", v);
             c.merge.tile_size = n;
             if (!c.align.tile_sizes.empty()) {
                 c.align.tile_sizes.back() = n;
             }
         },
         [](const PipelineConfig& c) { return std::to_string(c.merge.tile_size); }},
        {"search-radius",
         [](PipelineConfig& c, const std::string& v) {
             auto radii = parse_int_list("search-radius", v);
             if (radii.size() == 1) {
                 radii.assign(static_cast<size_t>(c.align.levels()), radii[0]);
             }
             c.align.search_radii = radii;
         },
         [](const PipelineConfig& c) { return join(c.align.search_radii); }},
        {"norms",
         [](PipelineConfig& c, const std::string& v) { c.align.norms = parse_int_list("norms", v); },
         [](const PipelineConfig& c) { return join(c.align.norms); }},
        {"subpixel",
         [](PipelineConfig& c, const std::string& v) { c.align.subpixel = parse_bool("subpixel", v); },
         [](const PipelineConfig& c) { return std::string(c.align.subpixel ? "true" : "false"); }},
        {"tau",
         [](PipelineConfig& c, const std::string& v) { c.merge.tau = parse_double("tau", v); },
         [](const PipelineConfig& c) { return fmt(c.merge.tau); }},
        {"s",
         [](PipelineConfig& c, const std::string& v) { c.merge.s = parse_double("s", v); },
         [](const PipelineConfig& c) { return fmt(c.merge.s); }},
        {"lambda-s",
         [](PipelineConfig& c, const std::string& v) { c.baseline.lambda_s = parse_double("lambda-s", v); },
         [](const PipelineConfig& c) { return fmt(c.baseline.lambda_s); }},
        {"lambda-r",
         [](PipelineConfig& c, const std::string& v) { c.baseline.lambda_r = parse_double("lambda-r", v); },
         [](const PipelineConfig& c) { return fmt(c.baseline.lambda_r); }},
        {"gain",
         [](PipelineConfig& c, const std::string& v) { c.finish.synthetic_gain = parse_double("gain", v); },
         [](const PipelineConfig& c) { return fmt(c.finish.synthetic_gain); }},
        {"contrast-alpha",
         [](PipelineConfig& c, const std::string& v) { c.finish.contrast_alpha = parse_double("contrast-alpha", v); },
         [](const PipelineConfig& c) { return fmt(c.finish.contrast_alpha); }},
        {"sharpen-amounts",
         [](PipelineConfig& c, const std::string& v) { c.finish.sharpen_amounts = parse_triple("sharpen-amounts", v); },
         [](const PipelineConfig& c) { return join(c.finish.sharpen_amounts); }},
        {"sharpen-sigmas",
         [](PipelineConfig& c, const std::string& v) { c.finish.sharpen_sigmas = parse_triple("sharpen-sigmas", v); },
         [](const PipelineConfig& c) { return join(c.finish.sharpen_sigmas); }},
        {"sharpen-thresholds",
         [](PipelineConfig& c, const std::string& v) {
             c.finish.sharpen_thresholds = parse_triple("sharpen-thresholds", v);
         },
         [](const PipelineConfig& c) { return join(c.finish.sharpen_thresholds); }},
        {"minimal",
         [](PipelineConfig& c, const std::string& v) { c.finish.minimal = parse_bool("minimal", v); },
         [](const PipelineConfig& c) { return std::string(c.finish.minimal ? "true" : "false"); }},
        {"threads",
         [](PipelineConfig& c, const std::string& v) {
             const int t = parse_int("threads", v);
             if (t < 0) {
                 bad_value("threads", v);
             }
             c.threads = static_cast<unsigned>(t);
         },
         [](const PipelineConfig& c) { return std::to_string(c.threads); }},
        {"dump-intermediates",
         [](PipelineConfig& c, const std::string& v) {
             c.dump_intermediates = parse_bool("dump-intermediates", v);
         },
         [](const PipelineConfig& c) { return std::string(c.dump_intermediates ? "true" : "false"); }},
    };
    return table;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
    validate(cfg.align);
    validate(cfg.merge);
    validate(cfg.finish);
    if (!(cfg.baseline.lambda_s >= 0.0) || !(cfg.baseline.lambda_r >= 0.0) || std::isinf(cfg.baseline.lambda_s) ||
        std::isinf(cfg.baseline.lambda_r)) {
        throw Error("baseline noise parameters must be finite and non-negative");
    }
    if (cfg.ref_index && *cfg.ref_index < 0) {
        throw Error("ref-index must be non-negative");
    }
    if (cfg.merge.tile_size != cfg.align.tile_sizes.back()) {
        throw Error("merge tile size " + std::to_string(cfg.merge.tile_size) +
                    " must equal the finest alignment tile size " + std::to_string(cfg.align.tile_sizes.back()));
    }
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& s : settings()) {
            k.push_back(s.key);
        }
        return k;
    }();
    return keys;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& s : settings()) {
        if (s.key == key) {
            s.set(cfg, value);
            return;
        }
    }
    throw Error("unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::optional<std::filesystem::path>& file,
                            const std::vector<std::pair<std::string, std::string>>& overrides) {
    PipelineConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) {
            throw Error("cannot open config file " + file->string());
        }
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) {
                line.erase(hash);
            }
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw Error(file->string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
            }
            try {
                apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            } catch (const Error& e) {
                throw Error(file->string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    for (const auto& [key, value] : overrides) {
        apply_setting(cfg, key, value);
    }
    validate(cfg);
    return cfg;
}

std::string to_config_text(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& s : settings()) {
        out += s.key + " = " + s.get(cfg) + "\n";
    }
    return out;
}

int resolve_reference(const RawBurst& burst, const PipelineConfig& cfg) {
    const int ref = cfg.ref_index ? *cfg.ref_index : burst.meta.ref_index;
    if (ref < 0 || ref >= static_cast<int>(burst.frames.size())) {
        throw Error("reference index " + std::to_string(ref) + " out of range for a burst of " +
                    std::to_string(burst.frames.size()) + " frames");
    }
    return ref;
}

AlignMergeResult align_and_merge(const RawBurst& burst, const PipelineConfig& cfg, ThreadPool* pool) {
    validate(cfg);
    validate_metadata(burst.meta, burst.frames.size());
    AlignMergeResult result;
    result.reference = resolve_reference(burst, cfg);
    result.noise = derive_noise_params(burst.meta, cfg.baseline);

    const int n = static_cast<int>(burst.frames.size());
    std::vector<int> order{result.reference};
    for (int z = 0; z < n; ++z) {
        if (z != result.reference) {
            order.push_back(z);
        }
    }
    result.pyramids.resize(order.size());
    parallel_for(pool, 0, n, [&](int i) {
        result.pyramids[static_cast<size_t>(i)] =
            build_pyramid(bayer_to_gray(burst.frames[static_cast<size_t>(order[static_cast<size_t>(i)])], burst.meta),
                          cfg.align.factors);
    });

    result.fields = align_burst(result.pyramids, cfg.align, pool, &result.level_fields);
    result.merged = merge_burst(burst, result.reference, result.fields, result.noise, cfg.merge, pool);
    return result;
}

}  // namespace hdrplus
