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

#include "hdrplus/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "hdrplus/pipeline.hpp"
#include "hdrplus/synthbench.hpp"

namespace hdrplus {

namespace fs = std::filesystem;

namespace {

// Flags without a value; every other config key takes one.
bool is_switch(const std::string& key) { return key == "minimal" || key == "dump-intermediates"; }

std::string describe(const std::string& key) {
    static const std::map<std::string, std::string> text = {
        {"ref-index", "Reference frame (default: metadata ref_index, else 0)"},
        {"factors", "Pyramid downsampling factors, finest step first"},
        {"tile-sizes", "Alignment tile size per level, coarsest first"},
        {"tile-size", "Merge tile size; also the finest alignment tile size"},
        {"search-radius", "Search radius, one value or one per level"},
        {"norms", "Distance norm (1 or 2) per level, coarsest first"},
        {"subpixel", "Subpixel refinement at coarse levels (true/false)"},
        {"tau", "Temporal denoising strength"},
        {"s", "Spatial denoising strength"},
        {"lambda-s", "ISO-100 shot noise slope used without a noise profile"},
        {"lambda-r", "ISO-100 read noise floor used without a noise profile"},
        {"gain", "Long synthetic exposure gain for tone mapping"},
        {"contrast-alpha", "S-curve strength"},
        {"sharpen-amounts", "Unsharp mask amounts, three comma-separated values"},
        {"sharpen-sigmas", "Unsharp mask blur sigmas"},
        {"sharpen-thresholds", "Unsharp mask detail thresholds"},
        {"minimal", "Skip tone mapping, contrast and sharpening"},
        {"threads", "Worker threads (0 = all cores)"},
        {"dump-intermediates", "Write pyramids, motion fields and merged.pgm"},
    };
    const auto it = text.find(key);
    return it == text.end() ? std::string() : it->second;
}

struct PipelineOptions {
    std::optional<std::string> config_file;
    std::string out_dir = "out";
    std::map<std::string, std::optional<std::string>> values;
    std::map<std::string, bool> switches;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "Flat 'key = value' config file");
        app.add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
        for (const auto& key : config_keys()) {
            if (is_switch(key)) {
                app.add_flag("--" + key, switches[key], describe(key));
            } else {
                app.add_option("--" + key, values[key], describe(key));
            }
        }
    }

    PipelineConfig resolve() const {
        std::vector<std::pair<std::string, std::string>> overrides;
        for (const auto& key : config_keys()) {
            if (is_switch(key)) {
                if (switches.at(key)) {
                    overrides.emplace_back(key, "true");
                }
            } else if (const auto& v = values.at(key); v) {
                overrides.emplace_back(key, *v);
            }
        }
        std::optional<fs::path> file;
        if (config_file) {
            file = fs::path(*config_file);
        }
        return parse_config(file, overrides);
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) {
        throw Error("cannot write " + path.string());
    }
    f << text;
}

void write_config_log(const fs::path& dir, const std::string& subcommand, const std::string& input,
                      const PipelineConfig& cfg) {
    write_text(dir / "config.log", "# subcommand: " + subcommand + "\n# input: " + input + "\n" + to_config_text(cfg));
}

uint16_t to_u16(double x) {
    return static_cast<uint16_t>(std::lround(std::clamp(x, 0.0, 1.0) * 65535.0));
}

std::array<uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) {
        r = c, g = x;
    } else if (hp < 2) {
        r = x, g = c;
    } else if (hp < 3) {
        g = c, b = x;
    } else if (hp < 4) {
        g = x, b = c;
    } else if (hp < 5) {
        r = x, b = c;
    } else {
        r = c, b = x;
    }
    const double m = v - c;
    return {quantize8(r + m), quantize8(g + m), quantize8(b + m)};
}

// Hue encodes direction, saturation magnitude relative to the field maximum.
Rgb8Image motion_field_to_hsv(const MotionField& field) {
    Rgb8Image img{field.grid.tiles_x, field.grid.tiles_y, {}};
    img.data.resize(static_cast<size_t>(img.width) * img.height * 3);
    double max_mag = 0.0;
    for (const auto& mv : field.vectors) {
        max_mag = std::max(max_mag, std::hypot(mv.u, mv.v));
    }
    for (size_t i = 0; i < field.vectors.size(); ++i) {
        const auto& mv = field.vectors[i];
        double hue = std::atan2(mv.v, mv.u) * 180.0 / std::numbers::pi;
        if (hue < 0) {
            hue += 360.0;
        }
        const double sat = max_mag > 0 ? std::hypot(mv.u, mv.v) / max_mag : 0.0;
        const auto rgb = hsv_to_rgb(hue, sat, 1.0);
        std::copy(rgb.begin(), rgb.end(), img.data.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
    return img;
}

void dump_intermediates(const fs::path& dir, const RawBurst& burst, const AlignMergeResult& r) {
    fs::create_directories(dir);
    std::vector<int> order{r.reference};
    for (int z = 0; z < static_cast<int>(burst.frames.size()); ++z) {
        if (z != r.reference) {
            order.push_back(z);
        }
    }
    for (size_t i = 0; i < r.pyramids.size(); ++i) {
        const auto& levels = r.pyramids[i].levels;
        for (size_t l = 0; l < levels.size(); ++l) {
            Image<uint16_t> img(levels[l].width(), levels[l].height());
            for (size_t k = 0; k < img.pixels().size(); ++k) {
                img.storage()[k] = to_u16(levels[l].pixels()[k]);
            }
            write_gray16(img, dir / ("pyramid_f" + std::to_string(order[i]) + "_l" + std::to_string(l) + ".pgm"));
        }
    }
    for (size_t a = 0; a < r.level_fields.size(); ++a) {
        const int frame = order[a + 1];
        for (size_t l = 0; l < r.level_fields[a].size(); ++l) {
            const MotionField& field = r.level_fields[a][l];
            const std::string stem = "motion_f" + std::to_string(frame) + "_l" + std::to_string(l);
            std::ostringstream csv;
            csv << "tile_x,tile_y,u,v\n";
            for (int ty = 0; ty < field.grid.tiles_y; ++ty) {
                for (int tx = 0; tx < field.grid.tiles_x; ++tx) {
                    const auto& mv = field.at(tx, ty);
                    csv << tx << ',' << ty << ',' << mv.u << ',' << mv.v << '\n';
                }
            }
            write_text(dir / (stem + ".csv"), csv.str());
            write_rgb8(motion_field_to_hsv(field), dir / (stem + ".png"));
        }
    }
}

AlignMergeResult do_merge(const fs::path& burst_dir, const fs::path& out, const PipelineConfig& cfg,
                          const std::string& subcommand, RawBurst& burst) {
    burst = load_burst(burst_dir);
    fs::create_directories(out);
    write_config_log(out, subcommand, burst_dir.string(), cfg);
    ThreadPool pool(cfg.threads);
    AlignMergeResult r = align_and_merge(burst, cfg, &pool);
    write_raw16(r.merged, out / "merged.pgm");
    BurstMetadata meta = burst.meta;
    meta.ref_index = 0;
    write_metadata(meta, out / "burst.json");
    if (cfg.dump_intermediates) {
        dump_intermediates(out / "intermediates", burst, r);
    }
    return r;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) {
            throw CLI::ValidationError("list", "bad number '" + item + "'");
        }
    }
    return out;
}

std::string fmt(double d) {
    std::ostringstream s;
    s << std::setprecision(10) << d;
    return s.str();
}

struct SynthOptions {
    int frames = 8;
    uint64_t seed = 1;
    int width = 1024;
    int height = 768;
    int max_shift = 8;
    double noise_s = 4e-4;
    double noise_r = 1.6e-5;
    bool static_burst = false;
    std::optional<std::string> emit_burst;
    std::optional<std::string> report;
    std::optional<std::string> sweep_tau;
    std::optional<std::string> sweep_s;
    std::optional<std::string> sweep_n;
    std::optional<std::string> csv;

    SynthSpec spec(int n) const {
        SynthSpec sp = static_burst ? static_synth_spec(n, seed) : default_synth_spec(n, seed, max_shift);
        sp.width = width;
        sp.height = height;
        sp.noise = {noise_s, noise_r};
        return sp;
    }
};

int run_synthbench(const SynthOptions& so, const PipelineOptions& po, const PipelineConfig& cfg, std::ostream& out) {
    const fs::path dir(po.out_dir);
    fs::create_directories(dir);
    write_config_log(dir, "synthbench", "seed " + std::to_string(so.seed), cfg);
    ThreadPool pool(cfg.threads);

    const SynthSpec spec = so.spec(so.frames);
    if (so.emit_burst) {
        const SynthBurst synth = synthesize_burst(spec);
        write_burst(synth.burst, *so.emit_burst);
        BayerFrame clean(spec.width, spec.height, spec.cfa);
        const double range = spec.white_level - spec.black_level;
        for (size_t i = 0; i < clean.samples.size(); ++i) {
            clean.samples[i] = static_cast<uint16_t>(std::lround(spec.black_level + synth.clean.pixels()[i] * range));
        }
        write_raw16(clean, fs::path(*so.emit_burst) / "clean.pgm");
    }

    const auto start = std::chrono::steady_clock::now();
    const SynthReport rep = evaluate_pipeline(spec, cfg, &pool);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream text;
    text << "frames=" << rep.frames << "\nseed=" << so.seed << "\nwidth=" << spec.width << "\nheight=" << spec.height
         << "\nlambda_s=" << fmt(spec.noise.lambda_s) << "\nlambda_r=" << fmt(spec.noise.lambda_r)
         << "\ntau=" << fmt(cfg.merge.tau) << "\ns=" << fmt(cfg.merge.s) << "\npsnr_ref=" << fmt(rep.psnr_ref)
         << "\npsnr_merged=" << fmt(rep.psnr_merged) << "\ngain_db=" << fmt(rep.gain_db)
         << "\nalignment_accuracy=" << fmt(rep.alignment_accuracy) << "\nseconds=" << fmt(seconds) << "\n";
    const fs::path report = so.report ? fs::path(*so.report) : dir / "report.txt";
    write_text(report, text.str());
    out << text.str();

    if (so.sweep_tau || so.sweep_s || so.sweep_n) {
        const auto taus = so.sweep_tau ? parse_list(*so.sweep_tau) : std::vector<double>{cfg.merge.tau};
        const auto ss = so.sweep_s ? parse_list(*so.sweep_s) : std::vector<double>{cfg.merge.s};
        const auto ns = so.sweep_n ? parse_list(*so.sweep_n) : std::vector<double>{static_cast<double>(so.frames)};
        std::ostringstream csv;
        csv << "tau,s,frames,psnr_ref,psnr_merged,gain_db,alignment_accuracy\n";
        for (double n : ns) {
            const SynthSpec sp = so.spec(static_cast<int>(n));
            for (double tau : taus) {
                for (double s : ss) {
                    PipelineConfig c = cfg;
                    c.merge.tau = tau;
                    c.merge.s = s;
                    validate(c);
                    const SynthReport r = evaluate_pipeline(sp, c, &pool);
                    csv << fmt(tau) << ',' << fmt(s) << ',' << r.frames << ',' << fmt(r.psnr_ref) << ','
                        << fmt(r.psnr_merged) << ',' << fmt(r.gain_db) << ',' << fmt(r.alignment_accuracy) << '\n';
                }
            }
        }
        write_text(so.csv ? fs::path(*so.csv) : dir / "sweep.csv", csv.str());
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Raw burst align-and-merge denoiser with a simplified finishing pipeline", "hdrplus"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    PipelineOptions merge_opts, finish_opts, full_opts, synth_opts;
    std::string merge_in, full_in, finish_in;
    std::optional<std::string> finish_meta;
    SynthOptions so;

    auto* merge = app.add_subcommand("merge", "Align and merge a burst directory into merged.pgm");
    merge->add_option("burst_dir", merge_in, "Directory with frame_<k>.pgm and burst.json")->required();
    merge_opts.attach(*merge);

    auto* finish = app.add_subcommand("finish", "Finish a mosaic PGM into final.png");
    finish->add_option("mosaic", finish_in, "16-bit mosaic PGM")->required();
    finish->add_option("--metadata", finish_meta, "Metadata JSON (default: burst.json next to the mosaic)");
    finish_opts.attach(*finish);

    auto* full = app.add_subcommand("full", "Merge and finish a burst directory");
    full->add_option("burst_dir", full_in, "Directory with frame_<k>.pgm and burst.json")->required();
    full_opts.attach(*full);

    auto* synth = app.add_subcommand("synthbench", "Score align+merge on a synthetic burst with known ground truth");
    synth->add_option("--n", so.frames, "Frames")->capture_default_str()->check(CLI::Range(2, 1024));
    synth->add_option("--seed", so.seed, "RNG seed")->capture_default_str();
    synth->add_option("--width", so.width, "Mosaic width (even)")->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--height", so.height, "Mosaic height (even)")->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--max-shift", so.max_shift, "Largest true shift in mosaic pixels")->capture_default_str();
    synth->add_option("--noise-s", so.noise_s, "Shot noise slope of the synthetic burst")->capture_default_str();
    synth->add_option("--noise-r", so.noise_r, "Read noise floor of the synthetic burst")->capture_default_str();
    synth->add_flag("--static", so.static_burst, "All frames unshifted");
    synth->add_option("--emit-burst", so.emit_burst, "Also write the burst and clean.pgm to this directory");
    synth->add_option("--report", so.report, "Report path (default: <out>/report.txt)");
    synth->add_option("--sweep-tau", so.sweep_tau, "Comma-separated tau values");
    synth->add_option("--sweep-s", so.sweep_s, "Comma-separated s values");
    synth->add_option("--sweep-n", so.sweep_n, "Comma-separated frame counts");
    synth->add_option("--csv", so.csv, "Sweep CSV path (default: <out>/sweep.csv)");
    synth_opts.attach(*synth);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    const PipelineOptions& chosen = merge->parsed()    ? merge_opts
                                    : full->parsed()   ? full_opts
                                    : finish->parsed() ? finish_opts
                                                       : synth_opts;
    PipelineConfig cfg;
    try {
        cfg = chosen.resolve();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (merge->parsed()) {
            RawBurst burst;
            do_merge(merge_in, merge_opts.out_dir, cfg, "merge", burst);
        } else if (full->parsed()) {
            RawBurst burst;
            const AlignMergeResult r = do_merge(full_in, full_opts.out_dir, cfg, "full", burst);
            write_rgb8(finish_pipeline(r.merged, burst.meta, cfg.finish), fs::path(full_opts.out_dir) / "final.png");
        } else if (finish->parsed()) {
            const fs::path mosaic(finish_in);
            const fs::path meta_path = finish_meta ? fs::path(*finish_meta) : mosaic.parent_path() / "burst.json";
            const BurstMetadata meta = load_metadata(meta_path);
            const BayerFrame frame = read_raw16(mosaic, meta.cfa);
            const fs::path dir(finish_opts.out_dir);
            fs::create_directories(dir);
            write_config_log(dir, "finish", mosaic.string(), cfg);
            write_rgb8(finish_pipeline(frame, meta, cfg.finish), dir / "final.png");
        } else if (synth->parsed()) {
            return run_synthbench(so, synth_opts, cfg, out);
        }
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hdrplus
