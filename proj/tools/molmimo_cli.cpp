// SPDX-License-Identifier: Apache-2.0
// molmimo: command-line front end over the C interface.
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "molmimo/molmimo.h"

namespace {

struct Failure {
    molmimo_status status;
    std::string detail;
};

void check(molmimo_status s) {
    if (s != MOLMIMO_OK) throw Failure{s, molmimo_last_error()};
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

// Owns a malloc'd string from the library.
struct Owned {
    char* p = nullptr;
    ~Owned() { molmimo_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct ConfigHandle {
    molmimo_config* p = nullptr;
    ~ConfigHandle() { molmimo_config_free(p); }
};

struct ReportHandle {
    molmimo_report* p = nullptr;
    ~ReportHandle() { molmimo_report_free(p); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure{MOLMIMO_IO, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw Failure{MOLMIMO_IO, "cannot write " + path};
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw Failure{MOLMIMO_IO, "write failed for " + path};
}

struct CommonOptions {
    std::string config_file;
    std::optional<std::string> mode;
    std::optional<std::string> message;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> particles;
    std::string out;
};

void load_config(ConfigHandle& h, const CommonOptions& o) {
    if (!o.config_file.empty())
        check(molmimo_config_from_json(read_file(o.config_file).c_str(), &h.p));
    else
        check(molmimo_config_new(nullptr, &h.p));
    if (o.mode) check(molmimo_config_set_mode(h.p, o.mode->c_str()));
    if (o.message) check(molmimo_config_set_message(h.p, o.message->c_str()));
    if (o.seed) check(molmimo_config_set_seed(h.p, *o.seed));
    if (o.backend) check(molmimo_config_set_backend(h.p, o.backend->c_str()));
    if (o.particles) check(molmimo_config_set_particles(h.p, *o.particles));
}

std::vector<double> parse_levels(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (item.empty() || used != item.size())
            throw Failure{MOLMIMO_INVALID_SWEEP, "cannot parse noise level '" + item + "'"};
        out.push_back(v);
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Molecular MIMO link simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(molmimo_version()));

    CommonOptions run_opt;
    std::string traces_path, slots_path;
    auto* run = app.add_subcommand("run", "Simulate one transmission and print its JSON report");
    run->add_option("--mode", run_opt.mode, "siso or mimo")->check(CLI::IsMember({"siso", "mimo"}));
    run->add_option("--message", run_opt.message, "Text to send");
    run->add_option("--seed", run_opt.seed, "Random seed");
    run->add_option("--config", run_opt.config_file, "JSON configuration file")->check(CLI::ExistingFile);
    run->add_option("--backend", run_opt.backend, "analytical or mc")->check(CLI::IsMember({"analytical", "mc"}));
    run->add_option("--particles", run_opt.particles, "Particles per burst for the mc backend");
    run->add_option("--out", run_opt.out, "Report destination (default stdout)");
    run->add_option("--traces", traces_path, "Write concentration traces CSV (t,rx0,rx1)");
    run->add_option("--slots", slots_path, "Write per-slot diagnostics CSV");

    CommonOptions cmp_opt;
    auto* compare = app.add_subcommand("compare", "Send the same message in SISO and MIMO mode");
    compare->add_option("--message", cmp_opt.message, "Text to send")->required();
    compare->add_option("--seed", cmp_opt.seed, "Random seed")->required();
    compare->add_option("--config", cmp_opt.config_file, "JSON configuration file")->check(CLI::ExistingFile);
    compare->add_option("--out", cmp_opt.out, "Report destination (default stdout)");

    std::uint64_t val_particles = 1'000'000, val_seed = 1;
    unsigned val_seeds = 5, val_substeps = 9;
    std::string val_out;
    auto* validate = app.add_subcommand("validate-channel", "Check the particle channel against the closed form");
    validate->add_option("--particles", val_particles, "Particles per seed")->required();
    validate->add_option("--seed", val_seed, "First seed");
    validate->add_option("--seeds", val_seeds, "Number of seeds");
    validate->add_option("--substeps", val_substeps, "Occupancy sub-samples per grid step (odd)");
    validate->add_option("--out", val_out, "Report destination (default stdout)");

    CommonOptions sw_opt;
    std::string sigmas;
    unsigned reps = 1;
    auto* sweep = app.add_subcommand("sweep", "BER and CER against noise, both modes");
    sweep->add_option("--sigmas", sigmas, "Comma-separated noise levels, as fractions of the signal rise")
        ->required();
    sweep->add_option("--reps", reps, "Repetitions per level and mode")->required();
    sweep->add_option("--message", sw_opt.message, "Text to send");
    sweep->add_option("--seed", sw_opt.seed, "First seed");
    sweep->add_option("--config", sw_opt.config_file, "JSON configuration file")->check(CLI::ExistingFile);
    sweep->add_option("--out", sw_opt.out, "CSV destination (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            ConfigHandle cfg;
            load_config(cfg, run_opt);
            ReportHandle rep;
            check(molmimo_run(cfg.p, &rep.p));
            Owned json;
            check(molmimo_report_json(rep.p, &json.p));
            write_output(run_opt.out, json.str());
            if (!traces_path.empty()) {
                Owned csv;
                check(molmimo_report_traces_csv(rep.p, &csv.p));
                write_output(traces_path, csv.str());
            }
            if (!slots_path.empty()) {
                Owned csv;
                check(molmimo_report_slots_csv(rep.p, &csv.p));
                write_output(slots_path, csv.str());
            }
        } else if (*compare) {
            ConfigHandle cfg;
            load_config(cfg, cmp_opt);
            Owned json;
            check(molmimo_compare(cfg.p, &json.p));
            write_output(cmp_opt.out, json.str());
        } else if (*validate) {
            Owned json;
            int passed = 0;
            check(molmimo_validate_channel(val_particles, val_seed, val_seeds, val_substeps, &json.p, &passed));
            write_output(val_out, json.str());
            if (!passed) {
                std::cerr << "{\"error\":\"validation_failed\",\"detail\":\"particle channel outside tolerance\"}\n";
                return 3;
            }
        } else if (*sweep) {
            const auto levels = parse_levels(sigmas);
            ConfigHandle cfg;
            load_config(cfg, sw_opt);
            Owned csv;
            check(molmimo_sweep(cfg.p, levels.data(), levels.size(), reps, &csv.p));
            write_output(sw_opt.out, csv.str());
        }
    } catch (const Failure& f) {
        std::cerr << "{\"error\":\"" << molmimo_status_string(f.status) << "\",\"detail\":\"" << json_escape(f.detail)
                  << "\"}\n";
        return 1;
    }
    return 0;
}
