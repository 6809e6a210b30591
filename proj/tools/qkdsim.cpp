// Command-line front end: deterministic simulation runs that emit plain-text
// data files plus a JSON manifest from which any run can be reproduced
// byte-for-byte.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkdsim/analysis.hpp"
#include "qkdsim/config_io.hpp"
#include "qkdsim/manifest.hpp"
#include "qkdsim/optimize.hpp"
#include "qkdsim/version.hpp"

namespace fs = std::filesystem;
using namespace qkdsim;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += g17(v[i]);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        out.push_back(detail::parse_double(key, item));
    }
    if (out.empty()) throw validation_error({"option " + key + ": empty list"});
    return out;
}

// Writes one output file and records its digest in the manifest.
void emit(run_manifest& man, const fs::path& dir, const std::string& name,
          const std::string& content) {
    write_text_file((dir / name).string(), content);
    man.outputs[name] = sha256_hex(content);
}

void finish_run(run_manifest& man, const fs::path& dir) {
    std::string name = man.command + "_manifest.json";
    write_text_file((dir / name).string(), manifest_to_json(man));
    std::cout << man.command << ": wrote";
    for (const auto& [f, _] : man.outputs) std::cout << " " << f;
    std::cout << " " << name << " in " << dir.string() << "\n";
}

const char* class_label(int k) { return k == 0 ? "signal" : "decoy"; }

// ---- subcommand payloads -------------------------------------------------

run_manifest do_response(const experiment_config& cfg, const std::vector<double>& thetas,
                         int phase_points, const fs::path& out) {
    if (phase_points < 2) throw validation_error({"response: need at least two phase points"});
    std::ostringstream f;
    f << "# qkdsim " << version_string << " response\n";
    f << "# normalized detection probability after the polarization analyzer\n";
    f << "# columns: theta_rad dphi_rad response\n";
    const double lo = -2.0 * std::numbers::pi, hi = 2.0 * std::numbers::pi;
    for (double th : thetas) {
        for (int i = 0; i < phase_points; ++i) {
            double dphi = lo + (hi - lo) * i / (phase_points - 1);
            f << g17(th) << " " << g17(dphi) << " " << g17(optical_response(dphi, th)) << "\n";
        }
    }
    run_manifest man;
    man.command = "response";
    man.config = config_to_map(cfg);
    man.params["theta_list"] = join_doubles(thetas);
    man.params["phase_points"] = std::to_string(phase_points);
    emit(man, out, "response.dsv", f.str());
    return man;
}

run_manifest do_malus(const experiment_config& cfg, const std::vector<double>& angles,
                      const fs::path& out) {
    sweep_result sw = malus_sweep(angles, cfg.pulses, cfg, cfg.seed);
    std::ostringstream f;
    f << "# qkdsim " << version_string << " malus\n";
    f << "# decoy/signal intensity ratio vs analyzer angle, " << cfg.pulses
      << " pulses per angle\n";
    f << "# measured is dark-subtracted and inverted through the Poissonian click law\n";
    f << "# columns: theta_rad predicted measured sigma clicks_signal clicks_decoy\n";
    for (const auto& p : sw.points)
        f << g17(p.theta) << " " << g17(p.predicted) << " " << g17(p.measured) << " "
          << g17(p.sigma) << " " << p.clicks_signal << " " << p.clicks_decoy << "\n";
    run_manifest man;
    man.command = "malus";
    man.config = config_to_map(cfg);
    man.params["angles"] = join_doubles(angles);
    emit(man, out, "malus.dsv", f.str());
    return man;
}

run_manifest do_patterning(const experiment_config& cfg, std::uint64_t pattern_length,
                           std::uint64_t window, const fs::path& out) {
    rng_stream pat_rng = rng_stream::derive(cfg.seed, 2001);
    auto pattern = pseudorandom_pattern(pattern_length, cfg.transmitter.p_mu, pat_rng);
    monitor_result mon = run_intensity_monitor(cfg, pattern, cfg.pulses, cfg.seed);
    patterning_report rep = patterning_stats(mon);
    histogram_result hist = slot_histogram(mon, pattern_length,
                                           std::min<std::uint64_t>(window, pattern_length));

    std::ostringstream f;
    f << "# qkdsim " << version_string << " patterning\n";
    f << "# intensity-transition statistics from the monitor detector, " << cfg.pulses
      << " slots, pattern period " << pattern_length << "\n";
    f << "# c: transition mean normalized to the signal-class mean\n";
    f << "# d: relative deviation from the current-class mean\n";
    f << "# columns: prev cur slots mean std_err c sigma_c d sigma_d\n";
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            const auto& t = rep.transition[p][q];
            f << class_label(p) << " " << class_label(q) << " " << t.slots << " " << g17(t.mean)
              << " " << g17(t.std_err) << " " << g17(t.c) << " " << g17(t.sigma_c) << " "
              << g17(t.d) << " " << g17(t.sigma_d) << "\n";
        }

    std::ostringstream h;
    h << "# qkdsim " << version_string << " patterning histogram\n";
    h << "# per-position mean clicks across " << hist.repetitions << " pattern repetitions\n";
    for (int k = 0; k < 2; ++k)
        h << "# class " << class_label(k) << ": level " << g17(hist.class_level[k]) << " band "
          << g17(hist.class_band[k]) << "\n";
    h << "# columns: position class mean std_err\n";
    for (const auto& p : hist.positions)
        h << p.position << " " << class_label(p.klass) << " " << g17(p.mean) << " "
          << g17(p.std_err) << "\n";

    run_manifest man;
    man.command = "patterning";
    man.config = config_to_map(cfg);
    man.params["pattern_length"] = std::to_string(pattern_length);
    man.params["window"] = std::to_string(window);
    emit(man, out, "patterning_transitions.dsv", f.str());
    emit(man, out, "patterning_histogram.dsv", h.str());
    return man;
}

run_manifest do_qkd(const experiment_config& cfg, const fs::path& out) {
    auto windows = run_aggregate_windows(cfg, cfg.duration_s, cfg.window_s, cfg.seed);
    auto blocks = segment_blocks(windows, cfg.block_bits, cfg.transmitter, cfg.security,
                                 cfg.duration_s);

    std::ostringstream w;
    w << "# qkdsim " << version_string << " qkd\n";
    w << "# per-window sifted detections and error fractions\n";
    w << "# columns: t0_s t1_s sifted_z sifted_x qber_z qber_x\n";
    count_table total;
    for (const auto& win : windows) {
        total += win.table;
        double qz = std::numeric_limits<double>::quiet_NaN(), qx = qz;
        try {
            qber_result q = qber_from_table(win.table);
            qz = q.q_z;
            qx = q.q_x;
        } catch (const empty_basis_error&) {
        }
        w << g17(win.t0) << " " << g17(win.t1) << " " << win.table.sifted_z_total() << " "
          << win.table.sifted_x_total() << " " << g17(qz) << " " << g17(qx) << "\n";
    }

    std::ostringstream b;
    b << "# qkdsim " << version_string << " qkd blocks\n";
    b << "# finite-key analysis per block of >= " << g17(cfg.block_bits)
      << " sifted key-basis bits\n";
    b << "# skr normalizes extractable bits by the full run duration; skr_inst by the block's\n";
    b << "# own wall-clock span\n";
    b << "# columns: block t0_s t1_s n_z q_z q_x s0 s1 phi_z lambda_ec lambda_c lambda_sec ell "
         "skr skr_asymptotic skr_inst\n";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& k = blocks[i];
        const auto& r = k.report;
        double span = k.t1 - k.t0;
        b << i << " " << g17(k.t0) << " " << g17(k.t1) << " " << g17(r.n_z) << " " << g17(r.q_z)
          << " " << g17(r.q_x) << " " << g17(r.s0) << " " << g17(r.s1) << " " << g17(r.phi_z)
          << " " << g17(r.lambda_ec) << " " << g17(r.lambda_c) << " " << g17(r.lambda_sec) << " "
          << g17(r.ell) << " " << g17(r.skr) << " " << g17(r.skr_asymptotic) << " "
          << g17(span > 0 ? r.ell / span : 0.0) << "\n";
    }

    std::ostringstream s;
    s << "# qkdsim " << version_string << " qkd summary\n";
    qber_result q = qber_from_table(total);
    s << "duration_s " << g17(cfg.duration_s) << "\n";
    s << "windows " << windows.size() << "\n";
    s << "blocks " << blocks.size() << "\n";
    s << "total_sifted_z " << total.sifted_z_total() << "\n";
    s << "total_sifted_x " << total.sifted_x_total() << "\n";
    s << "qber_z " << g17(q.q_z) << "\n";
    s << "qber_x " << g17(q.q_x) << "\n";
    double mean_skr = 0, mean_ratio = 0;
    for (const auto& k : blocks) {
        mean_skr += k.report.skr;
        mean_ratio += k.report.skr_asymptotic > 0 ? k.report.skr / k.report.skr_asymptotic : 0;
    }
    if (!blocks.empty()) {
        mean_skr /= blocks.size();
        mean_ratio /= blocks.size();
    }
    s << "mean_block_skr " << g17(mean_skr) << "\n";
    s << "mean_finite_to_asymptotic " << g17(mean_ratio) << "\n";

    run_manifest man;
    man.command = "qkd";
    man.config = config_to_map(cfg);
    emit(man, out, "qkd_windows.dsv", w.str());
    emit(man, out, "qkd_blocks.dsv", b.str());
    emit(man, out, "qkd_summary.txt", s.str());
    return man;
}

run_manifest do_optimize(const experiment_config& cfg, const std::vector<double>& losses,
                         const fs::path& out) {
    optimize_result r = optimize_decoy(cfg, losses);

    auto row = [](std::ostringstream& f, const optimize_point& p) {
        f << g17(p.loss_db) << " " << g17(p.mu) << " " << g17(p.nu) << " " << g17(p.ratio) << " "
          << g17(p.p_mu) << " " << g17(p.p_z) << " " << g17(p.skr) << " "
          << g17(p.skr_asymptotic) << "\n";
    };
    std::ostringstream f;
    f << "# qkdsim " << version_string << " optimize surface\n";
    f << "# finite-key rate on expected counts over the parameter grid\n";
    f << "# loss_db is the total source-to-detection attenuation\n";
    f << "# columns: loss_db mu nu ratio p_mu p_z skr skr_asymptotic\n";
    for (const auto& p : r.surface) row(f, p);

    std::ostringstream g;
    g << "# qkdsim " << version_string << " optimize best\n";
    g << "# grid optimum per loss\n";
    g << "# columns: loss_db mu nu ratio p_mu p_z skr skr_asymptotic\n";
    for (const auto& p : r.best) row(g, p);

    run_manifest man;
    man.command = "optimize";
    man.config = config_to_map(cfg);
    man.params["losses"] = join_doubles(losses);
    emit(man, out, "optimize_surface.dsv", f.str());
    emit(man, out, "optimize_best.dsv", g.str());
    return man;
}

// Re-executes the manifest's command with its recorded config and parameters,
// then verifies the regenerated files digest-match the record.
int do_rerun(const std::string& manifest_path, const fs::path& out) {
    run_manifest m = load_manifest(manifest_path);
    experiment_config cfg = config_from_map(m.config);
    auto param = [&](const char* k) -> const std::string& {
        auto it = m.params.find(k);
        if (it == m.params.end())
            throw validation_error({std::string("manifest: missing param '") + k + "'"});
        return it->second;
    };
    run_manifest redo;
    if (m.command == "response")
        redo = do_response(cfg, parse_double_list("theta_list", param("theta_list")),
                           static_cast<int>(detail::parse_u64("phase_points",
                                                              param("phase_points"))),
                           out);
    else if (m.command == "malus")
        redo = do_malus(cfg, parse_double_list("angles", param("angles")), out);
    else if (m.command == "patterning")
        redo = do_patterning(cfg, detail::parse_u64("pattern_length", param("pattern_length")),
                             detail::parse_u64("window", param("window")), out);
    else if (m.command == "qkd")
        redo = do_qkd(cfg, out);
    else if (m.command == "optimize")
        redo = do_optimize(cfg, parse_double_list("losses", param("losses")), out);
    else
        throw validation_error({"manifest: unknown command '" + m.command + "'"});

    finish_run(redo, out);
    bool ok = true;
    for (const auto& [name, digest] : m.outputs) {
        auto it = redo.outputs.find(name);
        if (it == redo.outputs.end() || it->second != digest) {
            std::cerr << "rerun: digest mismatch for " << name << "\n";
            ok = false;
        }
    }
    if (!ok) return 4;
    std::cout << "rerun: all " << m.outputs.size() << " outputs match the manifest\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decoy-state polarization source simulator"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", mode_str;
    std::vector<std::string> sets;
    std::uint64_t seed = 0, pulses = 0;
    bool have_seed = false, have_pulses = false, have_loss = false, have_duration = false,
         have_theta = false;
    double loss_db = 0, duration_s = 0, theta = 0;

    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--set", sets, "override one config key, key=value")->take_all();
    app.add_option("--seed", seed, "random seed")->each([&](const std::string&) {
        have_seed = true;
    });
    app.add_option("--pulses", pulses, "Monte Carlo slots")->each([&](const std::string&) {
        have_pulses = true;
    });
    app.add_option("--loss-db", loss_db, "channel attenuation, dB")
        ->each([&](const std::string&) { have_loss = true; });
    app.add_option("--duration-s", duration_s, "run duration, seconds")
        ->each([&](const std::string&) { have_duration = true; });
    app.add_option("--theta", theta, "intensity-setting waveplate angle, rad")
        ->each([&](const std::string&) { have_theta = true; });
    app.add_option("--mode", mode_str, "modulator bias: stationary or quadrature");

    auto* c_response = app.add_subcommand("response", "analyzer response vs modulation phase");
    c_response->fallthrough();
    std::string theta_list;
    int phase_points = 401;
    c_response->add_option("--theta-list", theta_list, "comma list of analyzer angles, rad");
    c_response->add_option("--phase-points", phase_points, "grid points across [-2pi, 2pi]")
        ->capture_default_str();

    auto* c_malus = app.add_subcommand("malus", "measured intensity ratio vs analyzer angle");
    c_malus->fallthrough();
    std::string angles_str;
    c_malus->add_option("--angles", angles_str, "comma list of analyzer angles, rad");

    auto* c_patterning =
        app.add_subcommand("patterning", "intensity-transition statistics from the monitor");
    c_patterning->fallthrough();
    std::uint64_t pattern_length = 1024, window = 50;
    c_patterning->add_option("--pattern-length", pattern_length, "pattern period, slots")
        ->capture_default_str();
    c_patterning->add_option("--window", window, "histogram positions to emit")
        ->capture_default_str();

    auto* c_qkd = app.add_subcommand("qkd", "timed run with finite-key analysis per block");
    c_qkd->fallthrough();
    double window_s_opt = 0, block_bits_opt = 0;
    bool have_window_s = false, have_block_bits = false;
    c_qkd->add_option("--window-s", window_s_opt, "time-series window, seconds")
        ->each([&](const std::string&) { have_window_s = true; });
    c_qkd->add_option("--block-bits", block_bits_opt, "sifted bits per key block")
        ->each([&](const std::string&) { have_block_bits = true; });

    auto* c_optimize = app.add_subcommand("optimize", "decoy-parameter grid search over losses");
    c_optimize->fallthrough();
    std::string losses_str = "30,40,50,60";
    c_optimize->add_option("--losses", losses_str, "comma list of total attenuations, dB")
        ->capture_default_str();

    auto* c_rerun = app.add_subcommand("rerun", "reproduce a run from its manifest");
    c_rerun->fallthrough();
    std::string manifest_path;
    c_rerun->add_option("--from-manifest", manifest_path, "manifest JSON written by a run")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        fs::path out(out_dir);
        fs::create_directories(out);

        if (app.got_subcommand(c_rerun)) return do_rerun(manifest_path, out);

        experiment_config cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        for (const auto& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw validation_error({"--set expects key=value, got '" + kv + "'"});
            set_config_field(cfg, detail::trim(kv.substr(0, eq)),
                             detail::trim(kv.substr(eq + 1)));
        }
        if (have_seed) cfg.seed = seed;
        if (have_pulses) cfg.pulses = pulses;
        if (have_loss) cfg.channel.loss_db = loss_db;
        if (have_duration) cfg.duration_s = duration_s;
        if (have_theta) cfg.transmitter.theta = theta;
        if (!mode_str.empty()) set_config_field(cfg, "transmitter.mode", mode_str);
        if (have_window_s) cfg.window_s = window_s_opt;
        if (have_block_bits) cfg.block_bits = block_bits_opt;
        validate_or_throw(cfg);

        run_manifest man;
        if (app.got_subcommand(c_response)) {
            std::vector<double> thetas = theta_list.empty()
                                             ? std::vector<double>{cfg.transmitter.theta}
                                             : parse_double_list("--theta-list", theta_list);
            man = do_response(cfg, thetas, phase_points, out);
        } else if (app.got_subcommand(c_malus)) {
            std::vector<double> angles;
            if (angles_str.empty())
                for (int j = 1; j <= 12; ++j)
                    angles.push_back(std::numbers::pi / 4 * j / 13.0);
            else
                angles = parse_double_list("--angles", angles_str);
            man = do_malus(cfg, angles, out);
        } else if (app.got_subcommand(c_patterning)) {
            man = do_patterning(cfg, pattern_length, window, out);
        } else if (app.got_subcommand(c_qkd)) {
            man = do_qkd(cfg, out);
        } else if (app.got_subcommand(c_optimize)) {
            man = do_optimize(cfg, parse_double_list("--losses", losses_str), out);
        }
        finish_run(man, out);
        return 0;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
