#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bevlat/config.hpp"
#include "bevlat/defense.hpp"
#include "bevlat/errors.hpp"
#include "bevlat/experiment.hpp"
#include "bevlat/json_io.hpp"
#include "bevlat/report.hpp"
#include "bevlat/scenario.hpp"

namespace fs = std::filesystem;
using namespace bevlat;

namespace {

fs::path report_dir() {
    const char* env = std::getenv("BEVLAT_REPORT_DIR");
    return env && *env ? fs::path(env) : fs::path("reports");
}

fs::path output_path(const std::string& flag, const std::string& fallback) {
    return flag.empty() ? report_dir() / fallback : fs::path(flag);
}

fs::path with_extension(fs::path p, const std::string& ext) { return p.replace_extension(ext); }

struct SceneOptions {
    std::string scenario_path;
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

void add_scene_options(CLI::App* cmd, SceneOptions& o) {
    cmd->add_option("--scenario", o.scenario_path, "Scenario JSON written by `gen`");
    cmd->add_option("--config", o.config_path, "Experiment config JSON");
    cmd->add_option("--seed", o.seed, "Generate the scenario from this seed instead of --scenario");
}

ExperimentConfig load_experiment_config(const SceneOptions& o) {
    ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.seed) cfg.scenario.seed = *o.seed;
    cfg.validate();
    return cfg;
}

Scenario load_scene(const SceneOptions& o, const ExperimentConfig& cfg) {
    if (!o.scenario_path.empty()) {
        if (o.seed) throw ValidationError("--scenario and --seed are mutually exclusive");
        return read_json_file(o.scenario_path).get<Scenario>();
    }
    const ScenarioParams& p = cfg.scenario;
    return generate_scenario(p.seed, p.agents, p.objects, p.frames);
}

std::string default_attack_name(ObjectiveKind kind, bool warp) {
    return "attack_" + objective_name(kind) + (warp ? "" : "_nowarp") + ".json";
}

int run_gen(std::uint64_t seed, int agents, int objects, int frames, const std::string& out) {
    const Scenario s = generate_scenario(seed, agents, objects, frames);
    const fs::path path = output_path(out, "scenario.json");
    write_json_file(path, Json(s));
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

int run_attack(const SceneOptions& so, const std::string& baseline, bool no_warp, const std::string& out) {
    const ExperimentConfig cfg = load_experiment_config(so);
    const Scenario s = load_scene(so, cfg);
    ExperimentSetup setup;
    setup.options.objective = parse_objective(baseline);
    setup.options.warp = !no_warp;
    setup.options.attack = cfg.attack;
    setup.post = cfg.post;
    setup.timing = cfg.timing;
    setup.asr_threshold = cfg.asr_threshold;
    const RunReport report = run_attack_experiment(s, setup);

    const fs::path path = output_path(out, default_attack_name(setup.options.objective, setup.options.warp));
    write_json_file(path, Json(report));
    write_text_file(with_extension(path, ".csv"), run_report_csv(report));
    std::cout << summary_table(std::span(&report, 1)) << "wrote " << path.string() << '\n';
    return 0;
}

int run_bench(const std::vector<std::string>& inputs, const std::string& svg_dir) {
    std::vector<RunReport> reports;
    for (const std::string& p : inputs) reports.push_back(read_json_file(p).get<RunReport>());
    std::cout << summary_table(reports);
    const fs::path dir = svg_dir.empty() ? report_dir() : fs::path(svg_dir);
    write_text_file(dir / "latency_boxplot.svg", latency_boxplot_svg(reports));
    const std::vector<double> thresholds = asr_thresholds(reports);
    write_text_file(dir / "asr_curve.svg", asr_curve_svg(reports, thresholds));
    std::cout << "wrote " << (dir / "latency_boxplot.svg").string() << " and " << (dir / "asr_curve.svg").string()
              << '\n';
    return 0;
}

int run_ablate(const SceneOptions& so, const std::string& baseline, bool no_warp, const std::string& out) {
    const ExperimentConfig cfg = load_experiment_config(so);
    const Scenario s = load_scene(so, cfg);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const AttackOptions options{parse_objective(baseline), !no_warp, cfg.attack};
    const std::vector<FrameInputs> frames = craft_all_frames(s, head, options);
    const AblationReport report = sweep_postprocess(frames, head, s.anchors, cfg.ablation, cfg.timing);

    const fs::path path = output_path(out, "ablation.json");
    write_json_file(path, Json(report));
    write_text_file(with_extension(path, ".csv"), ablation_csv(report));
    write_text_file(with_extension(path, ".svg"), ablation_heatmap_svg(report));
    std::cout << ablation_csv(report) << "wrote " << path.string() << '\n';
    return 0;
}

int run_defend(const SceneOptions& so, const std::string& baseline, std::optional<int> iterations,
               std::optional<int> subset, std::optional<double> iou, const std::string& out) {
    ExperimentConfig cfg = load_experiment_config(so);
    if (iterations) cfg.consensus.iterations = *iterations;
    if (subset) cfg.consensus.subset_size = *subset;
    if (iou) cfg.consensus.match_iou = *iou;
    cfg.consensus.validate();
    const Scenario s = load_scene(so, cfg);
    const HeadWeights head = synth_head_weights(s.anchors, s.grid, s.model);
    const AttackOptions options{parse_objective(baseline), true, cfg.attack};
    const std::vector<FrameInputs> frames = craft_all_frames(s, head, options);
    const DefenseReport report = evaluate_defense(frames, head, s.anchors, cfg.post, cfg.consensus, cfg.timing);

    const fs::path path = output_path(out, "defense.json");
    write_json_file(path, Json(report));
    write_text_file(with_extension(path, ".csv"), defense_csv(report));
    std::cout << "consensus defense, " << cfg.consensus.iterations << " sampling iterations\n"
              << "  mean latency amplification: " << report.mean_amplification << "x\n"
              << "  mean AP benign / attacked / defended: " << report.mean_ap_benign << " / "
              << report.mean_ap_attacked << " / " << report.mean_ap_defended << '\n'
              << "wrote " << path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BEV cooperative-perception latency attack toolkit"};
    app.require_subcommand(1);

    std::uint64_t gen_seed = 42;
    int gen_agents = 2, gen_objects = 3, gen_frames = 20;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a scenario JSON");
    gen->add_option("--seed", gen_seed, "Scenario seed")->capture_default_str();
    gen->add_option("--agents", gen_agents, "Agent count (victim and attacker included)")->capture_default_str();
    gen->add_option("--objects", gen_objects, "Object count")->capture_default_str();
    gen->add_option("--frames", gen_frames, "Frame count")->capture_default_str();
    gen->add_option("--out", gen_out, "Output path (default: $BEVLAT_REPORT_DIR/scenario.json)");

    SceneOptions attack_scene;
    std::string attack_baseline = "cp-freezer", attack_out;
    bool attack_no_warp = false;
    auto* attack = app.add_subcommand("attack", "Run the per-frame online attack and write a run report");
    add_scene_options(attack, attack_scene);
    attack->add_option("--baseline", attack_baseline, "none | pgd | prior-art | cp-freezer (alias: latency)")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "pgd", "prior-art", "cp-freezer", "latency"}));
    attack->add_flag("--no-warp", attack_no_warp, "Optimise on the stale features without warping");
    attack->add_option("--out", attack_out, "Report path; a CSV is written next to it");

    std::vector<std::string> bench_reports;
    std::string bench_svg;
    auto* bench = app.add_subcommand("bench", "Tabulate run reports and draw latency and ASR charts");
    bench->add_option("--report", bench_reports, "Run report JSON (repeatable)")->required();
    bench->add_option("--svg", bench_svg, "Directory for the SVG charts (default: $BEVLAT_REPORT_DIR)");

    SceneOptions ablate_scene;
    std::string ablate_baseline = "cp-freezer", ablate_out;
    bool ablate_no_warp = false;
    auto* ablate = app.add_subcommand("ablate", "Sweep post-processing settings on attacked frames");
    add_scene_options(ablate, ablate_scene);
    ablate->add_option("--baseline", ablate_baseline, "Attack to evaluate")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "pgd", "prior-art", "cp-freezer", "latency"}));
    ablate->add_flag("--no-warp", ablate_no_warp, "Optimise on the stale features without warping");
    ablate->add_option("--out", ablate_out, "Report path; CSV and SVG are written next to it");

    SceneOptions defend_scene;
    std::string defend_baseline = "cp-freezer", defend_out;
    std::optional<int> defend_iterations, defend_subset;
    std::optional<double> defend_iou;
    auto* defend = app.add_subcommand("defend", "Evaluate the sampling-consensus defense on attacked frames");
    add_scene_options(defend, defend_scene);
    defend->add_option("--baseline", defend_baseline, "Attack to defend against")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "pgd", "prior-art", "cp-freezer", "latency"}));
    defend->add_option("--iterations", defend_iterations, "Sampling iterations (config default 8)");
    defend->add_option("--subset-size", defend_subset, "Collaborators per sampled subset (config default 1)");
    defend->add_option("--consensus-iou", defend_iou, "IoU for matching detections (config default 0.5)");
    defend->add_option("--out", defend_out, "Report path; a CSV is written next to it");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return run_gen(gen_seed, gen_agents, gen_objects, gen_frames, gen_out);
        if (attack->parsed()) return run_attack(attack_scene, attack_baseline, attack_no_warp, attack_out);
        if (bench->parsed()) return run_bench(bench_reports, bench_svg);
        if (ablate->parsed()) return run_ablate(ablate_scene, ablate_baseline, ablate_no_warp, ablate_out);
        if (defend->parsed())
            return run_defend(defend_scene, defend_baseline, defend_iterations, defend_subset, defend_iou,
                              defend_out);
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const StructuralError& e) {
        std::cerr << "shape error: " << e.what() << '\n';
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error in " << e.stage() << ": " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
