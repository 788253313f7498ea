// Command-line front end: simulate, reconstruct, mitigate, predict, pipeline.
//
// Exit codes: 0 success, 2 config error, 3 precondition violation, 4 I/O error.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "xtalk/xtalk.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir = ".";
    std::string data_path; // reconstruct/mitigate input override
    int threads = 0;
    unsigned long long seed = 0; // reserved for randomized test drivers
    std::string emitters;        // "", "1", "2", "both"
    std::string method;          // "", "geometry", "displacement", "none"
};

void add_common(CLI::App* cmd, CommonArgs& args, bool wants_data) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--output", args.output_dir, "output directory");
    cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)");
    cmd->add_option("--seed", args.seed, "seed for randomized test drivers (unused by pipelines)");
    cmd->add_option("--emitters", args.emitters, "override emitters: 1, 2 or both")
        ->check(CLI::IsMember({"1", "2", "both"}));
    cmd->add_option("--method", args.method, "override mitigation method")
        ->check(CLI::IsMember({"none", "geometry", "displacement"}));
    if (wants_data)
        cmd->add_option("--data", args.data_path, "data cube path (default <output>/<prefix>_data.f64)");
}

xtalk::ExperimentConfig load(const CommonArgs& args) {
    xtalk::ExperimentConfig cfg = xtalk::load_config(args.config_path);
    if (args.emitters == "1") cfg.emitters = {true, false};
    else if (args.emitters == "2") cfg.emitters = {false, true};
    else if (args.emitters == "both") cfg.emitters = {true, true};
    if (args.method == "none") cfg.method = xtalk::MitigationMethod::none;
    else if (args.method == "geometry") cfg.method = xtalk::MitigationMethod::geometry;
    else if (args.method == "displacement") cfg.method = xtalk::MitigationMethod::displacement;
    return cfg;
}

std::string default_data_path(const CommonArgs& args, const xtalk::ExperimentConfig& cfg) {
    if (!args.data_path.empty()) return args.data_path;
    return xtalk::detail::join_path(args.output_dir, cfg.output.prefix + "_data.f64");
}

void warn_if_clipped(const std::string& data_path) {
    const xtalk::DataCube cube = xtalk::read_datacube(data_path);
    if (cube.clipped_fraction > 0.0)
        std::fprintf(stderr, "warning: %.4g%% of scene splats fell outside the time window\n",
                     100.0 * cube.clipped_fraction);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multistatic SAR crosstalk simulation and artifact mitigation"};
    app.require_subcommand(1);

    CommonArgs sim_args, rec_args, mit_args, pred_args, pipe_args;
    CLI::App* sim = app.add_subcommand("simulate", "simulate radar data for the configured scene");
    add_common(sim, sim_args, false);
    CLI::App* rec = app.add_subcommand("reconstruct", "backproject a data cube into an image volume");
    add_common(rec, rec_args, true);
    CLI::App* mit = app.add_subcommand("mitigate", "reconstruct with artifact mitigation");
    add_common(mit, mit_args, true);
    CLI::App* pred = app.add_subcommand("predict", "closed-form artifact report for a point scatterer");
    add_common(pred, pred_args, false);
    CLI::App* pipe = app.add_subcommand("pipeline", "simulate, reconstruct, mitigate and predict");
    add_common(pipe, pipe_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const auto cfg = load(sim_args);
            const std::string path = xtalk::run_simulate(cfg, sim_args.output_dir, sim_args.threads);
            warn_if_clipped(path);
            std::printf("wrote %s\n", path.c_str());
        } else if (rec->parsed()) {
            const auto cfg = load(rec_args);
            const std::string path = xtalk::run_reconstruct(cfg, default_data_path(rec_args, cfg),
                                                            rec_args.output_dir, rec_args.threads);
            std::printf("wrote %s\n", path.c_str());
        } else if (mit->parsed()) {
            const auto cfg = load(mit_args);
            const auto paths = xtalk::run_mitigate(cfg, default_data_path(mit_args, cfg),
                                                   mit_args.output_dir, mit_args.threads);
            std::printf("wrote %s\nreport %s\n", paths.mitigated.c_str(),
                        paths.mitigate_report.c_str());
        } else if (pred->parsed()) {
            const auto cfg = load(pred_args);
            const std::string path = xtalk::run_predict(cfg, pred_args.output_dir);
            std::printf("wrote %s\n", path.c_str());
        } else if (pipe->parsed()) {
            const auto cfg = load(pipe_args);
            const auto paths = xtalk::run_pipeline(cfg, pipe_args.output_dir, pipe_args.threads);
            warn_if_clipped(paths.data);
            std::printf("data        %s\nimage       %s\nmitigated   %s\n", paths.data.c_str(),
                        paths.image.c_str(), paths.mitigated.c_str());
            if (!paths.predict_report.empty())
                std::printf("prediction  %s\n", paths.predict_report.c_str());
        }
    } catch (const xtalk::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const xtalk::SegmentViolation& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::PlaneIntersectsROI& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::DegenerateEmitterAxis& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::EmptyAperture& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::ZeroCovector& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::OutOfBounds& e) {
        std::fprintf(stderr, "precondition violation: %s\n", e.what());
        return 3;
    } catch (const xtalk::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    }
    return 0;
}
