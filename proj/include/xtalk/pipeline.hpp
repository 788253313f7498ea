#pragma once

#include <filesystem>
#include <string>

#include "xtalk/config.hpp"

namespace xtalk {

struct RunPaths {
    std::string data;
    std::string image;
    std::string mitigated;
    std::string predict_report;
    std::string mitigate_report;
};

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

inline BeamMask make_beam(const ExperimentConfig& cfg) {
    return build_beam_mask(cfg.geometry, cfg.beam_mode);
}

} // namespace detail

// Simulate the configured scene and write the data cube.
inline std::string run_simulate(const ExperimentConfig& cfg, const std::string& outdir,
                                int threads = 0) {
    validate_config(cfg);
    detail::ensure_dir(outdir);
    const TimeGrid tg = cfg.timegrid();
    const ScalarField3D scene = cfg.build_scene();
    const BeamMask beam = detail::make_beam(cfg);
    const DataCube cube =
        simulate(scene, cfg.geometry, tg, build_mute(cfg.geometry, tg, cfg.mute), beam,
                 cfg.emitters, threads);
    const std::string path = detail::join_path(outdir, cfg.output.prefix + "_data.f64");
    write_datacube(path, cube);
    return path;
}

namespace detail {

inline void export_slices(const ExperimentConfig& cfg, const ScalarField3D& image,
                          const std::string& outdir, const std::string& tag) {
    for (size_t s = 0; s < cfg.output.slices.size(); ++s) {
        const SliceSpec& spec = cfg.output.slices[s];
        char name[128];
        std::snprintf(name, sizeof(name), "%s_%s_slice_x%d_%g", cfg.output.prefix.c_str(),
                      tag.c_str(), spec.axis, spec.coordinate);
        write_slice(join_path(outdir, name), image, spec);
    }
}

} // namespace detail

// Backproject a data cube onto the configured grid and export slices.
inline std::string run_reconstruct(const ExperimentConfig& cfg, const std::string& data_path,
                                   const std::string& outdir, int threads = 0) {
    validate_config(cfg);
    detail::ensure_dir(outdir);
    const DataCube cube = read_datacube(data_path);
    const BeamMask beam = detail::make_beam(cfg);
    const std::vector<double> mute = build_mute(cube.geometry, cube.timegrid, cfg.mute);
    const ScalarField3D image =
        backproject(cube, cfg.grid, cfg.mitigation.adjoint_emitter, mute, beam, true, threads);
    const std::string path = detail::join_path(outdir, cfg.output.prefix + "_image.f32");
    write_volume(path, image);
    detail::export_slices(cfg, image, outdir, "image");
    return path;
}

// Apply the configured artifact mitigation and write the resulting volume
// plus a short text report.
inline RunPaths run_mitigate(const ExperimentConfig& cfg, const std::string& data_path,
                             const std::string& outdir, int threads = 0) {
    validate_config(cfg);
    detail::ensure_dir(outdir);
    const DataCube cube = read_datacube(data_path);
    const BeamMask beam = detail::make_beam(cfg);
    const std::vector<double> acq_mute = build_mute(cube.geometry, cube.timegrid, cfg.mute);

    RunPaths out;
    out.data = data_path;
    std::string report;

    ScalarField3D image(cfg.grid);
    if (cfg.method == MitigationMethod::geometry) {
        std::vector<double> geo_mute;
        if (const auto* slab = std::get_if<SlabRoi>(&cfg.mitigation.roi))
            geo_mute = geometry_mute_slab(cube.geometry, cfg.grid, cube.timegrid, slab->H,
                                          cfg.mitigation.mute_policy, threads);
        else {
            const auto& s = std::get<SphereRoi>(cfg.mitigation.roi);
            geo_mute = geometry_mute_sphere(cube.geometry, cfg.grid, cube.timegrid, s.center, s.R,
                                            cfg.mitigation.mute_policy, threads);
        }
        double retained = 0.0;
        std::vector<double> mute(acq_mute.size());
        for (size_t i = 0; i < mute.size(); ++i) {
            mute[i] = acq_mute[i] * geo_mute[i];
            retained += geo_mute[i];
        }
        retained /= static_cast<double>(geo_mute.size());
        image = backproject(cube, cfg.grid, cfg.mitigation.adjoint_emitter, mute, beam, true,
                            threads);
        char line[128];
        std::snprintf(line, sizeof(line), "method = geometry\nretained_data_fraction = %.6f\n",
                      retained);
        report = line;
    } else if (cfg.method == MitigationMethod::displacement) {
        image = backproject(cube, cfg.grid, cfg.mitigation.adjoint_emitter, acq_mute, beam, true,
                            threads);
        image = displace_artifacts(image, cube.geometry, cube.timegrid, acq_mute, beam,
                                   cfg.mitigation.displacement_iterations, cfg.mitigation.roi,
                                   cfg.symbols, threads);
        report = "method = displacement\niterations = " +
                 std::to_string(cfg.mitigation.displacement_iterations) + "\n";
        // Predicted artifact orbit from the scene reference point, mid-track.
        if (cfg.scene.type == SceneType::gaussian || cfg.scene.type == SceneType::point) {
            const Vec3 gamma = cfg.geometry.receiver(cfg.geometry.r1_range.count / 2,
                                                     cfg.geometry.r2_range.count / 2);
            const int steps = static_cast<int>(
                std::min<std::int64_t>(16, std::int64_t{1} << cfg.mitigation.displacement_iterations));
            const auto orbit = iterate_artifact(cfg.scene.center, gamma, cfg.geometry, steps);
            for (size_t k = 0; k < orbit.size(); ++k) {
                char line[160];
                std::snprintf(line, sizeof(line),
                              "orbit_%zu = %.6g %.6g %.6g  # c=%.6g |z-x|=%.6g\n", k + 1,
                              orbit[k].z.x1, orbit[k].z.x2, orbit[k].z.x3, orbit[k].c,
                              norm(orbit[k].z - cfg.scene.center));
                report += line;
            }
        }
    } else {
        image = backproject(cube, cfg.grid, cfg.mitigation.adjoint_emitter, acq_mute, beam, true,
                            threads);
        report = "method = none\n";
    }

    out.mitigated = detail::join_path(outdir, cfg.output.prefix + "_mitigated.f32");
    write_volume(out.mitigated, image);
    detail::export_slices(cfg, image, outdir, "mitigated");
    out.mitigate_report = detail::join_path(outdir, cfg.output.prefix + "_mitigate_report.txt");
    detail::write_file(out.mitigate_report, report);
    return out;
}

// Closed-form artifact prediction for the scene's point-like scatterer:
// artifact surface, scale factors, slab bounds, plane side and critical
// angles, one row per receiver.
inline std::string run_predict(const ExperimentConfig& cfg, const std::string& outdir,
                               int threads = 0) {
    (void)threads;
    validate_config(cfg);
    if (cfg.scene.type != SceneType::gaussian && cfg.scene.type != SceneType::point)
        throw ConfigError("predict needs a scene with a point-like scatterer (gaussian or point)");
    detail::ensure_dir(outdir);

    const Vec3 x = cfg.scene.center;
    const AcquisitionGeometry& geo = cfg.geometry;
    std::string text;
    {
        char head[256];
        std::snprintf(head, sizeof(head),
                      "# artifact prediction for scatterer x = (%.12g, %.12g, %.12g)\n"
                      "# pi_side(x) = %.12g\n"
                      "# columns: i1 i2 z1 z2 z3 c gamma gamma_tilde gamma_bar theta_c tt_residual\n",
                      x.x1, x.x2, x.x3, plane_pi_side(x, geo));
        text = head;
    }

    bool theta_ok = true;
    for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
        for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
            const Vec3 gamma = geo.receiver(i1, i2);
            ArtifactPoint ap;
            try {
                ap = artifact_location(x, gamma, geo);
            } catch (const SegmentViolation& e) {
                throw SegmentViolation(std::string(e.what()) + " (receiver index " +
                                       std::to_string(i1) + "," + std::to_string(i2) + ")");
            }
            const double g = ap.c * (gamma.x3 - x.x3);
            const GammaBounds gb = gamma_bounds(x, gamma, geo);
            std::string theta = "undef"; // vertically stacked emitters: no ground trace
            if (theta_ok) {
                try {
                    theta = detail::format_double(critical_angle_at(gamma, geo).theta_c);
                } catch (const DegenerateEmitterAxis&) {
                    theta_ok = false;
                }
            }
            const double total = bistatic_range(x, gamma, geo.e2);
            const double residual =
                std::abs(bistatic_range(ap.z, gamma, geo.e1) - total) / total;
            char line[320];
            std::snprintf(line, sizeof(line),
                          "%d %d %.12g %.12g %.12g %.12g %.12g %.12g %s %s %.3g\n", i1, i2,
                          ap.z.x1, ap.z.x2, ap.z.x3, ap.c, g, gb.tilde,
                          gb.bar ? detail::format_double(*gb.bar).c_str() : "undef", theta.c_str(),
                          residual);
            text += line;
        }

    const std::string path = detail::join_path(outdir, cfg.output.prefix + "_predict.txt");
    detail::write_file(path, text);
    return path;
}

// All four stages chained on one config.
inline RunPaths run_pipeline(const ExperimentConfig& cfg, const std::string& outdir,
                             int threads = 0) {
    RunPaths paths;
    paths.data = run_simulate(cfg, outdir, threads);
    paths.image = run_reconstruct(cfg, paths.data, outdir, threads);
    const RunPaths m = run_mitigate(cfg, paths.data, outdir, threads);
    paths.mitigated = m.mitigated;
    paths.mitigate_report = m.mitigate_report;
    if (cfg.scene.type == SceneType::gaussian || cfg.scene.type == SceneType::point)
        paths.predict_report = run_predict(cfg, outdir, threads);
    return paths;
}

} // namespace xtalk
