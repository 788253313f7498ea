#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "xtalk/mitigation.hpp"

using namespace xtalk;

namespace {

// Emitters stacked above the track: every artifact lands on the receiver ray
// below the scene, pi stays far overhead.
AcquisitionGeometry stacked_geo() {
    AcquisitionGeometry geo;
    geo.e1 = {0.0, 0.0, 11.0};
    geo.e2 = {0.0, 0.0, 13.0};
    geo.track_height = 6.0;
    geo.r1_range = {-2.0, 2.0, 6};
    geo.r2_range = {-2.0, 2.0, 6};
    return geo;
}

GridSpec small_grid(double z_lo = -1.5, double z_hi = 2.5, int n3 = 21) {
    GridSpec g;
    g.origin = {-1.5, -1.5, z_lo};
    g.spacing = {0.15, 0.15, (z_hi - z_lo) / (n3 - 1)};
    g.n1 = g.n2 = 21;
    g.n3 = n3;
    return g;
}

double energy(const ScalarField3D& f) {
    double e = 0.0;
    for (double v : f.values) e += v * v;
    return e;
}

} // namespace

TEST_CASE("slab mute keeps everything when artifacts are already below ground") {
    // Strong scale factor: Gamma > h for all pairs, nothing to omit.
    AcquisitionGeometry geo;
    geo.e1 = {0.0, 0.0, 4.0};
    geo.e2 = {30.0, 0.0, 0.0};
    geo.track_height = 5.0;
    geo.r1_range = {-2.0, 2.0, 4};
    geo.r2_range = {-2.0, 2.0, 4};
    GridSpec grid;
    grid.origin = {-1.0, -1.0, 0.2};
    grid.spacing = {0.2, 0.2, 0.2};
    grid.n1 = grid.n2 = 11;
    grid.n3 = 5;
    const TimeGrid tg = auto_time_grid(grid, geo, 96);
    for (int i1 = 0; i1 < 4; ++i1)
        for (int i2 = 0; i2 < 4; ++i2)
            for (std::int64_t vox : {grid.index(0, 0, 0), grid.index(10, 10, 4), grid.index(5, 5, 2)}) {
                const int i = static_cast<int>(vox % grid.n1);
                const int j = static_cast<int>((vox / grid.n1) % grid.n2);
                const int k = static_cast<int>(vox / (grid.n1 * grid.n2));
                REQUIRE(gamma_fn(grid.position(i, j, k), geo.receiver(i1, i2), geo) > geo.track_height);
            }
    const auto mute = geometry_mute_slab(geo, grid, tg, 1.0);
    for (double v : mute) CHECK(v == 1.0);
}

TEST_CASE("slab mute guarantees artifacts leave the slab for retained bins") {
    const auto geo = stacked_geo();
    const auto grid = small_grid();
    const TimeGrid tg = auto_time_grid(grid, geo, 160);
    const double H = 1.0;

    const auto violates = [&](const Vec3& x, const Vec3& gamma) {
        if (!artifact_exists(x, gamma, geo)) return false;
        const double g = gamma_fn(x, gamma, geo);
        return g >= gamma.x3 - H && g <= gamma.x3;
    };

    SECTION("per-bin policy keeps usable data and retained pairs are safe") {
        const auto mute = geometry_mute_slab(geo, grid, tg, H, MutePolicy::per_bin);
        int muted_any = 0, retained_pairs = 0;
        for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
            for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
                const Vec3 gamma = geo.receiver(i1, i2);
                const double* series =
                    mute.data() + (static_cast<std::int64_t>(i1) * geo.r2_range.count + i2) * tg.n_t;
                for (int it = 0; it < tg.n_t; ++it)
                    if (series[it] == 0.0) { ++muted_any; break; }

                std::int64_t idx = 0;
                for (int k = 0; k < grid.n3; ++k)
                    for (int j = 0; j < grid.n2; ++j)
                        for (int i = 0; i < grid.n1; ++i, ++idx) {
                            const Vec3 x = grid.position(i, j, k);
                            if (x.x3 < 0.0 || x.x3 > H) continue;
                            // A pair is retained when the bins carrying both of
                            // its delays survive.
                            bool retained = true;
                            for (int e : {1, 2}) {
                                const double t = bistatic_range(x, gamma, geo.emitter(e)) / geo.c0;
                                const auto tap = xtalk::detail::time_tap(t, tg);
                                if (tap.lo_ok && series[tap.bin] == 0.0) retained = false;
                                if (tap.hi_ok && series[tap.bin + 1] == 0.0) retained = false;
                            }
                            if (!retained) continue;
                            ++retained_pairs;
                            const double z3 = gamma.x3 - gamma_fn(x, gamma, geo);
                            CHECK((z3 < 0.0 || z3 > H));
                        }
            }
        CHECK(muted_any > 0);       // the config genuinely exercises the mute
        CHECK(retained_pairs > 0);  // and keeps usable data
    }

    SECTION("per-receiver policy kills exactly the receivers that see a violation") {
        const auto mute = geometry_mute_slab(geo, grid, tg, H, MutePolicy::per_receiver);
        for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
            for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
                const Vec3 gamma = geo.receiver(i1, i2);
                const double* series =
                    mute.data() + (static_cast<std::int64_t>(i1) * geo.r2_range.count + i2) * tg.n_t;
                bool dead = true;
                for (int it = 0; it < tg.n_t; ++it) dead = dead && series[it] == 0.0;

                bool any_violation = false;
                std::int64_t idx = 0;
                for (int k = 0; k < grid.n3 && !any_violation; ++k)
                    for (int j = 0; j < grid.n2 && !any_violation; ++j)
                        for (int i = 0; i < grid.n1 && !any_violation; ++i, ++idx) {
                            const Vec3 x = grid.position(i, j, k);
                            if (x.x3 < 0.0 || x.x3 > H) continue;
                            any_violation = violates(x, gamma);
                        }
                CHECK(dead == any_violation);
            }
    }
}

TEST_CASE("slab mute keeps everything when artifacts are already above the ROI") {
    // Weak scale factor (emitter 2 close below, emitter 1 far above): Gamma
    // stays under h - H for every pair and the artifacts float above the slab.
    AcquisitionGeometry geo;
    geo.e1 = {0.0, 0.0, 14.0};
    geo.e2 = {0.0, 0.0, 7.0};
    geo.track_height = 5.0;
    geo.r1_range = {-2.0, 2.0, 4};
    geo.r2_range = {-2.0, 2.0, 4};
    GridSpec grid;
    grid.origin = {-1.0, -1.0, 0.0};
    grid.spacing = {0.2, 0.2, 0.25};
    grid.n1 = grid.n2 = 11;
    grid.n3 = 5;
    const double H = 2.0;
    const TimeGrid tg = auto_time_grid(grid, geo, 96);
    for (int i1 = 0; i1 < 4; ++i1)
        for (int i2 = 0; i2 < 4; ++i2)
            for (int corner = 0; corner < 8; ++corner) {
                const Vec3 x = grid.position((corner & 1) ? grid.n1 - 1 : 0,
                                             (corner & 2) ? grid.n2 - 1 : 0,
                                             (corner & 4) ? grid.n3 - 1 : 0);
                REQUIRE(gamma_fn(x, geo.receiver(i1, i2), geo) < geo.track_height - H);
            }
    const auto mute = geometry_mute_slab(geo, grid, tg, H);
    for (double v : mute) CHECK(v == 1.0);
}

TEST_CASE("sphere mute is trivial for a tiny radius away from pi") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(0.0, 2.0, 11);
    const TimeGrid tg = auto_time_grid(grid, geo, 96);
    const auto mute = geometry_mute_sphere(geo, grid, tg, {0.0, 0.0, 1.0}, 1e-9);
    for (double v : mute) CHECK(v == 1.0);
}

TEST_CASE("sphere mute drops receivers seeing scatterers on pi") {
    AcquisitionGeometry geo;
    geo.e1 = {-2.0, 0.0, 8.0};
    geo.e2 = {2.0, 0.0, 8.0}; // pi: x1 = 0
    geo.track_height = 5.0;
    geo.r1_range = {-1.0, 1.0, 3};
    geo.r2_range = {0.0, 0.0, 1};
    GridSpec grid;
    grid.origin = {0.0, 0.0, 1.0}; // single voxel exactly on pi
    grid.n1 = grid.n2 = grid.n3 = 1;
    grid.spacing = {1.0, 1.0, 1.0};
    const TimeGrid tg = auto_time_grid(grid, geo, 64);
    const auto mute =
        geometry_mute_sphere(geo, grid, tg, {0.0, 0.0, 1.0}, 0.5, MutePolicy::per_receiver);
    for (double v : mute) CHECK(v == 0.0); // c = 1 for every receiver
}

TEST_CASE("sphere mute guarantee: retained data keeps artifacts R away") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(0.0, 2.0, 11);
    const TimeGrid tg = auto_time_grid(grid, geo, 128);
    const Vec3 center{0.0, 0.0, 1.0};
    const double R = 0.6;
    const auto mute =
        geometry_mute_sphere(geo, grid, tg, center, R, MutePolicy::per_receiver);

    int retained = 0;
    for (int i1 = 0; i1 < geo.r1_range.count; ++i1)
        for (int i2 = 0; i2 < geo.r2_range.count; ++i2) {
            const Vec3 gamma = geo.receiver(i1, i2);
            const double* series =
                mute.data() + (static_cast<std::int64_t>(i1) * geo.r2_range.count + i2) * tg.n_t;
            if (series[tg.n_t / 2] == 0.0) continue; // per-receiver: whole row dead
            ++retained;
            std::int64_t idx = 0;
            for (int k = 0; k < grid.n3; ++k)
                for (int j = 0; j < grid.n2; ++j)
                    for (int i = 0; i < grid.n1; ++i, ++idx) {
                        const Vec3 x = grid.position(i, j, k);
                        if (norm(x - center) > R) continue;
                        const auto ap = artifact_location(x, gamma, geo);
                        CHECK(norm(ap.z - x) > R);
                    }
        }
    CHECK(retained > 0);
}

TEST_CASE("pseudo operator is pseudolocal and linear") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(0.0, 2.5, 18);
    const TimeGrid tg = auto_time_grid(grid, geo, 128);
    const auto mute = build_mute(geo, tg, MuteSpec{true, 0.1});

    SECTION("zero image maps to zero") {
        const auto out = pseudo_op(make_zero_scene(grid), geo, tg, mute, BeamMask{});
        for (double v : out.values) CHECK(v == 0.0);
    }
    SECTION("a blob stays put") {
        const Vec3 x0 = grid.position(10, 10, 12);
        const auto blob = make_point_scene(grid, x0);
        const auto out = pseudo_op(blob, geo, tg, mute, BeamMask{});
        const auto peaks = find_peaks(out, 0.5);
        REQUIRE_FALSE(peaks.empty());
        CHECK(voxel_distance(peaks.front().pos, x0, grid) <= 1.0);
    }
    SECTION("linearity") {
        const auto v1 = make_point_scene(grid, grid.position(7, 9, 10));
        const auto v2 = make_gaussian_scene(grid, grid.position(13, 11, 8), 0.4);
        ScalarField3D mix(grid);
        for (size_t i = 0; i < mix.values.size(); ++i)
            mix.values[i] = 2.0 * v1.values[i] - 0.5 * v2.values[i];
        const auto om = pseudo_op(mix, geo, tg, mute, BeamMask{});
        const auto o1 = pseudo_op(v1, geo, tg, mute, BeamMask{});
        const auto o2 = pseudo_op(v2, geo, tg, mute, BeamMask{});
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < om.values.size(); ++i) {
            const double want = 2.0 * o1.values[i] - 0.5 * o2.values[i];
            num += (om.values[i] - want) * (om.values[i] - want);
            den += want * want;
        }
        CHECK(std::sqrt(num) <= 1e-12 * std::sqrt(den));
    }
}

TEST_CASE("mixed operator lands blobs on the predicted artifact surface") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(-1.5, 2.5, 27);
    const TimeGrid tg = auto_time_grid(grid, geo, 160);
    const auto mute = build_mute(geo, tg, MuteSpec{true, 0.1});

    SECTION("zero maps to zero") {
        const auto out = mixed_op(make_zero_scene(grid), geo, tg, mute, BeamMask{});
        for (double v : out.values) CHECK(v == 0.0);
    }
    SECTION("blob around x0 peaks near the artifact surface of x0") {
        // Keep the artifact cap smaller than the blob so its image is a single
        // bump; a wide cap resolves into a fold ring that peaks off center.
        AcquisitionGeometry tight = geo;
        tight.e2 = {0.0, 0.0, 12.5};
        tight.r1_range = {-1.0, 1.0, 8};
        tight.r2_range = {-1.0, 1.0, 8};
        const TimeGrid tg2 = auto_time_grid(grid, tight, 256);
        const auto mute2 = build_mute(tight, tg2, MuteSpec{true, 0.1});
        const Vec3 x0 = grid.position(10, 10, 22);
        const auto blob = make_gaussian_scene(grid, x0, 0.35);
        const auto out = mixed_op(blob, tight, tg2, mute2, BeamMask{});
        const auto peaks = find_peaks(out, 0.5);
        REQUIRE_FALSE(peaks.empty());
        const auto surface = artifact_surface(x0, tight);
        double best = 1e30;
        for (const auto& p : surface)
            best = std::min(best, voxel_distance(peaks.front().pos, p.z, grid));
        CHECK(best <= 1.5);
    }
}

TEST_CASE("mixed operator fixes blobs on pi") {
    AcquisitionGeometry geo;
    geo.e1 = {-2.0, 0.0, 9.0};
    geo.e2 = {2.0, 0.0, 9.0}; // pi: x1 = 0
    geo.track_height = 5.0;
    geo.r1_range = {-1.6, 1.6, 6};
    geo.r2_range = {-1.6, 1.6, 6};
    GridSpec grid;
    grid.origin = {-1.3, -1.3, 0.4};
    grid.spacing = {0.13, 0.13, 0.13};
    grid.n1 = grid.n2 = 21;
    grid.n3 = 15;
    const Vec3 x0 = grid.position(10, 10, 7); // x1 = 0: on pi
    REQUIRE(std::abs(plane_pi_side(x0, geo)) < 1e-12);
    const TimeGrid tg = auto_time_grid(grid, geo, 160);
    const auto mute = build_mute(geo, tg, MuteSpec{true, 0.1});
    const auto out = mixed_op(make_point_scene(grid, x0), geo, tg, mute, BeamMask{});
    const auto peaks = find_peaks(out, 0.5);
    REQUIRE_FALSE(peaks.empty());
    CHECK(voxel_distance(peaks.front().pos, x0, grid) <= 1.5);
}

TEST_CASE("displacement filter matches its operator expansion") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(0.0, 2.5, 14);
    const TimeGrid tg = auto_time_grid(grid, geo, 96);
    const auto mute = build_mute(geo, tg, MuteSpec{true, 0.1});
    const auto image = make_gaussian_scene(grid, grid.position(10, 10, 10), 0.4);
    const Roi roi{SlabRoi{2.0}};

    SECTION("one iteration is P - M") {
        const auto got = displace_artifacts(image, geo, tg, mute, BeamMask{}, 1, roi);
        const auto p = pseudo_op(image, geo, tg, mute, BeamMask{});
        const auto m = mixed_op(image, geo, tg, mute, BeamMask{});
        for (size_t i = 0; i < got.values.size(); ++i)
            CHECK(got.values[i] == std::abs(p.values[i] - m.values[i]));
    }
    SECTION("two iterations apply P + M o M to the first pass") {
        const auto got = displace_artifacts(image, geo, tg, mute, BeamMask{}, 2, roi);
        const auto p1 = pseudo_op(image, geo, tg, mute, BeamMask{});
        const auto m1 = mixed_op(image, geo, tg, mute, BeamMask{});
        ScalarField3D first(grid);
        for (size_t i = 0; i < first.values.size(); ++i)
            first.values[i] = p1.values[i] - m1.values[i];
        const auto p2 = pseudo_op(first, geo, tg, mute, BeamMask{});
        const auto mm = mixed_op(mixed_op(first, geo, tg, mute, BeamMask{}), geo, tg, mute, BeamMask{});
        for (size_t i = 0; i < got.values.size(); ++i)
            CHECK(got.values[i] ==
                  Catch::Approx(std::abs(p2.values[i] + mm.values[i])).margin(1e-14));
    }
}

TEST_CASE("displacement filter enforces the plane/ROI separation") {
    AcquisitionGeometry geo;
    geo.e1 = {-2.0, 0.0, 6.0};
    geo.e2 = {2.0, 0.0, 6.0}; // pi: x1 = 0 cuts any centered slab
    geo.track_height = 5.0;
    geo.r1_range = {-1.0, 1.0, 3};
    geo.r2_range = {-1.0, 1.0, 3};
    const auto grid = small_grid(0.0, 2.0, 9);
    const TimeGrid tg = auto_time_grid(grid, geo, 64);
    const auto mute = build_mute(geo, tg, MuteSpec{false, 0.0});
    const auto image = make_zero_scene(grid);
    CHECK_THROWS_AS(
        displace_artifacts(image, geo, tg, mute, BeamMask{}, 1, Roi{SlabRoi{1.0}}),
        PlaneIntersectsROI);
    // An active beam mask waives the static check.
    const auto beam = build_beam_mask(geo, BeamMask::Mode::critical_angle);
    CHECK_NOTHROW(displace_artifacts(image, geo, tg, mute, beam, 1, Roi{SlabRoi{1.0}}));
}

TEST_CASE("displacement filter rejects zero iterations") {
    const auto geo = stacked_geo();
    const auto grid = small_grid(0.0, 1.0, 5);
    const TimeGrid tg = auto_time_grid(grid, geo, 48);
    const auto mute = build_mute(geo, tg, MuteSpec{false, 0.0});
    CHECK_THROWS_AS(
        displace_artifacts(make_zero_scene(grid), geo, tg, mute, BeamMask{}, 0, Roi{SlabRoi{1.0}}),
        ConfigError);
}
